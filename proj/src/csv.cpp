#include "cropfuse/csv.hpp"

#include "cropfuse/errors.hpp"
#include "cropfuse/util.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>

namespace cropfuse {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

int CsvTable::require_column(const std::string& name) const {
    const int c = column(name);
    if (c < 0) throw DataError("missing CSV column '" + name + "'");
    return c;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cells = split(line, ',');
        for (auto& c : cells) c = trim(c);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
        } else {
            if (cells.size() != table.header.size())
                throw DataError(path + ": row with " + std::to_string(cells.size()) +
                                " cells, expected " + std::to_string(table.header.size()));
            table.rows.push_back(std::move(cells));
        }
    }
    if (!have_header) throw DataError(path + ": no header row");
    return table;
}

struct CsvWriter::Impl {
    std::ofstream out;
    std::string path;
};

CsvWriter::CsvWriter(const std::string& path) : impl_(new Impl) {
    impl_->out.open(path);
    impl_->path = path;
    if (!impl_->out) {
        delete impl_;
        throw FileError("cannot write " + path);
    }
}

CsvWriter::~CsvWriter() {
    delete impl_;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ',';
        impl_->out << cells[i];
    }
    impl_->out << '\n';
}

double parse_double(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    if (t.empty()) throw DataError(context + ": empty numeric field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size())
        throw DataError(context + ": bad number '" + s + "'");
    return v;
}

int parse_int(const std::string& s, const std::string& context) {
    const std::string t = trim(s);
    if (t.empty()) throw DataError(context + ": empty integer field");
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size())
        throw DataError(context + ": bad integer '" + s + "'");
    return static_cast<int>(v);
}

} // namespace cropfuse
