#pragma once

#include <string>
#include <vector>

namespace cropfuse {

/// Minimal CSV support: comma-separated, no quoting (none of the file
/// formats used here need it), '#' starts a comment line.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if absent
    int require_column(const std::string& name) const; // throws DataError
};

CsvTable read_csv(const std::string& path);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);

private:
    struct Impl;
    Impl* impl_;
};

double parse_double(const std::string& s, const std::string& context);
int parse_int(const std::string& s, const std::string& context);

} // namespace cropfuse
