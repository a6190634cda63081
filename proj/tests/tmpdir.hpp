#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

// Per-test scratch directory, removed on scope exit.
struct TmpDir {
    std::filesystem::path path;

    explicit TmpDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("cropfuse_" + tag + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        std::ofstream out(path / name);
        out << content;
        return (path / name).string();
    }
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}
