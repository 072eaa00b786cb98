#include "rollwave/io.hpp"

#include "rollwave/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace rollwave::io {

namespace fs = std::filesystem;

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    std::error_code st;
    const auto status = fs::status(target, st);
    if (!st && fs::exists(status) && !fs::is_regular_file(status)) {
        // Devices and pipes cannot be replaced by a rename.
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (!f) throw DomainError("cannot open " + path + " for writing");
        const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
        std::fclose(f);
        if (!ok) throw DomainError("failed writing " + path);
        return;
    }
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw DomainError("cannot open " + tmp.string() + " for writing");
        const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size() && std::fflush(f) == 0 &&
                        ::fsync(::fileno(f)) == 0;
        std::fclose(f);
        if (!ok) {
            fs::remove(tmp);
            throw DomainError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw DomainError("cannot rename into " + path + ": " + ec.message());
    }
}

void append_line(const std::string& path, const std::string& line) {
    std::FILE* f = std::fopen(path.c_str(), "ab");
    if (!f) throw DomainError("cannot open " + path + " for appending");
    const std::string text = line + "\n";
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size() && std::fflush(f) == 0 &&
                    ::fsync(::fileno(f)) == 0;
    std::fclose(f);
    if (!ok) throw DomainError("failed appending to " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool exists(const std::string& path) { return fs::exists(path); }

}  // namespace rollwave::io
