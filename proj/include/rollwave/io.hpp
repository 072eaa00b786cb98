#pragma once

#include <string>

namespace rollwave::io {

// Writes to a temporary file beside `path` and renames it into place.
void write_atomic(const std::string& path, const std::string& content);
// Appends one line and flushes it to disk.
void append_line(const std::string& path, const std::string& line);
std::string read_file(const std::string& path);
bool exists(const std::string& path);

}  // namespace rollwave::io
