#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace jpa {

// Shortest round-trip decimal representation.
std::string format_double(double x);

// Smallest n' >= n whose only prime factors are 2, 3 and 5.
std::size_t next_smooth(std::size_t n);

std::string sha256_hex(const std::string& bytes);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace jpa
