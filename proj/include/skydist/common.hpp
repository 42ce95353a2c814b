#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace skydist {

/// Base for every error the toolkit raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (mask files, CSV, configs, manifests).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A precondition on numeric arguments was violated.
class DomainError : public Error {
public:
    using Error::Error;
};

using ClassId = std::int64_t;

// Fixed 9-significant-digit rendering keeps every export byte-stable.
std::string format_real(double v);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);

std::int64_t parse_int(std::string_view tok, std::string_view what);
double parse_real(std::string_view tok, std::string_view what);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace skydist
