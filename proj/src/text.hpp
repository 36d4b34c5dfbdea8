#pragma once

// Small text helpers for the TSV formats.

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "zerosyl/error.hpp"

namespace zerosyl::detail {

inline bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

inline std::string_view trim_cr(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_tabs(std::string_view line) {
    line = trim_cr(line);
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_spaces(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\r' || s[i] == '\n'))
            ++i;
        const std::size_t j = s.find_first_of(" \r\n", i);
        if (i < s.size())
            out.emplace_back(s.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
        i = (j == std::string_view::npos) ? s.size() : j;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(where + ": not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(where + ": not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace zerosyl::detail
