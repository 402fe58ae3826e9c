// SPDX-FileCopyrightText: (C) 2026 miftrack contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mif::text {

/// Shortest decimal representation that round-trips; locale independent.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        return "nan";
    }
    std::string s(buf, ptr);
    return s == "-0" ? "0" : s;
}

/// Fixed-point with `digits` decimals.
inline std::string format_fixed(double v, int digits) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
    if (ec != std::errc()) {
        return "nan";
    }
    return std::string(buf, ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    if (s.empty()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

/// Splits on any character in `delims`; consecutive delimiters yield no empty fields
/// when `skip_empty` is set.
inline std::vector<std::string_view> split(std::string_view s, std::string_view delims, bool skip_empty) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || delims.find(s[i]) != std::string_view::npos) {
            if (!skip_empty || i > start) {
                out.push_back(s.substr(start, i - start));
            }
            start = i + 1;
        }
    }
    return out;
}

inline bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace mif::text
