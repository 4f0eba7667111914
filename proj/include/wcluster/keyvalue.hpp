#pragma once

// Flat `key = value` text files, shared by dataset manifests, scene specs and
// pipeline configs. Lines starting with '#' are comments; keys may repeat and
// keep their file order.

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wcluster/common.hpp"

namespace wcluster {

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<KeyValue> parse_key_values(std::istream& in) {
    std::vector<KeyValue> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw DatasetError(DatasetError::Kind::Format,
                               "line " + std::to_string(lineno) + ": expected `key = value`");
        }
        auto key = trim(body.substr(0, eq));
        if (key.empty()) {
            throw DatasetError(DatasetError::Kind::Format, "line " + std::to_string(lineno) + ": empty key");
        }
        out.push_back({std::string(key), std::string(trim(body.substr(eq + 1))), lineno});
    }
    return out;
}

inline std::vector<KeyValue> read_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError(DatasetError::Kind::MissingFile, "cannot open " + path);
    }
    return parse_key_values(in);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

inline std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<long long> to_integer(std::string_view s) {
    s = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

inline std::optional<bool> to_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    return std::nullopt;
}

/// Parses "a,b,c" into three doubles.
inline std::optional<Vec3> to_vec3(std::string_view s) {
    const auto parts = split(s, ',');
    if (parts.size() != 3) {
        return std::nullopt;
    }
    const auto x = to_double(parts[0]);
    const auto y = to_double(parts[1]);
    const auto z = to_double(parts[2]);
    if (!x || !y || !z) {
        return std::nullopt;
    }
    return Vec3{*x, *y, *z};
}

} // namespace wcluster
