#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "flexpipe/error.hpp"

namespace flexpipe {

struct KeyValue {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

inline std::string_view trim(std::string_view s) noexcept {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
inline std::vector<KeyValue> read_key_values(std::istream& in, const std::string& source) {
    std::vector<KeyValue> out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, 1, "expected key=value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(source, line_no, 1, "empty key");
        if (value.empty()) throw ParseError(source, line_no, eq + 2, "empty value for '" + std::string(key) + "'");
        out.push_back({std::string(key), std::string(value), line_no});
    }
    return out;
}

inline std::vector<KeyValue> read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_key_values(in, path);
}

/// Full-string numeric parse; returns false on trailing garbage.
template <typename T>
bool parse_number(std::string_view text, T& out) noexcept {
    text = trim(text);
    if (text.empty()) return false;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

template <typename T>
T parse_value(const KeyValue& kv, const std::string& source) {
    T value{};
    if (!parse_number(kv.value, value))
        throw ParseError(source, kv.line, kv.key.size() + 2, "bad number '" + kv.value + "' for " + kv.key);
    return value;
}

}  // namespace flexpipe
