#pragma once

// Flat result records and their CSV, JSON-lines and text renderings. All three
// formats print numbers with the same shortest round-trip representation, so
// a run's values agree across formats.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "flexpipe/error.hpp"

namespace flexpipe {

using FieldValue = std::variant<std::int64_t, double, std::string, bool>;

struct Record {
    std::vector<std::pair<std::string, FieldValue>> fields;

    template <typename T>
    Record& set(std::string key, const T& v) {
        if constexpr (std::is_same_v<T, bool>) return put(std::move(key), v);
        else if constexpr (std::is_integral_v<T>) return put(std::move(key), static_cast<std::int64_t>(v));
        else if constexpr (std::is_floating_point_v<T>) return put(std::move(key), static_cast<double>(v));
        else return put(std::move(key), std::string(v));
    }

    const FieldValue* get(std::string_view key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }

private:
    Record& put(std::string key, FieldValue v) {
        for (auto& [k, old] : fields)
            if (k == key) {
                old = std::move(v);
                return *this;
            }
        fields.emplace_back(std::move(key), std::move(v));
        return *this;
    }
};

enum class Format { csv, jsonl, text, svg };

inline Format parse_format(std::string_view s) {
    if (s == "csv") return Format::csv;
    if (s == "jsonl") return Format::jsonl;
    if (s == "text") return Format::text;
    if (s == "svg") return Format::svg;
    throw ConfigError("unknown format '" + std::string(s) + "' (csv, jsonl, text, svg)");
}

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string to_text(const FieldValue& v) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::string>) return x;
            else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
            else if constexpr (std::is_same_v<T, double>) return format_double(x);
            else return std::to_string(x);
        },
        v);
}

/// Column order is first appearance across all records.
inline std::vector<std::string> union_columns(std::span<const Record> records) {
    std::vector<std::string> cols;
    for (const auto& r : records)
        for (const auto& [k, v] : r.fields)
            if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    return cols;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

/// Missing fields are empty cells.
inline void write_csv(std::ostream& os, std::span<const Record> records) {
    const auto cols = union_columns(records);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << csv_escape(cols[i]);
    os << '\n';
    for (const auto& r : records) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) os << ',';
            if (const auto* v = r.get(cols[i])) os << csv_escape(to_text(*v));
        }
        os << '\n';
    }
}

inline nlohmann::ordered_json to_json(const Record& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& field : r.fields) {
        const std::string& key = field.first;
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, double>) {
                    if (std::isfinite(x)) j[key] = x;
                    else j[key] = nullptr;
                } else {
                    j[key] = x;
                }
            },
            field.second);
    }
    return j;
}

inline void write_jsonl(std::ostream& os, std::span<const Record> records) {
    for (const auto& r : records) os << to_json(r).dump() << '\n';
}

/// Left-aligned text table. Consecutive records of the same "record" kind
/// share one block; missing fields are blank.
inline void write_text(std::ostream& os, std::span<const Record> records) {
    const auto kind = [](const Record& r) {
        const auto* v = r.get("record");
        return v ? to_text(*v) : std::string();
    };
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i + 1;
        while (j < records.size() && kind(records[j]) == kind(records[i])) ++j;
        const auto block = records.subspan(i, j - i);
        const auto cols = union_columns(block);
        std::vector<std::size_t> width(cols.size());
        std::vector<std::vector<std::string>> cells;
        for (std::size_t c = 0; c < cols.size(); ++c) width[c] = cols[c].size();
        for (const auto& r : block) {
            auto& row = cells.emplace_back();
            for (std::size_t c = 0; c < cols.size(); ++c) {
                const auto* v = r.get(cols[c]);
                row.push_back(v ? to_text(*v) : std::string());
                width[c] = std::max(width[c], row.back().size());
            }
        }
        if (i) os << '\n';
        const auto line = [&](const std::vector<std::string>& row) {
            std::string out;
            for (std::size_t c = 0; c < row.size(); ++c) {
                out += row[c];
                if (c + 1 < row.size()) out += std::string(width[c] - row[c].size() + 2, ' ');
            }
            while (!out.empty() && out.back() == ' ') out.pop_back();
            os << out << '\n';
        };
        line(cols);
        for (const auto& row : cells) line(row);
        i = j;
    }
}

}  // namespace flexpipe
