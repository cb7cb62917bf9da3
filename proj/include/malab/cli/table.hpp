#pragma once
// Rectangular result tables and their CSV/JSON encodings.

#include "malab/core.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

namespace malab::cli {

inline constexpr const char* tool_version = "0.1.0";

using Cell = std::variant<double, std::int64_t, std::string>;

class ResultTable {
public:
    ResultTable() = default;
    explicit ResultTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    const std::vector<std::pair<std::string, std::string>>& metadata() const { return meta_; }

    void add_row(std::vector<Cell> row) {
        require(row.size() == columns_.size(),
                "ResultTable: row has " + std::to_string(row.size()) + " cells, expected " +
                    std::to_string(columns_.size()));
        rows_.push_back(std::move(row));
    }

    void append(const ResultTable& other) {
        require(other.columns_ == columns_, "ResultTable: column mismatch on append");
        rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
    }

    // Later values for an existing key replace the earlier one in place.
    void set_meta(const std::string& key, std::string value) {
        for (auto& [k, v] : meta_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        meta_.emplace_back(key, std::move(value));
    }

    std::string meta(const std::string& key) const {
        for (const auto& [k, v] : meta_)
            if (k == key) return v;
        return {};
    }

    int column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i] == name) return static_cast<int>(i);
        throw InvalidArgument("ResultTable: no column named " + name);
    }

    double number(std::size_t row, const std::string& col) const {
        const auto& c = rows_.at(row).at(column_index(col));
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        throw InvalidArgument("ResultTable: column " + col + " is not numeric");
    }

    std::string text(std::size_t row, const std::string& col) const {
        const auto& c = rows_.at(row).at(column_index(col));
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        throw InvalidArgument("ResultTable: column " + col + " is not text");
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<Cell>> rows_;
    std::vector<std::pair<std::string, std::string>> meta_;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r#") == std::string::npos && !s.empty()) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_cell(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return csv_escape(std::get<std::string>(c));
}

}  // namespace detail

inline std::string to_csv(const ResultTable& t) {
    std::string out;
    for (const auto& [k, v] : t.metadata()) out += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < t.columns().size(); ++i) out += (i ? "," : "") + detail::csv_escape(t.columns()[i]);
    out += "\n";
    for (const auto& row : t.rows()) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + detail::csv_cell(row[i]);
        out += "\n";
    }
    return out;
}

inline nlohmann::ordered_json to_json_value(const ResultTable& t) {
    nlohmann::ordered_json j;
    auto meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.metadata()) meta[k] = v;
    j["metadata"] = meta;
    j["columns"] = t.columns();
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows()) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& c : row) std::visit([&](const auto& v) { r.push_back(v); }, c);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

inline std::string to_json(const ResultTable& t) { return to_json_value(t).dump(2) + "\n"; }

enum class Format { csv, json };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    throw ConfigError("unknown output format \"" + s + "\" (csv or json)");
}

inline std::string render(const ResultTable& t, Format f) { return f == Format::csv ? to_csv(t) : to_json(t); }

inline void emit(const ResultTable& t, Format f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << render(t, f);
    if (!out) throw Error("write to " + path + " failed");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

}  // namespace detail

// Inverse of to_csv. Cells that parse completely as numbers come back as
// doubles, everything else as text.
inline ResultTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> meta;
    ResultTable t;
    bool header = false;
    while (std::getline(in, line)) {
        if (!header && line.rfind("# ", 0) == 0) {
            const auto sep = line.find(": ", 2);
            if (sep != std::string::npos) meta.emplace_back(line.substr(2, sep - 2), line.substr(sep + 2));
            continue;
        }
        if (!header) {
            t = ResultTable(detail::split_csv_line(line));
            header = true;
            continue;
        }
        std::vector<Cell> row;
        for (auto& s : detail::split_csv_line(line)) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (!s.empty() && end == s.c_str() + s.size()) row.emplace_back(v);
            else row.emplace_back(s);
        }
        t.add_row(std::move(row));
    }
    require(header, "parse_csv: missing header row");
    for (auto& [k, v] : meta) t.set_meta(k, v);
    return t;
}

}  // namespace malab::cli
