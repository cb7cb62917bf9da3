#pragma once
// Scenario files are JSON. Dimensioned quantities carry their unit either as
// a string ("90 deg", "10 dBm") or as {"value": x | [x...], "unit": "..."}.
// Every problem found while reading is collected; the reader throws once at
// the end with the full list.

#include "malab/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace malab::cli {

using json = nlohmann::json;

// Collects violations across nested blocks.
class Diagnostics {
public:
    void add(std::string msg) { errors_.push_back(std::move(msg)); }
    bool ok() const { return errors_.empty(); }
    const std::vector<std::string>& errors() const { return errors_; }

    void throw_if_any() const {
        if (ok()) return;
        std::string msg = std::to_string(errors_.size()) + " configuration error(s):";
        for (const auto& e : errors_) msg += "\n  - " + e;
        throw ConfigError(msg);
    }

private:
    std::vector<std::string> errors_;
};

enum class Dimension { length, angle, power, frequency, ratio };

namespace detail {

struct UnitInfo {
    Dimension dim;
    double scale;   // multiply to reach SI / linear
    bool decibel;   // value is 10 log10 of (linear / scale-reference)
    double offset;  // dB offset applied before conversion (dBm → W)
};

inline const std::map<std::string, UnitInfo>& units() {
    static const std::map<std::string, UnitInfo> u{
        {"m", {Dimension::length, 1.0, false, 0.0}},
        {"cm", {Dimension::length, 1e-2, false, 0.0}},
        {"mm", {Dimension::length, 1e-3, false, 0.0}},
        {"km", {Dimension::length, 1e3, false, 0.0}},
        {"deg", {Dimension::angle, pi / 180.0, false, 0.0}},
        {"rad", {Dimension::angle, 1.0, false, 0.0}},
        {"W", {Dimension::power, 1.0, false, 0.0}},
        {"mW", {Dimension::power, 1e-3, false, 0.0}},
        {"dBW", {Dimension::power, 1.0, true, 0.0}},
        {"dBm", {Dimension::power, 1.0, true, -30.0}},
        {"Hz", {Dimension::frequency, 1.0, false, 0.0}},
        {"kHz", {Dimension::frequency, 1e3, false, 0.0}},
        {"MHz", {Dimension::frequency, 1e6, false, 0.0}},
        {"GHz", {Dimension::frequency, 1e9, false, 0.0}},
        {"linear", {Dimension::ratio, 1.0, false, 0.0}},
        {"dB", {Dimension::ratio, 1.0, true, 0.0}},
    };
    return u;
}

inline const char* to_string(Dimension d) {
    switch (d) {
        case Dimension::length: return "length";
        case Dimension::angle: return "angle";
        case Dimension::power: return "power";
        case Dimension::frequency: return "frequency";
        case Dimension::ratio: return "ratio";
    }
    return "?";
}

}  // namespace detail

// View of one JSON object. Keys that are read are remembered so the unread
// ones can be reported as unknown.
class Reader {
public:
    Reader(const json& j, std::string path, std::shared_ptr<Diagnostics> diag)
        : j_(&j), path_(std::move(path)), diag_(std::move(diag)) {
        if (!j.is_object()) fail("", "expected an object");
    }

    const std::string& path() const { return path_; }
    Diagnostics& diagnostics() const { return *diag_; }
    bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

    void fail(const std::string& key, const std::string& msg) const {
        diag_->add((key.empty() ? path_ : qualified(key)) + ": " + msg);
    }

    Reader block(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return Reader(empty_object(), qualified(key), diag_);
        return Reader((*j_)[key], qualified(key), diag_);
    }

    std::vector<Reader> blocks(const std::string& key) {
        seen_.insert(key);
        std::vector<Reader> out;
        if (!has(key)) return out;
        const auto& arr = (*j_)[key];
        if (!arr.is_array()) {
            fail(key, "expected an array of objects");
            return out;
        }
        for (std::size_t i = 0; i < arr.size(); ++i)
            out.emplace_back(arr[i], qualified(key) + "[" + std::to_string(i) + "]", diag_);
        return out;
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or("");
        if (!v->is_string()) {
            fail(key, "expected a string");
            return fallback.value_or("");
        }
        return v->get<std::string>();
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or(0.0);
        if (!v->is_number()) {
            fail(key, "expected a plain number");
            return fallback.value_or(0.0);
        }
        return v->get<double>();
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or(0);
        if (!v->is_number_integer()) {
            fail(key, "expected an integer");
            return fallback.value_or(0);
        }
        return v->get<std::int64_t>();
    }

    std::uint64_t seed(const std::string& key) {
        const json* v = fetch(key, false);
        if (!v) return 0;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            fail(key, "expected a non-negative 64-bit integer");
            return 0;
        }
        return v->get<std::uint64_t>();
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or(std::vector<double>{});
        std::vector<double> out;
        if (!v->is_array()) {
            fail(key, "expected an array of numbers");
            return out;
        }
        for (const auto& e : *v) {
            if (!e.is_number()) {
                fail(key, "expected an array of numbers");
                return {};
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::int64_t> integers(const std::string& key,
                                       std::optional<std::vector<std::int64_t>> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or(std::vector<std::int64_t>{});
        std::vector<std::int64_t> out;
        if (!v->is_array()) {
            fail(key, "expected an array of integers");
            return out;
        }
        for (const auto& e : *v) {
            if (!e.is_number_integer()) {
                fail(key, "expected an array of integers");
                return {};
            }
            out.push_back(e.get<std::int64_t>());
        }
        return out;
    }

    // Unit-tagged scalar, converted to SI (angles in radians, powers in W,
    // ratios linear).
    double quantity(const std::string& key, Dimension dim, std::optional<double> fallback = std::nullopt) {
        std::optional<std::vector<double>> fb;
        if (fallback) fb = std::vector<double>{*fallback};
        const auto v = quantities(key, dim, fb);
        if (v.size() != 1) {
            if (v.size() > 1) fail(key, "expected a single value");
            return fallback.value_or(0.0);
        }
        return v[0];
    }

    std::vector<double> quantities(const std::string& key, Dimension dim,
                                   std::optional<std::vector<double>> fallback = std::nullopt) {
        const json* v = fetch(key, fallback.has_value());
        if (!v) return fallback.value_or(std::vector<double>{});
        std::vector<double> raw;
        std::string unit;
        if (v->is_string()) {
            if (!split_tagged(v->get<std::string>(), raw, unit)) {
                fail(key, "expected \"<number> <unit>\"");
                return {};
            }
        } else if (v->is_object()) {
            if (!v->contains("unit") || !(*v)["unit"].is_string()) {
                fail(key, "missing unit");
                return {};
            }
            unit = (*v)["unit"].get<std::string>();
            for (const auto& [k, _] : v->items())
                if (k != "value" && k != "unit") fail(key + "." + k, "unknown key");
            const auto& val = v->contains("value") ? (*v)["value"] : json();
            if (val.is_number()) {
                raw.push_back(val.get<double>());
            } else if (val.is_array() && !val.empty() &&
                       std::all_of(val.begin(), val.end(), [](const json& e) { return e.is_number(); })) {
                for (const auto& e : val) raw.push_back(e.get<double>());
            } else {
                fail(key, "\"value\" must be a number or a non-empty array of numbers");
                return {};
            }
        } else if (v->is_number() || v->is_array()) {
            fail(key, std::string("unit omitted (expected a ") + detail::to_string(dim) + " unit)");
            return {};
        } else {
            fail(key, "expected a unit-tagged quantity");
            return {};
        }
        const auto it = detail::units().find(unit);
        if (it == detail::units().end()) {
            fail(key, "unknown unit \"" + unit + "\"");
            return {};
        }
        if (it->second.dim != dim) {
            fail(key, "unit \"" + unit + "\" is not a " + detail::to_string(dim) + " unit");
            return {};
        }
        for (double& x : raw) x = convert(x, it->second);
        return raw;
    }

    // Reports keys present in the object but never read.
    void finish() const {
        if (!j_->is_object()) return;
        for (const auto& [k, _] : j_->items())
            if (!seen_.count(k)) fail(k, "unknown key");
    }

private:
    static const json& empty_object() {
        static const json e = json::object();
        return e;
    }

    static double convert(double x, const detail::UnitInfo& u) {
        if (u.decibel) return u.scale * db_to_linear(x + u.offset);
        return u.scale * x;
    }

    static bool split_tagged(const std::string& s, std::vector<double>& out, std::string& unit) {
        std::istringstream in(s);
        in.imbue(std::locale::classic());
        double x;
        if (!(in >> x)) return false;
        if (!(in >> unit)) return false;
        std::string extra;
        if (in >> extra) return false;
        out.push_back(x);
        return true;
    }

    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* fetch(const std::string& key, bool optional) {
        seen_.insert(key);
        if (!has(key)) {
            if (!optional) fail(key, "required key missing");
            return nullptr;
        }
        return &(*j_)[key];
    }

    const json* j_;
    std::string path_;
    std::shared_ptr<Diagnostics> diag_;
    std::set<std::string> seen_;
};

// 64-bit FNV-1a over the canonical dump (object keys sorted by nlohmann).
inline std::uint64_t config_hash(const json& j) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 0xF];
    return s;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": not valid JSON (" + e.what() + ")");
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

// Reads an odd antenna count and names the oddness invariant otherwise.
inline int odd_antennas(Reader& r, const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    const auto n = r.integer(key, fallback);
    if (n < 1) {
        r.fail(key, "antenna count must be positive");
        return 1;
    }
    if (n % 2 == 0) {
        r.fail(key, "antenna count must be odd (N = 2*half + 1), got " + std::to_string(n));
        return static_cast<int>(n + 1);
    }
    return static_cast<int>(n);
}

// Wavelength from either "wavelength" or "frequency".
inline double wavelength_of(Reader& r, std::optional<double> fallback = std::nullopt) {
    const bool has_l = r.has("wavelength"), has_f = r.has("frequency");
    if (has_l && has_f) {
        r.fail("wavelength", "give either wavelength or frequency, not both");
        return 1.0;
    }
    if (has_f) {
        const double f = r.quantity("frequency", Dimension::frequency);
        if (!(f > 0.0)) {
            r.fail("frequency", "must be > 0");
            return 1.0;
        }
        return speed_of_light / f;
    }
    if (!has_l && !fallback) {
        r.fail("wavelength", "required key missing (or give frequency)");
        return 1.0;
    }
    const double l = r.quantity("wavelength", Dimension::length, fallback);
    if (!(l > 0.0)) {
        r.fail("wavelength", "must be > 0");
        return 1.0;
    }
    return l;
}

}  // namespace malab::cli
