#ifndef EBTSP_CONFIG_IO_HPP
#define EBTSP_CONFIG_IO_HPP

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ebtsp/model.hpp"

namespace ebtsp {

/// Malformed input file; the message carries `source:line` and the field.
class ParseError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// Flat `key = value` document with `#` comments. Keeps the line each key
/// came from for error messages.
class KeyValueFile {
  public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static KeyValueFile parse(std::istream& in, std::string source) {
        KeyValueFile f;
        f.source_ = std::move(source);
        std::string raw;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            if (auto hash = raw.find('#'); hash != std::string::npos) {
                raw.erase(hash);
            }
            const std::string line = trim(raw);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ParseError(f.where(line_no) + ": expected `key = value`");
            }
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw ParseError(f.where(line_no) + ": empty key");
            }
            if (value.empty()) {
                throw ParseError(f.where(line_no) + ": field `" + key + "` has no value");
            }
            if (f.entries_.count(key) != 0) {
                throw ParseError(f.where(line_no) + ": duplicate field `" + key + "`");
            }
            f.entries_.emplace(std::move(key), Entry{std::move(value), line_no});
        }
        return f;
    }

    static KeyValueFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw ParseError(path + ": cannot open file");
        }
        return parse(in, path);
    }

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

    [[nodiscard]] const std::string& get(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            throw ParseError(source_ + ": missing required field `" + key + "`");
        }
        return it->second.value;
    }

    [[nodiscard]] double get_double(const std::string& key) const {
        const auto& v = get(key);
        char* end = nullptr;
        errno = 0;
        const double d = std::strtod(v.c_str(), &end);
        if (errno != 0 || end == v.c_str() || *end != '\0') {
            throw ParseError(where(key) + ": field `" + key + "` is not a number: `" + v + "`");
        }
        return d;
    }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    [[nodiscard]] int get_int(const std::string& key) const {
        const auto& v = get(key);
        char* end = nullptr;
        errno = 0;
        const long x = std::strtol(v.c_str(), &end, 10);
        if (errno != 0 || end == v.c_str() || *end != '\0' || x < -1000000 || x > 1000000) {
            throw ParseError(where(key) + ": field `" + key + "` is not an integer: `" + v + "`");
        }
        return static_cast<int>(x);
    }

    [[nodiscard]] int get_int(const std::string& key, int fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    /// Rejects keys outside `allowed`.
    void check_keys(const std::set<std::string>& allowed) const {
        for (const auto& [k, e] : entries_) {
            if (allowed.count(k) == 0) {
                throw ParseError(where(k) + ": unknown field `" + k + "`");
            }
        }
    }

    [[nodiscard]] std::string where(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? source_ : where(it->second.line);
    }

    [[nodiscard]] const std::string& source() const { return source_; }

  private:
    [[nodiscard]] std::string where(int line) const { return source_ + ":" + std::to_string(line); }

    static std::string trim(std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) {
            return {};
        }
        const auto e = s.find_last_not_of(" \t\r");
        return std::string(s.substr(b, e - b + 1));
    }

    std::string source_;
    std::map<std::string, Entry> entries_;
};

/// Parses `s`, `simple`, `c`, `combined` or `both`.
inline std::vector<Mechanism> parse_mechanisms(std::string_view v) {
    if (v == "s" || v == "simple") {
        return {Mechanism::SimpleEbTsp};
    }
    if (v == "c" || v == "combined") {
        return {Mechanism::CombinedEbTsp};
    }
    if (v == "both") {
        return {Mechanism::SimpleEbTsp, Mechanism::CombinedEbTsp};
    }
    throw ParseError("unknown mechanism `" + std::string(v) + "` (expected s, c or both)");
}

/// A system description plus the mechanisms it should be evaluated under.
struct ModelSpec {
    SystemConfig base{};
    std::vector<Mechanism> mechanisms{Mechanism::SimpleEbTsp, Mechanism::CombinedEbTsp};

    [[nodiscard]] SystemConfig with(Mechanism m) const {
        SystemConfig c = base;
        c.mechanism = m;
        return c;
    }

    /// Validates every instantiated mechanism.
    void validate() const {
        for (Mechanism m : mechanisms) {
            try {
                with(m).validate();
            } catch (const ValidationError& e) {
                throw ValidationError(std::string(to_string(m)) + ": " + e.what());
            }
        }
    }
};

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys{"capacity_n", "rt_cap_r",  "threshold_h", "threshold_l",
                                            "lambda_nrt", "lambda1",   "lambda2",     "sigma1",
                                            "sigma2",     "mu_rt",     "mu_nrt",      "mechanism"};
    return keys;
}

/// Reads the model keys of `f`. sigma1/sigma2 default to 1; the thresholds
/// are only required when the combined mechanism is requested.
inline ModelSpec read_model(const KeyValueFile& f) {
    ModelSpec spec;
    SystemConfig& c = spec.base;
    if (f.has("mechanism")) {
        try {
            spec.mechanisms = parse_mechanisms(f.get("mechanism"));
        } catch (const ParseError& e) {
            throw ParseError(f.where("mechanism") + ": " + e.what());
        }
    }
    c.capacity_n = f.get_int("capacity_n");
    c.rt_cap_r = f.get_int("rt_cap_r");
    const bool combined = std::find(spec.mechanisms.begin(), spec.mechanisms.end(), Mechanism::CombinedEbTsp) !=
                          spec.mechanisms.end();
    c.threshold_h = combined ? f.get_int("threshold_h") : f.get_int("threshold_h", 0);
    c.threshold_l = combined ? f.get_int("threshold_l") : f.get_int("threshold_l", 0);
    c.lambda_nrt = f.get_double("lambda_nrt");
    c.mmpp.lambda1 = f.get_double("lambda1");
    c.mmpp.lambda2 = f.get_double("lambda2");
    c.mmpp.sigma1 = f.get_double("sigma1", 1.0);
    c.mmpp.sigma2 = f.get_double("sigma2", 1.0);
    c.mu_rt = f.get_double("mu_rt");
    c.mu_nrt = f.get_double("mu_nrt");
    return spec;
}

inline ModelSpec parse_config(std::istream& in, const std::string& source) {
    const auto f = KeyValueFile::parse(in, source);
    f.check_keys(config_keys());
    auto spec = read_model(f);
    spec.validate();
    return spec;
}

inline ModelSpec load_config(const std::string& path) {
    const auto f = KeyValueFile::load(path);
    f.check_keys(config_keys());
    auto spec = read_model(f);
    spec.validate();
    return spec;
}

/// 12 significant digits, the precision used by every CSV output.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Canonical text of the mechanism-independent model fields.
inline std::string canonical_text(const SystemConfig& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "capacity_n=%d\nrt_cap_r=%d\nthreshold_h=%d\nthreshold_l=%d\nlambda_nrt=%.17g\n"
                  "lambda1=%.17g\nlambda2=%.17g\nsigma1=%.17g\nsigma2=%.17g\nmu_rt=%.17g\nmu_nrt=%.17g\n",
                  c.capacity_n, c.rt_cap_r, c.threshold_h, c.threshold_l, c.lambda_nrt, c.mmpp.lambda1,
                  c.mmpp.lambda2, c.mmpp.sigma1, c.mmpp.sigma2, c.mu_rt, c.mu_nrt);
    return buf;
}

/// 64-bit FNV-1a of the canonical text; tags simulation output files.
inline std::uint64_t config_hash(const SystemConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_text(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ebtsp

#endif  // EBTSP_CONFIG_IO_HPP
