#ifndef EBTSP_EXPERIMENT_HPP
#define EBTSP_EXPERIMENT_HPP

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ebtsp/config_io.hpp"
#include "ebtsp/metrics.hpp"
#include "ebtsp/sim.hpp"

namespace ebtsp {

inline constexpr std::string_view kResultsHeader =
    "mechanism,axis_name,axis_value,loss_rt,loss_nrt,mean_rt,mean_nrt,delay_rt,delay_nrt,"
    "delay_nrt_sojourn_variant,effective_lambda_nrt";

enum class SweepMode { Analytic, Simulate, Both };

/// One parameter swept over an ordered grid, all else held at `model.base`.
struct SweepSpec {
    ModelSpec model{};
    std::string axis;
    std::vector<double> values;
    SweepMode mode = SweepMode::Analytic;

    [[nodiscard]] SystemConfig instantiate(Mechanism m, double value) const {
        SystemConfig c = model.with(m);
        if (axis == "mu_rt") {
            c.mu_rt = value;
        } else if (axis == "mu_nrt") {
            c.mu_nrt = value;
        } else if (axis == "lambda_nrt") {
            c.lambda_nrt = value;
        } else if (axis == "rt_rate_scale") {
            c.mmpp.lambda1 *= value;
            c.mmpp.lambda2 *= value;
        } else {
            throw ValidationError("unknown sweep axis `" + axis + "`");
        }
        return c;
    }

    void validate() const {
        if (values.empty()) {
            throw ValidationError("sweep needs at least one axis value");
        }
        const bool up = values.size() < 2 || values[1] > values[0];
        for (std::size_t i = 1; i < values.size(); ++i) {
            if (up ? !(values[i] > values[i - 1]) : !(values[i] < values[i - 1])) {
                throw ValidationError("sweep values must be strictly monotone");
            }
        }
        for (Mechanism m : model.mechanisms) {
            for (double v : values) {
                try {
                    instantiate(m, v).validate();
                } catch (const ValidationError& e) {
                    throw ValidationError(std::string(to_string(m)) + " at " + axis + "=" + format_number(v) +
                                          ": " + e.what());
                }
            }
        }
    }
};

inline std::vector<double> parse_number_list(const KeyValueFile& f, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(f.get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            throw ParseError(f.where(key) + ": empty entry in `" + key + "`");
        }
        item = item.substr(b, e - b + 1);
        char* end = nullptr;
        const double d = std::strtod(item.c_str(), &end);
        if (end == item.c_str() || *end != '\0') {
            throw ParseError(f.where(key) + ": `" + item + "` in `" + key + "` is not a number");
        }
        out.push_back(d);
    }
    return out;
}

inline SweepSpec read_sweep(const KeyValueFile& f) {
    auto allowed = config_keys();
    allowed.insert({"axis", "values", "mode"});
    f.check_keys(allowed);
    SweepSpec s;
    s.model = read_model(f);
    s.axis = f.get("axis");
    if (s.axis != "mu_rt" && s.axis != "mu_nrt" && s.axis != "lambda_nrt" && s.axis != "rt_rate_scale") {
        throw ParseError(f.where("axis") + ": unknown axis `" + s.axis +
                         "` (expected mu_rt, mu_nrt, lambda_nrt or rt_rate_scale)");
    }
    s.values = parse_number_list(f, "values");
    if (f.has("mode")) {
        const auto& m = f.get("mode");
        if (m == "analytic") {
            s.mode = SweepMode::Analytic;
        } else if (m == "simulate") {
            s.mode = SweepMode::Simulate;
        } else if (m == "both") {
            s.mode = SweepMode::Both;
        } else {
            throw ParseError(f.where("mode") + ": unknown mode `" + m + "`");
        }
    }
    s.validate();
    return s;
}

inline SweepSpec parse_sweep(std::istream& in, const std::string& source) {
    return read_sweep(KeyValueFile::parse(in, source));
}

inline SweepSpec load_sweep(const std::string& path) { return read_sweep(KeyValueFile::load(path)); }

inline std::string preset_path(const std::string& dir, const std::string& name) {
    if (name != "fig3" && name != "fig4" && name != "fig5" && name != "fig6" && name != "fig7") {
        throw ValidationError("unknown preset `" + name + "` (expected fig3..fig7)");
    }
    return dir + "/" + name + ".sweep";
}

/// Metrics shared by the analytic report and the simulator, in CSV order.
struct MetricAccessor {
    std::string_view name;
    double PerformanceReport::*analytic;
    Interval SimEstimate::*simulated;
};

inline constexpr MetricAccessor kMetrics[] = {
    {"loss_rt", &PerformanceReport::loss_rt, &SimEstimate::loss_rt},
    {"loss_nrt", &PerformanceReport::loss_nrt, &SimEstimate::loss_nrt},
    {"mean_rt", &PerformanceReport::mean_rt, &SimEstimate::mean_rt},
    {"mean_nrt", &PerformanceReport::mean_nrt, &SimEstimate::mean_nrt},
    {"delay_rt", &PerformanceReport::delay_rt, &SimEstimate::delay_rt},
    {"delay_nrt", &PerformanceReport::delay_nrt, &SimEstimate::delay_nrt},
    {"delay_nrt_sojourn_variant", &PerformanceReport::delay_nrt_sojourn, &SimEstimate::delay_nrt_sojourn},
    {"effective_lambda_nrt", &PerformanceReport::effective_lambda_nrt, &SimEstimate::effective_lambda_nrt},
};

inline std::string results_row(std::string_view label, std::string_view axis, double axis_value,
                               const PerformanceReport& r) {
    std::string row(label);
    row += ',';
    row += axis;
    row += ',';
    row += format_number(axis_value);
    for (const auto& m : kMetrics) {
        row += ',';
        row += format_number(r.*m.analytic);
    }
    return row;
}

/// Sim estimates laid out as a report so they fit the results table.
inline PerformanceReport as_report(const SimEstimate& e, Mechanism m) {
    PerformanceReport r;
    r.mechanism = m;
    for (const auto& a : kMetrics) {
        r.*a.analytic = (e.*a.simulated).estimate;
    }
    return r;
}

struct SimOptions {
    std::uint64_t seed = 1;
    std::uint64_t events = 1'000'000;
    int batches = 20;
};

inline SimConfig make_sim_config(const SystemConfig& c, const SimOptions& o) {
    SimConfig s;
    s.system = c;
    s.seed = o.seed;
    s.events = o.events;
    s.batches = o.batches;
    return s;
}

/// `solve`: one analytic row per requested mechanism.
inline std::string solve_command(const ModelSpec& spec) {
    spec.validate();
    std::string out(kResultsHeader);
    out += '\n';
    for (Mechanism m : spec.mechanisms) {
        const auto c = spec.with(m);
        out += results_row(to_string(m), "none", 0.0, analyze(c));
        out += '\n';
    }
    return out;
}

/// `sweep`: rows in axis order, mechanisms in the order requested. Simulated
/// rows carry a `_sim` suffix on the mechanism label.
inline std::string sweep_command(const SweepSpec& sweep, const SimOptions& sim = {}) {
    sweep.validate();
    std::string out(kResultsHeader);
    out += '\n';
    for (double v : sweep.values) {
        for (Mechanism m : sweep.model.mechanisms) {
            const auto c = sweep.instantiate(m, v);
            if (sweep.mode != SweepMode::Simulate) {
                out += results_row(to_string(m), sweep.axis, v, analyze(c));
                out += '\n';
            }
            if (sweep.mode != SweepMode::Analytic) {
                const auto est = run(make_sim_config(c, sim));
                out += results_row(std::string(to_string(m)) + "_sim", sweep.axis, v, as_report(est, m));
                out += '\n';
            }
        }
    }
    return out;
}

inline std::string sim_file_tag(const SystemConfig& base, const SimOptions& o) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "# ebtsp-simulate config_hash=%016llx seed=%llu events=%llu",
                  static_cast<unsigned long long>(config_hash(base)), static_cast<unsigned long long>(o.seed),
                  static_cast<unsigned long long>(o.events));
    return buf;
}

inline constexpr std::string_view kSimHeader = "mechanism,metric,estimate,half_width";

/// `simulate`: per-metric estimates with 95% half-widths, followed by the
/// packet ledger of each class as comment lines.
inline std::string simulate_command(const ModelSpec& spec, const SimOptions& o) {
    spec.validate();
    std::string out = sim_file_tag(spec.base, o);
    out += '\n';
    out += kSimHeader;
    out += '\n';
    std::string ledger;
    for (Mechanism m : spec.mechanisms) {
        const auto est = run(make_sim_config(spec.with(m), o));
        for (const auto& a : kMetrics) {
            const Interval& iv = est.*a.simulated;
            out += std::string(to_string(m)) + "," + std::string(a.name) + "," + format_number(iv.estimate) + "," +
                   format_number(iv.half_width) + "\n";
        }
        for (const auto& [cls, counts] : {std::pair{"rt", est.rt}, std::pair{"nrt", est.nrt}}) {
            ledger += "# " + std::string(to_string(m)) + " " + cls + " offered=" + std::to_string(counts.offered) +
                      " accepted=" + std::to_string(counts.accepted()) + " blocked=" +
                      std::to_string(counts.blocked) + " pushed_out=" + std::to_string(counts.pushed_out) + "\n";
        }
    }
    return out + ledger;
}

/// Simulation results read back from a `simulate` output file.
struct SimFile {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t events = 0;
    std::vector<std::tuple<std::string, std::string, Interval>> rows;

    [[nodiscard]] std::optional<Interval> find(std::string_view mechanism, std::string_view metric) const {
        for (const auto& [m, k, iv] : rows) {
            if (m == mechanism && k == metric) {
                return iv;
            }
        }
        return std::nullopt;
    }
};

inline SimFile parse_sim_file(std::istream& in, const std::string& source) {
    SimFile f;
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source + ":1: empty simulation file");
    }
    unsigned long long hash = 0, seed = 0, events = 0;
    if (std::sscanf(line.c_str(), "# ebtsp-simulate config_hash=%llx seed=%llu events=%llu", &hash, &seed,
                    &events) != 3) {
        throw ParseError(source + ":1: missing simulation tag line");
    }
    f.config_hash = hash;
    f.seed = seed;
    f.events = events;
    if (!std::getline(in, line) || line != kSimHeader) {
        throw ParseError(source + ":2: expected header `" + std::string(kSimHeader) + "`");
    }
    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::stringstream ss(line);
        std::string mech, metric, est, hw;
        if (!std::getline(ss, mech, ',') || !std::getline(ss, metric, ',') || !std::getline(ss, est, ',') ||
            !std::getline(ss, hw)) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": expected 4 columns");
        }
        try {
            f.rows.emplace_back(mech, metric, Interval{std::stod(est), std::stod(hw)});
        } catch (const std::exception&) {
            throw ParseError(source + ":" + std::to_string(line_no) + ": bad number");
        }
    }
    return f;
}

inline constexpr double kOccupancyTvLimit = 0.01;
inline constexpr std::size_t kOccupancyCheckMaxStates = 50;

struct CompareResult {
    std::string csv;
    bool all_covered = true;
};

inline constexpr std::string_view kCompareHeader = "mechanism,metric,analytic,sim_estimate,half_width,covered";

/// `compare`: analytic values against simulated 95% intervals. A previously
/// written simulation file may be supplied; it must carry the hash of this
/// config and the same seed. For chains with at most 50 states an
/// `occupancy_tv` row checks the empirical state occupancy against pi.
inline CompareResult compare_command(const ModelSpec& spec, const SimOptions& o,
                                     const std::optional<SimFile>& previous = std::nullopt) {
    spec.validate();
    if (previous) {
        if (previous->config_hash != config_hash(spec.base) || previous->seed != o.seed) {
            throw ValidationError("simulation file does not match this config and seed");
        }
    }
    CompareResult res;
    res.csv = std::string(kCompareHeader) + "\n";
    for (Mechanism m : spec.mechanisms) {
        const auto c = spec.with(m);
        const auto gen = build_generator(c);
        const auto dist = solve_stationary(gen);
        const auto report = evaluate(dist, c);
        std::optional<SimEstimate> est;
        if (!previous) {
            est = run(make_sim_config(c, o));
        }
        for (const auto& a : kMetrics) {
            Interval iv;
            if (est) {
                iv = (*est).*a.simulated;
            } else if (auto found = previous->find(to_string(m), a.name)) {
                iv = *found;
            } else {
                throw ParseError("simulation file lacks " + std::string(to_string(m)) + "," + std::string(a.name));
            }
            const double value = report.*a.analytic;
            const bool ok = iv.covers(value);
            res.all_covered = res.all_covered && ok;
            res.csv += std::string(to_string(m)) + "," + std::string(a.name) + "," + format_number(value) + "," +
                       format_number(iv.estimate) + "," + format_number(iv.half_width) + "," + (ok ? "yes" : "no") +
                       "\n";
        }
        if (est && gen.dimension() <= kOccupancyCheckMaxStates) {
            const double tv = total_variation(est->occupancy, dist.probabilities);
            const bool ok = tv < kOccupancyTvLimit;
            res.all_covered = res.all_covered && ok;
            res.csv += std::string(to_string(m)) + ",occupancy_tv,0," + format_number(tv) + "," +
                       format_number(kOccupancyTvLimit) + "," + (ok ? "yes" : "no") + "\n";
        }
    }
    return res;
}

}  // namespace ebtsp

#endif  // EBTSP_EXPERIMENT_HPP
