#ifndef EBTSP_METRICS_HPP
#define EBTSP_METRICS_HPP

#include <cstddef>
#include <stdexcept>
#include <string_view>

#include "ebtsp/ctmc.hpp"
#include "ebtsp/mmpp.hpp"
#include "ebtsp/model.hpp"

namespace ebtsp {

/// Stationary flow rates per class, split by what happens to each arrival.
///
/// Blocked arrivals are the arrival rate a state offers minus the rate of
/// its admitting edges; push-out losses are the rates of the push-out edges
/// charged to the evicted class. Everything is weighted by pi (PASTA).
struct RateAccounting {
    double rt_offered = 0.0;
    double rt_blocked = 0.0;     // arrivals refused (RT count at R, or full with no NRT to evict)
    double rt_pushed_out = 0.0;  // queued RT evicted by an NRT arrival
    double nrt_offered = 0.0;    // sum of state-dependent NRT rates, i.e. the effective rate
    double nrt_blocked = 0.0;
    double nrt_pushed_out = 0.0;
    double p_rt_busy = 0.0;   // P(rt > 0)
    double p_nrt_busy = 0.0;  // P(nrt > 0)
    double mean_rt = 0.0;
    double mean_nrt = 0.0;

    [[nodiscard]] double rt_accepted() const { return rt_offered - rt_blocked; }
    [[nodiscard]] double rt_lost() const { return rt_blocked + rt_pushed_out; }
    [[nodiscard]] double nrt_accepted() const { return nrt_offered - nrt_blocked; }
    [[nodiscard]] double nrt_lost() const { return nrt_blocked + nrt_pushed_out; }
};

inline void check_matches(const StationaryDistribution& dist, const SystemConfig& config) {
    if (!dist.states || dist.states->config() != config || dist.size() != dist.states->size()) {
        throw std::invalid_argument("distribution was not solved for this configuration");
    }
}

inline RateAccounting account_rates(const StationaryDistribution& dist, const SystemConfig& config) {
    check_matches(dist, config);
    RateAccounting acc;
    const auto& space = *dist.states;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const SystemState& s = space[i];
        const double p = dist[i];
        const double rt_rate = config.mmpp.phase_rate(s.phase);
        const double nrt_rate = nrt_arrival_rate(config, s);
        double rt_edges = 0.0;
        double nrt_edges = 0.0;
        for (const auto& t : transitions(config, s)) {
            switch (t.kind) {
                case TransitionKind::RtArrivalAdmit: rt_edges += t.rate; break;
                case TransitionKind::RtArrivalPushout:
                    rt_edges += t.rate;
                    acc.nrt_pushed_out += t.rate * p;
                    break;
                case TransitionKind::NrtArrivalAdmit: nrt_edges += t.rate; break;
                case TransitionKind::NrtArrivalPushout:
                    nrt_edges += t.rate;
                    acc.rt_pushed_out += t.rate * p;
                    break;
                default: break;
            }
        }
        acc.rt_offered += rt_rate * p;
        acc.rt_blocked += (rt_rate - rt_edges) * p;
        acc.nrt_offered += nrt_rate * p;
        acc.nrt_blocked += (nrt_rate - nrt_edges) * p;
        if (s.rt > 0) {
            acc.p_rt_busy += p;
        }
        if (s.nrt > 0) {
            acc.p_nrt_busy += p;
        }
        acc.mean_rt += s.rt * p;
        acc.mean_nrt += s.nrt * p;
    }
    // Exact offered rates; the pi-weighted sums above only differ by rounding.
    acc.rt_offered = mean_arrival_rate(config.mmpp);
    if (config.mechanism == Mechanism::SimpleEbTsp) {
        acc.nrt_offered = config.lambda_nrt;
    }
    return acc;
}

/// The analytic performance parameters of one mechanism.
struct PerformanceReport {
    Mechanism mechanism = Mechanism::SimpleEbTsp;
    double loss_rt = 0.0;
    double loss_nrt = 0.0;
    double mean_rt = 0.0;
    double mean_nrt = 0.0;
    double delay_rt = 0.0;
    /// (N_RT + N_NRT) / NRT throughput.
    double delay_nrt = 0.0;
    /// N_NRT / accepted NRT rate: mean time an admitted NRT packet spends queued.
    double delay_nrt_sojourn = 0.0;
    double effective_lambda_nrt = 0.0;

    /// No RT traffic offered; RT ratios are reported as 0.
    bool rt_undefined = false;
    /// No NRT traffic offered; NRT ratios are reported as 0.
    bool nrt_undefined = false;
    /// NRT loss is divided by the NRT rate actually offered to the queue:
    /// lambda for the simple mechanism, the effective (thresholded) rate for
    /// the combined one.
    std::string_view nrt_loss_denominator = "lambda_nrt";
};

namespace detail {
inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

inline double rt_loss_probability(const StationaryDistribution& dist, const SystemConfig& config) {
    const auto a = account_rates(dist, config);
    return detail::ratio_or_zero(a.rt_lost(), a.rt_offered);
}

inline double nrt_loss_probability(const StationaryDistribution& dist, const SystemConfig& config) {
    const auto a = account_rates(dist, config);
    return detail::ratio_or_zero(a.nrt_lost(), a.nrt_offered);
}

inline double mean_rt_count(const StationaryDistribution& dist, const SystemConfig& config) {
    return account_rates(dist, config).mean_rt;
}

inline double mean_nrt_count(const StationaryDistribution& dist, const SystemConfig& config) {
    return account_rates(dist, config).mean_nrt;
}

inline double effective_nrt_rate(const StationaryDistribution& dist, const SystemConfig& config) {
    return account_rates(dist, config).nrt_offered;
}

inline PerformanceReport evaluate(const StationaryDistribution& dist, const SystemConfig& config) {
    using detail::ratio_or_zero;
    const auto a = account_rates(dist, config);
    PerformanceReport r;
    r.mechanism = config.mechanism;
    r.rt_undefined = !(a.rt_offered > 0.0);
    r.nrt_undefined = !(a.nrt_offered > 0.0);
    r.nrt_loss_denominator =
        config.mechanism == Mechanism::SimpleEbTsp ? "lambda_nrt" : "effective_lambda_nrt";
    r.loss_rt = ratio_or_zero(a.rt_lost(), a.rt_offered);
    r.loss_nrt = ratio_or_zero(a.nrt_lost(), a.nrt_offered);
    r.mean_rt = a.mean_rt;
    r.mean_nrt = a.mean_nrt;
    r.effective_lambda_nrt = a.nrt_offered;
    r.delay_rt = ratio_or_zero(a.mean_rt, a.rt_offered * (1.0 - r.loss_rt));
    r.delay_nrt = ratio_or_zero(a.mean_rt + a.mean_nrt, a.nrt_offered * (1.0 - r.loss_nrt));
    r.delay_nrt_sojourn = ratio_or_zero(a.mean_nrt, a.nrt_accepted());
    return r;
}

inline double rt_delay(const StationaryDistribution& dist, const SystemConfig& config) {
    return evaluate(dist, config).delay_rt;
}

inline double nrt_delay(const StationaryDistribution& dist, const SystemConfig& config) {
    return evaluate(dist, config).delay_nrt;
}

inline double nrt_delay_sojourn(const StationaryDistribution& dist, const SystemConfig& config) {
    return evaluate(dist, config).delay_nrt_sojourn;
}

/// Solve and evaluate in one step.
inline PerformanceReport analyze(const SystemConfig& config) {
    return evaluate(solve_stationary(config), config);
}

}  // namespace ebtsp

#endif  // EBTSP_METRICS_HPP
