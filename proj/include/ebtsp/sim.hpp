#ifndef EBTSP_SIM_HPP
#define EBTSP_SIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ebtsp/model.hpp"

namespace ebtsp {

class SimBudgetError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct SimConfig {
    SystemConfig system{};
    /// Total number of state-changing events, warmup included.
    std::uint64_t events = 1'000'000;
    /// Events discarded before measuring. When unset the warmup ends at
    /// min(10% of `events`, the event completing the 10*N-th departure).
    std::optional<std::uint64_t> warmup_events{};
    std::uint64_t seed = 1;
    int batches = 20;
};

/// A point estimate with the half-width of its 95% confidence interval.
struct Interval {
    double estimate = 0.0;
    double half_width = 0.0;

    [[nodiscard]] bool covers(double x) const { return std::abs(x - estimate) <= half_width; }
    [[nodiscard]] double lower() const { return estimate - half_width; }
    [[nodiscard]] double upper() const { return estimate + half_width; }
};

/// Whole-run packet ledger for one class. Every offered packet is either
/// blocked on arrival, admitted and later pushed out, or accepted (served or
/// still queued when the run stops).
struct ClassCounts {
    std::uint64_t offered = 0;
    std::uint64_t blocked = 0;
    std::uint64_t pushed_out = 0;
    std::uint64_t served = 0;
    std::uint64_t queued_at_end = 0;

    [[nodiscard]] std::uint64_t accepted() const { return served + queued_at_end; }
};

struct SimEstimate {
    Interval loss_rt;
    Interval loss_nrt;
    Interval mean_rt;
    Interval mean_nrt;
    /// Time-integrated RT count over RT departures.
    Interval delay_rt;
    /// Time-integrated total count over NRT departures.
    Interval delay_nrt;
    /// Measured mean time in queue of admitted NRT packets, until served or
    /// pushed out.
    Interval delay_nrt_sojourn;
    /// NRT arrivals reaching the queue (after rate control) per unit time.
    Interval effective_lambda_nrt;
    /// Admitted NRT packets per unit time.
    Interval nrt_accepted_rate;

    ClassCounts rt;
    ClassCounts nrt;
    std::uint64_t events = 0;
    std::uint64_t warmup_events = 0;
    double warmup_time = 0.0;
    /// Simulated time after warmup.
    double elapsed = 0.0;
    int batches = 0;

    std::shared_ptr<const StateSpace> states;
    /// Post-warmup time fraction per state, indexed like `states`.
    std::vector<double> occupancy;
};

namespace detail {

/// SplitMix64 output number `index` (1-based) for a given seed.
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + index * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// One random stream: std::mt19937_64 seeded from SplitMix64. Uniforms use
/// the top 53 bits so the sequence is identical on every platform.
class Stream {
  public:
    Stream(std::uint64_t seed, std::uint64_t id) : engine_(splitmix64(seed, id + 1)) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  private:
    std::mt19937_64 engine_;
};

struct BatchTotals {
    double duration = 0.0;
    double rt_area = 0.0;
    double nrt_area = 0.0;
    std::uint64_t rt_offered = 0, rt_lost = 0, rt_served = 0;
    std::uint64_t nrt_offered = 0, nrt_lost = 0, nrt_served = 0, nrt_admitted = 0;
    double nrt_sojourn_sum = 0.0;
    std::uint64_t nrt_exits = 0;
};

inline double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline Interval batch_interval(std::span<const double> values) {
    const auto b = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= b;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / (b - 1.0));
    const boost::math::students_t dist(b - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    return {mean, t * sd / std::sqrt(b)};
}

/// Batch-means interval for a loss ratio. With no loss events at all the
/// batch spread is degenerate, so the one-sided rule-of-three bound 3/n on
/// the offered count is used instead.
inline Interval loss_interval(std::span<const double> values, std::uint64_t lost, std::uint64_t offered) {
    if (lost == 0) {
        return {0.0, offered > 0 ? 3.0 / static_cast<double>(offered) : 0.0};
    }
    return batch_interval(values);
}

}  // namespace detail

inline constexpr std::uint64_t kMinEventsPerBatch = 100;

/// Event-driven simulation of the mechanism in `cfg.system`.
///
/// Each event source has its own random stream: phase switches, RT
/// arrivals, NRT arrivals, NRT thinning, RT service and NRT service. NRT
/// arrivals are drawn at the base rate and thinned to the current
/// state-dependent rate. Push-out evicts the newest packet of the victim
/// class; both queues are otherwise served FIFO by independent servers.
inline SimEstimate run(const SimConfig& cfg) {
    const SystemConfig& sys = cfg.system;
    sys.validate();
    if (cfg.batches < 2) {
        throw std::invalid_argument("simulation needs at least 2 batches");
    }
    const std::uint64_t max_warmup = cfg.warmup_events.value_or(cfg.events / 10);
    if (cfg.events <= max_warmup ||
        (cfg.events - max_warmup) / static_cast<std::uint64_t>(cfg.batches) < kMinEventsPerBatch) {
        throw SimBudgetError("event budget too small: need at least " + std::to_string(kMinEventsPerBatch) +
                             " measured events per batch");
    }

    auto space = std::make_shared<const StateSpace>(sys);
    const int n = sys.capacity_n;
    const int r = sys.rt_cap_r;
    const double inf = std::numeric_limits<double>::infinity();

    enum Source { kPhase = 0, kRtArrival, kNrtArrival, kRtService, kNrtService, kSources };
    detail::Stream phase_rng(cfg.seed, 0), rt_arr_rng(cfg.seed, 1), nrt_arr_rng(cfg.seed, 2),
        thin_rng(cfg.seed, 3), rt_srv_rng(cfg.seed, 4), nrt_srv_rng(cfg.seed, 5);

    SystemState st{1, 0, 0};
    std::deque<double> rt_q, nrt_q;  // arrival times
    double now = 0.0;
    std::array<double, kSources> next{};

    auto schedule = [&](detail::Stream& rng, double rate) { return rate > 0.0 ? now + rng.exponential(rate) : inf; };
    next[kPhase] = schedule(phase_rng, sys.mmpp.switch_rate(st.phase));
    next[kRtArrival] = schedule(rt_arr_rng, sys.mmpp.phase_rate(st.phase));
    next[kNrtArrival] = schedule(nrt_arr_rng, sys.lambda_nrt);
    next[kRtService] = inf;
    next[kNrtService] = inf;

    SimEstimate out;
    out.states = space;
    out.occupancy.assign(space->size(), 0.0);
    out.batches = cfg.batches;

    bool warm = false;
    std::uint64_t departures = 0;
    std::uint64_t events = 0;
    std::uint64_t measured = 0;
    std::uint64_t batch_size = 0;
    std::vector<detail::BatchTotals> batches(static_cast<std::size_t>(cfg.batches));
    std::size_t batch = 0;
    const std::uint64_t departure_target = 10ULL * static_cast<std::uint64_t>(n);

    auto start_measuring = [&] {
        warm = true;
        out.warmup_events = events;
        out.warmup_time = now;
        batch_size = (cfg.events - events) / static_cast<std::uint64_t>(cfg.batches);
    };
    if (max_warmup == 0) {
        start_measuring();
    }

    auto drop_rt_newest = [&] {
        if (warm) {
            ++batches[batch].rt_lost;
        }
        ++out.rt.pushed_out;
        rt_q.pop_back();
        --st.rt;
        if (st.rt == 0) {
            next[kRtService] = inf;
        }
    };
    auto drop_nrt_newest = [&] {
        if (warm) {
            auto& b = batches[batch];
            ++b.nrt_lost;
            b.nrt_sojourn_sum += now - nrt_q.back();
            ++b.nrt_exits;
        }
        ++out.nrt.pushed_out;
        nrt_q.pop_back();
        --st.nrt;
        if (st.nrt == 0) {
            next[kNrtService] = inf;
        }
    };

    while (events < cfg.events) {
        const auto src = static_cast<std::size_t>(std::min_element(next.begin(), next.end()) - next.begin());
        const double t = next[src];
        if (!std::isfinite(t)) {
            throw std::logic_error("simulation stalled: no pending events");
        }
        if (warm) {
            const double dt = t - now;
            auto& b = batches[batch];
            b.duration += dt;
            b.rt_area += dt * st.rt;
            b.nrt_area += dt * st.nrt;
            out.occupancy[space->index_unchecked(st)] += dt;
        }
        now = t;

        bool counted = true;
        switch (src) {
            case kPhase:
                st.phase = 3 - st.phase;
                next[kPhase] = schedule(phase_rng, sys.mmpp.switch_rate(st.phase));
                next[kRtArrival] = schedule(rt_arr_rng, sys.mmpp.phase_rate(st.phase));
                break;
            case kRtArrival: {
                next[kRtArrival] = schedule(rt_arr_rng, sys.mmpp.phase_rate(st.phase));
                ++out.rt.offered;
                if (warm) {
                    ++batches[batch].rt_offered;
                }
                bool admit = false;
                if (st.rt < r) {
                    if (st.total() < n) {
                        admit = true;
                    } else if (st.nrt > 0) {
                        drop_nrt_newest();
                        admit = true;
                    }
                }
                if (admit) {
                    rt_q.push_back(now);
                    if (++st.rt == 1) {
                        next[kRtService] = schedule(rt_srv_rng, sys.mu_rt);
                    }
                } else {
                    ++out.rt.blocked;
                    if (warm) {
                        ++batches[batch].rt_lost;
                    }
                }
                break;
            }
            case kNrtArrival: {
                next[kNrtArrival] = schedule(nrt_arr_rng, sys.lambda_nrt);
                const double keep = nrt_arrival_rate(sys, st) / sys.lambda_nrt;
                if (!(thin_rng.uniform() < keep)) {
                    counted = false;
                    break;
                }
                ++out.nrt.offered;
                if (warm) {
                    ++batches[batch].nrt_offered;
                }
                bool admit = false;
                if (st.total() < n) {
                    admit = true;
                } else if (st.rt == r) {
                    drop_rt_newest();
                    admit = true;
                }
                if (admit) {
                    nrt_q.push_back(now);
                    if (warm) {
                        ++batches[batch].nrt_admitted;
                    }
                    if (++st.nrt == 1) {
                        next[kNrtService] = schedule(nrt_srv_rng, sys.mu_nrt);
                    }
                } else {
                    ++out.nrt.blocked;
                    if (warm) {
                        ++batches[batch].nrt_lost;
                    }
                }
                break;
            }
            case kRtService:
                rt_q.pop_front();
                --st.rt;
                ++out.rt.served;
                ++departures;
                if (warm) {
                    ++batches[batch].rt_served;
                }
                next[kRtService] = st.rt > 0 ? schedule(rt_srv_rng, sys.mu_rt) : inf;
                break;
            case kNrtService:
                if (warm) {
                    auto& b = batches[batch];
                    ++b.nrt_served;
                    b.nrt_sojourn_sum += now - nrt_q.front();
                    ++b.nrt_exits;
                }
                nrt_q.pop_front();
                --st.nrt;
                ++out.nrt.served;
                ++departures;
                next[kNrtService] = st.nrt > 0 ? schedule(nrt_srv_rng, sys.mu_nrt) : inf;
                break;
            default: break;
        }
        if (!counted) {
            continue;
        }
        if (st.rt < 0 || st.rt > r || st.nrt < 0 || st.total() > n ||
            rt_q.size() != static_cast<std::size_t>(st.rt) || nrt_q.size() != static_cast<std::size_t>(st.nrt)) {
            throw std::logic_error("simulation reached an infeasible state");
        }
        ++events;
        if (!warm) {
            const bool by_events = events >= max_warmup;
            const bool by_departures = !cfg.warmup_events && departures >= departure_target;
            if (by_events || by_departures) {
                start_measuring();
            }
        } else {
            ++measured;
            if (measured % batch_size == 0 && batch + 1 < batches.size()) {
                ++batch;
            }
        }
    }

    out.events = events;
    out.rt.queued_at_end = rt_q.size();
    out.nrt.queued_at_end = nrt_q.size();

    const std::size_t nb = batches.size();
    std::vector<double> loss_rt(nb), loss_nrt(nb), mean_rt(nb), mean_nrt(nb), delay_rt(nb), delay_nrt(nb),
        sojourn(nb), eff(nb), accepted(nb);
    std::uint64_t rt_lost = 0, rt_off = 0, nrt_lost = 0, nrt_off = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        const auto& b = batches[i];
        using detail::ratio;
        loss_rt[i] = ratio(static_cast<double>(b.rt_lost), static_cast<double>(b.rt_offered));
        loss_nrt[i] = ratio(static_cast<double>(b.nrt_lost), static_cast<double>(b.nrt_offered));
        mean_rt[i] = ratio(b.rt_area, b.duration);
        mean_nrt[i] = ratio(b.nrt_area, b.duration);
        delay_rt[i] = ratio(b.rt_area, static_cast<double>(b.rt_served));
        delay_nrt[i] = ratio(b.rt_area + b.nrt_area, static_cast<double>(b.nrt_served));
        sojourn[i] = ratio(b.nrt_sojourn_sum, static_cast<double>(b.nrt_exits));
        eff[i] = ratio(static_cast<double>(b.nrt_offered), b.duration);
        accepted[i] = ratio(static_cast<double>(b.nrt_admitted), b.duration);
        out.elapsed += b.duration;
        rt_lost += b.rt_lost;
        rt_off += b.rt_offered;
        nrt_lost += b.nrt_lost;
        nrt_off += b.nrt_offered;
    }
    out.loss_rt = detail::loss_interval(loss_rt, rt_lost, rt_off);
    out.loss_nrt = detail::loss_interval(loss_nrt, nrt_lost, nrt_off);
    out.mean_rt = detail::batch_interval(mean_rt);
    out.mean_nrt = detail::batch_interval(mean_nrt);
    out.delay_rt = detail::batch_interval(delay_rt);
    out.delay_nrt = detail::batch_interval(delay_nrt);
    out.delay_nrt_sojourn = detail::batch_interval(sojourn);
    out.effective_lambda_nrt = detail::batch_interval(eff);
    out.nrt_accepted_rate = detail::batch_interval(accepted);
    if (out.elapsed > 0.0) {
        for (double& x : out.occupancy) {
            x /= out.elapsed;
        }
    }
    return out;
}

struct OccupancyHistogram {
    std::shared_ptr<const StateSpace> states;
    std::vector<double> fractions;

    [[nodiscard]] double at(const SystemState& s) const {
        const auto i = states->find(s);
        return i ? fractions[*i] : 0.0;
    }
};

inline OccupancyHistogram occupancy_histogram(const SimConfig& cfg) {
    auto est = run(cfg);
    return {std::move(est.states), std::move(est.occupancy)};
}

/// Half the L1 distance between two distributions on the same index set.
inline double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("total_variation: size mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        s += std::abs(p[i] - q[i]);
    }
    return 0.5 * s;
}

}  // namespace ebtsp

#endif  // EBTSP_SIM_HPP
