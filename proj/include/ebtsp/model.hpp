#ifndef EBTSP_MODEL_HPP
#define EBTSP_MODEL_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ebtsp/mmpp.hpp"

namespace ebtsp {

enum class Mechanism { SimpleEbTsp, CombinedEbTsp };

inline std::string_view to_string(Mechanism m) {
    return m == Mechanism::SimpleEbTsp ? "simple" : "combined";
}

/// Raised when a configuration breaks one of its invariants. The message
/// names the violated rule, e.g. "L must equal N - R".
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// One model instance: a shared buffer of `capacity_n` slots, at most
/// `rt_cap_r` of them holding RT packets, and (for the combined mechanism)
/// NRT rate thresholds H < L on the total occupancy.
struct SystemConfig {
    int capacity_n = 0;
    int rt_cap_r = 0;
    int threshold_h = 0;
    int threshold_l = 0;
    double lambda_nrt = 0.0;
    MmppParams mmpp{};
    double mu_rt = 1.0;
    double mu_nrt = 1.0;
    Mechanism mechanism = Mechanism::SimpleEbTsp;

    void validate() const {
        if (capacity_n <= 0) {
            throw ValidationError("N must be > 0");
        }
        if (!(rt_cap_r > 0 && rt_cap_r < capacity_n)) {
            throw ValidationError("R must satisfy 0 < R < N");
        }
        if (!(mu_rt > 0.0)) {
            throw ValidationError("mu_rt must be > 0");
        }
        if (!(mu_nrt > 0.0)) {
            throw ValidationError("mu_nrt must be > 0");
        }
        if (!(lambda_nrt >= 0.0)) {
            throw ValidationError("lambda_nrt must be >= 0");
        }
        try {
            mmpp.validate();
        } catch (const std::invalid_argument& e) {
            throw ValidationError(e.what());
        }
        if (mechanism == Mechanism::CombinedEbTsp) {
            if (threshold_l != capacity_n - rt_cap_r) {
                throw ValidationError("L must equal N - R");
            }
            if (!(rt_cap_r < threshold_h && threshold_h < threshold_l)) {
                throw ValidationError("thresholds must satisfy R < H < L");
            }
        }
    }

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct SystemState {
    int phase = 1;  // 1 or 2
    int rt = 0;
    int nrt = 0;

    [[nodiscard]] int total() const { return rt + nrt; }

    friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Largest NRT count a state may hold. Under the combined mechanism NRT
/// arrivals stop at k >= L, so nrt never exceeds L.
inline int max_nrt(const SystemConfig& c, int rt) {
    const int by_space = c.capacity_n - rt;
    if (c.mechanism == Mechanism::CombinedEbTsp) {
        return std::min(by_space, c.threshold_l);
    }
    return by_space;
}

inline bool is_feasible(const SystemConfig& c, const SystemState& s) {
    return (s.phase == 1 || s.phase == 2) && s.rt >= 0 && s.rt <= c.rt_cap_r && s.nrt >= 0 &&
           s.nrt <= max_nrt(c, s.rt);
}

/// Bijection between feasible states and dense indices. Order is
/// phase-major, then rt, then nrt.
class StateSpace {
  public:
    explicit StateSpace(const SystemConfig& config) : config_(config) {
        config_.validate();
        const int r = config_.rt_cap_r;
        row_offset_.resize(static_cast<std::size_t>(r) + 2);
        std::size_t acc = 0;
        for (int rt = 0; rt <= r; ++rt) {
            row_offset_[static_cast<std::size_t>(rt)] = acc;
            acc += static_cast<std::size_t>(max_nrt(config_, rt)) + 1;
        }
        row_offset_[static_cast<std::size_t>(r) + 1] = acc;
        per_phase_ = acc;
        states_.reserve(2 * per_phase_);
        for (int phase = 1; phase <= 2; ++phase) {
            for (int rt = 0; rt <= r; ++rt) {
                for (int nrt = 0; nrt <= max_nrt(config_, rt); ++nrt) {
                    states_.push_back({phase, rt, nrt});
                }
            }
        }
    }

    [[nodiscard]] std::size_t size() const { return states_.size(); }
    [[nodiscard]] const SystemConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<SystemState>& states() const { return states_; }
    [[nodiscard]] const SystemState& operator[](std::size_t i) const { return states_[i]; }

    [[nodiscard]] std::optional<std::size_t> find(const SystemState& s) const {
        if (!is_feasible(config_, s)) {
            return std::nullopt;
        }
        return index_unchecked(s);
    }

    [[nodiscard]] std::size_t index_of(const SystemState& s) const {
        if (!is_feasible(config_, s)) {
            throw std::out_of_range("state is not feasible for this configuration");
        }
        return index_unchecked(s);
    }

    /// Index without the feasibility check; caller guarantees feasibility.
    [[nodiscard]] std::size_t index_unchecked(const SystemState& s) const {
        return static_cast<std::size_t>(s.phase - 1) * per_phase_ +
               row_offset_[static_cast<std::size_t>(s.rt)] + static_cast<std::size_t>(s.nrt);
    }

  private:
    SystemConfig config_;
    std::vector<std::size_t> row_offset_;
    std::size_t per_phase_ = 0;
    std::vector<SystemState> states_;
};

inline std::vector<SystemState> enumerate_states(const SystemConfig& config) {
    return StateSpace(config).states();
}

/// NRT arrival rate seen in `s`: the base rate, halved for H <= k < L and cut
/// to zero for k >= L under the combined mechanism.
inline double nrt_arrival_rate(const SystemConfig& c, const SystemState& s) {
    if (c.mechanism == Mechanism::SimpleEbTsp) {
        return c.lambda_nrt;
    }
    const int k = s.total();
    if (k < c.threshold_h) {
        return c.lambda_nrt;
    }
    if (k < c.threshold_l) {
        return c.lambda_nrt / 2.0;
    }
    return 0.0;
}

enum class TransitionKind {
    RtArrivalAdmit,
    RtArrivalPushout,
    NrtArrivalAdmit,
    NrtArrivalPushout,
    RtService,
    NrtService,
    PhaseSwitch,
};

inline std::string_view to_string(TransitionKind k) {
    switch (k) {
        case TransitionKind::RtArrivalAdmit: return "RtArrivalAdmit";
        case TransitionKind::RtArrivalPushout: return "RtArrivalPushout";
        case TransitionKind::NrtArrivalAdmit: return "NrtArrivalAdmit";
        case TransitionKind::NrtArrivalPushout: return "NrtArrivalPushout";
        case TransitionKind::RtService: return "RtService";
        case TransitionKind::NrtService: return "NrtService";
        case TransitionKind::PhaseSwitch: return "PhaseSwitch";
    }
    return "?";
}

struct Transition {
    SystemState target;
    double rate = 0.0;
    TransitionKind kind = TransitionKind::PhaseSwitch;
};

/// Outgoing labelled edges of `s`. Blocked arrivals produce no edge.
/// Parallel edges to the same target are kept separate.
inline std::vector<Transition> transitions(const SystemConfig& c, const SystemState& s) {
    if (!is_feasible(c, s)) {
        throw std::invalid_argument("transitions: infeasible state");
    }
    std::vector<Transition> out;
    out.reserve(5);
    const int k = s.total();
    const int n = c.capacity_n;
    const int r = c.rt_cap_r;

    out.push_back({{3 - s.phase, s.rt, s.nrt}, c.mmpp.switch_rate(s.phase), TransitionKind::PhaseSwitch});

    const double rt_rate = c.mmpp.phase_rate(s.phase);
    if (rt_rate > 0.0 && s.rt < r) {
        if (k < n) {
            out.push_back({{s.phase, s.rt + 1, s.nrt}, rt_rate, TransitionKind::RtArrivalAdmit});
        } else if (s.nrt > 0) {
            out.push_back({{s.phase, s.rt + 1, s.nrt - 1}, rt_rate, TransitionKind::RtArrivalPushout});
        }
    }

    const double nrt_rate = nrt_arrival_rate(c, s);
    if (nrt_rate > 0.0) {
        if (k < n) {
            out.push_back({{s.phase, s.rt, s.nrt + 1}, nrt_rate, TransitionKind::NrtArrivalAdmit});
        } else if (s.rt == r) {
            out.push_back({{s.phase, s.rt - 1, s.nrt + 1}, nrt_rate, TransitionKind::NrtArrivalPushout});
        }
    }

    if (s.rt > 0) {
        out.push_back({{s.phase, s.rt - 1, s.nrt}, c.mu_rt, TransitionKind::RtService});
    }
    if (s.nrt > 0) {
        out.push_back({{s.phase, s.rt, s.nrt - 1}, c.mu_nrt, TransitionKind::NrtService});
    }
    return out;
}

}  // namespace ebtsp

#endif  // EBTSP_MODEL_HPP
