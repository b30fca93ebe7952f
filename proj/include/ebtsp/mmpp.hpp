#ifndef EBTSP_MMPP_HPP
#define EBTSP_MMPP_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace ebtsp {

/// Two-phase Markov modulated Poisson process.
///
/// Phase 1 emits arrivals at `lambda1` and leaves for phase 2 at rate
/// `sigma1`; phase 2 emits at `lambda2` and returns at rate `sigma2`.
struct MmppParams {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;

    void validate() const {
        if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
            throw std::invalid_argument("mmpp: lambda1 and lambda2 must be >= 0");
        }
        if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) {
            throw std::invalid_argument("mmpp: sigma1 and sigma2 must be > 0");
        }
    }

    /// Arrival rate while the modulating chain sits in `phase` (1 or 2).
    [[nodiscard]] double phase_rate(int phase) const { return phase == 1 ? lambda1 : lambda2; }

    /// Rate of leaving `phase` for the other one.
    [[nodiscard]] double switch_rate(int phase) const { return phase == 1 ? sigma1 : sigma2; }

    friend bool operator==(const MmppParams&, const MmppParams&) = default;
};

/// Stationary law (pi1, pi2) of the modulating chain.
inline std::pair<double, double> phase_steady_state(const MmppParams& p) {
    p.validate();
    const double total = p.sigma1 + p.sigma2;
    return {p.sigma2 / total, p.sigma1 / total};
}

/// Long-run arrival rate (sigma1*lambda2 + sigma2*lambda1) / (sigma1 + sigma2).
inline double mean_arrival_rate(const MmppParams& p) {
    p.validate();
    if (p.lambda1 == p.lambda2) {
        return p.lambda1;
    }
    return (p.sigma1 * p.lambda2 + p.sigma2 * p.lambda1) / (p.sigma1 + p.sigma2);
}

}  // namespace ebtsp

#endif  // EBTSP_MMPP_HPP
