#ifndef EBTSP_CTMC_HPP
#define EBTSP_CTMC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <memory>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "ebtsp/model.hpp"

namespace ebtsp {

/// Thrown when a chain turns out not to be irreducible, either by graph
/// search or by a pivot with no remaining outflow during elimination.
class ReducibleChainError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RateEntry {
    std::size_t from = 0;
    std::size_t to = 0;
    double rate = 0.0;

    friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

/// Sorts by (from, to), sums parallel edges and drops self loops and zero rates.
inline std::vector<RateEntry> canonicalize(std::vector<RateEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const RateEntry& a, const RateEntry& b) {
        return a.from != b.from ? a.from < b.from : a.to < b.to;
    });
    std::vector<RateEntry> out;
    out.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.from == e.to || e.rate == 0.0) {
            continue;
        }
        if (e.rate < 0.0 || !std::isfinite(e.rate)) {
            throw std::invalid_argument("rate entries must be finite and nonnegative");
        }
        if (!out.empty() && out.back().from == e.from && out.back().to == e.to) {
            out.back().rate += e.rate;
        } else {
            out.push_back(e);
        }
    }
    return out;
}

namespace detail {

inline std::vector<char> reach(std::size_t n, std::size_t start,
                               const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w : adj[v]) {
            if (!seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return seen;
}

}  // namespace detail

inline bool is_strongly_connected(std::size_t n, std::span<const RateEntry> entries) {
    if (n <= 1) {
        return true;
    }
    std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
    for (const auto& e : entries) {
        fwd[e.from].push_back(e.to);
        bwd[e.to].push_back(e.from);
    }
    const auto f = detail::reach(n, 0, fwd);
    const auto b = detail::reach(n, 0, bwd);
    return std::all_of(f.begin(), f.end(), [](char c) { return c != 0; }) &&
           std::all_of(b.begin(), b.end(), [](char c) { return c != 0; });
}

/// Members of the unique closed communicating class, in increasing order.
/// All states form that class when the chain is irreducible; states outside
/// it are transient. Throws ReducibleChainError when there are several
/// closed classes, i.e. when the stationary law is not unique.
inline std::vector<std::size_t> closed_class(std::size_t n, std::span<const RateEntry> entries) {
    std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
    for (const auto& e : entries) {
        fwd[e.from].push_back(e.to);
        bwd[e.to].push_back(e.from);
    }
    // Kosaraju: finishing order on the forward graph, components on the reverse.
    std::vector<std::size_t> finish;
    finish.reserve(n);
    std::vector<char> seen(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    for (std::size_t s = 0; s < n; ++s) {
        if (seen[s]) {
            continue;
        }
        seen[s] = 1;
        stack.emplace_back(s, 0);
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < fwd[v].size()) {
                const std::size_t w = fwd[v][next++];
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.emplace_back(w, 0);
                }
            } else {
                finish.push_back(v);
                stack.pop_back();
            }
        }
    }
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> comp(n, none);
    std::size_t ncomp = 0;
    std::vector<std::size_t> work;
    for (auto it = finish.rbegin(); it != finish.rend(); ++it) {
        if (comp[*it] != none) {
            continue;
        }
        work.assign(1, *it);
        comp[*it] = ncomp;
        while (!work.empty()) {
            const std::size_t v = work.back();
            work.pop_back();
            for (std::size_t w : bwd[v]) {
                if (comp[w] == none) {
                    comp[w] = ncomp;
                    work.push_back(w);
                }
            }
        }
        ++ncomp;
    }
    std::vector<char> leaks(ncomp, 0);
    for (const auto& e : entries) {
        if (comp[e.from] != comp[e.to]) {
            leaks[comp[e.from]] = 1;
        }
    }
    std::size_t closed = none;
    for (std::size_t c = 0; c < ncomp; ++c) {
        if (!leaks[c]) {
            if (closed != none) {
                throw ReducibleChainError("chain has more than one closed class");
            }
            closed = c;
        }
    }
    std::vector<std::size_t> members;
    for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] == closed) {
            members.push_back(v);
        }
    }
    return members;
}

/// Reverse Cuthill-McKee ordering of the symmetrised sparsity pattern.
/// Returns perm with perm[new] = old. Ties break on lower original index.
inline std::vector<std::size_t> reverse_cuthill_mckee(std::size_t n, std::span<const RateEntry> entries) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : entries) {
        adj[e.from].push_back(e.to);
        adj[e.to].push_back(e.from);
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<std::size_t> by_degree(n);
    std::iota(by_degree.begin(), by_degree.end(), std::size_t{0});
    std::stable_sort(by_degree.begin(), by_degree.end(),
                     [&](std::size_t a, std::size_t b) { return adj[a].size() < adj[b].size(); });

    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<char> placed(n, 0);
    std::vector<std::size_t> scratch;
    for (std::size_t root : by_degree) {
        if (placed[root]) {
            continue;
        }
        std::size_t head = order.size();
        order.push_back(root);
        placed[root] = 1;
        while (head < order.size()) {
            const std::size_t v = order[head++];
            scratch.clear();
            for (std::size_t w : adj[v]) {
                if (!placed[w]) {
                    scratch.push_back(w);
                    placed[w] = 1;
                }
            }
            std::stable_sort(scratch.begin(), scratch.end(),
                             [&](std::size_t a, std::size_t b) { return adj[a].size() < adj[b].size(); });
            order.insert(order.end(), scratch.begin(), scratch.end());
        }
    }
    std::reverse(order.begin(), order.end());
    return order;
}

/// Stationary vector of the CTMC with off-diagonal rates `entries` by
/// Grassmann-Taksar-Heyman elimination. The states are first renumbered by
/// reverse Cuthill-McKee so that elimination runs inside a band; fill never
/// leaves the band, so the cost is O(n b^2). No subtractions are performed.
inline std::vector<double> gth_solve(std::size_t n, std::span<const RateEntry> entries) {
    if (n == 0) {
        throw std::invalid_argument("gth_solve: empty chain");
    }
    if (n == 1) {
        return {1.0};
    }
    const auto perm = reverse_cuthill_mckee(n, entries);
    std::vector<std::size_t> inv(n);
    for (std::size_t i = 0; i < n; ++i) {
        inv[perm[i]] = i;
    }
    std::size_t bw = 0;
    for (const auto& e : entries) {
        const std::size_t a = inv[e.from], b = inv[e.to];
        bw = std::max(bw, a > b ? a - b : b - a);
    }
    const std::size_t width = 2 * bw + 1;
    std::vector<double> band(n * width, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return band[i * width + (j + bw - i)]; };
    for (const auto& e : entries) {
        if (e.from != e.to) {
            at(inv[e.from], inv[e.to]) += e.rate;
        }
    }

    for (std::size_t k = n - 1; k >= 1; --k) {
        const std::size_t lo = k > bw ? k - bw : 0;
        double outflow = 0.0;
        for (std::size_t j = lo; j < k; ++j) {
            outflow += at(k, j);
        }
        if (!(outflow > 0.0)) {
            throw ReducibleChainError("gth_solve: state has no path back to lower-numbered states");
        }
        for (std::size_t i = lo; i < k; ++i) {
            at(i, k) /= outflow;
        }
        for (std::size_t i = lo; i < k; ++i) {
            const double a_ik = at(i, k);
            if (a_ik == 0.0) {
                continue;
            }
            for (std::size_t j = lo; j < k; ++j) {
                if (j != i) {
                    at(i, j) += a_ik * at(k, j);
                }
            }
        }
    }

    std::vector<double> x(n, 0.0);
    x[0] = 1.0;
    double total = 1.0;
    for (std::size_t j = 1; j < n; ++j) {
        const std::size_t lo = j > bw ? j - bw : 0;
        double acc = 0.0;
        for (std::size_t i = lo; i < j; ++i) {
            acc += x[i] * at(i, j);
        }
        x[j] = acc;
        total += acc;
    }
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) {
        pi[perm[i]] = x[i] / total;
    }
    return pi;
}

/// Infinitesimal generator over an enumerated state space.
class GeneratorMatrix {
  public:
    GeneratorMatrix(std::shared_ptr<const StateSpace> space, std::vector<RateEntry> entries)
        : space_(std::move(space)), entries_(canonicalize(std::move(entries))) {
        diagonal_.assign(space_->size(), 0.0);
        for (const auto& e : entries_) {
            if (e.from >= space_->size() || e.to >= space_->size()) {
                throw std::out_of_range("GeneratorMatrix: entry index out of range");
            }
            diagonal_[e.from] -= e.rate;
        }
        recurrent_ = closed_class(space_->size(), entries_);
    }

    /// True when every state communicates with every other.
    [[nodiscard]] bool irreducible() const { return recurrent_.size() == dimension(); }

    /// The closed class carrying all stationary mass.
    [[nodiscard]] const std::vector<std::size_t>& recurrent_states() const { return recurrent_; }

    [[nodiscard]] std::size_t dimension() const { return space_->size(); }
    [[nodiscard]] const std::vector<RateEntry>& entries() const { return entries_; }
    [[nodiscard]] const std::vector<double>& diagonal() const { return diagonal_; }
    [[nodiscard]] const StateSpace& states() const { return *space_; }
    [[nodiscard]] const std::shared_ptr<const StateSpace>& state_space() const { return space_; }
    [[nodiscard]] const SystemConfig& config() const { return space_->config(); }

    /// Off-diagonal rate from i to j (0 when absent).
    [[nodiscard]] double rate(std::size_t i, std::size_t j) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), RateEntry{i, j, 0.0},
                                   [](const RateEntry& a, const RateEntry& b) {
                                       return a.from != b.from ? a.from < b.from : a.to < b.to;
                                   });
        return (it != entries_.end() && it->from == i && it->to == j) ? it->rate : 0.0;
    }

    [[nodiscard]] double max_abs_entry() const {
        double m = 0.0;
        for (double d : diagonal_) {
            m = std::max(m, -d);
        }
        return m;
    }

    /// Row vector times generator.
    [[nodiscard]] std::vector<double> left_multiply(std::span<const double> x) const {
        std::vector<double> y(dimension(), 0.0);
        for (std::size_t i = 0; i < dimension(); ++i) {
            y[i] += x[i] * diagonal_[i];
        }
        for (const auto& e : entries_) {
            y[e.to] += x[e.from] * e.rate;
        }
        return y;
    }

  private:
    std::shared_ptr<const StateSpace> space_;
    std::vector<RateEntry> entries_;
    std::vector<double> diagonal_;
    std::vector<std::size_t> recurrent_;
};

/// Generator of the mechanism described by `config`. With all rates
/// positive the chain is irreducible. A zero arrival rate leaves some states
/// transient; those get zero stationary mass. Throws ReducibleChainError if
/// the graph has more than one closed class.
inline GeneratorMatrix build_generator(const SystemConfig& config) {
    auto space = std::make_shared<const StateSpace>(config);
    std::vector<RateEntry> raw;
    raw.reserve(space->size() * 5);
    for (std::size_t i = 0; i < space->size(); ++i) {
        for (const auto& t : transitions(config, (*space)[i])) {
            raw.push_back({i, space->index_unchecked(t.target), t.rate});
        }
    }
    return GeneratorMatrix(std::move(space), std::move(raw));
}

struct StationaryDistribution {
    std::vector<double> probabilities;
    std::shared_ptr<const StateSpace> states;

    [[nodiscard]] std::size_t size() const { return probabilities.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return probabilities[i]; }
};

inline StationaryDistribution solve_stationary(const GeneratorMatrix& gen) {
    if (gen.irreducible()) {
        return {gth_solve(gen.dimension(), gen.entries()), gen.state_space()};
    }
    const auto& members = gen.recurrent_states();
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> local(gen.dimension(), none);
    for (std::size_t k = 0; k < members.size(); ++k) {
        local[members[k]] = k;
    }
    std::vector<RateEntry> sub;
    for (const auto& e : gen.entries()) {
        if (local[e.from] != none && local[e.to] != none) {
            sub.push_back({local[e.from], local[e.to], e.rate});
        }
    }
    const auto pi = gth_solve(members.size(), sub);
    std::vector<double> full(gen.dimension(), 0.0);
    for (std::size_t k = 0; k < members.size(); ++k) {
        full[members[k]] = pi[k];
    }
    return {std::move(full), gen.state_space()};
}

inline StationaryDistribution solve_stationary(const SystemConfig& config) {
    return solve_stationary(build_generator(config));
}

/// max_i |(pi Q)_i| divided by the largest exit rate of Q.
inline double relative_residual(const GeneratorMatrix& gen, std::span<const double> pi) {
    const auto y = gen.left_multiply(pi);
    double m = 0.0;
    for (double v : y) {
        m = std::max(m, std::abs(v));
    }
    const double scale = gen.max_abs_entry();
    return scale > 0.0 ? m / scale : m;
}

/// Text dump: a legend of `index phase rt nrt` lines, then one
/// `source target rate` triple per off-diagonal entry.
inline void write_generator_dump(std::ostream& os, const GeneratorMatrix& gen) {
    char buf[96];
    os << "# states " << gen.dimension() << "\n# index phase rt nrt\n";
    for (std::size_t i = 0; i < gen.dimension(); ++i) {
        const auto& s = gen.states()[i];
        std::snprintf(buf, sizeof buf, "%zu %d %d %d\n", i, s.phase, s.rt, s.nrt);
        os << buf;
    }
    os << "# entries " << gen.entries().size() << "\n# source target rate\n";
    for (const auto& e : gen.entries()) {
        std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", e.from, e.to, e.rate);
        os << buf;
    }
}

}  // namespace ebtsp

#endif  // EBTSP_CTMC_HPP
