#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <tuple>

#include "ebtsp/ctmc.hpp"
#include "ebtsp/model.hpp"
#include "oracles.hpp"

using namespace ebtsp;

namespace {

SystemConfig simple(int n, int r) {
    SystemConfig c;
    c.capacity_n = n;
    c.rt_cap_r = r;
    c.lambda_nrt = 3;
    c.mmpp = {2, 2, 1, 1};
    c.mu_rt = 5;
    c.mu_nrt = 4;
    return c;
}

SystemConfig combined(int n, int r, int h) {
    SystemConfig c = simple(n, r);
    c.mechanism = Mechanism::CombinedEbTsp;
    c.threshold_h = h;
    c.threshold_l = n - r;
    return c;
}

SystemConfig fig3(Mechanism m) {
    SystemConfig c = combined(60, 15, 25);
    c.mechanism = m;
    c.lambda_nrt = 20;
    c.mmpp = {8, 5, 1, 1};
    c.mu_rt = 30;
    c.mu_nrt = 20;
    return c;
}

std::set<std::tuple<int, int, int>> as_set(const std::vector<SystemState>& v) {
    std::set<std::tuple<int, int, int>> s;
    for (const auto& x : v) {
        s.insert({x.phase, x.rt, x.nrt});
    }
    return s;
}

}  // namespace

TEST(Model, ValidationNamesTheRule) {
    auto c = combined(60, 15, 25);
    c.threshold_l = 44;
    try {
        c.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("L must equal N - R"), std::string::npos);
    }
    auto d = simple(4, 4);
    EXPECT_THROW(d.validate(), ValidationError);
    auto h = combined(10, 2, 2);
    EXPECT_THROW(h.validate(), ValidationError);
    auto mu = simple(4, 2);
    mu.mu_nrt = 0;
    EXPECT_THROW(mu.validate(), ValidationError);
    // Thresholds are ignored by the simple mechanism.
    auto s = simple(4, 2);
    s.threshold_h = 99;
    EXPECT_NO_THROW(s.validate());
}

TEST(Model, StateCounts) {
    EXPECT_EQ(enumerate_states(fig3(Mechanism::SimpleEbTsp)).size(), 1712u);
    EXPECT_EQ(enumerate_states(simple(2, 1)).size(), 10u);
    // 2 phases x 16 RT levels x 46 NRT levels; nrt <= L = N - R already
    // implies rt + nrt <= N.
    EXPECT_EQ(enumerate_states(fig3(Mechanism::CombinedEbTsp)).size(), 1472u);
}

TEST(Model, SmallEnumerationByHand) {
    const auto states = enumerate_states(simple(2, 1));
    const std::vector<SystemState> expected{{1, 0, 0}, {1, 0, 1}, {1, 0, 2}, {1, 1, 0}, {1, 1, 1},
                                            {2, 0, 0}, {2, 0, 1}, {2, 0, 2}, {2, 1, 0}, {2, 1, 1}};
    EXPECT_EQ(states, expected);
}

TEST(Model, EnumerationMatchesBruteForceAndReachability) {
    std::mt19937_64 rng(7);
    for (auto m : {Mechanism::SimpleEbTsp, Mechanism::CombinedEbTsp}) {
        for (int i = 0; i < 25; ++i) {
            const auto c = oracle::random_config(rng, m, 400);
            const auto states = enumerate_states(c);
            EXPECT_EQ(as_set(states), as_set(oracle::brute_force_states(c)));
            EXPECT_EQ(as_set(states), oracle::reachable_states(c));
            const StateSpace space(c);
            for (std::size_t k = 0; k < states.size(); ++k) {
                EXPECT_EQ(space.index_of(states[k]), k);
            }
        }
    }
    for (auto m : {Mechanism::SimpleEbTsp, Mechanism::CombinedEbTsp}) {
        const auto c = fig3(m);
        EXPECT_EQ(as_set(enumerate_states(c)), oracle::reachable_states(c));
        EXPECT_EQ(enumerate_states(c), enumerate_states(c));
    }
}

TEST(Model, NrtRateBands) {
    auto c = combined(60, 15, 25);
    c.lambda_nrt = 20;
    EXPECT_EQ(nrt_arrival_rate(c, {1, 10, 10}), 20.0);
    EXPECT_EQ(nrt_arrival_rate(c, {2, 15, 15}), 10.0);
    EXPECT_EQ(nrt_arrival_rate(c, {1, 15, 30}), 0.0);
    EXPECT_EQ(nrt_arrival_rate(c, {1, 0, 24}), 20.0);
    EXPECT_EQ(nrt_arrival_rate(c, {1, 0, 25}), 10.0);
    EXPECT_EQ(nrt_arrival_rate(c, {1, 0, 44}), 10.0);
    c.mechanism = Mechanism::SimpleEbTsp;
    EXPECT_EQ(nrt_arrival_rate(c, {1, 15, 45}), 20.0);
}

TEST(Model, EmptyStateEdges) {
    auto c = simple(2, 1);
    const auto t = transitions(c, {1, 0, 0});
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0].kind, TransitionKind::PhaseSwitch);
    EXPECT_EQ(t[0].target, (SystemState{2, 0, 0}));
    EXPECT_EQ(t[0].rate, 1.0);
    EXPECT_EQ(t[1].kind, TransitionKind::RtArrivalAdmit);
    EXPECT_EQ(t[1].target, (SystemState{1, 1, 0}));
    EXPECT_EQ(t[1].rate, 2.0);
    EXPECT_EQ(t[2].kind, TransitionKind::NrtArrivalAdmit);
    EXPECT_EQ(t[2].target, (SystemState{1, 0, 1}));
    EXPECT_EQ(t[2].rate, 3.0);
}

TEST(Model, PushOutEdges) {
    auto c = simple(2, 1);
    auto t = transitions(c, {1, 0, 2});
    auto has = [](const std::vector<Transition>& v, TransitionKind k) {
        return std::any_of(v.begin(), v.end(), [k](const Transition& x) { return x.kind == k; });
    };
    ASSERT_TRUE(has(t, TransitionKind::RtArrivalPushout));
    for (const auto& e : t) {
        if (e.kind == TransitionKind::RtArrivalPushout) {
            EXPECT_EQ(e.target, (SystemState{1, 1, 1}));
            EXPECT_EQ(e.rate, 2.0);
        }
        EXPECT_NE(e.kind, TransitionKind::NrtArrivalAdmit);
        EXPECT_NE(e.kind, TransitionKind::NrtArrivalPushout);
    }

    t = transitions(c, {1, 1, 1});
    ASSERT_TRUE(has(t, TransitionKind::NrtArrivalPushout));
    for (const auto& e : t) {
        if (e.kind == TransitionKind::NrtArrivalPushout) {
            EXPECT_EQ(e.target, (SystemState{1, 0, 2}));
            EXPECT_EQ(e.rate, 3.0);
        }
        EXPECT_NE(e.kind, TransitionKind::RtArrivalAdmit);
        EXPECT_NE(e.kind, TransitionKind::RtArrivalPushout);
    }
    EXPECT_THROW(transitions(c, {1, 2, 0}), std::invalid_argument);
    EXPECT_THROW(transitions(c, {3, 0, 0}), std::invalid_argument);
}

TEST(Model, CombinedFullStatesHaveNoNrtArrivals) {
    for (const auto& c : {fig3(Mechanism::CombinedEbTsp), combined(4, 1, 2), combined(9, 2, 4)}) {
        std::size_t full = 0;
        for (const auto& s : enumerate_states(c)) {
            for (const auto& t : transitions(c, s)) {
                EXPECT_NE(t.kind, TransitionKind::NrtArrivalPushout);
                if (s.total() == c.capacity_n) {
                    EXPECT_NE(t.kind, TransitionKind::NrtArrivalAdmit);
                }
            }
            full += s.total() == c.capacity_n;
        }
        EXPECT_GT(full, 0u);
    }
}

TEST(Model, EdgeInvariantsOnRandomConfigs) {
    std::mt19937_64 rng(11);
    for (auto m : {Mechanism::SimpleEbTsp, Mechanism::CombinedEbTsp}) {
        for (int i = 0; i < 30; ++i) {
            const auto c = oracle::random_config(rng, m, 600);
            const StateSpace space(c);
            std::vector<RateEntry> edges;
            for (std::size_t k = 0; k < space.size(); ++k) {
                const auto& s = space[k];
                double rt_edges = 0.0;
                for (const auto& t : transitions(c, s)) {
                    EXPECT_GT(t.rate, 0.0);
                    EXPECT_FALSE(t.target == s);
                    ASSERT_TRUE(is_feasible(c, t.target));
                    if (t.kind == TransitionKind::RtArrivalAdmit || t.kind == TransitionKind::RtArrivalPushout) {
                        rt_edges += t.rate;
                    }
                    edges.push_back({k, space.index_of(t.target), t.rate});
                }
                // Admitted RT rate plus the implicit block equals the phase rate.
                const double block = s.rt == c.rt_cap_r ? c.mmpp.phase_rate(s.phase) : 0.0;
                EXPECT_DOUBLE_EQ(rt_edges + block, c.mmpp.phase_rate(s.phase));
            }
            EXPECT_TRUE(is_strongly_connected(space.size(), edges));
        }
    }
}
