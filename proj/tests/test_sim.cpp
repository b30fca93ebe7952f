#include <gtest/gtest.h>

#include <numeric>

#include "ebtsp/experiment.hpp"
#include "ebtsp/metrics.hpp"
#include "ebtsp/sim.hpp"

using namespace ebtsp;

namespace {

SystemConfig small_simple() {
    SystemConfig c;
    c.capacity_n = 2;
    c.rt_cap_r = 1;
    c.lambda_nrt = 3;
    c.mmpp = {2, 2, 1, 1};
    c.mu_rt = 5;
    c.mu_nrt = 4;
    return c;
}

SystemConfig small_combined() {
    SystemConfig c = small_simple();
    c.mechanism = Mechanism::CombinedEbTsp;
    c.capacity_n = 4;
    c.threshold_h = 2;
    c.threshold_l = 3;
    c.mmpp = {3, 1, 0.5, 1};
    return c;
}

SimConfig sim_of(const SystemConfig& c, std::uint64_t events, std::uint64_t seed) {
    SimConfig s;
    s.system = c;
    s.events = events;
    s.seed = seed;
    return s;
}

void expect_ledger(const ClassCounts& k) { EXPECT_EQ(k.offered, k.accepted() + k.blocked + k.pushed_out); }

}  // namespace

TEST(Sim, StreamIsReproducible) {
    detail::Stream a(5, 0), b(5, 0), c(5, 1);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
    EXPECT_NE(a.uniform(), c.uniform());
    // SplitMix64 reference output for seed 0.
    EXPECT_EQ(detail::splitmix64(0, 1), 0xE220A8397B1DCDAFULL);
}

TEST(Sim, DeterministicForSeed) {
    const auto c = small_combined();
    const auto a = run(sim_of(c, 200'000, 9));
    const auto b = run(sim_of(c, 200'000, 9));
    for (const auto& m : kMetrics) {
        EXPECT_EQ((a.*m.simulated).estimate, (b.*m.simulated).estimate);
        EXPECT_EQ((a.*m.simulated).half_width, (b.*m.simulated).half_width);
    }
    EXPECT_EQ(a.occupancy, b.occupancy);
    EXPECT_EQ(a.rt.offered, b.rt.offered);
    EXPECT_EQ(a.elapsed, b.elapsed);
    const auto d = run(sim_of(c, 200'000, 10));
    EXPECT_NE(a.elapsed, d.elapsed);
}

TEST(Sim, LedgerIsExact) {
    for (const auto& c : {small_simple(), small_combined()}) {
        const auto e = run(sim_of(c, 300'000, 3));
        expect_ledger(e.rt);
        expect_ledger(e.nrt);
        EXPECT_GT(e.rt.pushed_out + e.nrt.pushed_out + e.rt.blocked, 0u);
        EXPECT_EQ(e.events, 300'000u);
    }
    const auto e = run(sim_of(small_combined(), 300'000, 3));
    EXPECT_EQ(e.rt.pushed_out, 0u);
    EXPECT_EQ(e.nrt.pushed_out, 0u);
    EXPECT_EQ(e.nrt.blocked, 0u);
}

TEST(Sim, NoNrtTrafficIsolatesRtClass) {
    auto c = small_simple();
    c.lambda_nrt = 0;
    c.capacity_n = 5;
    c.rt_cap_r = 2;
    const auto e = run(sim_of(c, 1'000'000, 4));
    EXPECT_EQ(e.nrt.offered, 0u);
    EXPECT_EQ(e.nrt.served, 0u);
    EXPECT_EQ(e.nrt.pushed_out, 0u);
    for (std::size_t i = 0; i < e.occupancy.size(); ++i) {
        if ((*e.states)[i].nrt > 0) {
            EXPECT_EQ(e.occupancy[i], 0.0);
        }
    }
    // M/M/1/2 loss with rho = 0.4: blocking = rho^2 / (1 + rho + rho^2).
    EXPECT_TRUE(e.loss_rt.covers(0.16 / 1.56)) << e.loss_rt.estimate << " +- " << e.loss_rt.half_width;
}

TEST(Sim, OccupancyHistogramSumsToOne) {
    const auto h = occupancy_histogram(sim_of(small_combined(), 200'000, 8));
    EXPECT_NEAR(std::accumulate(h.fractions.begin(), h.fractions.end(), 0.0), 1.0, 1e-12);
    EXPECT_GT(h.at({1, 0, 0}), 0.0);
    EXPECT_EQ(h.at({1, 5, 0}), 0.0);
}

TEST(Sim, SmallSimpleCoversAnalytic) {
    const auto c = small_simple();
    const auto r = analyze(c);
    const auto e = run(sim_of(c, 2'000'000, 2026));
    for (const auto& m : kMetrics) {
        const Interval& iv = e.*m.simulated;
        EXPECT_TRUE(iv.covers(r.*m.analytic))
            << m.name << ": analytic " << r.*m.analytic << " sim " << iv.estimate << " +- " << iv.half_width;
    }
}

TEST(Sim, LittlesLawHoldsEmpirically) {
    for (const auto& c : {small_simple(), small_combined()}) {
        const auto e = run(sim_of(c, 1'000'000, 77));
        const double lhs = e.delay_nrt_sojourn.estimate * e.nrt_accepted_rate.estimate;
        const double tol = 2 * (e.delay_nrt_sojourn.half_width * e.nrt_accepted_rate.estimate +
                                e.nrt_accepted_rate.half_width * e.delay_nrt_sojourn.estimate +
                                e.mean_nrt.half_width);
        EXPECT_NEAR(lhs, e.mean_nrt.estimate, tol);
    }
}

TEST(Sim, RejectsTooSmallBudgets) {
    EXPECT_THROW(run(sim_of(small_simple(), 0, 1)), SimBudgetError);
    EXPECT_THROW(run(sim_of(small_simple(), 1000, 1)), SimBudgetError);
    auto s = sim_of(small_simple(), 100'000, 1);
    s.batches = 1;
    EXPECT_THROW(run(s), std::invalid_argument);
    s.batches = 20;
    s.warmup_events = 100'000;
    EXPECT_THROW(run(s), SimBudgetError);
}

TEST(Sim, ExplicitWarmup) {
    auto s = sim_of(small_simple(), 100'000, 1);
    s.warmup_events = 0;
    const auto e = run(s);
    EXPECT_EQ(e.warmup_events, 0u);
    EXPECT_EQ(e.warmup_time, 0.0);
    s.warmup_events = 5000;
    EXPECT_EQ(run(s).warmup_events, 5000u);
    // Default: 10 * N departures arrive well before 10% of the budget here.
    s.warmup_events.reset();
    EXPECT_LT(run(s).warmup_events, 10'000u);
}
