#include <gtest/gtest.h>

#include "support.hpp"

using namespace rendezvous;

namespace {

Scenario scalar_team(std::vector<double> x0, Topology t, double lo, double hi) {
    Scenario s;
    const std::size_t n = x0.size();
    s.model = RobotModel::single_integrator(1);
    s.topology = std::move(t);
    s.x0 = std::move(x0);
    s.q = Matrix{{1}};
    s.r = Matrix{{1}};
    s.bounds = InputBounds::uniform(n, 1, lo, hi);
    s.network = NetworkModel::perfect(n);
    s.t_end = 10.0;
    return s;
}

} // namespace

// ============================================================================
// Consensus measures
// ============================================================================

TEST(ConsensusReached, Examples) {
    EXPECT_TRUE(consensus_reached(std::vector<double>{0.4, 0.4, 0.4}, 3, 1, 1e-12));
    EXPECT_FALSE(consensus_reached(std::vector<double>{0.0, 0.1}, 2, 1, 0.05));
    EXPECT_TRUE(consensus_reached(std::vector<double>{0.0, 0.04, 0.02}, 3, 1, 0.05));
}

TEST(MaxPairwiseDistance, PlanarHandValue) {
    EXPECT_DOUBLE_EQ(max_pairwise_distance(std::vector<double>{0, 0, 3, 4, 1, 1}, 3, 2), 5.0);
}

// ============================================================================
// Network channel
// ============================================================================

TEST(Network, PerfectLinkPassesThrough) {
    const std::vector<double> x0{0.0, 0.0, 1.0, 2.0};
    NetworkChannel ch(NetworkModel::perfect(2), 0, x0, 2);
    const std::vector<double> sample{0.25, -0.5};
    EXPECT_EQ(ch.deliver({0, 1}, sample, 0), sample);
    EXPECT_EQ(ch.deliver({0, 1}, std::vector<double>{3.0, 4.0}, 1), (std::vector<double>{3.0, 4.0}));
}

TEST(Network, DelayReturnsOlderSample) {
    const std::vector<double> x0{0.0, 10.0};
    NetworkChannel ch(NetworkModel::uniform(2, 2, 0.0, 0.0), 0, x0, 1);
    std::vector<double> seen;
    for (std::uint64_t tick = 0; tick < 6; ++tick)
        seen.push_back(ch.deliver({0, 1}, std::vector<double>{10.0 + static_cast<double>(tick)}, tick)[0]);
    EXPECT_EQ(seen, (std::vector<double>{10, 10, 10, 11, 12, 13}));
}

TEST(Network, DroppedPacketsHoldTheLastDelivery) {
    const std::vector<double> x0{0.0, 0.0};
    NetworkChannel ch(NetworkModel::uniform(2, 0, 0.5, 0.0), 42, x0, 1);
    double last = 0.0;
    int held = 0, fresh = 0;
    for (std::uint64_t tick = 0; tick < 2000; ++tick) {
        const double v = ch.deliver({0, 1}, std::vector<double>{static_cast<double>(tick + 1)}, tick)[0];
        if (v == static_cast<double>(tick + 1))
            ++fresh;
        else {
            EXPECT_EQ(v, last);
            ++held;
        }
        last = v;
    }
    // Binomial(2000, 0.5): 6 standard deviations is about 134.
    EXPECT_NEAR(held, 1000, 134);
    EXPECT_EQ(held + fresh, 2000);
}

TEST(Network, NoiseHasTheConfiguredSpread) {
    const std::vector<double> x0{0.0, 0.0};
    NetworkChannel ch(NetworkModel::uniform(2, 0, 0.0, 0.01), 9, x0, 1);
    double s = 0.0, ss = 0.0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) {
        const double v = ch.deliver({1, 0}, std::vector<double>{1.0}, static_cast<std::uint64_t>(k))[0] - 1.0;
        s += v;
        ss += v * v;
    }
    const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
    EXPECT_NEAR(mean, 0.0, 6 * 0.01 / std::sqrt(double(n)));
    EXPECT_NEAR(sd, 0.01, 0.0005);
}

TEST(Network, LinksAreIndependentStreams) {
    // A link's outcomes do not depend on whether other links are used.
    const std::vector<double> x0{0.0, 0.0, 0.0};
    const auto model = NetworkModel::uniform(3, 0, 0.3, 0.01);
    NetworkChannel a(model, 5, x0, 1), b(model, 5, x0, 1);
    for (std::uint64_t tick = 0; tick < 50; ++tick) {
        (void)a.deliver({0, 2}, std::vector<double>{1.0}, tick);
        EXPECT_EQ(a.deliver({0, 1}, std::vector<double>{double(tick)}, tick),
                  b.deliver({0, 1}, std::vector<double>{double(tick)}, tick));
    }
}

TEST(Network, ValidationRejectsCertainDropAndHugeDelay) {
    auto m = NetworkModel::perfect(2);
    m.drop_probability[1] = 1.0;
    m.delay_periods[2] = NetworkModel::max_delay_periods + 1;
    m.sensor_noise_std = -1.0;
    const auto issues = m.issues();
    ASSERT_EQ(issues.size(), 3u);
    EXPECT_EQ(issues[0].path, "/network/drop_probability/0/1");
    EXPECT_EQ(issues[1].path, "/network/delay_periods/1/0");
    EXPECT_EQ(issues[2].path, "/network/sensor_noise_std");
    EXPECT_THROW(NetworkChannel(m, 0, std::vector<double>{0, 0}, 1), validation_error);
}

// ============================================================================
// Simulation
// ============================================================================

TEST(Simulate, CoincidentRobotsStayPut) {
    auto s = scalar_team({0.7, 0.7, 0.7}, complete_graph(3), -0.5, 0.5);
    const auto log = simulate(s);
    for (const auto& smp : log.samples) {
        EXPECT_EQ(smp.x, s.x0);
        for (double u : smp.u_applied)
            EXPECT_EQ(u, 0.0);
    }
    EXPECT_EQ(log.samples.back().cost, 0.0);
}

TEST(Simulate, SampleGridAndHorizon) {
    auto s = scalar_team({0.0, 1.0}, complete_graph(2), -1, 1);
    s.t_end = 1.0;
    const auto log = simulate(s);
    ASSERT_EQ(log.samples.size(), 101u);
    EXPECT_DOUBLE_EQ(log.samples.back().t, 1.0);
    s.t_end = 0.0;
    EXPECT_EQ(simulate(s).samples.size(), 1u);
}

TEST(Simulate, ControlsAreHeldBetweenTicks) {
    const auto log = simulate(support::load("planar_q3_r1.json"));
    for (std::size_t k = 0; k < 200; ++k) {
        if (k % 10 == 0)
            continue;
        EXPECT_EQ(log.samples[k].u_applied, log.samples[k - 1].u_applied) << "sample " << k;
    }
}

TEST(Simulate, BoundComplianceAndMonotoneCostOnEveryFixture) {
    for (const auto& path : support::shipped_scenarios()) {
        const Scenario s = load_scenario(path.string());
        const auto log = simulate(s);
        double prev = 0.0;
        for (const auto& smp : log.samples) {
            for (std::size_t c = 0; c < smp.u_applied.size(); ++c) {
                ASSERT_GE(smp.u_applied[c], s.bounds.lower[c]) << path.filename();
                ASSERT_LE(smp.u_applied[c], s.bounds.upper[c]) << path.filename();
                ASSERT_EQ(smp.saturated[c] != 0,
                          smp.u_raw[c] < s.bounds.lower[c] || smp.u_raw[c] > s.bounds.upper[c]);
            }
            ASSERT_GE(smp.cost, prev) << path.filename();
            prev = smp.cost;
        }
    }
}

TEST(Simulate, IsBitwiseDeterministic) {
    const Scenario s = support::load("planar_q3_r1_lossy.json");
    const auto a = simulate(s), b = simulate(s);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        ASSERT_EQ(a.samples[k].x, b.samples[k].x);
        ASSERT_EQ(a.samples[k].u_raw, b.samples[k].u_raw);
        ASSERT_EQ(a.samples[k].cost, b.samples[k].cost);
    }
}

TEST(Simulate, SeedChangesLossyRuns) {
    Scenario s = support::load("planar_q3_r1_lossy.json");
    const auto a = simulate(s);
    s.seed += 1;
    const auto b = simulate(s);
    EXPECT_NE(a.samples.back().x, b.samples.back().x);
}

TEST(Simulate, TranslationInvariance) {
    Scenario s = support::load("planar_q20_r1.json");
    const auto base = simulate(s);
    for (std::size_t i = 0; i < 4; ++i) {
        s.x0[2 * i] += 0.25;
        s.x0[2 * i + 1] -= 0.125;
    }
    const auto shifted = simulate(s);
    ASSERT_EQ(base.samples.size(), shifted.samples.size());
    for (std::size_t k = 0; k < base.samples.size(); ++k) {
        const auto& a = base.samples[k];
        const auto& b = shifted.samples[k];
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_NEAR(b.x[2 * i] - a.x[2 * i], 0.25, 1e-12);
            EXPECT_NEAR(b.x[2 * i + 1] - a.x[2 * i + 1], -0.125, 1e-12);
        }
        for (std::size_t c = 0; c < a.u_applied.size(); ++c)
            EXPECT_NEAR(a.u_applied[c], b.u_applied[c], 1e-12);
        EXPECT_NEAR(a.v_quadratic, b.v_quadratic, 1e-12);
        EXPECT_NEAR(a.cost, b.cost, 1e-12);
    }
}

TEST(Simulate, UndirectedUnboundedConservesTheMean) {
    std::mt19937_64 rng(12);
    for (int c = 0; c < 5; ++c) {
        Matrix a = support::random_adjacency(rng, 5, 0.7, true);
        if (!has_directed_spanning_tree(Topology(a)))
            continue;
        Scenario s = scalar_team({-0.4, 0.1, 0.3, -0.2, 0.5}, Topology(a), -INFINITY, INFINITY);
        s.control_period = 0.05;
        s.dt = 0.005;
        const auto log = simulate(s);
        const double m0 = (-0.4 + 0.1 + 0.3 - 0.2 + 0.5) / 5.0;
        for (const auto& smp : log.samples) {
            double m = 0.0;
            for (double v : smp.x)
                m += v / 5.0;
            ASSERT_NEAR(m, m0, 1e-9);
        }
    }
}

TEST(Simulate, RobotWithoutNeighborsHoldsZeroControl) {
    const auto log = simulate(scalar_team({0.0, 1.0, 2.0}, directed_chain(3), -1, 1));
    for (const auto& smp : log.samples)
        EXPECT_EQ(smp.u_raw[0], 0.0);
    EXPECT_EQ(log.samples.back().x[0], 0.0);
}

TEST(Simulate, MissingSpanningTreeWarnsAndRuns) {
    const auto log = simulate(scalar_team({0.0, 1.0, 2.0}, Topology(Matrix(3, 3)), -1, 1));
    ASSERT_EQ(log.warnings.size(), 1u);
    EXPECT_EQ(log.samples.back().x, (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST(Simulate, UnstableDynamicsBlowUp) {
    // The team mean grows like e^t under a = 1 and nothing can pull it back.
    Scenario s = scalar_team({1.0, 2.0}, complete_graph(2), -INFINITY, INFINITY);
    s.model = {Matrix{{1.0}}, Matrix{{1.0}}};
    s.t_end = 30.0;
    EXPECT_THROW(simulate(s), numeric_error);
}

TEST(Simulate, InvalidScenarioSignals) {
    Scenario s = scalar_team({0.0, 1.0}, complete_graph(2), -1, 1);
    s.dt = 0.3;
    EXPECT_THROW(simulate(s), validation_error);
}

TEST(Simulate, LaplacianWeightedVariantConverges) {
    Scenario s = support::load("planar_q3_r1_unbounded.json");
    s.law = LawVariant::laplacian_weighted;
    const auto log = simulate(s);
    EXPECT_TRUE(first_consensus_time(log, s.consensus_tol).has_value());
    // Its first control equals -K (L^2 (x) I) x0 for robot 3.
    const Matrix l = s.topology.laplacian();
    const auto l2x = kron(l * l, Matrix::identity(2)).apply(s.x0);
    EXPECT_NEAR(log.samples[0].u_raw[6], -std::sqrt(3.0) * l2x[6], 1e-12);
}

TEST(Simulate, CostMatchesRequadrature) {
    for (const char* name : {"planar_q3_r1.json", "planar_q20_r1.json", "endpoint_b_n3.json"}) {
        const Scenario s = support::load(name);
        const auto log = simulate(s);
        const auto acc = integrate_cost(s, log);
        EXPECT_NEAR(acc.total(), log.samples.back().cost, 1e-12) << name;
        double sum = 0.0;
        for (double v : acc.per_robot)
            sum += v;
        EXPECT_NEAR(sum, acc.total(), 1e-12) << name;
    }
}

TEST(Simulate, TwoRobotCostMatchesExactHoldOracle) {
    const Scenario s = support::load("two_robot_q1_r1.json");
    const auto log = simulate(s);
    const double exact = support::two_robot_zoh_cost(2.0, s.control_period, 1000);
    EXPECT_NEAR(log.samples.back().cost, exact, 1e-6 * exact);
    EXPECT_NEAR(log.samples.back().cost / log.samples.front().v_quadratic, 0.5, 0.01);
}
