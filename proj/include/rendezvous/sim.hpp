#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "consensus.hpp"
#include "error.hpp"
#include "matops.hpp"
#include "matrix.hpp"
#include "network.hpp"
#include "switching.hpp"
#include "topology.hpp"
#include "trajectory.hpp"

namespace rendezvous {

// ============================================================================
// Scenario
// ============================================================================

/// Everything a run depends on. A run is a pure function of its scenario.
struct Scenario {
    RobotModel model = RobotModel::single_integrator(2);
    Topology topology;
    std::vector<double> x0; // N*m stacked
    Matrix q;
    Matrix r;
    InputBounds bounds;
    double control_period = 0.1; // s
    double dt = 0.01;            // s
    double t_end = 20.0;         // s
    double consensus_tol = 1e-3; // m
    NetworkModel network;
    std::uint64_t seed = 0;
    LawVariant law = LawVariant::per_robot;

    [[nodiscard]] std::size_t robots() const noexcept { return topology.size(); }
    [[nodiscard]] std::size_t state_dim() const noexcept { return model.state_dim(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return model.input_dim(); }

    /// Integration steps per control period.
    [[nodiscard]] std::size_t steps_per_period() const {
        return static_cast<std::size_t>(std::llround(control_period / dt));
    }
    /// Number of integration steps; samples are taken at k * dt for k = 0..step_count().
    [[nodiscard]] std::size_t step_count() const {
        return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
    }

    /// Semantic issues with JSON-pointer paths, all of them, in field order.
    [[nodiscard]] std::vector<issue> issues() const {
        std::vector<issue> out;
        const std::size_t n = robots();
        const std::size_t m = model.a.rows();
        if (n == 0)
            out.push_back({"/adjacency", "at least one robot is required"});
        if (!model.a.is_square() || model.a.empty())
            out.push_back({"/model/a", "must be a nonempty square matrix, got " + model.a.shape()});
        if (model.b.rows() != m || model.b.cols() == 0)
            out.push_back({"/model/b", "must have " + std::to_string(m) + " rows and at least one column, got " +
                                           model.b.shape()});
        const std::size_t in = model.b.cols();
        if (x0.size() != n * m)
            out.push_back({"/x0", "expected " + std::to_string(n) + " positions of dimension " + std::to_string(m)});
        if (q.rows() != m || q.cols() != m)
            out.push_back({"/q", "must be " + std::to_string(m) + "x" + std::to_string(m) + ", got " + q.shape()});
        else if (!q.is_symmetric(1e-12))
            out.push_back({"/q", "must be symmetric"});
        else if (!is_positive_semidefinite(q, 1e-12))
            out.push_back({"/q", "must be positive semidefinite"});
        if (r.rows() != in || r.cols() != in)
            out.push_back({"/r", "must be " + std::to_string(in) + "x" + std::to_string(in) + ", got " + r.shape()});
        else if (!r.is_symmetric(1e-12))
            out.push_back({"/r", "must be symmetric"});
        else if (!is_positive_definite(r))
            out.push_back({"/r", "must be positive definite"});
        if (bounds.input_dim != in || bounds.lower.size() != n * in || bounds.upper.size() != n * in) {
            out.push_back({"/bounds", "expected " + std::to_string(n) + " robots with " + std::to_string(in) +
                                          " bounded inputs each"});
        } else {
            for (std::size_t k = 0; k < bounds.lower.size(); ++k)
                if (std::isnan(bounds.lower[k]) || std::isnan(bounds.upper[k]) || bounds.lower[k] > bounds.upper[k])
                    out.push_back({"/bounds/u_min/" + std::to_string(k / in),
                                   "u_min must not exceed u_max (robot " + std::to_string(k / in) + ", axis " +
                                       std::to_string(k % in) + ")"});
        }
        const bool period_ok = std::isfinite(control_period) && control_period > 0.0;
        const bool dt_ok = std::isfinite(dt) && dt > 0.0;
        if (!period_ok)
            out.push_back({"/control_period", "must be positive and finite"});
        if (!dt_ok)
            out.push_back({"/dt", "must be positive and finite"});
        if (period_ok && dt_ok) {
            const double ratio = control_period / dt;
            if (dt > control_period * (1.0 + 1e-12))
                out.push_back({"/dt", "integration step must not exceed the control period"});
            else if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
                out.push_back({"/dt", "control period must be an integer multiple of the integration step"});
        }
        if (!std::isfinite(t_end) || t_end < 0.0)
            out.push_back({"/t_end", "must be finite and nonnegative"});
        else if (dt_ok && t_end / dt > 1e8)
            out.push_back({"/t_end", "more than 1e8 integration steps requested"});
        if (!(consensus_tol > 0.0) || !std::isfinite(consensus_tol))
            out.push_back({"/consensus_tol", "must be positive and finite"});
        if (network.robots != n)
            out.push_back({"/network", "network covers " + std::to_string(network.robots) + " robots, expected " +
                                           std::to_string(n)});
        else
            for (auto& i : network.issues())
                out.push_back(std::move(i));
        return out;
    }

    void validate() const {
        if (auto problems = issues(); !problems.empty())
            throw validation_error(std::move(problems));
    }
};

// ============================================================================
// Consensus measures
// ============================================================================

inline double max_pairwise_distance(std::span<const double> x, std::size_t robots, std::size_t state_dim) {
    double best = 0.0;
    for (std::size_t i = 0; i < robots; ++i)
        for (std::size_t j = i + 1; j < robots; ++j) {
            double sq = 0.0;
            for (std::size_t a = 0; a < state_dim; ++a) {
                const double d = x[i * state_dim + a] - x[j * state_dim + a];
                sq += d * d;
            }
            best = std::max(best, std::sqrt(sq));
        }
    return best;
}

inline bool consensus_reached(std::span<const double> x, std::size_t robots, std::size_t state_dim, double tol) {
    return max_pairwise_distance(x, robots, state_dim) <= tol;
}

/// Time of the first logged sample at which every pair of robots is within tol.
inline std::optional<double> first_consensus_time(const TrajectoryLog& log, double tol) {
    for (const auto& s : log.samples)
        if (consensus_reached(s.x, log.robots, log.state_dim, tol))
            return s.t;
    return std::nullopt;
}

// ============================================================================
// Cost accumulation
// ============================================================================

/// Running trapezoid quadrature of the cost, kept split by term and by robot.
struct CostAccumulator {
    double state = 0.0;
    double effort = 0.0;
    std::vector<double> per_robot;

    [[nodiscard]] double total() const noexcept { return state + effort; }
};

/**
 * Adds one integration interval. `left` and `right` are the integrand at the
 * two ends evaluated with the control held over the interval, which is exact
 * bookkeeping for a zero-order hold.
 */
inline void accumulate_cost(CostAccumulator& acc, const CostRate& left, const CostRate& right, double dt) {
    if (acc.per_robot.empty())
        acc.per_robot.assign(left.per_robot.size(), 0.0);
    acc.state += 0.5 * dt * (left.state + right.state);
    acc.effort += 0.5 * dt * (left.effort + right.effort);
    for (std::size_t i = 0; i < acc.per_robot.size(); ++i)
        acc.per_robot[i] += 0.5 * dt * (left.per_robot[i] + right.per_robot[i]);
}

/// Re-derives the cost of a logged run from its positions and applied controls.
inline CostAccumulator integrate_cost(const Scenario& s, const TrajectoryLog& log) {
    CostAccumulator acc;
    acc.per_robot.assign(log.robots, 0.0);
    for (std::size_t k = 0; k + 1 < log.samples.size(); ++k) {
        const auto& a = log.samples[k];
        const auto& b = log.samples[k + 1];
        const double h = b.t - a.t;
        const auto left = cost_rate(disagreement(s.topology, a.x, log.state_dim), a.u_applied, s.q, s.r);
        const auto right = cost_rate(disagreement(s.topology, b.x, log.state_dim), a.u_applied, s.q, s.r);
        accumulate_cost(acc, left, right, h);
    }
    return acc;
}

// ============================================================================
// Simulation
// ============================================================================

/**
 * U_i = -K sum_j l_ij eps_j with every eps_j computed from robot i's view of
 * the team (its own position exact, the others as delivered).
 */
inline std::vector<double> laplacian_weighted_control(const ControlLaw& law, const Topology& topology,
                                                      std::size_t robot, std::span<const double> view) {
    const std::size_t n = topology.size();
    const std::size_t m = law.k.cols();
    const auto eps = disagreement(topology, view, m);
    std::vector<double> sum(m, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double l = topology.laplacian()(robot, j);
        if (l == 0.0)
            continue;
        const auto e = eps.of(j);
        for (std::size_t a = 0; a < m; ++a)
            sum[a] += l * e[a];
    }
    auto u = law.k.apply(sum);
    for (auto& v : u)
        v = -v;
    return u;
}

namespace detail {

inline std::vector<double> dynamics(const RobotModel& model, std::span<const double> x, std::span<const double> u,
                                    std::size_t robots) {
    const std::size_t m = model.state_dim();
    const std::size_t in = model.input_dim();
    std::vector<double> dx(x.size(), 0.0);
    for (std::size_t i = 0; i < robots; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            double s = 0.0;
            for (std::size_t c = 0; c < m; ++c)
                s += model.a(a, c) * x[i * m + c];
            for (std::size_t c = 0; c < in; ++c)
                s += model.b(a, c) * u[i * in + c];
            dx[i * m + a] = s;
        }
    return dx;
}

inline void rk4_step(const RobotModel& model, std::vector<double>& x, std::span<const double> u, std::size_t robots,
                     double h) {
    const auto k1 = dynamics(model, x, u, robots);
    std::vector<double> tmp(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
        tmp[k] = x[k] + 0.5 * h * k1[k];
    const auto k2 = dynamics(model, tmp, u, robots);
    for (std::size_t k = 0; k < x.size(); ++k)
        tmp[k] = x[k] + 0.5 * h * k2[k];
    const auto k3 = dynamics(model, tmp, u, robots);
    for (std::size_t k = 0; k < x.size(); ++k)
        tmp[k] = x[k] + h * k3[k];
    const auto k4 = dynamics(model, tmp, u, robots);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
}

} // namespace detail

/// Positions beyond this magnitude abort the run as diverged (m).
inline constexpr double blow_up_threshold = 1e6;

/**
 * Fixed-step RK4 integration of the team under a zero-order hold: every
 * control period each robot measures its neighbors through the network,
 * computes its unconstrained control and clamps it to its bounds.
 */
inline TrajectoryLog simulate(const Scenario& s) {
    s.validate();
    const std::size_t n = s.robots();
    const std::size_t m = s.state_dim();
    const std::size_t in = s.input_dim();
    const ControlLaw law = synthesize(s.model, s.q, s.r, s.bounds);
    const bool v_sat_defined =
        m == in && law.p().is_diagonal(1e-10) && law.k.is_diagonal(1e-10) && [&] {
            for (std::size_t a = 0; a < m; ++a)
                if (!(law.p()(a, a) > 0.0) || !(law.k(a, a) > 0.0))
                    return false;
            return true;
        }();

    TrajectoryLog log;
    log.robots = n;
    log.state_dim = m;
    log.input_dim = in;
    if (!has_directed_spanning_tree(s.topology))
        log.warnings.push_back("communication graph has no directed spanning tree; consensus is not expected");

    std::vector<Link> links;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const bool used = s.law == LawVariant::per_robot ? s.topology.weight(i, j) > 0.0 : i != j;
            if (used)
                links.push_back({i, j});
        }
    NetworkChannel channel(s.network, s.seed, s.x0, m);

    const std::size_t steps = s.step_count();
    const std::size_t per_period = s.steps_per_period();
    std::vector<double> x = s.x0;
    std::vector<double> u_raw(n * in, 0.0);
    std::vector<double> u_applied(n * in, 0.0);
    CostAccumulator acc;
    acc.per_robot.assign(n, 0.0);
    log.samples.reserve(steps + 1);

    // Per-listener measured copy of the team: own row exact, other rows as delivered.
    std::vector<std::vector<double>> views(n, std::vector<double>(n * m, 0.0));

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * s.dt;
        if (k % per_period == 0) {
            const std::uint64_t tick = k / per_period;
            for (std::size_t i = 0; i < n; ++i)
                std::copy(x.begin() + i * m, x.begin() + (i + 1) * m, views[i].begin() + i * m);
            for (const Link& l : links) {
                const auto meas =
                    channel.deliver(l, std::span<const double>(x).subspan(l.source * m, m), tick);
                std::copy(meas.begin(), meas.end(), views[l.listener].begin() + l.source * m);
            }
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> ui;
                if (s.law == LawVariant::per_robot) {
                    std::vector<Neighbor> nbs;
                    for (std::size_t j : s.topology.neighbors(i))
                        nbs.push_back({s.topology.weight(i, j), std::span<const double>(views[i]).subspan(j * m, m)});
                    ui = unconstrained_control(law, std::span<const double>(x).subspan(i * m, m), nbs);
                } else {
                    ui = laplacian_weighted_control(law, s.topology, i, views[i]);
                }
                const auto clamped = saturate(ui, law.bounds.lower_of(i), law.bounds.upper_of(i));
                std::copy(ui.begin(), ui.end(), u_raw.begin() + i * in);
                std::copy(clamped.begin(), clamped.end(), u_applied.begin() + i * in);
            }
        }

        const auto eps = disagreement(s.topology, x, m);
        const auto left = cost_rate(eps, u_applied, s.q, s.r);

        TrajectorySample sample;
        sample.t = t;
        sample.x = x;
        sample.u_raw = u_raw;
        sample.u_applied = u_applied;
        sample.saturated.resize(n * in);
        for (std::size_t c = 0; c < n * in; ++c)
            sample.saturated[c] = u_raw[c] < law.bounds.lower[c] || u_raw[c] > law.bounds.upper[c];
        sample.v_quadratic = quadratic_lyapunov(law.p(), eps);
        sample.v_saturated = v_sat_defined ? saturated_lyapunov(law.p(), law.k, law.bounds, eps)
                                           : std::numeric_limits<double>::quiet_NaN();
        sample.cost = acc.total();
        sample.robot_cost = acc.per_robot;
        log.samples.push_back(std::move(sample));

        if (k == steps)
            break;

        detail::rk4_step(s.model, x, u_applied, n, s.dt);
        for (double v : x)
            if (!(std::abs(v) <= blow_up_threshold))
                throw numeric_error("simulate: state diverged beyond " + std::to_string(blow_up_threshold) +
                                    " m at t = " + std::to_string(t + s.dt) + " s");

        const auto right = cost_rate(disagreement(s.topology, x, m), u_applied, s.q, s.r);
        accumulate_cost(acc, left, right, s.dt);
    }

    log.events = detect_regimes(log, law.bounds);
    log.predictions = predict_switches(law, disagreement(s.topology, s.x0, m));
    return log;
}

} // namespace rendezvous
