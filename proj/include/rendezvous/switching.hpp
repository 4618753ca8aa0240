#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "consensus.hpp"
#include "error.hpp"
#include "matops.hpp"
#include "matrix.hpp"
#include "topology.hpp"
#include "trajectory.hpp"

namespace rendezvous {

// ============================================================================
// Trajectory matching between the saturated and the unsaturated regime
// ============================================================================

/**
 * Stacked matrices of the two regimes:
 *   saturated:    eps_dot = drift eps + input_map U_extreme
 *   unsaturated:  eps_dot = (drift - feedback) eps
 * For the per-robot law drift = I_N (x) A, input_map = L (x) B and
 * feedback = L (x) (B K), which is L (x) R^-1 B^T P when B = I.
 */
struct MatchingSystem {
    Matrix drift;
    Matrix input_map;
    Matrix feedback;
    std::vector<double> u_max;
    std::vector<double> u_min;
};

inline MatchingSystem matching_system(const Topology& topology, const RobotModel& model, const ControlLaw& law) {
    const Matrix id = Matrix::identity(topology.size());
    const Matrix& l = topology.laplacian();
    return {kron(id, model.a), kron(l, model.b), kron(l, model.b * law.k), law.bounds.upper, law.bounds.lower};
}

/// Scalar single-robot system with gain k: the per-robot form of the matching equality.
inline MatchingSystem scalar_matching_system(double k, double u_min, double u_max) {
    return {Matrix(1, 1), Matrix{{1.0}}, Matrix{{k}}, {u_max}, {u_min}};
}

/**
 * || saturated-regime eps(t) - unsaturated-regime eps(t) ||_2, the two started
 * from eps0_saturated and eps0. The convolution term is t * input_map * U when
 * the drift vanishes, and otherwise comes from the exponential of the
 * augmented matrix [[drift, input_map U], [0, 0]].
 */
inline double matching_residual(double t, BoundSide side, std::span<const double> eps0_saturated,
                                std::span<const double> eps0, const MatchingSystem& sys) {
    if (!(t >= 0.0))
        throw std::invalid_argument("matching_residual: t must be nonnegative");
    const std::size_t n = sys.drift.rows();
    if (eps0_saturated.size() != n || eps0.size() != n || sys.feedback.rows() != n || sys.feedback.cols() != n ||
        sys.input_map.rows() != n)
        throw std::invalid_argument("matching_residual: dimension mismatch");
    const auto& u = side == BoundSide::upper ? sys.u_max : sys.u_min;
    for (double v : u)
        if (!std::isfinite(v))
            throw std::invalid_argument("matching_residual: extreme control must be finite");
    const auto forced = sys.input_map.apply(u);

    std::vector<double> saturated(n);
    if (sys.drift.max_abs() == 0.0) {
        for (std::size_t i = 0; i < n; ++i)
            saturated[i] = eps0_saturated[i] + t * forced[i];
    } else {
        Matrix aug(n + 1, n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                aug(i, j) = sys.drift(i, j);
            aug(i, n) = forced[i];
        }
        const Matrix e = expm(aug * t);
        for (std::size_t i = 0; i < n; ++i) {
            double s = e(i, n);
            for (std::size_t j = 0; j < n; ++j)
                s += e(i, j) * eps0_saturated[j];
            saturated[i] = s;
        }
    }

    const auto unsaturated = expm((sys.drift - sys.feedback) * t).apply(eps0);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sq += (saturated[i] - unsaturated[i]) * (saturated[i] - unsaturated[i]);
    return std::sqrt(sq);
}

// ============================================================================
// Scalar switching-time solver
// ============================================================================

struct SwitchSolverOptions {
    double exclusion_radius = 1e-6; // t = 0 is always a root; search starts here (s)
    double horizon = 100.0;         // s
    double tolerance = 1e-10;       // on |f(t_s)|
    int grid_points = 400;          // geometric bracketing grid
};

/// Instant at which the unconstrained control -k x re-enters the bound under x(t) = u_bound t + x0.
inline double analytic_exit_time(double k, double x0, double u_bound) { return (x0 + u_bound / k) / (-u_bound); }

/**
 * Smallest root t_s > exclusion radius of
 *   f(t) = u_bound t + x0 - exp(-k t) x0,
 * the per-robot matching equality between riding the bound and the
 * unconstrained exponential response. Requires the bound to be active at
 * t = 0. The upper side is solved through the mirror (x0, u) -> (-x0, -u),
 * which makes the result exactly symmetric.
 */
inline SwitchPrediction solve_switch_time(double k, double x0, double u_bound, BoundSide side,
                                          const SwitchSolverOptions& opts = {}) {
    if (!(k > 0.0) || !std::isfinite(k) || !std::isfinite(x0) || !std::isfinite(u_bound))
        throw std::invalid_argument("solve_switch_time: need finite k > 0, x0 and bound");
    const double raw = -k * x0;
    const bool active = side == BoundSide::lower ? raw < u_bound : raw > u_bound;
    if (!active)
        throw std::invalid_argument("solve_switch_time: saturation is not active at t = 0 on the " +
                                    std::string(to_string(side)) + " side");

    const double x = side == BoundSide::lower ? x0 : -x0;
    const double u = side == BoundSide::lower ? u_bound : -u_bound;
    auto f = [&](double t) { return u * t + x - std::exp(-k * t) * x; };

    const double ratio = std::pow(opts.horizon / opts.exclusion_radius, 1.0 / (opts.grid_points - 1));
    double lo = opts.exclusion_radius;
    double f_lo = f(lo);
    double hi = lo;
    bool bracketed = false;
    for (int i = 1; i < opts.grid_points; ++i) {
        hi = i == opts.grid_points - 1 ? opts.horizon : opts.exclusion_radius * std::pow(ratio, i);
        const double f_hi = f(hi);
        if (f_hi == 0.0 || (f_hi < 0.0) != (f_lo < 0.0)) {
            bracketed = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if (!bracketed)
        throw numeric_error("solve_switch_time: no root in [" + std::to_string(opts.exclusion_radius) + ", " +
                            std::to_string(opts.horizon) + "] s");

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi)
            break;
        if ((fm < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }

    const auto sys = scalar_matching_system(k, u, u);
    const std::vector<double> start{x};
    const double residual = matching_residual(mid, BoundSide::lower, start, start, sys);
    if (!(residual <= opts.tolerance))
        throw numeric_error("solve_switch_time: bisection stalled with residual " + std::to_string(residual));

    SwitchPrediction out;
    out.t_s = mid;
    out.residual = residual;
    out.side = side;
    out.gain = k;
    out.x0 = x0;
    out.u_bound = u_bound;
    out.exit_time = analytic_exit_time(k, x0, u_bound);
    return out;
}

/**
 * Per-robot predictions for every robot and axis whose initial unconstrained
 * control -K eps_i(0) lies outside its bounds. Uses the scalar form with
 * k = K(a, a) and x0 = eps_i(0)[a], so K must be diagonal; otherwise, and for
 * axes where the matching equality has no positive root, nothing is
 * predicted.
 */
inline std::vector<SwitchPrediction> predict_switches(const ControlLaw& law, const DisagreementState& eps0,
                                                      const SwitchSolverOptions& opts = {}) {
    std::vector<SwitchPrediction> out;
    const std::size_t m = eps0.state_dim;
    if (law.k.rows() != m || law.k.cols() != m || !law.k.is_diagonal(1e-10) || law.bounds.input_dim != m)
        return out;
    for (std::size_t i = 0; i < eps0.robots(); ++i) {
        const auto e = eps0.of(i);
        const auto raw = law.k.apply(e);
        const auto lo = law.bounds.lower_of(i);
        const auto hi = law.bounds.upper_of(i);
        for (std::size_t a = 0; a < m; ++a) {
            const double u = -raw[a];
            BoundSide side;
            double bound;
            if (u < lo[a]) {
                side = BoundSide::lower;
                bound = lo[a];
            } else if (u > hi[a]) {
                side = BoundSide::upper;
                bound = hi[a];
            } else {
                continue;
            }
            try {
                auto p = solve_switch_time(law.k(a, a), e[a], bound, side, opts);
                p.robot = i;
                p.axis = a;
                out.push_back(p);
            } catch (const numeric_error&) {
                // No crossing within the horizon (e.g. a zero bound): the robot rides the bound.
            }
        }
    }
    return out;
}

// ============================================================================
// Empirical regime detection
// ============================================================================

/// Regime of one pre-saturation control value; "saturated" means within tol of a bound after clamping.
inline Regime classify(double u_raw, double lo, double hi, double tol = 1e-9) noexcept {
    if (u_raw >= hi - tol)
        return Regime::sat_max;
    if (u_raw <= lo + tol)
        return Regime::sat_min;
    return Regime::linear_interior;
}

/// Regime transitions per robot and axis, in time order.
inline std::vector<RegimeEvent> detect_regimes(const TrajectoryLog& log, const InputBounds& bounds, double tol = 1e-9) {
    std::vector<RegimeEvent> events;
    if (log.samples.empty())
        return events;
    const std::size_t r = log.input_dim;
    if (bounds.input_dim != r || bounds.robots() != log.robots)
        throw std::invalid_argument("detect_regimes: bounds do not match the log");
    std::vector<Regime> current(log.robots * r);
    for (std::size_t k = 0; k < current.size(); ++k)
        current[k] = classify(log.samples.front().u_raw[k], bounds.lower[k], bounds.upper[k], tol);
    for (std::size_t s = 1; s < log.samples.size(); ++s) {
        const auto& sample = log.samples[s];
        for (std::size_t k = 0; k < current.size(); ++k) {
            const Regime now = classify(sample.u_raw[k], bounds.lower[k], bounds.upper[k], tol);
            if (now != current[k]) {
                events.push_back({sample.t, k / r, k % r, current[k], now});
                current[k] = now;
            }
        }
    }
    return events;
}

} // namespace rendezvous
