#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "matops.hpp"
#include "matrix.hpp"
#include "topology.hpp"

namespace rendezvous {

// ============================================================================
// Models and bounds
// ============================================================================

/// Per-robot linear dynamics  x_dot = a x + b u.
struct RobotModel {
    Matrix a;
    Matrix b;

    [[nodiscard]] std::size_t state_dim() const noexcept { return a.rows(); }
    [[nodiscard]] std::size_t input_dim() const noexcept { return b.cols(); }

    /// Planar (m = 2) or scalar (m = 1) robot commanded directly in velocity.
    static RobotModel single_integrator(std::size_t m) { return {Matrix(m, m), Matrix::identity(m)}; }

    void check() const {
        if (!a.is_square() || a.empty())
            throw std::invalid_argument("RobotModel: a must be square and nonempty, got " + a.shape());
        if (b.rows() != a.rows() || b.cols() == 0)
            throw std::invalid_argument("RobotModel: b must have " + std::to_string(a.rows()) + " rows, got " +
                                        b.shape());
    }
};

/// Stacked per-robot input bounds, robot i owning entries [i*r, (i+1)*r). Infinite means unbounded.
struct InputBounds {
    std::size_t input_dim = 0;
    std::vector<double> lower;
    std::vector<double> upper;

    static InputBounds unbounded(std::size_t robots, std::size_t input_dim) {
        const double inf = std::numeric_limits<double>::infinity();
        return {input_dim, std::vector<double>(robots * input_dim, -inf),
                std::vector<double>(robots * input_dim, inf)};
    }

    static InputBounds uniform(std::size_t robots, std::size_t input_dim, double lo, double hi) {
        return {input_dim, std::vector<double>(robots * input_dim, lo), std::vector<double>(robots * input_dim, hi)};
    }

    [[nodiscard]] std::size_t robots() const noexcept { return input_dim == 0 ? 0 : lower.size() / input_dim; }

    [[nodiscard]] std::span<const double> lower_of(std::size_t robot) const {
        return std::span<const double>(lower).subspan(robot * input_dim, input_dim);
    }
    [[nodiscard]] std::span<const double> upper_of(std::size_t robot) const {
        return std::span<const double>(upper).subspan(robot * input_dim, input_dim);
    }

    [[nodiscard]] bool any_finite() const noexcept {
        for (std::size_t k = 0; k < lower.size(); ++k)
            if (std::isfinite(lower[k]) || std::isfinite(upper[k]))
                return true;
        return false;
    }

    void check() const {
        if (input_dim == 0 || lower.size() != upper.size() || lower.size() % input_dim != 0)
            throw std::invalid_argument("InputBounds: inconsistent sizes");
        for (std::size_t k = 0; k < lower.size(); ++k)
            if (std::isnan(lower[k]) || std::isnan(upper[k]) || lower[k] > upper[k])
                throw std::invalid_argument("InputBounds: need lower <= upper at stacked index " + std::to_string(k));
    }
};

// ============================================================================
// Gain synthesis
// ============================================================================

enum class LawVariant {
    per_robot,         // U = -(I (x) K) eps, robot i uses only its own neighbors
    laplacian_weighted // U = -(L (x) K) eps, comparison variant needing two-hop information
};

/// Optimal gain K = r^-1 b^T P from the stabilizing CARE solution, plus bounds.
struct ControlLaw {
    CareSolution care;
    Matrix k;
    Matrix q_weight;
    Matrix r_weight;
    InputBounds bounds;

    [[nodiscard]] const Matrix& p() const noexcept { return care.p; }
};

inline ControlLaw synthesize(const RobotModel& model, const Matrix& q, const Matrix& r, InputBounds bounds,
                             const CareOptions& opts = {}) {
    model.check();
    bounds.check();
    if (bounds.input_dim != model.input_dim())
        throw std::invalid_argument("synthesize: bounds have input dimension " + std::to_string(bounds.input_dim) +
                                    ", model has " + std::to_string(model.input_dim()));
    CareSolution care = solve_care(model.a, model.b, q, r, opts);
    Matrix k = solve(r, model.b.transpose() * care.p);
    return {std::move(care), std::move(k), q, r, std::move(bounds)};
}

// ============================================================================
// Control laws
// ============================================================================

struct Neighbor {
    double weight;
    std::span<const double> position;
};

/// u_i = -K sum_j a_ij (x_i - x_j). Zero for a robot with no neighbors.
inline std::vector<double> unconstrained_control(const ControlLaw& law, std::span<const double> x_i,
                                                 std::span<const Neighbor> neighbors) {
    const std::size_t m = law.k.cols();
    if (x_i.size() != m)
        throw std::invalid_argument("unconstrained_control: position has wrong dimension");
    std::vector<double> sum(m, 0.0);
    for (const auto& nb : neighbors) {
        if (nb.position.size() != m)
            throw std::invalid_argument("unconstrained_control: neighbor position has wrong dimension");
        for (std::size_t a = 0; a < m; ++a)
            sum[a] += nb.weight * (x_i[a] - nb.position[a]);
    }
    auto u = law.k.apply(sum);
    for (auto& v : u)
        v = -v;
    return u;
}

inline double saturate(double u, double lo, double hi) noexcept {
    if (u >= hi)
        return hi;
    if (u <= lo)
        return lo;
    return u;
}

inline std::vector<double> saturate(std::span<const double> u, std::span<const double> lo,
                                    std::span<const double> hi) {
    if (lo.size() != u.size() || hi.size() != u.size())
        throw std::invalid_argument("saturate: bound length mismatch");
    std::vector<double> out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k)
        out[k] = saturate(u[k], lo[k], hi[k]);
    return out;
}

// ============================================================================
// Disagreement and Lyapunov certificates
// ============================================================================

/// eps = (L (x) I_m) x, so that eps_i = sum_j a_ij (x_i - x_j).
struct DisagreementState {
    std::size_t state_dim = 0;
    std::vector<double> epsilon;

    [[nodiscard]] std::size_t robots() const noexcept { return state_dim == 0 ? 0 : epsilon.size() / state_dim; }
    [[nodiscard]] std::span<const double> of(std::size_t robot) const {
        return std::span<const double>(epsilon).subspan(robot * state_dim, state_dim);
    }
};

inline DisagreementState disagreement(const Topology& topology, std::span<const double> x, std::size_t state_dim) {
    const std::size_t n = topology.size();
    if (state_dim == 0 || x.size() != n * state_dim)
        throw std::invalid_argument("disagreement: stacked positions must have length N*m");
    const Matrix& l = topology.laplacian();
    DisagreementState eps{state_dim, std::vector<double>(x.size(), 0.0)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double lij = l(i, j);
            if (lij == 0.0)
                continue;
            for (std::size_t a = 0; a < state_dim; ++a)
                eps.epsilon[i * state_dim + a] += lij * x[j * state_dim + a];
        }
    return eps;
}

/// V = 1/2 eps^T (I_N (x) P) eps.
inline double quadratic_lyapunov(const Matrix& p, const DisagreementState& eps) {
    if (p.rows() != eps.state_dim || !p.is_square())
        throw std::invalid_argument("quadratic_lyapunov: P does not match the state dimension");
    double v = 0.0;
    for (std::size_t i = 0; i < eps.robots(); ++i) {
        const auto e = eps.of(i);
        const auto pe = p.apply(e);
        for (std::size_t a = 0; a < e.size(); ++a)
            v += e[a] * pe[a];
    }
    return 0.5 * v;
}

namespace detail {

// Antiderivative of s -> clamp(k s, lo, hi), continuous, equal to k s^2 / 2 on the linear part.
inline double clamp_antiderivative(double s, double k, double lo, double hi) {
    if (std::isfinite(lo) && k * s <= lo)
        return lo * s - lo * lo / (2.0 * k);
    if (std::isfinite(hi) && k * s >= hi)
        return hi * s - hi * hi / (2.0 * k);
    return 0.5 * k * s * s;
}

} // namespace detail

/// integral_0^e p * clamp(k s, lo, hi) ds, in closed form. Requires p, k > 0.
inline double saturated_integral(double p, double k, double lo, double hi, double e) {
    return p * (detail::clamp_antiderivative(e, k, lo, hi) - detail::clamp_antiderivative(0.0, k, lo, hi));
}

/**
 * V = sum_i integral_0^{eps_i} P_i sat(K_i s) ds, one term per robot and axis,
 * with P_i, K_i the diagonal entries of P and K and the bounds of that robot
 * and axis. Non-diagonal P or K is rejected.
 */
inline double saturated_lyapunov(const Matrix& p, const Matrix& k, const InputBounds& bounds,
                                 const DisagreementState& eps) {
    const std::size_t m = eps.state_dim;
    if (!p.is_diagonal(1e-10) || !k.is_diagonal(1e-10))
        throw std::invalid_argument("saturated_lyapunov: P and K must be diagonal");
    if (p.rows() != m || k.rows() != m || bounds.input_dim != m)
        throw std::invalid_argument("saturated_lyapunov: P, K and bounds must match the state dimension");
    if (bounds.robots() != eps.robots())
        throw std::invalid_argument("saturated_lyapunov: bounds and disagreement cover different robot counts");
    double v = 0.0;
    for (std::size_t i = 0; i < eps.robots(); ++i) {
        const auto e = eps.of(i);
        const auto lo = bounds.lower_of(i);
        const auto hi = bounds.upper_of(i);
        for (std::size_t a = 0; a < m; ++a) {
            if (!(p(a, a) > 0.0) || !(k(a, a) > 0.0))
                throw std::invalid_argument("saturated_lyapunov: diagonal of P and K must be positive");
            v += saturated_integral(p(a, a), k(a, a), lo[a], hi[a], e[a]);
        }
    }
    return v;
}

// ============================================================================
// Cost integrand
// ============================================================================

struct CostRate {
    double state = 0.0;  // 1/2 eps^T (I (x) Q) eps
    double effort = 0.0; // 1/2 u^T (I (x) R) u
    std::vector<double> per_robot;

    [[nodiscard]] double total() const noexcept { return state + effort; }
};

inline CostRate cost_rate(const DisagreementState& eps, std::span<const double> u, const Matrix& q, const Matrix& r) {
    const std::size_t n = eps.robots();
    const std::size_t m = eps.state_dim;
    const std::size_t in = r.rows();
    if (q.rows() != m || !q.is_square() || !r.is_square() || u.size() != n * in)
        throw std::invalid_argument("cost_rate: dimension mismatch");
    CostRate c;
    c.per_robot.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto e = eps.of(i);
        const auto ui = u.subspan(i * in, in);
        const auto qe = q.apply(e);
        const auto ru = r.apply(ui);
        double s = 0.0, f = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            s += e[a] * qe[a];
        for (std::size_t a = 0; a < in; ++a)
            f += ui[a] * ru[a];
        c.state += 0.5 * s;
        c.effort += 0.5 * f;
        c.per_robot[i] = 0.5 * (s + f);
    }
    return c;
}

} // namespace rendezvous
