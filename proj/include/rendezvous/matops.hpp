#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace rendezvous {

// ============================================================================
// Kronecker product
// ============================================================================

/// Block (i, j) of the result is x(i, j) * y.
inline Matrix kron(const Matrix& x, const Matrix& y) {
    Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double s = x(i, j);
            if (s == 0.0)
                continue;
            for (std::size_t k = 0; k < y.rows(); ++k)
                for (std::size_t l = 0; l < y.cols(); ++l)
                    out(i * y.rows() + k, j * y.cols() + l) = s * y(k, l);
        }
    return out;
}

// ============================================================================
// Matrix exponential: scaling and squaring with the [13/13] Pade approximant
// ============================================================================

inline Matrix expm(const Matrix& m) {
    if (!m.is_square())
        throw std::invalid_argument("expm: matrix must be square, got " + m.shape());

    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    // Largest 1-norm for which the degree-13 approximant is accurate to unit roundoff.
    constexpr double theta13 = 5.371920351148152;

    const std::size_t n = m.rows();
    const double norm = m.norm1();
    int squarings = 0;
    if (norm > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));

    Matrix a = m * std::ldexp(1.0, -squarings);
    const Matrix id = Matrix::identity(n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;

    Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
    const Matrix u = a * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Matrix r = solve(v - u, v + u);
    for (int s = 0; s < squarings; ++s)
        r = r * r;
    return r;
}

// ============================================================================
// Eigenvalues of a general real matrix
// ============================================================================

namespace detail {

// Reduction to upper Hessenberg form by stabilized elimination, followed by
// the Francis double-shift QR iteration. Both work on a 1-indexed view of a
// row-major copy to keep the index arithmetic of the classic formulation.
class HessenbergQr {
public:
    explicit HessenbergQr(const Matrix& m) : n_(static_cast<int>(m.rows())), a_(m) {}

    std::vector<std::complex<double>> run() {
        reduce();
        return iterate();
    }

private:
    double& h(int i, int j) { return a_(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)); }

    void reduce() {
        for (int m = 2; m < n_; ++m) {
            double x = 0.0;
            int i = m;
            for (int j = m; j <= n_; ++j)
                if (std::abs(h(j, m - 1)) > std::abs(x)) {
                    x = h(j, m - 1);
                    i = j;
                }
            if (i != m) {
                for (int j = m - 1; j <= n_; ++j)
                    std::swap(h(i, j), h(m, j));
                for (int j = 1; j <= n_; ++j)
                    std::swap(h(j, i), h(j, m));
            }
            if (x != 0.0)
                for (i = m + 1; i <= n_; ++i) {
                    double y = h(i, m - 1);
                    if (y == 0.0)
                        continue;
                    y /= x;
                    h(i, m - 1) = y;
                    for (int j = m; j <= n_; ++j)
                        h(i, j) -= y * h(m, j);
                    for (int j = 1; j <= n_; ++j)
                        h(j, m) += y * h(j, i);
                }
        }
        // Multipliers left below the subdiagonal are not part of the Hessenberg form.
        for (int i = 3; i <= n_; ++i)
            for (int j = 1; j < i - 1; ++j)
                h(i, j) = 0.0;
    }

    static double sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

    std::vector<std::complex<double>> iterate() {
        std::vector<double> wr(static_cast<std::size_t>(n_) + 1, 0.0);
        std::vector<double> wi(static_cast<std::size_t>(n_) + 1, 0.0);

        double anorm = 0.0;
        for (int i = 1; i <= n_; ++i)
            for (int j = std::max(i - 1, 1); j <= n_; ++j)
                anorm += std::abs(h(i, j));

        int nn = n_;
        double t = 0.0;
        double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
        while (nn >= 1) {
            int its = 0;
            int l = 0;
            do {
                for (l = nn; l >= 2; --l) {
                    s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
                    if (s == 0.0)
                        s = anorm;
                    if (std::abs(h(l, l - 1)) + s == s) {
                        h(l, l - 1) = 0.0;
                        break;
                    }
                }
                x = h(nn, nn);
                if (l == nn) {
                    wr[nn] = x + t;
                    wi[nn] = 0.0;
                    --nn;
                } else {
                    y = h(nn - 1, nn - 1);
                    w = h(nn, nn - 1) * h(nn - 1, nn);
                    if (l == nn - 1) {
                        p = 0.5 * (y - x);
                        q = p * p + w;
                        z = std::sqrt(std::abs(q));
                        x += t;
                        if (q >= 0.0) {
                            z = p + sign(z, p);
                            wr[nn - 1] = wr[nn] = x + z;
                            if (z != 0.0)
                                wr[nn] = x - w / z;
                            wi[nn - 1] = wi[nn] = 0.0;
                        } else {
                            wr[nn - 1] = wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn -= 2;
                    } else {
                        if (its == 60)
                            throw numeric_error("eigenvalues: QR iteration did not converge");
                        if (its == 10 || its == 20 || its == 40) {
                            // Exceptional shift.
                            t += x;
                            for (int i = 1; i <= nn; ++i)
                                h(i, i) -= x;
                            s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
                            y = x = 0.75 * s;
                            w = -0.4375 * s * s;
                        }
                        ++its;
                        int m = nn - 2;
                        for (; m >= l; --m) {
                            z = h(m, m);
                            r = x - z;
                            s = y - z;
                            p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
                            q = h(m + 1, m + 1) - z - r - s;
                            r = h(m + 2, m + 1);
                            s = std::abs(p) + std::abs(q) + std::abs(r);
                            p /= s;
                            q /= s;
                            r /= s;
                            if (m == l)
                                break;
                            const double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
                            const double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) +
                                                            std::abs(h(m + 1, m + 1)));
                            if (u + v == v)
                                break;
                        }
                        for (int i = m + 2; i <= nn; ++i) {
                            h(i, i - 2) = 0.0;
                            if (i != m + 2)
                                h(i, i - 3) = 0.0;
                        }
                        for (int k = m; k <= nn - 1; ++k) {
                            if (k != m) {
                                p = h(k, k - 1);
                                q = h(k + 1, k - 1);
                                r = 0.0;
                                if (k != nn - 1)
                                    r = h(k + 2, k - 1);
                                x = std::abs(p) + std::abs(q) + std::abs(r);
                                if (x != 0.0) {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            s = sign(std::sqrt(p * p + q * q + r * r), p);
                            if (s == 0.0)
                                continue;
                            if (k == m) {
                                if (l != m)
                                    h(k, k - 1) = -h(k, k - 1);
                            } else {
                                h(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = h(k, j) + q * h(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * h(k + 2, j);
                                    h(k + 2, j) -= p * z;
                                }
                                h(k + 1, j) -= p * y;
                                h(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * h(i, k) + y * h(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * h(i, k + 2);
                                    h(i, k + 2) -= p * r;
                                }
                                h(i, k + 1) -= p * q;
                                h(i, k) -= p;
                            }
                        }
                    }
                }
            } while (l < nn - 1);
        }

        std::vector<std::complex<double>> out;
        out.reserve(static_cast<std::size_t>(n_));
        for (int i = 1; i <= n_; ++i)
            out.emplace_back(wr[i], wi[i]);
        return out;
    }

    int n_;
    Matrix a_;
};

} // namespace detail

/// All eigenvalues, sorted by real part then imaginary part.
inline std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    if (!m.is_square())
        throw std::invalid_argument("eigenvalues: matrix must be square, got " + m.shape());
    if (m.empty())
        return {};
    auto values = detail::HessenbergQr(m).run();
    std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return values;
}

inline double spectral_abscissa(const Matrix& m) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& ev : eigenvalues(m))
        best = std::max(best, ev.real());
    return best;
}

inline bool is_hurwitz(const Matrix& m) { return m.is_square() && !m.empty() && spectral_abscissa(m) < 0.0; }

/// Symmetric and no eigenvalue below -tol * (1 + ||m||).
inline bool is_positive_semidefinite(const Matrix& m, double tol = 1e-12) {
    if (!m.is_symmetric(1e-10))
        return false;
    const double floor = -tol * (1.0 + m.max_abs());
    for (const auto& ev : eigenvalues(symmetrize(m)))
        if (ev.real() < floor)
            return false;
    return true;
}

// ============================================================================
// Lyapunov equation  a^T X + X a + q = 0
// ============================================================================

inline Matrix lyapunov_residual(const Matrix& a, const Matrix& x, const Matrix& q) {
    return a.transpose() * x + x * a + q;
}

/**
 * Solves a^T X + X a + q = 0 for Hurwitz a by the Kronecker (vectorized)
 * form (I (x) a^T + a^T (x) I) vec(X) = -vec(q), vec stacking columns.
 *
 * Throws numeric_error if a is not Hurwitz or the residual bound
 * 1e-10 * (1 + ||X||) cannot be met after one refinement step.
 */
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    if (!a.is_square() || a.empty())
        throw std::invalid_argument("solve_lyapunov: a must be square and nonempty, got " + a.shape());
    if (q.rows() != a.rows() || q.cols() != a.cols())
        throw std::invalid_argument("solve_lyapunov: q must match a, got " + q.shape());
    if (!q.is_symmetric(1e-10))
        throw std::invalid_argument("solve_lyapunov: q must be symmetric");
    if (!is_hurwitz(a))
        throw numeric_error("solve_lyapunov: a is not Hurwitz");

    const std::size_t n = a.rows();
    const Matrix at = a.transpose();
    const Matrix id = Matrix::identity(n);
    const LuDecomposition lu(kron(id, at) + kron(at, id));

    auto vec = [n](const Matrix& m) {
        std::vector<double> v(n * n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                v[j * n + i] = m(i, j);
        return v;
    };
    auto unvec = [n](const std::vector<double>& v) {
        Matrix m(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                m(i, j) = v[j * n + i];
        return m;
    };

    Matrix x = unvec(lu.solve(vec(-q)));
    x = symmetrize(x);
    auto ok = [&](const Matrix& cand) {
        return lyapunov_residual(a, cand, q).frobenius_norm() <= 1e-10 * (1.0 + cand.frobenius_norm());
    };
    if (!ok(x)) {
        const Matrix correction = unvec(lu.solve(vec(-lyapunov_residual(a, x, q))));
        x = symmetrize(x + correction);
        if (!ok(x))
            throw numeric_error("solve_lyapunov: residual bound not met (ill-conditioned a)");
    }
    return x;
}

// ============================================================================
// Continuous algebraic Riccati equation  PA + A^T P + Q - P B R^-1 B^T P = 0
// ============================================================================

struct CareOptions {
    double tolerance = 1e-10;
    int max_iterations = 100;
};

struct CareSolution {
    Matrix p;
    double residual_norm = 0.0;
    int iterations = 0;
};

inline Matrix care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r, const Matrix& p) {
    const Matrix bt_p = b.transpose() * p;
    return p * a + a.transpose() * p + q - bt_p.transpose() * solve(r, bt_p);
}

/**
 * Stabilizing initial gain for the Newton iteration. Zero when a is already
 * Hurwitz; otherwise the Bass construction K0 = b^T Z^-1 with
 * (a + beta I) Z + Z (a + beta I)^T = 2 b b^T, which places the spectrum of
 * a - b K0 left of -beta. Needs (a, b) controllable.
 */
inline Matrix stabilizing_gain(const Matrix& a, const Matrix& b) {
    if (is_hurwitz(a))
        return Matrix(b.cols(), a.rows());
    const double beta = a.norm1() + 1.0;
    const Matrix shifted = -(a + beta * Matrix::identity(a.rows())).transpose();
    const Matrix z = solve_lyapunov(shifted, 2.0 * (b * b.transpose()));
    if (!is_positive_definite(z))
        throw numeric_error("solve_care: (a, b) is not controllable; cannot build a stabilizing initial gain");
    // K0 = b^T Z^-1, computed as (Z^-1 b)^T since Z is symmetric.
    return solve(z, b).transpose();
}

/**
 * Stabilizing solution of the CARE by Kleinman-Newton iteration: each step
 * solves (a - b K)^T P + P (a - b K) + q + K^T r K = 0 and updates
 * K = r^-1 b^T P, until the residual is at most tol * (1 + ||P||).
 */
inline CareSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                               const CareOptions& opts = {}) {
    const std::size_t m = a.rows();
    if (!a.is_square() || m == 0)
        throw std::invalid_argument("solve_care: a must be square and nonempty, got " + a.shape());
    if (b.rows() != m || b.cols() == 0)
        throw std::invalid_argument("solve_care: b must have " + std::to_string(m) + " rows, got " + b.shape());
    if (q.rows() != m || q.cols() != m)
        throw std::invalid_argument("solve_care: q must be " + a.shape() + ", got " + q.shape());
    if (r.rows() != b.cols() || r.cols() != b.cols())
        throw std::invalid_argument("solve_care: r must be square with side " + std::to_string(b.cols()));
    if (!q.is_symmetric(1e-10))
        throw std::invalid_argument("solve_care: q must be symmetric");
    if (!is_positive_definite(r))
        throw std::invalid_argument("solve_care: r must be symmetric positive definite");

    Matrix k = stabilizing_gain(a, b);
    const Matrix bt = b.transpose();
    CareSolution sol;
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const Matrix closed = a - b * k;
        const Matrix p = solve_lyapunov(closed, q + k.transpose() * r * k);
        k = solve(r, bt * p);
        sol.p = p;
        sol.iterations = it;
        sol.residual_norm = care_residual(a, b, q, r, p).frobenius_norm();
        if (sol.residual_norm <= opts.tolerance * (1.0 + p.frobenius_norm())) {
            // One polishing step; Newton is quadratic here, so it usually lands at rounding level.
            const Matrix polished = solve_lyapunov(a - b * k, q + k.transpose() * r * k);
            const double polished_residual = care_residual(a, b, q, r, polished).frobenius_norm();
            if (polished_residual < sol.residual_norm) {
                sol.p = 0.5 * (polished + polished.transpose());
                sol.residual_norm = care_residual(a, b, q, r, sol.p).frobenius_norm();
            }
            if (!is_positive_definite(sol.p))
                throw numeric_error("solve_care: converged solution is not positive definite "
                                    "(q may leave unstable modes undetectable)");
            return sol;
        }
    }
    throw numeric_error("solve_care: no convergence after " + std::to_string(opts.max_iterations) +
                        " iterations (residual " + std::to_string(sol.residual_norm) + ")");
}

} // namespace rendezvous
