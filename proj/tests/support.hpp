#pragma once

// Shared fixtures and independent oracles for the test binaries. Oracles here
// never call the library routine they check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rendezvous/rendezvous.hpp"

namespace support {

namespace fs = std::filesystem;
using rendezvous::Matrix;

inline fs::path scenario_dir() { return fs::path(RENDEZVOUS_SCENARIO_DIR); }
inline fs::path data_dir() { return fs::path(RENDEZVOUS_TEST_DATA_DIR); }

inline rendezvous::Scenario load(const std::string& name) {
    return rendezvous::load_scenario((scenario_dir() / name).string());
}

/// Shipped scenario files (not the invalid ones), sorted by name.
inline std::vector<fs::path> shipped_scenarios() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(scenario_dir()))
        if (e.is_regular_file() && e.path().extension() == ".json")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline bool perfect_network(const rendezvous::Scenario& s) { return s.network.is_perfect(); }

// ============================================================================
// Eigen bridges
// ============================================================================

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j)
            m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
    return m;
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(rows, cols);
    for (auto& v : m.entries())
        v = nd(rng);
    return m;
}

/// Random adjacency with edge probability p and weights in [0.5, 2].
inline Matrix random_adjacency(std::mt19937_64& rng, std::size_t n, double p, bool symmetric) {
    std::bernoulli_distribution edge(p);
    std::uniform_real_distribution<double> weight(0.5, 2.0);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j) {
            if (i == j || !edge(rng))
                continue;
            a(i, j) = weight(rng);
            if (symmetric)
                a(j, i) = a(i, j);
        }
    return a;
}

// ============================================================================
// Oracles
// ============================================================================

/// Stabilizing CARE solution from the stable invariant subspace of the Hamiltonian, via Eigen.
inline Matrix care_by_hamiltonian(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Eigen::MatrixXd A = to_eigen(a), B = to_eigen(b), Q = to_eigen(q), R = to_eigen(r);
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd H(2 * n, 2 * n);
    H << A, -B * R.inverse() * B.transpose(), -Q, -A.transpose();
    Eigen::EigenSolver<Eigen::MatrixXd> es(H);
    Eigen::MatrixXcd stable(2 * n, n);
    Eigen::Index col = 0;
    for (Eigen::Index k = 0; k < 2 * n; ++k)
        if (es.eigenvalues()(k).real() < 0.0 && col < n)
            stable.col(col++) = es.eigenvectors().col(k);
    const Eigen::MatrixXcd x1 = stable.topRows(n);
    const Eigen::MatrixXcd x2 = stable.bottomRows(n);
    const Eigen::MatrixXd p = (x2 * x1.inverse()).real();
    return from_eigen(0.5 * (p + p.transpose()));
}

/// Plain bisection on [lo, hi] to width 1e-15, assuming a single sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 300 && hi - lo > 1e-15; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/**
 * Exact cost of two scalar robots on the complete graph with K = 1,
 * q = r = 1 and a hold of period T, over `periods` periods. The gap
 * e = x1 - x2 is linear on each period, e_{k+1} = (1 - 2T) e_k, the cost rate
 * is e^2 + e_k^2 and V(0) = e0^2.
 */
inline double two_robot_zoh_cost(double e0, double period, std::size_t periods) {
    const double t = period;
    const double rho = 1.0 - 2.0 * t;
    const double per_period = 2.0 * t - 2.0 * t * t + 4.0 / 3.0 * t * t * t;
    double sum = 0.0, pw = 1.0;
    for (std::size_t k = 0; k < periods; ++k) {
        sum += pw;
        pw *= rho * rho;
    }
    return e0 * e0 * per_period * sum;
}

/**
 * Brute-force directed spanning tree test: some root r and a parent choice
 * p(i) with a(i, p(i)) > 0 for every other node, following parents from any
 * node reaching r without a cycle.
 */
inline bool brute_force_spanning_tree(const Matrix& adjacency) {
    const std::size_t n = adjacency.rows();
    if (n == 1)
        return true;
    std::vector<std::vector<std::size_t>> options(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && adjacency(i, j) > 0.0)
                options[i].push_back(j);
    for (std::size_t root = 0; root < n; ++root) {
        bool feasible = true;
        for (std::size_t i = 0; i < n; ++i)
            if (i != root && options[i].empty())
                feasible = false;
        if (!feasible)
            continue;
        std::vector<std::size_t> choice(n, 0);
        while (true) {
            bool tree = true;
            for (std::size_t start = 0; start < n && tree; ++start) {
                std::size_t node = start;
                for (std::size_t steps = 0; node != root; ++steps) {
                    if (steps > n) {
                        tree = false;
                        break;
                    }
                    node = options[node][choice[node]];
                }
            }
            if (tree)
                return true;
            std::size_t i = 0;
            for (; i < n; ++i) {
                if (i == root)
                    continue;
                if (++choice[i] < options[i].size())
                    break;
                choice[i] = 0;
            }
            if (i == n)
                break;
        }
    }
    return false;
}

/// Least-squares line through (x, y); returns slope and R^2.
struct LineFit {
    double slope;
    double intercept;
    double r_squared;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return {slope, my - slope * mx, r2};
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

} // namespace support
