#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "properties.hpp"
#include "support.hpp"

using namespace rendezvous;
using support::from_eigen;
using support::random_matrix;
using support::to_eigen;

// ============================================================================
// Dense matrix basics
// ============================================================================

TEST(Matrix, RejectsNonFiniteEntries) {
    EXPECT_THROW((Matrix{{1.0, std::nan("")}}), numeric_error);
    EXPECT_THROW((Matrix{{INFINITY}}), numeric_error);
}

TEST(Matrix, RaggedInitializerIsRejected) { EXPECT_THROW((Matrix{{1.0, 2.0}, {3.0}}), std::invalid_argument); }

TEST(Matrix, ProductAndTranspose) {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix b{{0, 1}, {1, 0}};
    EXPECT_EQ(a * b, (Matrix{{2, 1}, {4, 3}}));
    EXPECT_EQ(a.transpose(), (Matrix{{1, 3}, {2, 4}}));
    EXPECT_THROW(a * Matrix(3, 1), std::invalid_argument);
}

TEST(Matrix, SolveMatchesEigen) {
    std::mt19937_64 rng(11);
    for (int c = 0; c < 50; ++c) {
        const Matrix a = random_matrix(rng, 5, 5) + 5.0 * Matrix::identity(5);
        const Matrix b = random_matrix(rng, 5, 2);
        const Matrix x = solve(a, b);
        const Matrix oracle = from_eigen(to_eigen(a).partialPivLu().solve(to_eigen(b)));
        EXPECT_TRUE(approx_equal(x, oracle, 1e-12, 1e-10));
    }
}

TEST(Matrix, SingularSolveSignals) { EXPECT_THROW(solve(Matrix{{1, 2}, {2, 4}}, Matrix::identity(2)), numeric_error); }

TEST(Matrix, CholeskyDetectsDefiniteness) {
    EXPECT_TRUE(is_positive_definite(Matrix{{2, 1}, {1, 2}}));
    EXPECT_FALSE(is_positive_definite(Matrix{{1, 2}, {2, 1}}));
    EXPECT_FALSE(is_positive_definite(Matrix{{1, 0}, {1, 1}}));
}

// ============================================================================
// Kronecker product
// ============================================================================

TEST(Kron, IdentityWithBlock) {
    const Matrix k = kron(Matrix::identity(2), Matrix{{1, 2}, {3, 4}});
    EXPECT_EQ(k, (Matrix{{1, 2, 0, 0}, {3, 4, 0, 0}, {0, 0, 1, 2}, {0, 0, 3, 4}}));
}

TEST(Kron, ShapeAndEntriesMatchEigen) {
    std::mt19937_64 rng(3);
    for (int c = 0; c < 100; ++c) {
        const Matrix a = random_matrix(rng, 1 + c % 3, 1 + c % 4);
        const Matrix b = random_matrix(rng, 1 + c % 5, 2);
        const Matrix k = kron(a, b);
        ASSERT_EQ(k.rows(), a.rows() * b.rows());
        ASSERT_EQ(k.cols(), a.cols() * b.cols());
        const Eigen::MatrixXd oracle = Eigen::kroneckerProduct(to_eigen(a), to_eigen(b)).eval();
        EXPECT_TRUE(approx_equal(k, from_eigen(oracle), 0.0, 0.0));
    }
}

TEST(Kron, MixedProductProperty) {
    const auto res = support::kron_mixed_product(1000, 101);
    EXPECT_TRUE(res.ok()) << res.first_failure;
}

// ============================================================================
// Matrix exponential
// ============================================================================

TEST(Expm, ZeroGivesIdentity) { EXPECT_EQ(expm(Matrix(3, 3)), Matrix::identity(3)); }

TEST(Expm, NilpotentIsExact) { EXPECT_EQ(expm(Matrix{{0, 1}, {0, 0}}), (Matrix{{1, 1}, {0, 1}})); }

TEST(Expm, DiagonalAndRotation) {
    const Matrix d = expm(Matrix{{-1, 0}, {0, 2}});
    EXPECT_NEAR(d(0, 0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(d(1, 1), std::exp(2.0), 1e-14);
    const double th = 0.7;
    const Matrix r = expm(Matrix{{0, -th}, {th, 0}});
    EXPECT_NEAR(r(0, 0), std::cos(th), 1e-15);
    EXPECT_NEAR(r(1, 0), std::sin(th), 1e-15);
    EXPECT_NEAR(r(0, 1), -std::sin(th), 1e-15);
}

TEST(Expm, MatchesEigenAcrossScales) {
    std::mt19937_64 rng(7);
    for (double scale : {1e-4, 0.1, 1.0, 3.0, 10.0}) {
        for (int c = 0; c < 40; ++c) {
            const std::size_t n = 1 + static_cast<std::size_t>(c % 6);
            const Matrix a = random_matrix(rng, n, n, scale / std::sqrt(static_cast<double>(n)));
            const Matrix e = expm(a);
            const Eigen::MatrixXd oracle = to_eigen(a).exp();
            const double err = (e - from_eigen(oracle)).max_abs();
            EXPECT_LE(err, 1e-12 * (1.0 + oracle.cwiseAbs().maxCoeff())) << "scale " << scale;
        }
    }
}

TEST(Expm, InverseProperty) {
    const auto res = support::expm_inverse(1000, 202);
    EXPECT_TRUE(res.ok()) << res.first_failure;
}

TEST(Expm, RejectsNonSquare) { EXPECT_THROW(expm(Matrix(2, 3)), std::invalid_argument); }

// ============================================================================
// Eigenvalues
// ============================================================================

TEST(Eigenvalues, CompanionMatrix) {
    const auto ev = eigenvalues(Matrix{{0, 1}, {-2, -3}});
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_NEAR(ev[0].real(), -2.0, 1e-14);
    EXPECT_NEAR(ev[1].real(), -1.0, 1e-14);
    EXPECT_EQ(ev[0].imag(), 0.0);
}

TEST(Eigenvalues, RotationHasImaginaryPair) {
    const auto ev = eigenvalues(Matrix{{0, -1}, {1, 0}});
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_NEAR(ev[0].real(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(ev[0].imag()), 1.0, 1e-15);
    EXPECT_NEAR(ev[0].imag(), -ev[1].imag(), 1e-15);
}

TEST(Eigenvalues, MatchEigenOnRandomMatrices) {
    std::mt19937_64 rng(19);
    for (int c = 0; c < 300; ++c) {
        const std::size_t n = 1 + static_cast<std::size_t>(c % 9);
        const Matrix a = random_matrix(rng, n, n);
        auto mine = eigenvalues(a);
        Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(a), false);
        std::vector<std::complex<double>> oracle(es.eigenvalues().data(), es.eigenvalues().data() + n);
        // Match greedily: each oracle value to its nearest unused computed value.
        std::vector<bool> used(n, false);
        for (const auto& o : oracle) {
            double best = INFINITY;
            std::size_t at = 0;
            for (std::size_t k = 0; k < n; ++k)
                if (!used[k] && std::abs(mine[k] - o) < best) {
                    best = std::abs(mine[k] - o);
                    at = k;
                }
            used[at] = true;
            EXPECT_LE(best, 1e-10 * (1.0 + std::abs(o))) << "n = " << n;
        }
    }
}

TEST(Eigenvalues, HurwitzAndSemidefinite) {
    EXPECT_TRUE(is_hurwitz(Matrix{{-1, 5}, {0, -2}}));
    EXPECT_FALSE(is_hurwitz(Matrix{{0, 0}, {0, -1}}));
    EXPECT_TRUE(is_positive_semidefinite(Matrix{{1, 1}, {1, 1}}));
    EXPECT_FALSE(is_positive_semidefinite(Matrix{{1, 2}, {2, 1}}));
}

// ============================================================================
// Lyapunov
// ============================================================================

TEST(Lyapunov, ScalarClosedForm) {
    // -2 x - 2 x + 4 = 0
    const Matrix x = solve_lyapunov(Matrix{{-2}}, Matrix{{4}});
    EXPECT_NEAR(x(0, 0), 1.0, 1e-15);
}

TEST(Lyapunov, RandomHurwitzResidual) {
    std::mt19937_64 rng(23);
    for (int c = 0; c < 200; ++c) {
        const std::size_t n = 1 + static_cast<std::size_t>(c % 6);
        Matrix a = random_matrix(rng, n, n);
        const double shift = spectral_abscissa(a) + 0.5;
        a -= shift * Matrix::identity(n);
        const Matrix g = random_matrix(rng, n, n);
        const Matrix q = g * g.transpose();
        const Matrix x = solve_lyapunov(a, q);
        EXPECT_LE(lyapunov_residual(a, x, q).frobenius_norm(), 1e-10 * (1.0 + x.frobenius_norm()));
        EXPECT_TRUE(x.is_symmetric(1e-12));
    }
}

TEST(Lyapunov, RejectsUnstable) { EXPECT_THROW(solve_lyapunov(Matrix{{1}}, Matrix{{1}}), numeric_error); }

// ============================================================================
// Riccati
// ============================================================================

TEST(Care, SingleIntegratorClosedForm) {
    // P = sqrt(q r), K = sqrt(q / r) for a = 0, b = 1.
    for (double q : {1.0, 3.0, 6.0, 20.0})
        for (double r : {1.0, 5.0}) {
            const auto sol = solve_care(Matrix(2, 2), Matrix::identity(2), q * Matrix::identity(2),
                                        r * Matrix::identity(2));
            EXPECT_TRUE(approx_equal(sol.p, std::sqrt(q * r) * Matrix::identity(2), 1e-9, 0.0));
        }
}

TEST(Care, DoubleIntegratorKnownSolution) {
    // Classic result: P = [[sqrt 3, 1], [1, sqrt 3]] for q = I, r = 1.
    const auto sol = solve_care(Matrix{{0, 1}, {0, 0}}, Matrix{{0}, {1}}, Matrix::identity(2), Matrix{{1}});
    const double s3 = std::sqrt(3.0);
    EXPECT_TRUE(approx_equal(sol.p, Matrix{{s3, 1}, {1, s3}}, 1e-10, 0.0));
}

TEST(Care, UnstableScalarNeedsStabilizingStart) {
    // 2p - p^2 + 1 = 0, stabilizing root 1 + sqrt 2.
    const auto sol = solve_care(Matrix{{1}}, Matrix{{1}}, Matrix{{1}}, Matrix{{1}});
    EXPECT_NEAR(sol.p(0, 0), 1.0 + std::sqrt(2.0), 1e-12);
}

TEST(Care, RandomSystemsMatchHamiltonianOracle) {
    std::mt19937_64 rng(29);
    int checked = 0;
    for (int c = 0; c < 200; ++c) {
        const std::size_t n = 1 + static_cast<std::size_t>(c % 5);
        const std::size_t m = 1 + static_cast<std::size_t>(c % 3);
        const Matrix a = random_matrix(rng, n, n);
        const Matrix b = random_matrix(rng, n, m);
        const Matrix g = random_matrix(rng, n, n);
        const Matrix q = g * g.transpose() + 0.1 * Matrix::identity(n);
        const Matrix h = random_matrix(rng, m, m);
        const Matrix r = h * h.transpose() + 0.5 * Matrix::identity(m);
        CareSolution sol;
        try {
            sol = solve_care(a, b, q, r);
        } catch (const numeric_error&) {
            continue; // numerically uncontrollable draw
        }
        ++checked;
        const Matrix k = solve(r, b.transpose() * sol.p);
        EXPECT_TRUE(is_hurwitz(a - b * k));
        EXPECT_TRUE(is_positive_definite(sol.p));
        const Matrix oracle = support::care_by_hamiltonian(a, b, q, r);
        EXPECT_LE((sol.p - oracle).max_abs(), 1e-7 * (1.0 + oracle.max_abs())) << "case " << c;
    }
    EXPECT_GE(checked, 190);
}

TEST(Care, InputChecks) {
    EXPECT_THROW(solve_care(Matrix(2, 2), Matrix::identity(2), Matrix::identity(2), Matrix{{1, 0}, {0, -1}}),
                 std::invalid_argument);
    EXPECT_THROW(solve_care(Matrix(2, 2), Matrix::identity(2), Matrix{{1, 1}, {0, 1}}, Matrix::identity(2)),
                 std::invalid_argument);
    EXPECT_THROW(solve_care(Matrix(2, 2), Matrix::identity(3), Matrix::identity(2), Matrix::identity(2)),
                 std::invalid_argument);
}

TEST(Care, UncontrollableUnstableModeSignals) {
    EXPECT_THROW(solve_care(Matrix{{1}}, Matrix{{0}}, Matrix{{1}}, Matrix{{1}}), numeric_error);
}
