#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "proxclust/matrix.hpp"
#include "test_util.hpp"

using namespace proxclust;

TEST(SpectralNorm, IdentityIsOne) {
    EXPECT_NEAR(spectral_norm(DenseMatrix::identity(2)).value, 1.0, 1e-12);
}

TEST(SpectralNorm, DiagonalTakesLargestEntry) {
    const auto m = DenseMatrix::from_rows({{3, 0}, {0, 4}});
    EXPECT_NEAR(spectral_norm(m).value, 4.0, 1e-9);
}

TEST(SpectralNorm, MatchesJacobiOracle) {
    std::mt19937_64 rng(11);
    const auto m = testutil::random_matrix(8, 5, rng);
    const auto svd = testutil::svd_of(m);
    EXPECT_LE(testutil::rel_err(spectral_norm(m).value, svd.values.front()), 1e-8);
}

TEST(SpectralNorm, ZeroMatrix) {
    const auto est = spectral_norm(DenseMatrix(3, 4));
    EXPECT_EQ(est.value, 0.0);
    EXPECT_EQ(est.residual, 0.0);
}

TEST(SpectralNorm, RejectsBadArguments) {
    EXPECT_THROW(spectral_norm(DenseMatrix::identity(2), 0.0), ValidationError);
    EXPECT_THROW(spectral_norm(DenseMatrix::identity(2), 1e-9, 0), ValidationError);
    EXPECT_THROW(spectral_norm(DenseMatrix()), ValidationError);
}

TEST(SpectralNorm, HittingIterationCapReturnsEstimateWithResidual) {
    std::mt19937_64 rng(3);
    const auto m = testutil::random_matrix(30, 20, rng);
    const auto est = spectral_norm(m, 1e-15, 2);
    EXPECT_EQ(est.iterations, 2u);
    EXPECT_GT(est.value, 0.0);
    EXPECT_GT(est.residual, 0.0);
}

TEST(SpectralNorm, IsDeterministic) {
    std::mt19937_64 rng(5);
    const auto m = testutil::random_matrix(12, 9, rng);
    EXPECT_EQ(spectral_norm(m).value, spectral_norm(m).value);
}

TEST(SpectralNorm, PropertiesOnRandomMatrices) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::size_t> dim(1, 12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = testutil::random_matrix(dim(rng), dim(rng), rng);
        const double s = spectral_norm(m).value;
        const double tol = 1e-9;
        for (int probe = 0; probe < 100; ++probe) {
            auto v = detail::random_unit_vector(m.cols(), rng);
            std::vector<double> y(m.rows());
            detail::apply(m, v, y);
            ASSERT_LE(norm(y), s * (1 + tol) + 1e-12);
        }
        EXPECT_LE(testutil::rel_err(spectral_norm(m.transposed()).value, s), 1e-8);
        const double f = frobenius_norm(m);
        EXPECT_LE(s, f * (1 + tol));
        EXPECT_LE(f, std::sqrt(static_cast<double>(std::min(m.rows(), m.cols()))) * s * (1 + 1e-8));
    }
}

TEST(Frobenius, Basics) {
    EXPECT_EQ(frobenius_norm(DenseMatrix(3, 3)), 0.0);
    EXPECT_NEAR(frobenius_norm(DenseMatrix::identity(2)), std::sqrt(2.0), 1e-15);
    std::mt19937_64 rng(2);
    const auto m = testutil::random_matrix(6, 4, rng);
    EXPECT_LE(testutil::rel_err(frobenius_norm(m), oracle::frobenius(testutil::svd_of(m))), 1e-10);
}

TEST(SubspaceBasis, DiagonalPicksFirstAxis) {
    const auto m = DenseMatrix::from_rows({{5, 0, 0}, {0, 2, 0}, {0, 0, 1}});
    const auto b = top_right_singular_basis(m, 1);
    ASSERT_EQ(b.rows(), 3u);
    ASSERT_EQ(b.cols(), 1u);
    EXPECT_NEAR(std::abs(b(0, 0)), 1.0, 1e-9);
    EXPECT_NEAR(b(1, 0), 0.0, 1e-9);
    EXPECT_NEAR(b(2, 0), 0.0, 1e-9);
}

TEST(SubspaceBasis, FullRankProjectionIsIdentity) {
    std::mt19937_64 rng(4);
    const auto m = testutil::random_matrix(7, 4, rng);
    const auto b = top_right_singular_basis(m, 4);
    EXPECT_EQ(project_rows(m, b), m);
}

TEST(SubspaceBasis, RowCountRankLeavesRowsUnchanged) {
    std::mt19937_64 rng(8);
    const auto m = testutil::random_matrix(3, 7, rng);
    const auto p = project_rows(m, top_right_singular_basis(m, 3));
    for (std::size_t i = 0; i < m.entries().size(); ++i) {
        EXPECT_NEAR(p.entries()[i], m.entries()[i], 1e-12);
    }
}

TEST(SubspaceBasis, ColumnsAreOrthonormal) {
    std::mt19937_64 rng(9);
    const auto m = testutil::random_matrix(20, 12, rng);
    const auto b = top_right_singular_basis(m, 5);
    const auto g = matmul_transpose_left(b, b);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_NEAR(g(i, j), i == j ? 1.0 : 0.0, 1e-12);
        }
    }
}

TEST(SubspaceBasis, ProjectionErrorMatchesOracle) {
    std::mt19937_64 rng(10);
    const auto m = testutil::random_matrix(10, 6, rng);
    const auto p = project_rows(m, top_right_singular_basis(m, 2));
    DenseMatrix diff = m;
    for (std::size_t i = 0; i < diff.entries().size(); ++i) {
        diff.entries()[i] -= p.entries()[i];
    }
    EXPECT_LE(testutil::rel_err(frobenius_norm(diff), oracle::tail_frobenius(testutil::svd_of(m), 2)), 1e-6);
}

TEST(SubspaceBasis, RankDeficientInput) {
    // Rank 1: every row a multiple of v.
    const std::vector<double> v{1.0, 2.0, -1.0, 0.5};
    DenseMatrix m(6, 4);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            m(i, j) = static_cast<double>(i + 1) * v[j];
        }
    }
    const auto b = top_right_singular_basis(m, 1);
    const auto p = project_rows(m, b);
    for (std::size_t i = 0; i < m.entries().size(); ++i) {
        EXPECT_NEAR(p.entries()[i], m.entries()[i], 1e-10);
    }
    const auto b3 = top_right_singular_basis(m, 3);
    const auto g = matmul_transpose_left(b3, b3);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(g(i, i), 1.0, 1e-12);
    }
}

TEST(SubspaceBasis, RejectsBadK) {
    EXPECT_THROW(top_right_singular_basis(DenseMatrix::identity(3), 0), ValidationError);
    EXPECT_THROW(top_right_singular_basis(DenseMatrix::identity(3), 4), ValidationError);
}

TEST(ProjectRows, IdempotentAndNonExpansive) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = testutil::random_matrix(15, 8, rng);
        const auto b = top_right_singular_basis(m, 3);
        const auto once = project_rows(m, b);
        const auto twice = project_rows(once, b);
        for (std::size_t i = 0; i < once.entries().size(); ++i) {
            ASSERT_NEAR(once.entries()[i], twice.entries()[i], 1e-12);
        }
        EXPECT_LE(frobenius_norm(once), frobenius_norm(m) * (1 + 1e-12));
    }
}

TEST(ProjectRows, RowsInSubspaceStay) {
    const auto basis = DenseMatrix::from_rows({{0.6}, {0.8}});
    const auto m = DenseMatrix::from_rows({{3, 4}, {-0.6, -0.8}});
    const auto p = project_rows(m, basis);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(p.entries()[i], m.entries()[i], 1e-15);
    }
}

TEST(ProjectRows, DimensionMismatch) {
    EXPECT_THROW(project_rows(DenseMatrix(2, 3), DenseMatrix(2, 1)), ValidationError);
}

// Rank-k projection of A stays close to any rank-k C: ||Â − C||_F² ≤ 8k·||A − C||²
// always; the tighter constant 5 is tracked separately.
TEST(SubspaceBasis, ProjectedDataNearPlantedCenters) {
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> kdist(1, 4);
    int above_five = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = kdist(rng);
        const std::size_t n = 40;
        const std::size_t d = 8;
        const auto centers = testutil::random_matrix(k, d, rng, 5.0);
        DenseMatrix c(n, d);
        DenseMatrix a(n, d);
        std::normal_distribution<double> g(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                c(i, j) = centers(i % k, j);
                a(i, j) = c(i, j) + g(rng);
            }
        }
        const auto ahat = project_rows(a, top_right_singular_basis(a, k));
        DenseMatrix diff_hat = ahat;
        DenseMatrix diff = a;
        for (std::size_t i = 0; i < diff.entries().size(); ++i) {
            diff_hat.entries()[i] -= c.entries()[i];
            diff.entries()[i] -= c.entries()[i];
        }
        const double lhs = std::pow(frobenius_norm(diff_hat), 2);
        const double spec = testutil::svd_of(diff).values.front();
        ASSERT_LE(lhs, 8.0 * static_cast<double>(k) * spec * spec * (1 + 1e-9));
        above_five += lhs > 5.0 * static_cast<double>(k) * spec * spec ? 1 : 0;
    }
    RecordProperty("above_constant_five", above_five);
    EXPECT_EQ(above_five, 0);
}

TEST(Products, SmallCases) {
    const auto a = DenseMatrix::from_rows({{1, 2}, {3, 4}});
    const auto b = DenseMatrix::from_rows({{0, 1}, {1, 0}});
    EXPECT_EQ(matmul(a, b), DenseMatrix::from_rows({{2, 1}, {4, 3}}));
    EXPECT_EQ(matmul_transpose_left(a, b), DenseMatrix::from_rows({{3, 1}, {4, 2}}));
    EXPECT_EQ(matmul_transpose_right(a, b), DenseMatrix::from_rows({{2, 1}, {4, 3}}));
    EXPECT_THROW(matmul(a, DenseMatrix(3, 1)), ValidationError);
}

TEST(DenseMatrix, ValidatesConstruction) {
    EXPECT_THROW(DenseMatrix(0, 2), ValidationError);
    EXPECT_THROW(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), ValidationError);
    EXPECT_THROW(DenseMatrix(1, 1, std::vector<double>{std::nan("")}), ValidationError);
    EXPECT_THROW(DenseMatrix::from_rows({{1, 2}, {3}}), ValidationError);
}
