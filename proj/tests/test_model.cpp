#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "proxclust/generators.hpp"
#include "proxclust/model.hpp"
#include "test_util.hpp"

using namespace proxclust;

TEST(Dataset, Validation) {
    EXPECT_THROW(Dataset(DenseMatrix(2, 1), 3), ValidationError);
    EXPECT_THROW(Dataset(DenseMatrix(3, 1), 0), ValidationError);
    EXPECT_THROW(Dataset(DenseMatrix(3, 1), 2, Labels{0, 0}), ValidationError);
    EXPECT_THROW(Dataset(DenseMatrix(3, 1), 2, Labels{0, 0, 2}), ValidationError);
    EXPECT_THROW(Dataset(DenseMatrix(3, 1), 2, Labels{0, 0, 0}), ValidationError);
    const Dataset ok(DenseMatrix(3, 2), 2, Labels{0, 1, 1});
    EXPECT_EQ(ok.cluster_sizes(), (std::vector<std::size_t>{1, 2}));
    EXPECT_THROW(Dataset(DenseMatrix(3, 1), 1).cluster_sizes(), ValidationError);
}

TEST(ClusterMeans, Midpoint) {
    const auto c = cluster_means(DenseMatrix::from_rows({{0}, {2}}), {0, 0}, 1);
    EXPECT_EQ(c.centers(0, 0), 1.0);
}

TEST(ClusterMeans, DistinctPointsAreTheirOwnMeans) {
    const auto pts = DenseMatrix::from_rows({{1, 2}, {-3, 4}, {5, -6}});
    EXPECT_EQ(cluster_means(pts, {0, 1, 2}, 3).centers, pts);
}

TEST(ClusterMeans, EmptyClusterNamesIndex) {
    try {
        cluster_means(DenseMatrix::from_rows({{0}, {1}}), {0, 0}, 3);
        FAIL() << "expected an error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("cluster 1"), std::string::npos) << e.what();
    }
}

TEST(ClusterMeans, MatchesTwoPassOracle) {
    std::mt19937_64 rng(1);
    const auto pts = testutil::random_matrix(50, 3, rng);
    Labels labels(50);
    for (std::size_t i = 0; i < 50; ++i) {
        labels[i] = i % 4;
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const auto c = cluster_means(pts, labels, 4);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t j = 0; j < 3; ++j) {
            // First pass: count; second pass: sum in reverse order.
            double cnt = 0;
            for (std::size_t l : labels) {
                cnt += l == r ? 1 : 0;
            }
            double sum = 0;
            for (std::size_t i = 50; i-- > 0;) {
                if (labels[i] == r) {
                    sum += pts(i, j);
                }
            }
            EXPECT_NEAR(c.centers(r, j), sum / cnt, 1e-12);
        }
    }
}

TEST(ClusterMeans, PermutationEquivariantAndRecombines) {
    std::mt19937_64 rng(2);
    const auto pts = testutil::random_matrix(40, 3, rng);
    Labels labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
        labels[i] = i % 3;
    }
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DenseMatrix shuffled(40, 3);
    Labels shuffled_labels(40);
    for (std::size_t i = 0; i < 40; ++i) {
        std::copy(pts.row(perm[i]).begin(), pts.row(perm[i]).end(), shuffled.row(i).begin());
        shuffled_labels[i] = labels[perm[i]];
    }
    const auto a = cluster_means(pts, labels, 3);
    const auto b = cluster_means(shuffled, shuffled_labels, 3);
    for (std::size_t i = 0; i < a.centers.entries().size(); ++i) {
        EXPECT_NEAR(a.centers.entries()[i], b.centers.entries()[i], 1e-12);
    }
    const auto global = cluster_means(pts, Labels(40, 0), 1);
    for (std::size_t j = 0; j < 3; ++j) {
        double mix = 0;
        for (std::size_t r = 0; r < 3; ++r) {
            const double nr = static_cast<double>(std::count(labels.begin(), labels.end(), r));
            mix += nr / 40.0 * a.centers(r, j);
        }
        EXPECT_NEAR(global.centers(0, j), mix, 1e-12);
    }
}

TEST(CenterMatrix, OneClusterGivesGlobalMean) {
    const Dataset ds(DenseMatrix::from_rows({{0, 0}, {2, 4}}), 1, Labels{0, 0});
    const auto c = center_matrix(ds, true_means(ds));
    EXPECT_EQ(c, DenseMatrix::from_rows({{1, 2}, {1, 2}}));
}

TEST(CenterMatrix, PointsAtMeans) {
    const Dataset ds(DenseMatrix::from_rows({{0, 0}, {5, 5}, {0, 0}}), 2, Labels{0, 1, 0});
    EXPECT_EQ(center_matrix(ds, true_means(ds)), ds.points());
    EXPECT_EQ(residual_spectral_norm(ds), 0.0);
}

TEST(CenterMatrix, ResidualNormMatchesOracle) {
    MixtureSpec spec;
    spec.weights = {0.5, 0.5};
    spec.means = place_means_simplex(2, 4, 6.0);
    spec.seed = 7;
    const Dataset ds = gen_gaussian_mixture(spec, 200);
    // Assemble A − C row by row, independently of the library.
    std::vector<double> sums(8, 0.0), counts(2, 0.0);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto r = (*ds.truth())[i];
        counts[r] += 1;
        for (std::size_t j = 0; j < 4; ++j) {
            sums[r * 4 + j] += ds.points()(i, j);
        }
    }
    std::vector<double> resid;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto r = (*ds.truth())[i];
        for (std::size_t j = 0; j < 4; ++j) {
            resid.push_back(ds.points()(i, j) - sums[r * 4 + j] / counts[r]);
        }
    }
    const auto svd = oracle::jacobi_svd(resid, ds.n(), 4);
    EXPECT_LE(testutil::rel_err(residual_spectral_norm(ds), svd.values.front()), 1e-8);
}

TEST(Assignment, FromLabels) {
    const auto a = Assignment::from_labels({0, 2, 2}, 3);
    EXPECT_EQ(a.sizes, (std::vector<std::size_t>{1, 0, 2}));
    EXPECT_THROW(Assignment::from_labels({3}, 3), ValidationError);
}
