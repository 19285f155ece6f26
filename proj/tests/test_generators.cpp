#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "proxclust/generators.hpp"
#include "test_util.hpp"

using namespace proxclust;

namespace {

MixtureSpec spec_for(std::size_t k, std::size_t d, double dist, double sigma, std::uint64_t seed,
                     NoiseFamily family = NoiseFamily::gaussian) {
    MixtureSpec spec;
    spec.weights.assign(k, 1.0 / static_cast<double>(k));
    spec.means = k == 1 ? DenseMatrix(1, d) : place_means_simplex(k, d, dist);
    spec.sigma = sigma;
    spec.family = family;
    spec.seed = seed;
    return spec;
}

} // namespace

TEST(Simplex, TwoPoints) {
    const auto m = place_means_simplex(2, 3, 10.0);
    EXPECT_NEAR(m(0, 0), -5.0, 1e-12);
    EXPECT_NEAR(m(1, 0), 5.0, 1e-12);
    EXPECT_EQ(m(0, 1), 0.0);
}

TEST(Simplex, EqualPairwiseDistancesAndCentered) {
    for (std::size_t k = 2; k <= 6; ++k) {
        const auto m = place_means_simplex(k, k + 2, 7.0);
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t s = r + 1; s < k; ++s) {
                EXPECT_NEAR(distance(m.row(r), m.row(s)), 7.0, 1e-12);
            }
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double c = 0;
            for (std::size_t r = 0; r < k; ++r) {
                c += m(r, j);
            }
            EXPECT_NEAR(c, 0.0, 1e-12);
            if (j + 1 >= k) {
                for (std::size_t r = 0; r < k; ++r) {
                    EXPECT_EQ(m(r, j), 0.0);
                }
            }
        }
    }
    EXPECT_THROW(place_means_simplex(4, 2, 1.0), ValidationError);
}

TEST(Mixture, SpecValidation) {
    auto spec = spec_for(2, 3, 4.0, 1.0, 0);
    spec.weights = {0.5, 0.6};
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = spec_for(2, 3, 4.0, 1.0, 0);
    spec.means = DenseMatrix(2, 3);
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = spec_for(2, 3, 4.0, 1.0, 0, NoiseFamily::powerlaw);
    spec.tail_gamma = 1.5;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = spec_for(2, 3, 4.0, 1.0, 0);
    EXPECT_THROW(gen_gaussian_mixture(spec, 1), ValidationError);
}

TEST(Mixture, ZeroSigmaPutsPointsOnMeans) {
    const auto spec = spec_for(3, 4, 5.0, 0.0, 1);
    const auto ds = gen_gaussian_mixture(spec, 30);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(ds.points()(i, j), spec.means((*ds.truth())[i], j));
        }
    }
    // Means of identical values can differ from them by rounding.
    EXPECT_LE(residual_spectral_norm(ds), 1e-12);
    auto pl = spec_for(2, 4, 5.0, 0.0, 1, NoiseFamily::powerlaw);
    const auto ps = gen_powerlaw_mixture(pl, 20);
    EXPECT_LE(residual_spectral_norm(ps), 1e-12);
}

TEST(Mixture, DeterministicForSeed) {
    const auto spec = spec_for(3, 4, 5.0, 1.0, 42);
    const auto a = gen_gaussian_mixture(spec, 100);
    const auto b = gen_gaussian_mixture(spec, 100);
    EXPECT_EQ(a.points(), b.points());
    EXPECT_EQ(a.truth(), b.truth());
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(gen_gaussian_mixture(other, 100).points(), a.points());
}

TEST(Mixture, GaussianVarianceNearSigmaSquared) {
    const auto ds = gen_gaussian_mixture(spec_for(1, 5, 0.0, 1.0, 3), 10000);
    for (std::size_t j = 0; j < 5; ++j) {
        double s = 0, s2 = 0;
        for (std::size_t i = 0; i < ds.n(); ++i) {
            s += ds.points()(i, j);
            s2 += ds.points()(i, j) * ds.points()(i, j);
        }
        const double mean = s / 10000.0;
        const double var = s2 / 10000.0 - mean * mean;
        EXPECT_GE(var, 0.9);
        EXPECT_LE(var, 1.1);
    }
}

TEST(Mixture, ComponentCountsBinomial) {
    const auto ds = gen_gaussian_mixture(spec_for(2, 2, 5.0, 1.0, 4), 2000);
    const auto sizes = ds.cluster_sizes();
    const double sd = std::sqrt(2000 * 0.25);
    EXPECT_LE(std::abs(static_cast<double>(sizes[0]) - 1000.0), 3 * sd);
}

TEST(Mixture, EmpiricalMeansConverge) {
    const auto spec = spec_for(3, 4, 8.0, 1.0, 6);
    const auto ds = gen_gaussian_mixture(spec, 10000);
    const auto mu = true_means(ds);
    const double tol = 5.0 * 1.0 / std::sqrt(spec.w_min() * 10000.0);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_LE(std::abs(mu.centers(r, j) - spec.means(r, j)), tol);
        }
    }
}

TEST(Powerlaw, DirectionalTailRespectsBound) {
    const auto spec = spec_for(1, 6, 0.0, 1.0, 8, NoiseFamily::powerlaw);
    const auto ds = gen_powerlaw_mixture(spec, 100000);
    std::mt19937_64 rng(99);
    for (int dir = 0; dir < 20; ++dir) {
        const auto v = detail::random_unit_vector(6, rng);
        for (double t : {2.0, 4.0, 8.0}) {
            std::size_t over = 0;
            for (std::size_t i = 0; i < ds.n(); ++i) {
                over += std::abs(dot(ds.points().row(i), v)) > t ? 1 : 0;
            }
            const double freq = static_cast<double>(over) / static_cast<double>(ds.n());
            EXPECT_LE(freq, 1.2 / std::pow(t, 4.0)) << "direction " << dir << " t=" << t;
        }
    }
}

TEST(Powerlaw, CoordinateVarianceBoundedBySigmaSquared) {
    const auto ds = gen_powerlaw_mixture(spec_for(1, 4, 0.0, 1.0, 10, NoiseFamily::powerlaw), 100000);
    for (std::size_t j = 0; j < 4; ++j) {
        double s2 = 0;
        for (std::size_t i = 0; i < ds.n(); ++i) {
            s2 += ds.points()(i, j) * ds.points()(i, j);
        }
        EXPECT_LE(s2 / static_cast<double>(ds.n()), 1.1);
    }
}

TEST(Planted, ConstantProbabilities) {
    PlantedSpec spec;
    spec.group_sizes = {3, 4};
    spec.probabilities = DenseMatrix(2, 2, 0.0);
    const auto zeros = gen_planted_partition(spec);
    for (double x : zeros.points().entries()) {
        EXPECT_EQ(x, 0.0);
    }
    spec.probabilities = DenseMatrix(2, 2, 1.0);
    const auto ones = gen_planted_partition(spec);
    for (double x : ones.points().entries()) {
        EXPECT_EQ(x, 1.0);
    }
    spec.probabilities = DenseMatrix(2, 2, 1.5);
    EXPECT_THROW(gen_planted_partition(spec), ValidationError);
}

TEST(Planted, BlockDensitiesTrackP) {
    PlantedSpec spec;
    spec.group_sizes = {400, 400};
    spec.probabilities = DenseMatrix::from_rows({{0.5, 0.1}, {0.1, 0.5}});
    spec.seed = 12;
    const auto ds = gen_planted_partition(spec);
    double sums[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < 800; ++i) {
        for (std::size_t u = 0; u < 800; ++u) {
            const double x = ds.points()(i, u);
            ASSERT_TRUE(x == 0.0 || x == 1.0);
            sums[i / 400][u / 400] += x;
        }
    }
    for (int r = 0; r < 2; ++r) {
        for (int s = 0; s < 2; ++s) {
            EXPECT_NEAR(sums[r][s] / (400.0 * 400.0), spec.probabilities(r, s), 0.03);
        }
    }
}

TEST(Planted, SymmetricModeIsSymmetric) {
    PlantedSpec spec;
    spec.group_sizes = {10, 10};
    spec.probabilities = DenseMatrix::from_rows({{0.6, 0.2}, {0.2, 0.6}});
    spec.symmetric = true;
    spec.seed = 3;
    const auto ds = gen_planted_partition(spec);
    EXPECT_EQ(ds.points(), ds.points().transposed());
}

TEST(SpecJson, MixtureFromSeparationMultiple) {
    const nlohmann::json j = {{"model", "gaussian"}, {"k", 3}, {"d", 5}, {"sigma", 2.0},
                              {"separation_multiple", 4.0}, {"seed", 5}};
    const auto spec = mixture_spec_from_json(j);
    EXPECT_EQ(spec.k(), 3u);
    EXPECT_NEAR(distance(spec.means.row(0), spec.means.row(1)), 4.0 * 3 * 2.0 / std::sqrt(1.0 / 3.0), 1e-9);
    const auto back = mixture_spec_from_json(to_json(spec));
    EXPECT_EQ(back.means, spec.means);
    EXPECT_THROW(mixture_spec_from_json({{"model", "cauchy"}}), ValidationError);
    EXPECT_THROW(mixture_spec_from_json({{"model", "gaussian"}, {"k", 2}}), ValidationError);
}

TEST(SpecJson, Planted) {
    const nlohmann::json j = {{"model", "planted"}, {"group_sizes", {2, 3}}, {"P", {{0.5, 0.1}, {0.1, 0.5}}}};
    const auto spec = planted_spec_from_json(j);
    EXPECT_EQ(spec.n(), 5u);
    EXPECT_EQ(planted_spec_from_json(to_json(spec)).probabilities, spec.probabilities);
}
