#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "recurflow/spectral_field.hpp"

using namespace recurflow::nse2d;

namespace {

/// Hermitian, zero-mean, but not divergence-free.
SpectralField raw_field(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    SpectralField u(n);
    for (int c = 0; c < 2; ++c) {
        for (int ix = 0; ix < n; ++ix) {
            for (int iy = 0; iy < u.half(); ++iy) u.at(c, ix, iy) = Complex(g(rng), g(rng));
        }
    }
    u.enforce_hermitian();
    return u;
}

double max_abs_difference(const SpectralField& a, const SpectralField& b) {
    double worst = 0.0;
    for (int c = 0; c < 2; ++c) {
        const auto x = a.component(c);
        const auto y = b.component(c);
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    }
    return worst;
}

}  // namespace

TEST(SpectralField, LayoutAndWavenumbers) {
    SpectralField u(8);
    EXPECT_EQ(u.half(), 5);
    EXPECT_EQ(u.modes(), 40u);
    EXPECT_EQ(u.kx(3), 3);
    EXPECT_EQ(u.kx(4), -4);
    EXPECT_EQ(u.kx(7), -1);
    EXPECT_EQ(u.slot(-1, 2), u.index(7, 2));
    EXPECT_TRUE(u.is_nyquist(4, 0));
    EXPECT_TRUE(u.is_nyquist(0, 4));
}

TEST(SpectralField, LerayProjectionIsIdempotent) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto p = leray_project(raw_field(32, seed));
        const auto pp = leray_project(p);
        EXPECT_LE(max_abs_difference(p, pp), 1e-14);
        EXPECT_LE(p.divergence_residual(), 1e-14);
    }
}

TEST(SpectralField, LerayProjectionIsOrthogonal) {
    const auto raw = raw_field(16, 9);
    const auto p = leray_project(raw);
    EXPECT_NEAR(inner(raw - p, p), 0.0, 1e-12 * h_norm(raw) * h_norm(p));
}

TEST(SpectralField, TrilinearFormVanishes) {
    BilinearEvaluator b(32);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto u = random_field(32, seed, 8);
        const auto buu = b(u, u);
        EXPECT_LE(std::abs(inner(buu, u)), 1e-10 * h_norm(buu) * h_norm(u)) << "seed " << seed;
    }
}

TEST(SpectralField, StokesFormIsTwiceViscousEnstrophy) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto u = random_field(32, seed, 10);
        const double nu = 0.37;
        EXPECT_NEAR(inner(stokes_apply(u, nu), u) / (2.0 * nu * enstrophy(u)), 1.0, 1e-12);
    }
}

TEST(SpectralField, PoincareInequality) {
    const auto u = random_field(32, 4, 10);
    EXPECT_GE(enstrophy(u), energy(u));
    EXPECT_NEAR(energy(u), 0.5 * h_norm(u) * h_norm(u), 1e-14);
}

TEST(SpectralField, RandomFieldIsAdmissibleAndReproducible) {
    const auto u = random_field(32, 11, 6);
    EXPECT_LE(u.divergence_residual(), 1e-14);
    EXPECT_EQ(u.hermitian_residual(), 0.0);
    EXPECT_EQ(u.mean_magnitude(), 0.0);
    EXPECT_TRUE(u == random_field(32, 11, 6));
    EXPECT_FALSE(u == random_field(32, 12, 6));
    for (int ix = 0; ix < 32; ++ix) {
        for (int iy = 0; iy < u.half(); ++iy) {
            if (std::max(std::abs(u.kx(ix)), iy) > 6) EXPECT_EQ(std::abs(u.at(0, ix, iy)), 0.0);
        }
    }
}

TEST(SpectralField, KolmogorovModeIsSteadyForTheNonlinearity) {
    const auto u = kolmogorov_mode(32, 1.7);
    EXPECT_DOUBLE_EQ(kolmogorov_amplitude(u), 1.7);
    EXPECT_NEAR(energy(u), 0.25 * 1.7 * 1.7, 1e-15);
    EXPECT_LE(h_norm(bilinear_term(u, u)), 1e-14);
}

TEST(SpectralField, PhysicalRoundTrip) {
    BilinearEvaluator b(16);
    const auto u = random_field(16, 5, 5);
    const auto values = b.to_physical(u.component(0));
    ASSERT_EQ(values.size(), 256u);
    SpectralField back(16);
    b.to_spectral(values, back.component(0));
    double worst = 0.0;
    for (std::size_t i = 0; i < u.component(0).size(); ++i) {
        worst = std::max(worst, std::abs(back.component(0)[i] - u.component(0)[i]));
    }
    EXPECT_LE(worst, 1e-15);
}

TEST(SpectralField, PhysicalValueOfAShearMode) {
    BilinearEvaluator b(16);
    const auto u = kolmogorov_mode(16, 2.0);
    const auto values = b.to_physical(u.component(0));
    const double h = 2.0 * std::numbers::pi / 16.0;
    for (int ix = 0; ix < 16; ix += 5) {
        for (int iy = 0; iy < 16; ++iy) EXPECT_NEAR(values[ix * 16 + iy], 2.0 * std::sin(iy * h), 1e-14);
    }
}

TEST(SpectralField, TwoThirdsRule) {
    auto u = random_field(32, 3, 16);
    dealias_two_thirds(u);
    for (int ix = 0; ix < 32; ++ix) {
        for (int iy = 0; iy < u.half(); ++iy) {
            if (std::max(std::abs(u.kx(ix)), iy) > 32 / 3) {
                EXPECT_EQ(std::abs(u.at(0, ix, iy)) + std::abs(u.at(1, ix, iy)), 0.0);
            }
        }
    }
}

TEST(SpectralField, DealiasedProductHasNoHighModes) {
    const auto u = random_field(32, 2, 10);
    const auto buu = bilinear_term(u, u, true);
    for (int ix = 0; ix < 32; ++ix) {
        for (int iy = 0; iy < buu.half(); ++iy) {
            if (std::max(std::abs(buu.kx(ix)), iy) > 32 / 3) EXPECT_EQ(std::abs(buu.at(0, ix, iy)), 0.0);
        }
    }
    const auto aliased = bilinear_term(u, u, false);
    EXPECT_GT(h_distance(buu, aliased), 0.0);
}

TEST(SpectralField, ArithmeticAndNorms) {
    const auto u = random_field(16, 1, 4);
    const auto v = random_field(16, 2, 4);
    EXPECT_NEAR(h_distance(u, v), h_norm(u - v), 1e-15);
    EXPECT_NEAR(inner(u + v, u + v), inner(u, u) + 2.0 * inner(u, v) + inner(v, v), 1e-12);
    auto w = u;
    w.add_scaled(v, -1.0);
    EXPECT_TRUE(w == u - v);
    w.set_zero();
    EXPECT_EQ(h_norm(w), 0.0);
    EXPECT_TRUE(u.all_finite());
}
