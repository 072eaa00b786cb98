#include "rollwave/errors.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rollwave;

namespace {

PhysicalParams params(double F, double nu, double q, double X) {
    PhysicalParams p;
    p.F = F;
    p.nu = nu;
    p.q = q;
    p.X = X;
    return p;
}

const WaveProfile& reference_wave() {
    static const WaveProfile w = profile::solve_from_kdv(params(std::sqrt(6.0), 0.1, 1.5745, 17.15));
    return w;
}

}  // namespace

TEST(Profile, EquilibriumHasZeroResidual) {
    const double tau0 = 1.3;
    const auto w = profile::equilibrium(tau0, 3.0, 0.1, model::reference_speed(tau0), 5.0, 16);
    EXPECT_LT(profile::residual_norm(w), 1e-12);
    EXPECT_NEAR(w.u()[3], 1.0 / std::sqrt(tau0), 1e-14);
}

TEST(Profile, HopfData) {
    const auto h = profile::hopf_data(1.2, 4.0, 0.1);
    EXPECT_NEAR(h.speed, std::pow(1.2, -1.5) / 4.0, 1e-15);
    EXPECT_NEAR(h.frequency, std::pow(1.2, 1.25) / std::sqrt(0.1) * std::sqrt(2.0), 1e-13);
    EXPECT_NEAR(h.period, 2.0 * M_PI / h.frequency, 1e-14);
}

TEST(Profile, ReferenceWaveConverges) {
    const auto& w = reference_wave();
    EXPECT_LE(profile::residual_norm(w), 1e-8);
    EXPECT_GT(w.amplitude(), 0.1);
    EXPECT_GT(w.params.c, 0.0);
    EXPECT_EQ(w.params.q, 1.5745);
}

TEST(Profile, NewtonFromConvergedSeedIsStationary) {
    const auto& w = reference_wave();
    const auto again = profile::solve_profile(w.params, w);
    EXPECT_NEAR(again.params.c, w.params.c, 1e-11);
    EXPECT_LT((again.tau - w.tau).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Profile, ContinuationInPeriod) {
    const auto& w = reference_wave();
    auto to = w.params;
    to.X = 19.0;
    const auto path = profile::continue_profile(w, to);
    ASSERT_FALSE(path.empty());
    EXPECT_EQ(path.back().params.X, 19.0);
    EXPECT_LE(profile::residual_norm(path.back()), 1e-8);
}

TEST(Profile, JsonRoundTripIsExact) {
    const auto& w = reference_wave();
    const auto back = profile::from_json(profile::to_json(w));
    EXPECT_EQ(back.n(), w.n());
    EXPECT_EQ(back.params.c, w.params.c);
    EXPECT_EQ(back.params.X, w.params.X);
    for (Eigen::Index j = 0; j < w.tau.size(); ++j) ASSERT_EQ(back.tau[j], w.tau[j]);
    EXPECT_EQ(profile::to_json(back), profile::to_json(w));
}

TEST(Profile, AlphaFrameRoundTrip) {
    const auto& w = reference_wave();
    const auto a = profile::to_alpha_m2_frame(w);
    EXPECT_EQ(a.frame, Frame::alpha_m2);
    EXPECT_NEAR(a.params.X, w.params.X / (w.params.F * w.params.F), 1e-14);
    const auto back = profile::to_physical_frame(a);
    EXPECT_NEAR(back.params.c, w.params.c, 1e-13);
    EXPECT_LT((back.tau - w.tau).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT(profile::residual_norm(a) / std::max(1.0, spectral::derivative(a.tau, a.params.X, 2).cwiseAbs().maxCoeff()), 1e-9);
}

TEST(Profile, SlopeMarginStableUnderRefinement) {
    const auto& w = reference_wave();
    WaveProfile seed = w;
    seed.tau = spectral::resample(w.tau, 2 * w.n());
    seed.dtau = spectral::derivative(seed.tau, w.params.X);
    const auto fine = profile::solve_profile(w.params, seed);
    EXPECT_LT(std::abs(model::slope_margin(fine) - model::slope_margin(w)), 1e-6);
}

TEST(Profile, RejectsBadInput) {
    EXPECT_THROW(profile::solve_from_kdv(params(3.0, 0.1, 1.0, -1.0)), DomainError);
    WaveProfile bad = reference_wave();
    bad.tau[0] = -1.0;
    EXPECT_THROW(profile::solve_profile(bad.params, bad), DomainError);
}

// Period of h'' = 1/h - 1 at h_minus = 0.5 by quadrature of dh / sqrt(2 (mu - h + ln h)).
TEST(HamOrbit, PeriodAndTurningPoint) {
    const auto o = profile::ham_orbit(0.5, 256);
    EXPECT_NEAR(o.X_mu, 6.3847035731752482, 1e-10);
    EXPECT_NEAR(o.h_plus, 1.7564312086261697, 1e-12);
    EXPECT_NEAR(profile::ham_period(0.5), o.X_mu, 1e-14);
    EXPECT_THROW(profile::ham_orbit(1.5), DomainError);
}

TEST(HamOrbit, EnergyIsConserved) {
    for (double hm : {0.2, 0.5, 0.9}) {
        const auto o = profile::ham_orbit(hm, 512);
        for (Eigen::Index j = 0; j < o.h.size(); ++j) {
            const double mu = o.h[j] - std::log(o.h[j]) + 0.5 * o.dh[j] * o.dh[j];
            ASSERT_NEAR(mu, o.mu, 1e-10 * o.mu);
        }
    }
}

TEST(HamOrbit, SelectionFormsAgree) {
    for (double hm : {0.3, 0.6}) {
        const auto f = profile::ham_selection_forms(profile::ham_orbit(hm), 0.4);
        EXPECT_NEAR(f.form_ratio / f.c0_squared, 1.0, 1e-8);
        EXPECT_NEAR(f.form_third / f.c0_squared, 1.0, 1e-8);
        EXPECT_NEAR(f.form_h / f.c0_squared, 1.0, 1e-8);
        // The selected speed sits between the extremes of a^-3.
        EXPECT_GT(f.c0_squared, f.min_inv_a3);
        EXPECT_LT(f.c0_squared, f.max_inv_a3);
    }
}
