#include "rollwave/errors.hpp"
#include "rollwave/hill.hpp"
#include "rollwave/linearize.hpp"
#include "rollwave/model.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rollwave;
using cd = std::complex<double>;

namespace {

PhysicalParams constant_params(double tau0) {
    PhysicalParams p;
    p.F = 3.0;
    p.nu = 0.1;
    p.c = model::reference_speed(tau0) + 0.05;
    p.q = model::equilibrium_q(tau0, p.c);
    p.X = 5.0;
    return p;
}

double nearest(const std::vector<cd>& set, cd z) {
    double best = INFINITY;
    for (auto s : set) best = std::min(best, std::abs(s - z));
    return best;
}

}  // namespace

TEST(Spectral, DerivativeOfTrigPolynomial) {
    const std::size_t n = 32;
    const double X = 3.0;
    Eigen::VectorXd f(n), df(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = X * j / n;
        f[j] = std::sin(2 * M_PI * x / X) + 0.5 * std::cos(6 * M_PI * x / X);
        df[j] = (2 * M_PI / X) * std::cos(2 * M_PI * x / X) - 0.5 * (6 * M_PI / X) * std::sin(6 * M_PI * x / X);
    }
    EXPECT_LT((spectral::derivative(f, X) - df).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((spectral::diff_matrix(n, X, 1) * f - df).cwiseAbs().maxCoeff(), 1e-12);
    const auto up = spectral::resample(f, 64);
    EXPECT_NEAR(up[2], f[1], 1e-14);
    EXPECT_NEAR(spectral::mean(f), 0.0, 1e-15);
}

TEST(Spectral, InterpolantGroup) {
    const std::size_t n = 16;
    Eigen::VectorXd f(n);
    for (std::size_t j = 0; j < n; ++j) f[j] = std::cos(2 * M_PI * j / n);
    spectral::InterpolantGroup g({f}, 1.0);
    EXPECT_NEAR(g(0.3)[0], std::cos(2 * M_PI * 0.3), 1e-14);
}

TEST(Linearize, ConstantDispersionMatchesHill) {
    const double tau0 = 1.3;
    const auto p = constant_params(tau0);
    const auto problem = linearize::constant_problem(tau0, p, p.X);
    const double xi = 0.21;
    const auto cloud = hill::spectrum(problem, 21, {xi});
    std::vector<cd> oracle;
    for (int j = -10; j <= 10; ++j)
        for (auto r : linearize::constant_dispersion(tau0, p, xi + 2 * M_PI * j / p.X)) oracle.push_back(r);
    for (auto l : cloud.spectra[0].eigenvalues) EXPECT_LT(nearest(oracle, l), 1e-10 * std::max(1.0, std::abs(l)));
}

TEST(Hill, XiGrid) {
    const auto g = hill::xi_grid(2.0, 4);
    ASSERT_EQ(g.size(), 4u);
    EXPECT_NEAR(g.front(), -M_PI / 2.0, 1e-15);
    EXPECT_NEAR(g[1] - g[0], M_PI / 4.0, 1e-15);
    const auto d = hill::xi_grid(2.0, 4, hill::Convention::doubled);
    EXPECT_NEAR(d.front(), -M_PI / 4.0, 1e-15);
}

TEST(Hill, CountAndCsv) {
    const double tau0 = 1.1;
    const auto p = constant_params(tau0);
    const auto problem = linearize::constant_problem(tau0, p, p.X);
    const auto cloud = hill::spectrum(problem, 11, hill::xi_grid(p.X, 3));
    ASSERT_EQ(cloud.spectra.size(), 3u);
    EXPECT_EQ(cloud.spectra[0].eigenvalues.size(), 22u);
    const auto csv = hill::to_csv(cloud);
    EXPECT_EQ(csv.rfind("xi,re,im\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 22);
}

class HillProfile : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        PhysicalParams p;
        p.F = std::sqrt(6.0);
        p.nu = 0.1;
        p.q = 1.5745;
        p.X = 17.15;
        wave = new WaveProfile(profile::solve_from_kdv(p));
    }
    static void TearDownTestSuite() { delete wave; }
    static WaveProfile* wave;
};
WaveProfile* HillProfile::wave = nullptr;

TEST_F(HillProfile, ConjugationSymmetry) {
    const auto problem = linearize::bloch_coeffs(*wave);
    for (double xi : {0.05, 0.13}) {
        const auto a = hill::spectrum(problem, 41, {xi}).spectra[0].eigenvalues;
        const auto b = hill::spectrum(problem, 41, {-xi}).spectra[0].eigenvalues;
        std::vector<cd> cb;
        for (auto z : b) cb.push_back(std::conj(z));
        for (auto z : a) EXPECT_LT(nearest(cb, z), 1e-10 * std::max(1.0, std::abs(z)));
    }
}

TEST_F(HillProfile, PeriodicInXiUpToTruncation) {
    // xi and xi + 2 pi / X give the same operator; low modes agree.
    const auto problem = linearize::bloch_coeffs(*wave);
    const double xi = 0.1, shift = 2 * M_PI / wave->params.X;
    const auto a = hill::spectrum(problem, 101, {xi}).spectra[0].eigenvalues;
    const auto b = hill::spectrum(problem, 101, {xi + shift}).spectra[0].eigenvalues;
    for (auto z : a)
        if (std::abs(z) < 0.5) EXPECT_LT(nearest(b, z), 1e-8);
}

TEST_F(HillProfile, ZeroIsAnEigenvalueAtXiZero) {
    const auto cloud = hill::spectrum(linearize::bloch_coeffs(*wave), 61, {0.0});
    EXPECT_LT(nearest(cloud.spectra[0].eigenvalues, 0.0), 1e-8);
}

TEST_F(HillProfile, StableWaveHasNoUnstableSpectrum) {
    const auto cloud = hill::spectrum(linearize::bloch_coeffs(*wave), 101, hill::xi_grid(wave->params.X, 21));
    const auto w = hill::max_unstable(cloud, 1e-3);
    ASSERT_TRUE(w.has_value());
    EXPECT_LT(w->max_re, 1e-8);
}
