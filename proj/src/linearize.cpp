#include "rollwave/linearize.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/spectral.hpp"

#include <cmath>

namespace rollwave::linearize {

namespace {

using Eigen::VectorXd;

VectorXd cw(const VectorXd& a, const VectorXd& b) { return a.cwiseProduct(b); }
VectorXd pw(const VectorXd& a, double e) { return a.array().pow(e).matrix(); }
VectorXd constant(std::size_t m, double v) { return VectorXd::Constant(static_cast<Eigen::Index>(m), v); }

TwoField two_field_impl(const WaveProfile& profile, std::size_t m, EquationCoefficients eq) {
    const double X = profile.params.X;
    const double c = profile.params.c;
    const double nu = profile.params.nu;
    const double q = profile.params.q;
    const VectorXd t = spectral::resample(profile.tau, m);
    const VectorXd t1 = spectral::derivative(t, X, 1);
    const VectorXd t2 = spectral::derivative(t, X, 2);
    const VectorXd ubar = (q - eq.e * c * t.array()).matrix();
    if (ubar.minCoeff() <= 0.0) throw DomainError("background velocity must stay positive");
    const VectorXd inv3 = pw(t, -3.0);
    const VectorXd inner = (eq.p + 2.0 * c * nu * t1.array()).matrix();
    TwoField f;
    f.c = c;
    f.nu = nu;
    f.P = cw(inv3, inner);
    f.dP = (-3.0 * pw(t, -4.0).array() * t1.array() * inner.array() + 2.0 * c * nu * inv3.array() * t2.array()).matrix();
    f.Q = cw(ubar, ubar);
    f.S = (2.0 * eq.e * t.array() * ubar.array()).matrix();
    f.W = pw(t, -2.0);
    f.dW = (-2.0 * inv3.array() * t1.array()).matrix();
    return f;
}

Coefficients two_field_coefficients(const TwoField& f, std::size_t m) {
    const double c = f.c, nu = f.nu;
    Coefficients co;
    co.m = m;
    const VectorXd none;
    co.op = {
        {none, none, f.dP - f.Q, -f.S},
        {constant(m, c), constant(m, 1.0), f.P, (nu * f.dW.array() + c).matrix()},
        {none, none, none, nu * f.W},
    };
    const VectorXd invW = f.W.cwiseInverse();
    co.A0 = {none, none, -invW / c,
             none, none, invW,
             (f.Q - f.dP) / nu, f.S / nu, ((-c * invW.array() + f.P.array() * invW.array() / c) / nu).matrix()};
    co.A1 = {constant(m, 1.0 / c), none, none,
             none, none, none,
             -f.P / (c * nu), constant(m, 1.0 / nu), none};
    return co;
}

SpectralProblem two_field_problem(const WaveProfile& profile, EquationCoefficients eq, ProblemKind kind,
                                  std::string description) {
    profile.params.validate();
    if (!(profile.params.c > 0.0)) throw DomainError("wave speed must be positive");
    SpectralProblem sp;
    sp.kind = kind;
    sp.period = profile.params.X;
    sp.components = 2;
    sp.dim = 3;
    sp.native_grid = profile.n();
    sp.description = std::move(description);
    sp.sample = [profile, eq](std::size_t m) { return two_field_coefficients(two_field_impl(profile, m, eq), m); };
    return sp;
}

}  // namespace

const char* kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::physical: return "physical";
        case ProblemKind::alpha_m2_finite: return "alpha_m2_finiteF";
        case ProblemKind::alpha_m2_limit: return "alpha_m2_limit";
        case ProblemKind::ham_limit: return "ham_limit";
        case ProblemKind::kdvks: return "kdvks";
        case ProblemKind::constant: return "constant";
    }
    return "unknown";
}

TwoField two_field(const WaveProfile& profile, std::size_t m) {
    return two_field_impl(profile, m, profile.coefficients());
}

SpectralProblem bloch_coeffs(const WaveProfile& profile) {
    if (profile.frame != Frame::physical) throw DomainError("bloch_coeffs expects a physical-frame profile");
    return two_field_problem(profile, profile.coefficients(), ProblemKind::physical, "physical");
}

SpectralProblem evans_matrix(const WaveProfile& profile) { return bloch_coeffs(profile); }

SpectralProblem limit_matrices_alpha_m2(const WaveProfile& profile, double F) {
    if (profile.frame != Frame::alpha_m2) throw DomainError("expected an alpha_m2-frame profile");
    if (!(F > 0.0)) throw DomainError("F must be positive");
    const EquationCoefficients eq{1.0, std::isinf(F) ? 0.0 : 1.0 / F};
    const bool limit = std::isinf(F);
    return two_field_problem(profile, eq, limit ? ProblemKind::alpha_m2_limit : ProblemKind::alpha_m2_finite,
                             limit ? "alpha_m2_limit" : "alpha_m2_finiteF");
}

SpectralProblem ham_limit_operator(const HamOrbit& orbit) {
    if (orbit.h.size() == 0 || !(orbit.X_mu > 0.0)) throw DomainError("orbit has no samples");
    SpectralProblem sp;
    sp.kind = ProblemKind::ham_limit;
    sp.period = orbit.X_mu;
    sp.components = 1;
    sp.dim = 2;
    sp.native_grid = static_cast<std::size_t>(orbit.h.size());
    sp.description = "ham_limit";
    sp.identity_mass = false;
    const VectorXd h = orbit.h;
    sp.sample = [h](std::size_t m) {
        const VectorXd hm = spectral::resample(h, m);
        const VectorXd inv2 = pw(hm, -2.0);
        Coefficients co;
        co.m = m;
        const VectorXd none;
        co.op = {{inv2}, {none}, {constant(m, 1.0)}};
        co.mass = {{none}, {constant(m, 1.0)}};
        co.A0 = {none, constant(m, 1.0), -inv2, none};
        co.A1 = {none, none, none, constant(m, 1.0)};
        return co;
    };
    return sp;
}

SpectralProblem constant_problem(double tau0, const PhysicalParams& p, double period) {
    WaveProfile w;
    w.params = p;
    w.params.X = period;
    w.tau = VectorXd::Constant(8, tau0);
    w.dtau = VectorXd::Zero(8);
    SpectralProblem sp = two_field_problem(w, w.coefficients(), ProblemKind::constant, "constant");
    return sp;
}

std::array<cd, 2> constant_dispersion(double tau0, const PhysicalParams& p, double eta) {
    const double ubar = p.q - p.c * tau0;
    const double P = std::pow(tau0, -3.0) / (p.F * p.F);
    const double Q = ubar * ubar;
    const double S = 2.0 * tau0 * ubar;
    const double W = 1.0 / (tau0 * tau0);
    const cd i(0.0, 1.0);
    const cd a11 = i * eta * p.c, a12 = i * eta;
    const cd a21 = i * eta * P - Q, a22 = i * eta * p.c - S - p.nu * W * eta * eta;
    const cd half_tr = 0.5 * (a11 + a22);
    const cd det = a11 * a22 - a12 * a21;
    const cd root = std::sqrt(half_tr * half_tr - det);
    return {half_tr + root, half_tr - root};
}

Eigen::MatrixXcd first_order_matrix(const Coefficients& co, int dim, std::size_t j, cd lambda) {
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(dim, dim);
    for (int r = 0; r < dim; ++r) {
        for (int s = 0; s < dim; ++s) {
            const std::size_t e = static_cast<std::size_t>(r * dim + s);
            if (co.A0[e].size() > 0) A(r, s) += co.A0[e][static_cast<Eigen::Index>(j)];
            if (co.A1[e].size() > 0) A(r, s) += lambda * co.A1[e][static_cast<Eigen::Index>(j)];
        }
    }
    return A;
}

cd ham_check_to_Lambda(cd Lambda_check, double X_mu) { return X_mu * Lambda_check; }
cd Lambda_to_lambda(cd Lambda, double F) { return Lambda / std::sqrt(F); }

}  // namespace rollwave::linearize
