#include "rollwave/kdv_limit.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace rollwave::kdv {

namespace {

constexpr double pi = std::numbers::pi;

void check_modulus(double k) {
    if (!(k >= 0.0) || !(k < 1.0)) throw DomainError("elliptic modulus must lie in [0, 1)");
}

double agm(double a, double b) {
    for (int i = 0; i < 64 && std::abs(a - b) > 1e-16 * a; ++i) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return 0.5 * (a + b);
}

void check_pair(double k, double kc) {
    if (!(k >= 0.0) || !(k <= 1.0) || !(kc > 0.0) || !(kc <= 1.0))
        throw DomainError("elliptic modulus must lie in [0, 1)");
}

}  // namespace

double complementary_modulus(double k) { return std::sqrt((1.0 - k) * (1.0 + k)); }

double elliptic_K_c(double k, double kc) {
    check_pair(k, kc);
    return pi / (2.0 * agm(1.0, kc));
}

double elliptic_E_c(double k, double kc) {
    check_pair(k, kc);
    double a = 1.0, b = kc, c = k;
    double sum = 0.5 * c * c;
    double pow2 = 0.5;
    for (int i = 0; i < 64 && std::abs(c) > 1e-17; ++i) {
        c = 0.5 * (a - b);
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    return pi / (2.0 * a) * (1.0 - sum);
}

double elliptic_K(double k) { return elliptic_K_c(k, complementary_modulus(k)); }
double elliptic_E(double k) { return elliptic_E_c(k, complementary_modulus(k)); }

double jacobi_cn(double x, double k) {
    check_modulus(k);
    if (k == 0.0) return std::cos(x);
    double a[64], c[64];
    a[0] = 1.0;
    double b = complementary_modulus(k);
    c[0] = k;
    int n = 0;
    while (std::abs(c[n]) > 1e-16 && n < 62) {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = std::sqrt(a[n] * b);
        ++n;
    }
    double phi = std::ldexp(a[n] * x, n);
    for (int j = n; j > 0; --j) phi = 0.5 * (phi + std::asin(c[j] * std::sin(phi) / a[j]));
    return std::cos(phi);
}

double selection_kappa_c(double k, double kc) {
    check_pair(k, kc);
    if (!(k > 0.0)) throw DomainError("selection function requires k > 0");
    const double K = elliptic_K_c(k, kc);
    const double E = elliptic_E_c(k, kc);
    const double m = kc * kc;  // 1 - k^2
    // kappa^2 = int ((cn^2)')^2 / int ((cn^2)'')^2 over a period, in closed form.
    const double num = 2.0 * (1.0 - m + m * m) * E - m * (1.0 + m) * K;
    const double den = (2.0 - 3.0 * m - 3.0 * m * m + 2.0 * m * m * m) * E + (-m + 4.0 * m * m - m * m * m) * K;
    const double ratio = 0.35 * num / den;
    if (!(ratio > 0.0)) throw DomainError("selection radicand is not positive at k = " + std::to_string(k));
    return std::sqrt(ratio);
}

double selection_kappa(double k) { return selection_kappa_c(k, complementary_modulus(k)); }

double period_of_kc(double k, double kc) { return 2.0 * elliptic_K_c(k, kc) / selection_kappa_c(k, kc); }
double period_of_k(double k) { return period_of_kc(k, complementary_modulus(k)); }

double k_of_period(double X, double tol) {
    if (!(X > 2.0 * pi)) throw DomainError("no limiting wave with period <= 2 pi");
    const double k_mid = 0.5;
    if (X <= period_of_k(k_mid)) {
        double lo = 1e-4, hi = k_mid;
        if (X <= period_of_k(lo)) throw DomainError("period too close to 2 pi to resolve");
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double Xm = period_of_k(mid);
            if (std::abs(Xm - X) <= tol) return mid;
            (Xm < X ? lo : hi) = mid;
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) return mid;
        }
        return 0.5 * (lo + hi);
    }
    // k near 1: bisect on t = ln k' so that k' keeps full precision.
    double lo = std::log(complementary_modulus(k_mid)), hi = -80.0;  // X increases as t decreases
    auto X_of_t = [](double t) {
        const double kc = std::exp(t);
        const double k = std::sqrt(-std::expm1(2.0 * t));
        return period_of_kc(k, kc);
    };
    if (X >= X_of_t(hi)) throw DomainError("period beyond the resolvable range");
    double t = lo;
    for (int i = 0; i < 300; ++i) {
        t = 0.5 * (lo + hi);
        const double Xt = X_of_t(t);
        if (std::abs(Xt - X) <= tol) break;
        (Xt < X ? lo : hi) = t;
        if (std::abs(hi - lo) <= 1e-15 * std::abs(t)) break;
    }
    return std::sqrt(-std::expm1(2.0 * t));
}

CnoidalWave cnoidal_profile(double a0, double k, double kappa, std::size_t n) {
    check_modulus(k);
    if (!(k > 0.0)) throw DomainError("cnoidal wave requires k > 0");
    if (!(kappa > 0.0)) throw DomainError("cnoidal scale must be positive");
    CnoidalWave w;
    w.a0 = a0;
    w.k = k;
    w.kappa = kappa;
    const double k2 = k * k;
    w.sigma0 = a0 + 4.0 * kappa * kappa * (2.0 * k2 - 1.0);
    w.qtilde = 24.0 * k2 * (1.0 - k2) * std::pow(kappa, 4) - a0 * (0.5 * a0 + 4.0 * kappa * kappa * (2.0 * k2 - 1.0));
    w.X = 2.0 * elliptic_K(k) / kappa;
    w.T0.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double theta = w.X * static_cast<double>(j) / static_cast<double>(n);
        const double cn = jacobi_cn(kappa * theta, k);
        w.T0[static_cast<Eigen::Index>(j)] = a0 + 12.0 * k2 * kappa * kappa * cn * cn;
    }
    return w;
}

CnoidalWave selected_cnoidal(double a0, double k, std::size_t n) {
    return cnoidal_profile(a0, k, selection_kappa(k), n);
}

double selection_residual(const CnoidalWave& w) {
    const Eigen::VectorXd d2 = spectral::derivative(w.T0, w.X, 2);
    const Eigen::VectorXd d4 = spectral::derivative(w.T0, w.X, 4);
    return w.X * (w.T0.array() * (d2 + d4).array()).mean();
}

Eigen::VectorXd corrector_T1(const CnoidalWave& w, double solvability_tol) {
    const std::size_t n = w.T0.size();
    const Eigen::VectorXd d1 = spectral::derivative(w.T0, w.X, 1);
    const Eigen::VectorXd d3 = spectral::derivative(w.T0, w.X, 3);
    const Eigen::VectorXd g = -(d1 + d3);
    const double proj = g.dot(d1) / (g.norm() * d1.norm());
    if (std::abs(proj) > solvability_tol)
        throw NumericalError("corrector right-hand side is not orthogonal to the kernel (" + std::to_string(proj) + ")");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = spectral::diff_matrix(n, w.X, 2);
    for (std::size_t i = 0; i < n; ++i) J(i, i) += w.T0[i] - w.sigma0;
    J.block(0, n, n, 1) = d1;
    J.block(n, 0, 1, n) = d1.transpose();
    Eigen::VectorXd rhs(n + 1);
    rhs << g, 0.0;
    const Eigen::VectorXd sol = J.partialPivLu().solve(rhs);
    return sol.head(n);
}

double corrector_residual(const CnoidalWave& w, const Eigen::VectorXd& T1) {
    const Eigen::VectorXd lhs = -spectral::derivative(T1, w.X, 3) -
                                spectral::derivative(((w.T0.array() - w.sigma0) * T1.array()).matrix(), w.X, 1);
    const Eigen::VectorXd rhs = spectral::derivative(w.T0, w.X, 2) + spectral::derivative(w.T0, w.X, 4);
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

double asymptotic_q(double delta, double a0, double k, double tau0) {
    const CnoidalWave w = selected_cnoidal(a0, k, 8);
    const double d2 = delta * delta;
    return (1.5 + d2 * 0.25 * w.sigma0) / std::sqrt(tau0);
}

double asymptotic_tau0(double delta, double a0, double k, double q) {
    if (!(q > 0.0)) throw DomainError("q must be positive");
    const double r = asymptotic_q(delta, a0, k, 1.0) / q;
    return r * r;
}

AsymptoticWave asymptotic_rollwave(double delta, double a0, double k, double tau0, double nu, std::size_t n) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (!(tau0 > 0.0) || !(nu > 0.0)) throw DomainError("tau0 and nu must be positive");
    AsymptoticWave out;
    out.delta = delta;
    out.tau0 = tau0;
    out.cnoidal = selected_cnoidal(a0, k, n);
    const CnoidalWave& w = out.cnoidal;
    const Eigen::VectorXd T1 = corrector_T1(w);
    out.delta_tilde = delta / (2.0 * std::pow(tau0, 0.25) * std::sqrt(nu));
    const double d2 = delta * delta;
    const Eigen::VectorXd ttilde = -(w.T0 + out.delta_tilde * T1);

    WaveProfile& p = out.profile;
    p.params.F = 2.0 + d2;
    p.params.nu = nu;
    p.params.X = std::sqrt(nu) * w.X / (std::pow(tau0, 1.25) * delta);
    p.params.c = 0.5 * std::pow(tau0, -1.5) + d2 * w.sigma0 / (4.0 * std::pow(tau0, 1.5));
    p.params.q = asymptotic_q(delta, a0, k, tau0);
    p.params.tau0 = tau0;
    p.tau = (tau0 + d2 * tau0 / 3.0 * ttilde.array()).matrix();
    p.dtau = spectral::derivative(p.tau, p.params.X, 1);
    p.residual_norm = std::numeric_limits<double>::quiet_NaN();
    p.provenance = "asymptotic";
    return out;
}

KdvKsWave kdvks_profile(double delta, double a0, double k, std::size_t n) {
    const CnoidalWave w = selected_cnoidal(a0, k, n);
    const Eigen::VectorXd T1 = corrector_T1(w);
    KdvKsWave out;
    out.delta = delta;
    out.X = w.X;
    out.sigma = w.sigma0;
    const Eigen::VectorXd seed = w.T0 + delta * T1;
    const Eigen::VectorXd dseed = spectral::derivative(seed, w.X, 1);
    const double target_mean = seed.mean();
    const Eigen::MatrixXd D1 = spectral::diff_matrix(n, w.X, 1);
    const Eigen::MatrixXd D2 = spectral::diff_matrix(n, w.X, 2);
    const Eigen::MatrixXd D3 = D1 * D2;
    Eigen::VectorXd v = seed;
    double sigma = w.sigma0;
    double C = w.qtilde;
    const double scale = std::max(1.0, seed.cwiseAbs().maxCoeff());
    auto residual = [&](const Eigen::VectorXd& vv, double s, double cc) {
        Eigen::VectorXd r(n + 2);
        r.head(n) = D2 * vv + (0.5 * vv.array().square() - s * vv.array()).matrix() + delta * (D1 * vv + D3 * vv) -
                    Eigen::VectorXd::Constant(n, cc);
        r[n] = vv.mean() - target_mean;
        r[n + 1] = (vv - seed).dot(dseed) / static_cast<double>(n);
        return r;
    };
    Eigen::VectorXd r = residual(v, sigma, C);
    for (int it = 0; it < 30 && r.cwiseAbs().maxCoeff() > 1e-11 * scale; ++it) {
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 2, n + 2);
        J.topLeftCorner(n, n) = D2 + delta * (D1 + D3);
        for (std::size_t i = 0; i < n; ++i) J(i, i) += v[i] - sigma;
        J.block(0, n, n, 1) = -v;
        J.block(0, n + 1, n, 1) = -Eigen::VectorXd::Ones(n);
        J.block(n, 0, 1, n) = Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
        J.block(n + 1, 0, 1, n) = dseed.transpose() / static_cast<double>(n);
        const Eigen::VectorXd step = J.partialPivLu().solve(-r);
        v += step.head(n);
        sigma += step[n];
        C += step[n + 1];
        r = residual(v, sigma, C);
    }
    out.v = v;
    out.sigma = sigma;
    out.residual = r.cwiseAbs().maxCoeff();
    if (!(out.residual <= 1e-8 * scale)) throw NonConvergence("KdV-KS profile refinement failed", out.residual);
    return out;
}

linearize::SpectralProblem kdvks_problem(const Eigen::VectorXd& T, double sigma, double delta, double X) {
    linearize::SpectralProblem sp;
    sp.kind = linearize::ProblemKind::kdvks;
    sp.period = X;
    sp.components = 1;
    sp.dim = delta > 0.0 ? 4 : 3;
    sp.native_grid = static_cast<std::size_t>(T.size());
    sp.description = "kdvks";
    sp.sample = [T, sigma, delta, X](std::size_t m) {
        const Eigen::VectorXd t = spectral::resample(T, m);
        const Eigen::VectorXd dt = spectral::derivative(t, X, 1);
        const Eigen::VectorXd ts = (t.array() - sigma).matrix();
        const auto cst = [m](double v) { return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), v); };
        const Eigen::VectorXd none;
        linearize::Coefficients co;
        co.m = m;
        co.op = {{-dt}, {-ts}, {delta != 0.0 ? cst(-delta) : none}, {cst(-1.0)}};
        if (delta != 0.0) co.op.push_back({cst(-delta)});
        if (delta != 0.0) {
            co.A0 = {none, cst(1.0), none, none,
                     none, none, cst(1.0), none,
                     none, none, none, cst(1.0),
                     -dt / delta, -ts / delta, cst(-1.0), cst(-1.0 / delta)};
            co.A1 = {none, none, none, none, none, none, none, none, none, none, none, none,
                     cst(-1.0 / delta), none, none, none};
        } else {
            co.A0 = {none, cst(1.0), none, none, none, cst(1.0), -dt, -ts, none};
            co.A1 = {none, none, none, none, none, none, cst(-1.0), none, none};
        }
        return co;
    };
    return sp;
}

hill::SpectralCloud kdvks_hill_spectrum(double delta, double a0, double k, int modes, const std::vector<double>& xi_grid,
                                        const KdvKsSpectrumOptions& opt) {
    if (!(delta >= 0.0)) throw DomainError("delta must be non-negative");
    Eigen::VectorXd T;
    double sigma = 0.0, X = 0.0;
    if (opt.refine_profile && delta > 0.0) {
        const KdvKsWave w = kdvks_profile(delta, a0, k, opt.n);
        T = w.v;
        sigma = w.sigma;
        X = w.X;
    } else {
        const CnoidalWave w = selected_cnoidal(a0, k, opt.n);
        T = delta > 0.0 ? Eigen::VectorXd(w.T0 + delta * corrector_T1(w)) : w.T0;
        sigma = w.sigma0;
        X = w.X;
    }
    hill::SpectrumOptions so;
    so.threads = opt.threads;
    return hill::spectrum(kdvks_problem(T, sigma, delta, X), modes, xi_grid, so);
}

}  // namespace rollwave::kdv
