// Acceptance checks; one PASS/FAIL line per criterion.
//
//   acceptance            criteria 1-7 and 9
//   acceptance 4 5        selected criteria
//   acceptance --all      everything, including the slow boundary check (8)

#include "rollwave/errors.hpp"
#include "rollwave/evans.hpp"
#include "rollwave/hill.hpp"
#include "rollwave/kdv_limit.hpp"
#include "rollwave/linearize.hpp"
#include "rollwave/model.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace rollwave;
using cd = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (ok ? "" : "FAILED ") << what << "; ";
    }
};

std::string fmt(double v, int digits = 6) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*g", digits, v);
    return b;
}

// ---------------------------------------------------------------- 1

void kdv_period_anchors(Outcome& o) {
    const double a = kdv::period_of_k(0.199910210210210);
    const double b = kdv::period_of_k(0.9421);
    const double c = kdv::period_of_k(0.99999838520);
    const double d = kdv::period_of_k(0.999999999997);
    o.require(std::abs(a - 6.284) <= 0.01, "X(0.19991) = " + fmt(a) + " vs 6.284 +- 0.01");
    o.require(b >= 8.33 && b <= 8.55, "X(0.9421) = " + fmt(b) + " in [8.33, 8.55]");
    o.require(std::abs(c - 26.057) <= 0.03, "X(0.9999983852) = " + fmt(c) + " vs 26.057 +- 0.03");
    o.require(std::abs(d - 48.3) <= 0.5, "X(0.999999999997) = " + fmt(d) + " vs 48.3 +- 0.5");
}

// ---------------------------------------------------------------- 2

constexpr double kdvks_delta = 0.05;
constexpr int kdvks_modes = 161;
constexpr int kdvks_xi = 41;
constexpr double kdvks_r0 = 1e-6;
constexpr double kdvks_re_tol = 1e-6;

bool kdvks_unstable(double X, double* max_re = nullptr) {
    const auto cloud = kdv::kdvks_hill_spectrum(kdvks_delta, 0.0, kdv::k_of_period(X), kdvks_modes,
                                                hill::xi_grid(X, kdvks_xi));
    const auto w = hill::max_unstable(cloud, kdvks_r0);
    const double m = w ? w->max_re : -std::numeric_limits<double>::infinity();
    if (max_re) *max_re = m;
    return m > kdvks_re_tol;
}

double kdvks_edge(double a, double b) {
    const bool ua = kdvks_unstable(a);
    if (kdvks_unstable(b) == ua) throw NotBracketed("band edge not bracketed");
    while (std::max(a, b) / std::min(a, b) > 1.001) {
        const double m = std::sqrt(a * b);
        (kdvks_unstable(m) == ua ? a : b) = m;
    }
    return std::sqrt(a * b);
}

void kdvks_band(Outcome& o) {
    for (double X : {10.0, 17.0, 24.0}) {
        double m = 0.0;
        const bool u = kdvks_unstable(X, &m);
        o.require(!u, "X = " + fmt(X) + " stable (max Re " + fmt(m, 3) + ")");
    }
    for (double X : {7.0, 30.0}) {
        double m = 0.0;
        const bool u = kdvks_unstable(X, &m);
        o.require(u, "X = " + fmt(X) + " unstable (max Re " + fmt(m, 3) + ")");
    }
    const double lo = kdvks_edge(7.0, 10.0);
    const double hi = kdvks_edge(24.0, 30.0);
    o.require(std::abs(lo / 8.44 - 1.0) <= 0.05, "lower edge " + fmt(lo, 5) + " vs 8.44 within 5%");
    o.require(std::abs(hi / 26.1 - 1.0) <= 0.05, "upper edge " + fmt(hi, 5) + " vs 26.1 within 5%");
}

// ---------------------------------------------------------------- 3

WaveProfile physical_wave(double F, double nu, double q, double X, std::size_t n = 256) {
    PhysicalParams p;
    p.F = F;
    p.nu = nu;
    p.q = q;
    p.X = X;
    profile::KdvHomotopyOptions h;
    h.n = n;
    return profile::solve_from_kdv(p, h);
}

void profile_regression(Outcome& o) {
    const auto start = physical_wave(std::sqrt(6.0), 0.1, 1.5745, 17.15);
    profile::SolveOptions so;
    so.tol = 1e-10;
    const auto w = profile::solve_profile(start.params, start, so);
    const double res = profile::residual_norm(w);
    o.require(res <= 1e-8, "residual " + fmt(res, 3) + " <= 1e-8");
    o.require(w.amplitude() >= 0.1, "amplitude " + fmt(w.amplitude(), 4) + " >= 0.1");
    o.detail << "c = " << fmt(w.params.c, 10) << ", n = " << w.n() << "; ";
}

// ---------------------------------------------------------------- 4

// Roots of mu^2 + (S + nu W eta^2) mu + P eta^2 + i Q eta = 0, lambda = mu + i c eta, for
// the constant state tau0 of the two-field linearization written out from the PDE.
std::vector<cd> constant_roots(double tau0, const PhysicalParams& p, double eta) {
    const double u0 = 1.0 / std::sqrt(tau0);
    const double P = 1.0 / (p.F * p.F * tau0 * tau0 * tau0);
    const double Q = u0 * u0;
    const double S = 2.0 * tau0 * u0;
    const double W = 1.0 / (tau0 * tau0);
    const cd b = S + p.nu * W * eta * eta;
    const cd c0 = P * eta * eta + cd(0.0, Q * eta);
    const cd disc = std::sqrt(b * b - 4.0 * c0);
    const cd shift(0.0, p.c * eta);
    return {(-b + disc) / 2.0 + shift, (-b - disc) / 2.0 + shift};
}

double nearest(const std::vector<cd>& set, cd z) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : set) best = std::min(best, std::abs(s - z));
    return best;
}

void constant_state_oracle(Outcome& o) {
    const double tau0 = 1.3, X = 5.0;
    PhysicalParams p;
    p.F = 3.0;
    p.nu = 0.1;
    p.c = model::reference_speed(tau0) + 0.05;
    p.q = model::equilibrium_q(tau0, p.c);
    p.X = X;
    const auto problem = linearize::constant_problem(tau0, p, X);
    const int modes = 41, N = 20;
    double hill_err = 0.0;
    for (double xi : {-0.4, 0.0, 0.17, 0.5}) {
        std::vector<cd> oracle;
        for (int j = -N; j <= N; ++j)
            for (auto r : constant_roots(tau0, p, xi + 2.0 * pi * j / X)) oracle.push_back(r);
        const auto cloud = hill::spectrum(problem, modes, {xi});
        for (auto l : cloud.spectra[0].eigenvalues)
            hill_err = std::max(hill_err, nearest(oracle, l) / std::max(1.0, std::abs(l)));
        o.require(cloud.spectra[0].eigenvalues.size() == oracle.size(), "Hill count at xi = " + fmt(xi));
    }
    o.require(hill_err <= 1e-10, "Hill vs dispersion " + fmt(hill_err, 3) + " <= 1e-10");

    double evans_err = 0.0;
    int polished = 0;
    evans::PolishOptions po;
    po.tol = 1e-12;
    po.integration.tol = 1e-12;
    for (double xi : {0.3, -0.7}) {
        for (int j = -1; j <= 1; ++j) {
            for (auto r : constant_roots(tau0, p, xi + 2.0 * pi * j / X)) {
                if (std::abs(r) > 3.0) continue;
                const cd start = r * cd(1.0 + 2e-3, 1e-3) + cd(1e-3, -1e-3);
                const auto root = evans::polish_root(problem, start, xi, po);
                evans_err = std::max(evans_err, std::abs(root.lambda - r));
                ++polished;
            }
        }
    }
    o.require(polished >= 4, std::to_string(polished) + " Evans roots polished");
    o.require(evans_err <= 1e-8, "Evans vs dispersion " + fmt(evans_err, 3) + " <= 1e-8");
}

// ---------------------------------------------------------------- 5

double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void cross_method(Outcome& o) {
    for (double X : {7.83, 8.78}) {
        const auto w = physical_wave(6.0, 0.1, 2.4, X);
        const auto problem = evans::problem_for(w);
        evans::PolishOptions po;
        double worst = 0.0;
        int count = 0;
        for (double xi : {0.0, 0.1, -0.25, pi / X}) {
            const auto cloud = hill::spectrum(problem, 101, {xi});
            for (auto l : cloud.spectra[0].eigenvalues) {
                const double a = std::abs(l);
                if (a < 1e-2 || a > 1.0) continue;
                const auto r = evans::polish_root(problem, l, xi, po);
                worst = std::max(worst, std::abs(r.lambda - l));
                ++count;
            }
        }
        o.require(count > 0 && worst <= 1e-4, "X = " + fmt(X) + ": " + std::to_string(count) +
                                                  " Hill eigenvalues, max distance to Evans root " + fmt(worst, 3));

        const auto e = evans::origin_taylor(problem);
        for (int j = 0; j < 2; ++j) {
            std::vector<double> lx, le;
            for (int k = 0; k < 5; ++k) {
                const double xi = 0.02 / std::pow(2.0, k);
                const cd pred = evans::taylor_roots(e, xi)[j];
                const auto r = evans::polish_root(problem, pred, xi, po);
                lx.push_back(std::log(xi));
                le.push_back(std::log(std::max(std::abs(r.lambda - pred), 1e-300)));
            }
            const double s = slope_fit(lx, le);
            o.require(s >= 1.9, "X = " + fmt(X) + ": root " + std::to_string(j) + " error exponent " + fmt(s, 3));
        }
    }
}

// ---------------------------------------------------------------- 6

void semicircle_windings(Outcome& o) {
    const double X = 50.0;
    const auto w = physical_wave(10.0, 0.1, 4.0, X);
    const auto problem = evans::problem_for(w);
    std::vector<double> xs;
    for (int i = 0; i < 21; ++i) xs.push_back(-pi / X + i * (pi / X - pi / (10.0 * X)) / 20.0);
    for (int i = 20; i >= 0; --i) xs.push_back(-xs[i]);
    evans::ContourOptions opt;
    opt.rel_jump = 0.2;
    const auto reports = evans::winding_numbers(problem, evans::parse_contour("semicircle:R=0.2"), xs, opt);
    int nonzero = 0;
    std::size_t max_points = 0;
    double max_jump = 0.0;
    for (const auto& r : reports) {
        nonzero += r.winding != 0;
        max_points = std::max(max_points, r.lambda.size());
        max_jump = std::max(max_jump, r.max_rel_jump);
    }
    o.require(reports.size() == 42 && nonzero == 0,
              std::to_string(nonzero) + " of " + std::to_string(reports.size()) + " windings nonzero");
    o.require(max_jump <= 0.2, "max relative jump " + fmt(max_jump, 3));
    o.require(max_points <= 3 * 277 && max_points * 3 >= 277,
              "max points per xi " + std::to_string(max_points) + " within 3x of 277");
}

// ---------------------------------------------------------------- 7

void infinite_froude(Outcome& o) {
    const auto a = profile::limit_profile_from_physical(0.4, 0.3, 0.1, 10.0);
    const auto problem = linearize::limit_matrices_alpha_m2(a, std::numeric_limits<double>::infinity());
    std::vector<double> m;
    for (int modes : {81, 161}) {
        const auto w = hill::max_unstable(hill::spectrum(problem, modes, hill::xi_grid(problem.period, 21)), 1e-3);
        m.push_back(w ? w->max_re : -1.0);
    }
    o.require(m[0] > 0.0 && m[1] > 0.0 && std::abs(m[1] - m[0]) <= 1e-2 * m[1],
              "limit wave max Re lambda " + fmt(m[0], 5) + " (81 modes), " + fmt(m[1], 5) + " (161 modes)");
    for (double hm : {0.3, 0.5, 0.7}) {
        const auto orbit = profile::ham_orbit(hm);
        const auto hp = linearize::ham_limit_operator(orbit);
        std::vector<double> r;
        for (int modes : {41, 81}) {
            const auto w = hill::max_unstable(hill::spectrum(hp, modes, hill::xi_grid(orbit.X_mu, 21)), 1e-3);
            r.push_back(w ? w->max_re : -1.0);
        }
        o.require(r[0] > 0.0 && r[1] > 0.0 && std::abs(r[1] - r[0]) <= 1e-2 * r[1],
                  "h- = " + fmt(hm) + ": max Re " + fmt(r[0], 5) + ", " + fmt(r[1], 5));
    }
}

// ---------------------------------------------------------------- 8

void boundary_powerlaw(Outcome& o) {
    const sweep::QRule q = sweep::QRule::scaling(-2.0, 0.4);
    std::vector<double> lf, lx;
    for (double F : {4.0, 5.0, 6.0}) {
        const double lower_fit = std::exp(-2.97) * std::pow(F, 2.83);
        const double upper_fit = std::exp(0.087) * std::pow(F, 1.88);
        const double hopf = profile::hopf_data(model::hopf_tau0(q(F), F), F, 0.1).period;
        const auto r = sweep::boundary_bisect(-2.0, F, 0.1, q, std::max(1.02 * hopf, 0.7 * lower_fit),
                                              std::sqrt(lower_fit * upper_fit), sweep::Which::lower);
        o.require(std::abs(r.X / lower_fit - 1.0) <= 0.15,
                  "F = " + fmt(F) + ": lower boundary " + fmt(r.X, 5) + " vs " + fmt(lower_fit, 5) + " within 15%");
        lf.push_back(std::log(F));
        lx.push_back(std::log(r.X));
    }
    const double s = slope_fit(lf, lx);
    o.require(std::abs(s / 2.83 - 1.0) <= 0.15, "fitted exponent " + fmt(s, 4) + " vs 2.83 within 15%");
}

// ---------------------------------------------------------------- 9

double conjugation_error(const linearize::SpectralProblem& problem, int modes, double xi) {
    const auto a = hill::spectrum(problem, modes, {xi}).spectra[0].eigenvalues;
    const auto b = hill::spectrum(problem, modes, {-xi}).spectra[0].eigenvalues;
    std::vector<cd> conj_b;
    for (auto z : b) conj_b.push_back(std::conj(z));
    double err = a.size() == b.size() ? 0.0 : std::numeric_limits<double>::infinity();
    for (auto z : a) err = std::max(err, nearest(conj_b, z) / std::max(1.0, std::abs(z)));
    return err;
}

void properties(Outcome& o) {
    const auto w1 = physical_wave(std::sqrt(6.0), 0.1, 1.5745, 17.15);
    const auto w2 = physical_wave(6.0, 0.1, 2.4, 8.78);
    const auto orbit = profile::ham_orbit(0.5);
    const auto kdvks = kdv::kdvks_profile(0.05, 0.0, kdv::k_of_period(17.0), 256);
    std::vector<linearize::SpectralProblem> problems = {
        evans::problem_for(w1), evans::problem_for(w2),
        linearize::limit_matrices_alpha_m2(profile::to_alpha_m2_frame(w2), 6.0),
        linearize::ham_limit_operator(orbit),
        kdv::kdvks_problem(kdvks.v, kdvks.sigma, 0.05, kdvks.X)};

    double conj = 0.0;
    for (const auto& p : problems)
        for (double f : {0.13, 0.41, 0.87}) conj = std::max(conj, conjugation_error(p, 61, f * pi / p.period));
    o.require(conj <= 1e-10, "conjugation symmetry " + fmt(conj, 3));

    double liou = 0.0;
    int monodromies = 0;
    for (const auto& p : problems) {
        if (p.dim == 0) continue;
        for (cd l : {cd(0.0, 0.0), cd(0.05, 0.3), cd(-0.2, -0.1), cd(0.5, 0.5)}) {
            const auto m = evans::monodromy(p, l);
            liou = std::max(liou, m.liouville_error);
            ++monodromies;
        }
    }
    o.require(liou <= 1e-8, "Liouville over " + std::to_string(monodromies) + " monodromies " + fmt(liou, 3));

    for (const auto* w : {&w1, &w2}) {
        const auto e = evans::origin_taylor(evans::problem_for(*w));
        const double lead =
            std::max({std::abs(e.c[0][0]), std::abs(e.c[1][0]), std::abs(e.c[0][1])}) / std::abs(e.c[2][0]);
        o.require(e.winding_at_R == 2 && lead <= 1e-6, "double root at origin for X = " + fmt(w->params.X) +
                                                           " (winding " + std::to_string(e.winding_at_R) +
                                                           ", lead/c20 " + fmt(lead, 3) + ")");
    }

    double energy = 0.0;
    for (double hm : {0.3, 0.5, 0.7}) {
        const auto ob = profile::ham_orbit(hm);
        for (Eigen::Index j = 0; j < ob.h.size(); ++j) {
            const double mu = ob.h[j] - std::log(ob.h[j]) + 0.5 * ob.dh[j] * ob.dh[j];
            energy = std::max(energy, std::abs(mu - ob.mu) / ob.mu);
        }
    }
    o.require(energy <= 1e-10, "orbit energy drift " + fmt(energy, 3));

    double forms = 0.0;
    for (double hm : {0.3, 0.5, 0.7}) {
        const auto f = profile::ham_selection_forms(profile::ham_orbit(hm));
        for (double v : {f.form_ratio, f.form_third, f.form_h})
            forms = std::max(forms, std::abs(v / f.c0_squared - 1.0));
    }
    o.require(forms <= 1e-8, "c0^2 forms relative spread " + fmt(forms, 3));

    for (double F : {3.0, 3.4, 3.6, 4.0}) {
        const double X = std::sqrt(std::exp(-2.97) * std::pow(F, 2.83) * std::exp(0.087) * std::pow(F, 1.88));
        const double m = model::slope_margin(physical_wave(F, 0.1, 0.4 * F, X));
        o.require(F < 3.5 ? m > 0.0 : m < 0.0, "slope margin at F = " + fmt(F) + ": " + fmt(m, 3));
    }
}

struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
    bool slow = false;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "kdv period anchors", kdv_period_anchors},
        {2, "kdv-ks stability band", kdvks_band},
        {3, "profile regression", profile_regression},
        {4, "constant state oracle", constant_state_oracle},
        {5, "hill/evans/taylor agreement", cross_method},
        {6, "semicircle winding, 42 xi", semicircle_windings},
        {7, "infinite froude instability", infinite_froude},
        {8, "lower boundary power law", boundary_powerlaw, true},
        {9, "property suites", properties},
    };
    std::vector<int> selected;
    bool include_slow = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--all")
            include_slow = true;
        else
            selected.push_back(std::atoi(a.c_str()));
    }
    int failures = 0;
    for (const auto& c : all) {
        const bool chosen = selected.empty() ? (!c.slow || include_slow)
                                             : std::find(selected.begin(), selected.end(), c.id) != selected.end();
        if (!chosen) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s, o.detail.str().c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
