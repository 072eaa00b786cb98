#include "rollwave/profile.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/kdv_limit.hpp"
#include "rollwave/spectral.hpp"

#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <array>
#include <vector>

namespace rollwave::profile {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Operators {
    std::size_t n = 0;
    double X = 0.0;
    MatrixXd D1, D2;
};

const Operators& operators(std::size_t n, double X) {
    thread_local Operators ops;
    if (ops.n != n || ops.X != X) {
        ops.n = n;
        ops.X = X;
        ops.D1 = spectral::diff_matrix(n, X, 1);
        ops.D2 = spectral::diff_matrix(n, X, 2);
    }
    return ops;
}

struct Pieces {
    VectorXd t1, t2, u, B, rho;
};

Pieces evaluate(const VectorXd& tau, const Operators& ops, double c, double q, double nu, EquationCoefficients eq) {
    Pieces pc;
    pc.t1 = ops.D1 * tau;
    pc.t2 = ops.D2 * tau;
    const auto t = tau.array();
    pc.u = (q - eq.e * c * t).matrix();
    const auto inv3 = t.pow(-3.0);
    pc.B = (c * c * pc.t1.array() - eq.p * pc.t1.array() * inv3 - 1.0 + t * pc.u.array().square() -
            2.0 * c * nu * pc.t1.array().square() * inv3)
               .matrix();
    pc.rho = (pc.t2.array() + t.square() * pc.B.array() / (c * nu)).matrix();
    return pc;
}

double scale_of(const Pieces& pc) { return std::max(1.0, pc.t2.cwiseAbs().maxCoeff()); }

WaveProfile finish(WaveProfile w, const Pieces& pc) {
    w.dtau = pc.t1;
    w.residual_norm = pc.rho.cwiseAbs().maxCoeff();
    return w;
}

}  // namespace

HopfData hopf_data(double tau0, double F, double nu) {
    HopfData h;
    h.tau0 = tau0;
    h.speed = model::hopf_speed(tau0, F);
    h.frequency = model::hopf_frequency(tau0, F, nu);
    h.period = 2.0 * std::numbers::pi / h.frequency;
    return h;
}

WaveProfile equilibrium(double tau0, double F, double nu, double c, double X, std::size_t n) {
    if (!(tau0 > 0.0)) throw DomainError("tau0 must be positive");
    WaveProfile w;
    w.params.F = F;
    w.params.nu = nu;
    w.params.c = c;
    w.params.X = X;
    w.params.q = model::equilibrium_q(tau0, c);
    w.params.tau0 = tau0;
    w.params.validate();
    w.tau = VectorXd::Constant(static_cast<Eigen::Index>(n), tau0);
    w.dtau = VectorXd::Zero(static_cast<Eigen::Index>(n));
    w.residual_norm = 0.0;
    w.provenance = "equilibrium";
    return w;
}

VectorXd residual(const WaveProfile& p) {
    const Operators& ops = operators(p.n(), p.params.X);
    return evaluate(p.tau, ops, p.params.c, p.params.q, p.params.nu, p.coefficients()).rho;
}

double residual_norm(const WaveProfile& p) { return residual(p).cwiseAbs().maxCoeff(); }

WaveProfile solve_profile(const PhysicalParams& target, const WaveProfile& seed, const SolveOptions& opt) {
    target.validate();
    const std::size_t n = seed.n();
    if (!spectral::is_power_of_two(n) || n < 8) throw DomainError("profile grid must be a power of two >= 8");
    if (seed.tau.minCoeff() <= 0.0) throw DomainError("seed must be positive");
    WaveProfile w = seed;
    w.params = target;
    const bool free_c = opt.free == FreeParameter::c;
    if (free_c) w.params.c = seed.params.c;
    else w.params.q = seed.params.q;
    if (!(w.params.c > 0.0)) throw DomainError("wave speed must be positive");
    const EquationCoefficients eq = w.coefficients();
    const double nu = w.params.nu;
    const Operators& ops = operators(n, w.params.X);

    const VectorXd dseed = ops.D1 * seed.tau;
    const double seed_scale = std::max(1e-300, seed.tau.cwiseAbs().maxCoeff());
    const bool pinned = dseed.cwiseAbs().maxCoeff() <= 1e-12 * seed_scale * 2.0 * std::numbers::pi / w.params.X;

    VectorXd tau = seed.tau;
    double c = w.params.c, q = w.params.q;
    auto phase = [&](const VectorXd& t) { return pinned ? 0.0 : (t - seed.tau).dot(dseed) / static_cast<double>(n); };
    auto merit = [&](const Pieces& pc, const VectorXd& t) {
        return std::max(pc.rho.cwiseAbs().maxCoeff() / scale_of(pc), std::abs(phase(t)));
    };
    Pieces pc = evaluate(tau, ops, c, q, nu, eq);
    double m = merit(pc, tau);
    int it = 0;
    // After the tolerance is met, keep stepping until the update is at rounding level.
    double last_step = std::numeric_limits<double>::infinity();
    int polish = 0;
    auto done = [&]() {
        if (!(m <= opt.tol)) return false;
        return last_step <= 1e-12 * std::max(1.0, tau.cwiseAbs().maxCoeff()) || polish >= 3;
    };
    for (; it < opt.max_iterations && !done(); ++it) {
        if (m <= opt.tol) ++polish;
        const auto t = tau.array();
        const auto inv3 = t.pow(-3.0);
        const auto inv4 = t.pow(-4.0);
        const auto t1 = pc.t1.array();
        const auto u = pc.u.array();
        const VectorXd w0 = (3.0 * eq.p * t1 * inv4 + u.square() - 2.0 * eq.e * c * t * u +
                             6.0 * c * nu * t1.square() * inv4)
                                .matrix();
        const VectorXd w1 = (c * c - eq.p * inv3 - 4.0 * c * nu * t1 * inv3).matrix();
        const VectorXd g = (t.square() / (c * nu)).matrix();
        MatrixXd J = MatrixXd::Zero(n + 1, n + 1);
        J.topLeftCorner(n, n) = ops.D2 + (g.array() * w1.array()).matrix().asDiagonal() * ops.D1;
        J.topLeftCorner(n, n).diagonal() +=
            (2.0 * t * pc.B.array() / (c * nu) + g.array() * w0.array()).matrix();
        if (free_c) {
            const VectorXd dB = (2.0 * c * t1 - 2.0 * eq.e * t.square() * u - 2.0 * nu * t1.square() * inv3).matrix();
            J.block(0, n, n, 1) = (g.array() * dB.array() - t.square() * pc.B.array() / (c * c * nu)).matrix();
        } else {
            J.block(0, n, n, 1) = (g.array() * 2.0 * t * u).matrix();
        }
        if (pinned) J(n, n) = 1.0;
        else J.block(n, 0, 1, n) = dseed.transpose() / static_cast<double>(n);
        VectorXd r(n + 1);
        r << pc.rho, phase(tau);
        const VectorXd rs = J.cwiseAbs().rowwise().maxCoeff().cwiseMax(1e-300).cwiseInverse();
        J = rs.asDiagonal() * J;
        r = rs.asDiagonal() * r;
        const Eigen::PartialPivLU<MatrixXd> lu(J);
        const double rc = lu.rcond();
        if (!(rc >= opt.min_rcond)) {
            if (m <= opt.tol) break;
            throw DegenerateJacobian("profile Jacobian is singular (rcond " + std::to_string(rc) + ")");
        }
        const VectorXd step = lu.solve(-r);

        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h < 12; ++h, alpha *= 0.5) {
            VectorXd tt = tau + alpha * step.head(n);
            if (tt.minCoeff() <= 0.0) continue;
            const double cc = free_c ? c + alpha * step[n] : c;
            const double qq = free_c ? q : q + alpha * step[n];
            if (!(cc > 0.0)) continue;
            Pieces trial = evaluate(tt, ops, cc, qq, nu, eq);
            const double mt = merit(trial, tt);
            if (std::isfinite(mt) && (mt < m || (h == 0 && mt < 4.0 * m && it < 2) || (h == 0 && m <= opt.tol && mt <= opt.tol))) {
                last_step = alpha * step.head(n).cwiseAbs().maxCoeff();
                tau = std::move(tt);
                c = cc;
                q = qq;
                pc = std::move(trial);
                m = mt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (m <= opt.tol) break;
            throw NonConvergence("profile Newton line search failed", m);
        }
    }
    if (!(m <= opt.tol)) throw NonConvergence("profile Newton did not converge", m);
    w.tau = tau;
    w.params.c = c;
    w.params.q = q;
    w.newton_iterations = it;
    if (w.u().minCoeff() <= 0.0) throw NonConvergence("converged to a state with non-positive velocity", m);
    if (!pinned && w.amplitude() <= 1e-7 * w.tau.cwiseAbs().maxCoeff())
        throw NonConvergence("solution collapsed to a constant state", m);
    return finish(std::move(w), pc);
}

namespace {

bool resolved(const WaveProfile& w, double tol) { return spectral::tail_ratio(w.tau) <= tol; }

WaveProfile refine(const WaveProfile& w, const PhysicalParams& target, const ContinuationOptions& opt) {
    WaveProfile cur = w;
    while (opt.adapt_grid && !resolved(cur, opt.tail_tol) && cur.n() < opt.max_n) {
        WaveProfile seed = cur;
        seed.tau = spectral::resample(cur.tau, 2 * cur.n());
        seed.dtau = spectral::derivative(seed.tau, seed.params.X, 1);
        cur = solve_profile(target, seed, opt.solve);
    }
    return cur;
}

WaveProfile at_grid(const WaveProfile& w, std::size_t n) {
    if (w.n() == n) return w;
    WaveProfile out = w;
    out.tau = spectral::resample(w.tau, n);
    out.dtau = spectral::derivative(out.tau, w.params.X, 1);
    return out;
}

// Pseudo-arclength continuation in (tau, c, s) until s reaches 1.
WaveProfile arclength(const std::vector<std::pair<double, WaveProfile>>& hist, const ParamPath& path,
                      const ContinuationOptions& opt) {
    std::size_t n = hist.back().second.n();
    WaveProfile w0 = at_grid(hist[hist.size() - 2].second, n);
    WaveProfile w1 = hist.back().second;
    double s0 = hist[hist.size() - 2].first, s1 = hist.back().first;
    const double wt = 1.0 / static_cast<double>(n);
    auto pack = [&](const WaveProfile& w, double s) {
        VectorXd y(n + 2);
        y << w.tau, w.params.c, s;
        return y;
    };
    auto wdot = [&](const VectorXd& a, const VectorXd& b) {
        return wt * a.head(n).dot(b.head(n)) + a[n] * b[n] + a[n + 1] * b[n + 1];
    };
    VectorXd y0 = pack(w0, s0), y1 = pack(w1, s1);
    double h = std::sqrt(wdot(y1 - y0, y1 - y0));
    const EquationCoefficients eq = w1.coefficients();
    for (int stepno = 0; stepno < opt.max_arclength_steps; ++stepno) {
        VectorXd tan = y1 - y0;
        tan /= std::sqrt(wdot(tan, tan));
        bool ok = false;
        VectorXd y;
        for (int tries = 0; tries < 8 && !ok; ++tries, h *= 0.5) {
            y = y1 + h * tan;
            for (int it = 0; it < 25; ++it) {
                const double s = y[n + 1];
                PhysicalParams P = path(std::clamp(s, -0.5, 1.5));
                const Operators& ops = operators(n, P.X);
                VectorXd tau = y.head(n);
                if (tau.minCoeff() <= 0.0 || !(y[n] > 0.0)) break;
                const double c = y[n];
                Pieces pc = evaluate(tau, ops, c, P.q, P.nu, eq);
                const double ds = 1e-7;
                PhysicalParams P2 = path(std::clamp(s, -0.5, 1.5) + ds);
                WaveProfile probe = w1;
                probe.tau = tau;
                probe.params = P2;
                probe.params.c = c;
                const VectorXd drho = (residual(probe) - pc.rho) / ds;
                const auto t = tau.array();
                const auto inv3 = t.pow(-3.0);
                const auto inv4 = t.pow(-4.0);
                const auto t1 = pc.t1.array();
                const auto u = pc.u.array();
                const double nu = P.nu;
                const VectorXd w0v = (3.0 * eq.p * t1 * inv4 + u.square() - 2.0 * eq.e * c * t * u +
                                      6.0 * c * nu * t1.square() * inv4)
                                         .matrix();
                const VectorXd w1v = (c * c - eq.p * inv3 - 4.0 * c * nu * t1 * inv3).matrix();
                const VectorXd g = (t.square() / (c * nu)).matrix();
                MatrixXd J = MatrixXd::Zero(n + 2, n + 2);
                J.topLeftCorner(n, n) = ops.D2 + (g.array() * w1v.array()).matrix().asDiagonal() * ops.D1;
                J.topLeftCorner(n, n).diagonal() += (2.0 * t * pc.B.array() / (c * nu) + g.array() * w0v.array()).matrix();
                const VectorXd dB = (2.0 * c * t1 - 2.0 * eq.e * t.square() * u - 2.0 * nu * t1.square() * inv3).matrix();
                J.block(0, n, n, 1) = (g.array() * dB.array() - t.square() * pc.B.array() / (c * c * nu)).matrix();
                J.block(0, n + 1, n, 1) = drho;
                const VectorXd dref = ops.D1 * y1.head(n);
                J.block(n, 0, 1, n) = dref.transpose() * wt;
                J.block(n + 1, 0, 1, n) = tan.head(n).transpose() * wt;
                J(n + 1, n) = tan[n];
                J(n + 1, n + 1) = tan[n + 1];
                VectorXd r(n + 2);
                r.head(n) = pc.rho;
                r[n] = (tau - y1.head(n)).dot(dref) * wt;
                r[n + 1] = wdot(y - y1, tan) - h;
                const double m = std::max(pc.rho.cwiseAbs().maxCoeff() / scale_of(pc), std::abs(r[n]));
                if (m <= opt.solve.tol && std::abs(r[n + 1]) <= 1e-10) {
                    ok = true;
                    break;
                }
                const VectorXd rs = J.cwiseAbs().rowwise().maxCoeff().cwiseMax(1e-300).cwiseInverse();
                y += (rs.asDiagonal() * J).partialPivLu().solve(-(rs.asDiagonal() * r));
            }
        }
        if (!ok) throw ContinuationStalled("pseudo-arclength continuation failed", y1[n + 1]);
        y0 = y1;
        y1 = y;
        if (y1[n + 1] >= 1.0) {
            WaveProfile seed = w1;
            seed.tau = y1.head(n);
            seed.params.c = y1[n];
            seed.params.X = path(1.0).X;
            return solve_profile(path(1.0), seed, opt.solve);
        }
        h = std::min(h * 1.3, 4.0 * opt.max_step);
    }
    throw ContinuationStalled("pseudo-arclength step budget exhausted", y1[n + 1]);
}

}  // namespace

std::vector<WaveProfile> continue_along(const WaveProfile& from, const ParamPath& path, const ContinuationOptions& opt) {
    std::vector<WaveProfile> out;
    std::vector<std::pair<double, WaveProfile>> hist;
    WaveProfile cur = solve_profile(path(0.0), from, opt.solve);
    cur = refine(cur, path(0.0), opt);
    hist.emplace_back(0.0, cur);
    out.push_back(cur);
    double s = 0.0;
    double ds = opt.initial_step;
    while (s < 1.0) {
        const double s_new = std::min(1.0, s + ds);
        WaveProfile seed = cur;
        if (hist.size() >= 2) {
            const auto& [sp, wp] = hist[hist.size() - 2];
            const WaveProfile prev = at_grid(wp, cur.n());
            const double r = (s_new - s) / (s - sp);
            seed.tau = cur.tau + r * (cur.tau - prev.tau);
            seed.params.c = cur.params.c + r * (cur.params.c - prev.params.c);
            seed.params.q = cur.params.q + r * (cur.params.q - prev.params.q);
            if (seed.tau.minCoeff() <= 0.0) seed = cur;
        }
        try {
            WaveProfile next = solve_profile(path(s_new), seed, opt.solve);
            next = refine(next, path(s_new), opt);
            s = s_new;
            cur = next;
            hist.emplace_back(s, cur);
            if (hist.size() > 3) hist.erase(hist.begin());
            if (opt.keep_path || s >= 1.0) out.push_back(cur);
            if (cur.newton_iterations <= 4) ds = std::min(opt.max_step, ds * 1.5);
        } catch (const NumericalError&) {
            ds *= 0.5;
            if (ds < opt.min_step) {
                if (opt.arclength_fallback && hist.size() >= 2) {
                    WaveProfile last = arclength(hist, path, opt);
                    last = refine(last, path(1.0), opt);
                    out.push_back(last);
                    out.back().provenance = from.provenance + " > continuation(arclength)";
                    return out;
                }
                throw ContinuationStalled("continuation step fell below the floor", s);
            }
        }
    }
    for (auto& w : out) w.provenance = from.provenance + " > continuation";
    return out;
}

std::vector<WaveProfile> continue_profile(const WaveProfile& from, const PhysicalParams& to,
                                          const ContinuationOptions& opt) {
    const PhysicalParams a = from.params;
    const bool rescaled = from.frame == Frame::alpha_m2;
    const double ea = 1.0 / a.F, eb = 1.0 / to.F;
    ParamPath path = [=](double s) {
        PhysicalParams p = to;
        if (rescaled) {
            const double e = ea + s * (eb - ea);
            p.F = e > 0.0 ? 1.0 / e : std::numeric_limits<double>::infinity();
        } else {
            p.F = a.F + s * (to.F - a.F);
        }
        p.nu = a.nu + s * (to.nu - a.nu);
        p.q = a.q + s * (to.q - a.q);
        p.X = a.X + s * (to.X - a.X);
        p.c = a.c;
        return p;
    };
    if (a.F == to.F && a.nu == to.nu && a.q == to.q && a.X == to.X) {
        WaveProfile same = solve_profile(to, from, opt.solve);
        return {same};
    }
    return continue_along(from, path, opt);
}

WaveProfile solve_from_kdv(const PhysicalParams& target, const KdvHomotopyOptions& opt) {
    target.validate();
    if (!(target.F > 2.0)) throw DomainError("roll waves require F > 2");
    const double nu = target.nu, q = target.q;
    const double d1 = std::sqrt(target.F - 2.0);
    const double d0 = std::min(opt.delta0, d1);
    auto delta_of = [=](double s) { return d0 + s * (d1 - d0); };
    auto tau0H = [=](double s) {
        const double d = delta_of(s);
        return model::hopf_tau0(q, 2.0 + d * d);
    };
    const double anchor = std::pow(tau0H(1.0), 1.25) * d1;
    ParamPath path = [=](double s) {
        PhysicalParams p = target;
        const double d = delta_of(s);
        p.F = 2.0 + d * d;
        p.X = target.X * anchor / (std::pow(tau0H(s), 1.25) * d);
        return p;
    };
    // Weakly nonlinear start: fixed point for (k, tau0) at delta0.
    const PhysicalParams start = path(0.0);
    double tau0 = tau0H(0.0);
    double k = 0.5;
    for (int i = 0; i < 50; ++i) {
        const double Xk = start.X * std::pow(tau0, 1.25) * d0 / std::sqrt(nu);
        k = kdv::k_of_period(Xk);
        const double next = kdv::asymptotic_tau0(d0, opt.a0, k, q);
        if (std::abs(next - tau0) <= 1e-14 * tau0) {
            tau0 = next;
            break;
        }
        tau0 = next;
    }
    kdv::AsymptoticWave aw = kdv::asymptotic_rollwave(d0, opt.a0, k, tau0, nu, opt.n);
    WaveProfile seed = aw.profile;
    seed.params.X = start.X;
    seed.provenance = "kdv(delta=" + model::format_double(d0) + ",k=" + model::format_double(k) + ")";
    ContinuationOptions co = opt.continuation;
    co.keep_path = false;
    if (d0 == d1) {
        WaveProfile w = solve_profile(start, seed, co.solve);
        w.provenance = seed.provenance;
        return w;
    }
    std::vector<WaveProfile> path_out = continue_along(seed, path, co);
    return path_out.back();
}

WaveProfile to_alpha_m2_frame(const WaveProfile& w) {
    if (w.frame != Frame::physical) throw DomainError("profile is not in the physical frame");
    const double F = w.params.F, F2 = F * F;
    WaveProfile r = w;
    r.frame = Frame::alpha_m2;
    r.tau = w.tau * F2;
    r.dtau = w.dtau * (F2 * F2);
    r.params.X = w.params.X / F2;
    r.params.c = w.params.c / F2;
    r.params.q = w.params.q / F;
    if (w.params.tau0) r.params.tau0 = *w.params.tau0 * F2;
    r.residual_norm = residual_norm(r);
    return r;
}

WaveProfile to_physical_frame(const WaveProfile& r) {
    if (r.frame != Frame::alpha_m2) throw DomainError("profile is not in the alpha_m2 frame");
    const double F = r.params.F;
    if (!std::isfinite(F)) throw DomainError("the limiting profile has no physical counterpart");
    const double F2 = F * F;
    WaveProfile w = r;
    w.frame = Frame::physical;
    w.tau = r.tau / F2;
    w.dtau = r.dtau / (F2 * F2);
    w.params.X = r.params.X * F2;
    w.params.c = r.params.c * F2;
    w.params.q = r.params.q * F;
    if (r.params.tau0) w.params.tau0 = *r.params.tau0 / F2;
    w.residual_norm = residual_norm(w);
    return w;
}

WaveProfile limit_profile_alpha_m2(double q0, double X0, double nu, const WaveProfile& seed, double F,
                                   const ContinuationOptions& opt) {
    if (seed.frame != Frame::alpha_m2) throw DomainError("seed must be in the alpha_m2 frame");
    PhysicalParams to = seed.params;
    to.q = q0;
    to.X = X0;
    to.nu = nu;
    to.F = F > 0.0 ? F : std::numeric_limits<double>::infinity();
    ContinuationOptions co = opt;
    co.keep_path = false;
    WaveProfile w = continue_profile(seed, to, co).back();
    return w;
}

WaveProfile limit_profile_from_physical(double q0, double X0, double nu, double F_start, std::size_t n, double F_end) {
    PhysicalParams p;
    p.F = F_start;
    p.nu = nu;
    p.q = q0 * F_start;
    p.X = X0 * F_start * F_start;
    KdvHomotopyOptions ko;
    ko.n = n;
    const WaveProfile phys = solve_from_kdv(p, ko);
    const WaveProfile seed = to_alpha_m2_frame(phys);
    return limit_profile_alpha_m2(q0, X0, nu, seed, F_end);
}

namespace {

void check_h_minus(double h_minus) {
    if (!(h_minus > 0.0 && h_minus < 1.0)) throw DomainError("h_minus must lie in (0, 1)");
}

double upper_turning_point(double h_minus) {
    const double mu = h_minus - std::log(h_minus);
    double lo = 1.0, hi = 2.0;
    while (hi - std::log(hi) < mu) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid - std::log(mid) < mu ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Midpoint rule in theta for h = h_minus + (h_plus - h_minus) sin^2 theta.
double period_quadrature(double hm, double hp, int m) {
    const double D = hp - hm;
    const double dth = 0.5 * std::numbers::pi / m;
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
        const double th = (j + 0.5) * dth;
        const double s = std::sin(th), c = std::cos(th);
        double g;
        if (s * s <= 0.5) {
            const double d = D * s * s;
            g = std::log1p(d / hm) - d;
        } else {
            const double e = D * c * c;
            g = e + std::log1p(-e / hp);
        }
        sum += 2.0 * D * s * c / std::sqrt(g);
    }
    return std::numbers::sqrt2 * sum * dth;
}

}  // namespace

double ham_period(double h_minus) {
    check_h_minus(h_minus);
    const double hp = upper_turning_point(h_minus);
    double prev = period_quadrature(h_minus, hp, 16);
    for (int m = 32; m <= (1 << 20); m *= 2) {
        const double cur = period_quadrature(h_minus, hp, m);
        if (std::abs(cur - prev) <= 1e-14 * cur) return cur;
        prev = cur;
    }
    throw NonConvergence("orbit period quadrature did not converge", std::abs(prev));
}

HamOrbit ham_orbit(double h_minus, std::size_t n) {
    check_h_minus(h_minus);
    if (n < 4) throw DomainError("orbit needs at least 4 samples");
    HamOrbit o;
    o.h_minus = h_minus;
    o.h_plus = upper_turning_point(h_minus);
    o.mu = h_minus - std::log(h_minus);
    o.X_mu = ham_period(h_minus);
    o.h.resize(static_cast<Eigen::Index>(n));
    o.dh.resize(static_cast<Eigen::Index>(n));
    using State = std::array<double, 2>;
    namespace ode = boost::numeric::odeint;
    auto rhs = [](const State& y, State& dy, double) {
        dy[0] = y[1];
        dy[1] = 1.0 / y[0] - 1.0;
    };
    auto stepper = ode::make_dense_output(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    State y{h_minus, 0.0};
    std::vector<double> times(n);
    for (std::size_t j = 0; j < n; ++j) times[j] = o.X_mu * static_cast<double>(j) / static_cast<double>(n);
    std::size_t j = 0;
    ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), o.X_mu / static_cast<double>(4 * n),
                         [&](const State& s, double) {
                             o.h[static_cast<Eigen::Index>(j)] = s[0];
                             o.dh[static_cast<Eigen::Index>(j)] = s[1];
                             ++j;
                         });
    o.c0_squared = ham_selection_forms(o, 1.0).c0_squared;
    return o;
}

SelectionForms ham_selection_forms(const HamOrbit& orbit, double q0) {
    if (!(q0 > 0.0)) throw DomainError("q0 must be positive");
    const Eigen::ArrayXd h = orbit.h.array(), dh = orbit.dh.array();
    if (h.size() < 4 || (h.maxCoeff() - h.minCoeff()) <= 1e-12 * h.maxCoeff())
        throw NumericalError("selection is undefined for a constant orbit");
    const double q2 = q0 * q0, q6 = q2 * q2 * q2;
    const Eigen::ArrayXd a = 1.0 / (q2 * h);
    const Eigen::ArrayXd da = -dh / (q2 * h.square());
    SelectionForms f;
    f.c0_squared = (a.pow(-5.0) * da.square()).sum() / (a.pow(-2.0) * da.square()).sum();
    f.form_h = q6 * (h * dh.square()).sum() / (dh.square() / h.square()).sum();
    const double X = orbit.X_mu;
    const Eigen::ArrayXd inv_a = 1.0 / a;
    const Eigen::ArrayXd d_inv = spectral::derivative(inv_a.matrix(), X, 1).array();
    const Eigen::ArrayXd d_inv2 = spectral::derivative(a.pow(-2.0).matrix(), X, 1).array();
    const Eigen::ArrayXd d_a = spectral::derivative(a.matrix(), X, 1).array();
    f.form_ratio = -0.5 * (d_inv * d_inv2).sum() / (d_inv * d_a).sum();
    f.form_third = (d_inv.square() / a).sum() / (a.square() * d_inv.square()).sum();
    f.printed_third = (d_inv.square() / a).sum() / d_inv.square().sum();
    f.min_inv_a3 = a.pow(-3.0).minCoeff();
    f.max_inv_a3 = a.pow(-3.0).maxCoeff();
    return f;
}

double ham_selection_c0(const HamOrbit& orbit, double q0) { return std::sqrt(ham_selection_forms(orbit, q0).c0_squared); }

namespace {

nlohmann::json number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double number(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw DomainError("bad number in profile JSON: " + s);
    }
    return j.get<double>();
}

}  // namespace

std::string to_json(const WaveProfile& p) {
    nlohmann::json j;
    nlohmann::json par = {{"F", number(p.params.F)}, {"nu", p.params.nu}, {"q", p.params.q},
                          {"c", p.params.c},         {"X", p.params.X}};
    if (p.params.tau0) par["tau0"] = *p.params.tau0;
    j["params"] = par;
    j["frame"] = p.frame == Frame::physical ? "physical" : "alpha_m2";
    j["n"] = p.n();
    j["tau"] = std::vector<double>(p.tau.data(), p.tau.data() + p.tau.size());
    j["dtau"] = std::vector<double>(p.dtau.data(), p.dtau.data() + p.dtau.size());
    j["c"] = p.params.c;
    j["q"] = p.params.q;
    j["residual"] = p.residual_norm;
    j["newton_iterations"] = p.newton_iterations;
    j["provenance"] = p.provenance;
    return j.dump(1);
}

WaveProfile from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("malformed profile JSON: ") + e.what());
    }
    try {
        WaveProfile w;
        const auto& par = j.at("params");
        w.params.F = number(par.at("F"));
        w.params.nu = par.at("nu").get<double>();
        w.params.X = par.at("X").get<double>();
        w.params.c = j.at("c").get<double>();
        w.params.q = j.at("q").get<double>();
        if (par.contains("tau0")) w.params.tau0 = par.at("tau0").get<double>();
        const std::string frame = j.at("frame").get<std::string>();
        if (frame == "physical") w.frame = Frame::physical;
        else if (frame == "alpha_m2") w.frame = Frame::alpha_m2;
        else throw DomainError("unknown frame: " + frame);
        const auto tau = j.at("tau").get<std::vector<double>>();
        const std::size_t n = j.at("n").get<std::size_t>();
        if (tau.size() != n || !spectral::is_power_of_two(n)) throw DomainError("profile grid size mismatch");
        w.tau = Eigen::Map<const VectorXd>(tau.data(), static_cast<Eigen::Index>(n));
        if (j.contains("dtau")) {
            const auto dt = j.at("dtau").get<std::vector<double>>();
            if (dt.size() != n) throw DomainError("dtau size mismatch");
            w.dtau = Eigen::Map<const VectorXd>(dt.data(), static_cast<Eigen::Index>(n));
        } else {
            w.dtau = spectral::derivative(w.tau, w.params.X, 1);
        }
        w.residual_norm = j.value("residual", 0.0);
        w.newton_iterations = j.value("newton_iterations", 0);
        w.provenance = j.value("provenance", std::string());
        w.params.validate();
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("profile JSON missing field: ") + e.what());
    }
}

}  // namespace rollwave::profile
