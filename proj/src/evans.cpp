#include "rollwave/evans.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/model.hpp"
#include "rollwave/parallel.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/spectral.hpp"

#include <boost/numeric/odeint.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace rollwave::evans {

namespace {

constexpr double pi = std::numbers::pi;
using State = std::vector<cd>;
namespace ode = boost::numeric::odeint;

// A0(x) + lambda A1(x) from trigonometric interpolants of the sampled coefficients.
class FirstOrder {
public:
    explicit FirstOrder(const linearize::SpectralProblem& problem) : d_(problem.dim), X_(problem.period) {
        if (d_ <= 0) throw DomainError("problem has no first-order form");
        std::size_t m = std::max<std::size_t>(problem.native_grid, 8);
        if (!spectral::is_power_of_two(m)) m = spectral::next_power_of_two(m);
        const linearize::Coefficients co = problem.sample(m);
        const std::size_t dd = static_cast<std::size_t>(d_ * d_);
        if (co.A0.size() != dd || co.A1.size() != dd) throw DomainError("first-order coefficients have the wrong shape");
        std::vector<Eigen::VectorXd> variable;
        auto classify = [&](const std::vector<Eigen::VectorXd>& src, std::vector<Entry>& dst) {
            dst.assign(dd, Entry{});
            for (std::size_t e = 0; e < dd; ++e) {
                const Eigen::VectorXd& v = src[e];
                if (v.size() == 0) continue;
                const double lo = v.minCoeff(), hi = v.maxCoeff();
                if (hi - lo <= 1e-15 * std::max(std::abs(lo), std::abs(hi))) {
                    dst[e].kind = Entry::constant;
                    dst[e].value = v[0];
                } else {
                    dst[e].kind = Entry::variable;
                    dst[e].slot = variable.size();
                    variable.push_back(v);
                }
            }
        };
        classify(co.A0, a0_);
        classify(co.A1, a1_);
        if (!variable.empty()) build_pieces(spectral::InterpolantGroup(variable, X_), m);
        // Trapezoid sums of tr A0 and tr A1 over the period.
        for (int i = 0; i < d_; ++i) {
            const std::size_t e = static_cast<std::size_t>(i * d_ + i);
            if (co.A0[e].size() > 0) tr0_ += co.A0[e].mean() * X_;
            if (co.A1[e].size() > 0) tr1_ += co.A1[e].mean() * X_;
        }
    }

    int dim() const { return d_; }
    double period() const { return X_; }
    cd trace_integral(cd lambda) const { return tr0_ + lambda * tr1_; }

    // Row-major A at x, written into a (d*d) buffer.
    void matrix(double x, cd lambda, std::vector<cd>& A, std::vector<double>& scratch) const {
        scratch.resize(nvar_);
        if (nvar_ > 0) evaluate(x, scratch.data());
        const std::size_t dd = static_cast<std::size_t>(d_ * d_);
        A.assign(dd, cd(0.0, 0.0));
        for (std::size_t e = 0; e < dd; ++e) {
            A[e] = value(a0_[e], scratch) + lambda * value(a1_[e], scratch);
        }
    }

private:
    struct Entry {
        enum Kind { zero, constant, variable } kind = zero;
        double value = 0.0;
        std::size_t slot = 0;
    };
    static double value(const Entry& en, const std::vector<double>& s) {
        switch (en.kind) {
            case Entry::constant: return en.value;
            case Entry::variable: return s[en.slot];
            default: return 0.0;
        }
    }
    // Piecewise Chebyshev series of degree deg_ on pieces_ equal pieces, refined until the
    // two highest coefficients of every piece fall below 1e-14 of the entry's scale.
    void build_pieces(const spectral::InterpolantGroup& g, std::size_t m) {
        nvar_ = g.size();
        constexpr int N = deg_ + 1;
        std::array<double, N> node{};
        for (int k = 0; k < N; ++k) node[static_cast<std::size_t>(k)] = std::cos(pi * (k + 0.5) / N);
        std::vector<double> vals(nvar_), scale(nvar_, 0.0);
        for (std::size_t P = std::max<std::size_t>(8, m / 32);; P *= 2) {
            pieces_ = P;
            coef_.assign(P * nvar_ * N, 0.0);
            const double h = X_ / static_cast<double>(P);
            std::vector<double> f(nvar_ * N);
            for (std::size_t p = 0; p < P; ++p) {
                for (int k = 0; k < N; ++k) {
                    g.evaluate(h * (static_cast<double>(p) + 0.5 * (1.0 + node[static_cast<std::size_t>(k)])), vals.data());
                    for (std::size_t e = 0; e < nvar_; ++e) {
                        f[e * N + static_cast<std::size_t>(k)] = vals[e];
                        scale[e] = std::max(scale[e], std::abs(vals[e]));
                    }
                }
                for (std::size_t e = 0; e < nvar_; ++e) {
                    for (int j = 0; j < N; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < N; ++k) s += f[e * N + static_cast<std::size_t>(k)] * std::cos(pi * j * (k + 0.5) / N);
                        coef_[(p * nvar_ + e) * N + static_cast<std::size_t>(j)] = (j == 0 ? 1.0 : 2.0) * s / N;
                    }
                }
            }
            double worst = 0.0;
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t e = 0; e < nvar_; ++e) {
                    const double* c = &coef_[(p * nvar_ + e) * N];
                    worst = std::max(worst, (std::abs(c[N - 1]) + std::abs(c[N - 2])) / std::max(scale[e], 1e-300));
                }
            if (worst <= 1e-14 || P >= 4 * m) break;
        }
    }
    void evaluate(double x, double* out) const {
        constexpr int N = deg_ + 1;
        double u = x / X_ * static_cast<double>(pieces_);
        u -= std::floor(u / static_cast<double>(pieces_)) * static_cast<double>(pieces_);
        std::size_t p = static_cast<std::size_t>(u);
        if (p >= pieces_) p = pieces_ - 1;
        const double t = 2.0 * (u - static_cast<double>(p)) - 1.0;
        for (std::size_t e = 0; e < nvar_; ++e) {
            const double* c = &coef_[(p * nvar_ + e) * N];
            double b1 = 0.0, b2 = 0.0;
            for (int j = N - 1; j >= 1; --j) {
                const double b0 = c[j] + 2.0 * t * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            out[e] = c[0] + t * b1 - b2;
        }
    }
    static constexpr int deg_ = 15;
    int d_;
    double X_;
    std::vector<Entry> a0_, a1_;
    std::size_t nvar_ = 0, pieces_ = 0;
    std::vector<double> coef_;
    double tr0_ = 0.0, tr1_ = 0.0;
};

std::shared_ptr<const FirstOrder> first_order(const linearize::SpectralProblem& problem) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (!problem.first_order_cache) problem.first_order_cache = std::make_shared<const FirstOrder>(problem);
    return std::static_pointer_cast<const FirstOrder>(problem.first_order_cache);
}

// Y' = A(x) Y for a d x k column-major block Y.
struct Rhs {
    const FirstOrder* fo;
    cd lambda;
    int cols;
    mutable std::vector<cd> A;
    mutable std::vector<double> scratch;
    void operator()(const State& y, State& dy, double x) const {
        const int d = fo->dim();
        fo->matrix(x, lambda, A, scratch);
        dy.assign(y.size(), cd(0.0, 0.0));
        for (int c = 0; c < cols; ++c) {
            for (int i = 0; i < d; ++i) {
                cd s = 0.0;
                for (int j = 0; j < d; ++j) s += A[static_cast<std::size_t>(i * d + j)] * y[static_cast<std::size_t>(c * d + j)];
                dy[static_cast<std::size_t>(c * d + i)] = s;
            }
        }
    }
};

// Integrates over [0, X] with a non-FSAL embedded pair, calling after_step(y) after
// every accepted step (the hook may modify y).
template <class Hook>
std::size_t integrate_period(const FirstOrder& fo, cd lambda, int cols, State& y, const IntegrationOptions& opt,
                             Hook after_step) {
    const double X = fo.period();
    Rhs rhs{&fo, lambda, cols, {}, {}};
    auto stepper = ode::make_controlled(opt.tol, opt.tol, ode::runge_kutta_fehlberg78<State>());
    double x = 0.0;
    double dt = X / 64.0;
    std::size_t steps = 0;
    const double floor = 1e-14 * X;
    while (x < X) {
        double h = std::min(dt, X - x);
        const bool last = h >= X - x;
        const ode::controlled_step_result res = stepper.try_step(rhs, y, x, h);
        if (res == ode::success) {
            ++steps;
            if (last) x = X;
            after_step(y);
            if (!last || h > dt) dt = h;
            if (steps > opt.max_steps) throw NumericalError("monodromy step budget exhausted");
        } else {
            dt = h;
            if (dt < floor) throw NumericalError("monodromy step size underflow");
        }
        for (const cd& v : y) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericalError("monodromy overflow");
        }
    }
    return steps;
}

double liouville(cd log_det, cd trace_int) { return std::abs(std::exp(log_det - trace_int) - 1.0); }

cd log_det_lu(const Eigen::MatrixXcd& M) {
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const Eigen::MatrixXcd& U = lu.matrixLU();
    cd s = 0.0;
    for (Eigen::Index i = 0; i < U.rows(); ++i) s += std::log(U(i, i));
    if (lu.permutationP().determinant() < 0) s += cd(0.0, pi);
    return s;
}

cd det_lu(const Eigen::MatrixXcd& M) { return M.partialPivLu().determinant(); }

}  // namespace

Monodromy monodromy(const linearize::SpectralProblem& problem, cd lambda, const IntegrationOptions& opt) {
    const auto fop = first_order(problem);
    const FirstOrder& fo = *fop;
    const int d = fo.dim();
    State y(static_cast<std::size_t>(d * d), cd(0.0, 0.0));
    for (int i = 0; i < d; ++i) y[static_cast<std::size_t>(i * d + i)] = 1.0;
    // Psi = Q R_acc with Q re-orthonormalised after every step; det Psi is read off R_acc.
    Eigen::MatrixXcd Racc = Eigen::MatrixXcd::Identity(d, d);
    cd log_r = 0.0;
    auto orthonormalise = [&](State& s) {
        Eigen::Map<Eigen::MatrixXcd> Y(s.data(), d, d);
        const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Y);
        const Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < d; ++i) log_r += std::log(R(i, i));
        Racc = R * Racc;
        Y = qr.householderQ() * Eigen::MatrixXcd::Identity(d, d);
    };
    Monodromy m;
    m.steps = integrate_period(fo, lambda, d, y, opt, orthonormalise);
    const Eigen::Map<const Eigen::MatrixXcd> Q(y.data(), d, d);
    m.Psi = Q * Racc;
    m.log_det = log_det_lu(Q) + log_r;
    m.trace_integral = fo.trace_integral(lambda);
    m.liouville_error = liouville(m.log_det, m.trace_integral);
    m.trusted = m.liouville_error <= 1e-6;
    return m;
}

cd EvansValue::value() const { return mantissa * std::exp(exponent); }
double EvansValue::log_abs() const { return std::log(std::abs(mantissa)) + exponent; }

cd ratio(const EvansValue& num, const EvansValue& den) {
    return num.mantissa / den.mantissa * std::exp(num.exponent - den.exponent);
}

EvansValue EvansFrame::at(double xi) const {
    const Eigen::Index d = top.rows();
    const cd gamma = std::exp(cd(0.0, xi * period));
    Eigen::MatrixXcd M(2 * d, 2 * d);
    M.topLeftCorner(d, d) = top;
    M.bottomLeftCorner(d, d) = bottom;
    M.topRightCorner(d, d) = gamma * Eigen::MatrixXcd::Identity(d, d);
    M.bottomRightCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);
    EvansValue v;
    v.mantissa = det_lu(M) * std::exp(cd(0.0, log_scale.imag()));
    v.exponent = log_scale.real();
    v.liouville_error = liouville_error;
    v.trusted = trusted;
    v.steps = steps;
    return v;
}

EvansFrame evans_frame(const linearize::SpectralProblem& problem, cd lambda, const IntegrationOptions& opt) {
    const auto fop = first_order(problem);
    const FirstOrder& fo = *fop;
    const int d = fo.dim();
    // Columns 0..d-1: top block of the doubled frame [Psi; I] M^-1, log det M = log_scale.
    // Columns d..2d-1: Psi itself, kept unitary by QR; its R factors give log det Psi.
    State y(static_cast<std::size_t>(2 * d * d), cd(0.0, 0.0));
    for (int i = 0; i < d; ++i) {
        y[static_cast<std::size_t>(i * d + i)] = 1.0;
        y[static_cast<std::size_t>(d * d + i * d + i)] = 1.0;
    }
    Eigen::MatrixXcd bottom = Eigen::MatrixXcd::Identity(d, d);
    cd log_scale = 0.0, log_psi = 0.0;
    Eigen::MatrixXcd Y(2 * d, d);
    auto reorthonormalise = [&](State& s) {
        Eigen::Map<Eigen::MatrixXcd> top(s.data(), d, d);
        Y.topRows(d) = top;
        Y.bottomRows(d) = bottom;
        const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Y);
        const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(2 * d, d);
        const Eigen::MatrixXcd& R = qr.matrixQR();
        for (int i = 0; i < d; ++i) log_scale += std::log(R(i, i));
        top = Q.topRows(d);
        bottom = Q.bottomRows(d);

        Eigen::Map<Eigen::MatrixXcd> psi(s.data() + d * d, d, d);
        const Eigen::HouseholderQR<Eigen::MatrixXcd> q2(psi);
        const Eigen::MatrixXcd& R2 = q2.matrixQR();
        for (int i = 0; i < d; ++i) log_psi += std::log(R2(i, i));
        psi = q2.householderQ() * Eigen::MatrixXcd::Identity(d, d);
    };
    EvansFrame f;
    f.steps = integrate_period(fo, lambda, 2 * d, y, opt, reorthonormalise);
    const Eigen::Map<const Eigen::MatrixXcd> top(y.data(), d, d);
    const Eigen::Map<const Eigen::MatrixXcd> psi(y.data() + d * d, d, d);
    f.liouville_error = liouville(log_det_lu(psi) + log_psi, fo.trace_integral(lambda));
    f.top = top;
    f.bottom = bottom;
    f.log_scale = log_scale;
    f.period = fo.period();
    f.trusted = f.liouville_error <= 1e-6;
    return f;
}

EvansValue evans_value(const linearize::SpectralProblem& problem, cd lambda, double xi, const IntegrationOptions& opt) {
    return evans_frame(problem, lambda, opt).at(xi);
}

// ---------------------------------------------------------------- contours

std::string Contour::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (shape) {
        case ContourShape::circle:
            os << "circle:c=" << center.real();
            if (center.imag() != 0.0) os << ",ci=" << center.imag();
            os << ",r=" << radius;
            break;
        case ContourShape::semicircle: os << "semicircle:R=" << radius; break;
        case ContourShape::half_annulus: os << "half_annulus:r=" << inner_radius << ",R=" << radius; break;
    }
    return os.str();
}

cd Contour::point(double t) const {
    t -= std::floor(t);
    const cd I(0.0, 1.0);
    switch (shape) {
        case ContourShape::circle: return center + radius * std::exp(I * (2.0 * pi * t));
        case ContourShape::semicircle: {
            const double R = radius;
            const double L = pi * R + 2.0 * R;
            const double s = t * L;
            if (s <= pi * R) return center + R * std::exp(I * (-0.5 * pi + s / R));
            return center + I * (R - (s - pi * R));
        }
        case ContourShape::half_annulus: {
            const double R = radius, r = inner_radius;
            const double L = pi * R + pi * r + 2.0 * (R - r);
            double s = t * L;
            if (s <= pi * R) return center + R * std::exp(I * (-0.5 * pi + s / R));
            s -= pi * R;
            if (s <= R - r) return center + I * (R - s);
            s -= R - r;
            if (s <= pi * r) return center + r * std::exp(I * (0.5 * pi - s / r));
            s -= pi * r;
            return center - I * (r + s);
        }
    }
    return center;
}

Contour parse_contour(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw DomainError("contour must look like shape:key=value,...");
    const std::string shape = spec.substr(0, colon);
    std::map<std::string, double> kv;
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw DomainError("bad contour field: " + item);
        const std::string key = item.substr(0, eq);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item.substr(eq + 1), &used);
        } catch (const std::exception&) {
            throw DomainError("bad contour value: " + item);
        }
        if (used != item.size() - eq - 1) throw DomainError("bad contour value: " + item);
        if (!kv.emplace(key, v).second) throw DomainError("duplicate contour field: " + key);
    }
    auto take = [&](const std::string& key, std::optional<double> dflt = std::nullopt) {
        const auto it = kv.find(key);
        if (it == kv.end()) {
            if (dflt) return *dflt;
            throw DomainError("contour field missing: " + key);
        }
        const double v = it->second;
        kv.erase(it);
        return v;
    };
    Contour c;
    if (shape == "circle") {
        c.shape = ContourShape::circle;
        c.center = cd(take("c", 0.0), take("ci", 0.0));
        c.radius = take("r");
    } else if (shape == "semicircle") {
        c.shape = ContourShape::semicircle;
        c.radius = take("R");
    } else if (shape == "half_annulus") {
        c.shape = ContourShape::half_annulus;
        c.inner_radius = take("r");
        c.radius = take("R");
        if (!(c.inner_radius > 0.0 && c.inner_radius < c.radius)) throw DomainError("half_annulus needs 0 < r < R");
    } else {
        throw DomainError("unknown contour shape: " + shape);
    }
    if (!kv.empty()) throw DomainError("unknown contour field: " + kv.begin()->first);
    if (!(c.radius > 0.0) || !std::isfinite(c.radius)) throw DomainError("contour radius must be positive");
    return c;
}

namespace {

double rel_jump(const EvansValue& a, const EvansValue& b) {
    const cd rho = ratio(b, a);
    return std::abs(rho - 1.0) / std::min(1.0, std::abs(rho));
}

Contour perturbed(const Contour& c, int k) {
    Contour p = c;
    const double f = 1.0 + 1e-3 * k;
    p.radius *= f;
    p.inner_radius /= f;
    return p;
}

struct FrameCache {
    const linearize::SpectralProblem* problem;
    Contour contour;
    IntegrationOptions integration;
    int threads;
    std::map<double, EvansFrame> frames;

    void ensure(const std::vector<double>& ts) {
        std::vector<double> missing;
        for (double t : ts)
            if (!frames.count(t)) missing.push_back(t);
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        std::vector<EvansFrame> out(missing.size());
        parallel_for(missing.size(), threads, [&](std::size_t i) {
            out[i] = evans_frame(*problem, contour.point(missing[i]), integration);
        });
        for (std::size_t i = 0; i < missing.size(); ++i) frames.emplace(missing[i], std::move(out[i]));
    }
};

ContourReport wind_one(FrameCache& cache, double xi, const ContourOptions& opt) {
    std::vector<double> ts(opt.initial_points);
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<double>(i) / static_cast<double>(ts.size());
    ContourReport rep;
    rep.contour = cache.contour;
    rep.xi = xi;
    for (;;) {
        cache.ensure(ts);
        std::vector<EvansValue> vals(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            vals[i] = cache.frames.at(ts[i]).at(xi);
            if (vals[i].is_zero()) throw ZeroOnContour("Evans function vanishes on the contour");
        }
        std::vector<double> inserts;
        double worst = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::size_t j = (i + 1) % ts.size();
            const double jump = rel_jump(vals[i], vals[j]);
            worst = std::max(worst, jump);
            if (jump > opt.rel_jump) {
                const double t1 = j == 0 ? 1.0 : ts[j];
                if (t1 - ts[i] < 1e-13) throw ZeroOnContour("Evans function vanishes on the contour");
                inserts.push_back(0.5 * (ts[i] + t1));
            }
        }
        if (inserts.empty()) {
            rep.t = ts;
            rep.values = vals;
            rep.max_rel_jump = worst;
            break;
        }
        if (ts.size() + inserts.size() > opt.max_points)
            throw MaxPointsExceeded("contour needs more than " + std::to_string(opt.max_points) + " points");
        ts.insert(ts.end(), inserts.begin(), inserts.end());
        std::sort(ts.begin(), ts.end());
        ++rep.refinements;
    }
    double arg = 0.0;
    for (std::size_t i = 0; i < rep.values.size(); ++i) {
        const std::size_t j = (i + 1) % rep.values.size();
        arg += std::arg(ratio(rep.values[j], rep.values[i]));
        rep.trusted = rep.trusted && rep.values[i].trusted;
    }
    rep.winding_raw = arg / (2.0 * pi);
    rep.winding = static_cast<int>(std::lround(rep.winding_raw));
    if (std::abs(rep.winding_raw - rep.winding) > 0.25) throw NumericalError("winding number is not near an integer");
    rep.lambda.resize(rep.t.size());
    for (std::size_t i = 0; i < rep.t.size(); ++i) rep.lambda[i] = cache.contour.point(rep.t[i]);
    return rep;
}

}  // namespace

std::vector<ContourReport> winding_numbers(const linearize::SpectralProblem& problem, const Contour& contour,
                                           const std::vector<double>& xi, const ContourOptions& opt) {
    std::vector<ContourReport> out;
    for (int attempt = 0;; ++attempt) {
        FrameCache cache{&problem, perturbed(contour, attempt), opt.integration, resolve_threads(opt.threads), {}};
        try {
            out.clear();
            for (double x : xi) {
                out.push_back(wind_one(cache, x, opt));
                out.back().perturbations = attempt;
            }
            return out;
        } catch (const ZeroOnContour&) {
            if (attempt >= opt.max_perturbations) throw;
        }
    }
}

ContourReport winding_number(const linearize::SpectralProblem& problem, const Contour& contour, double xi,
                             const ContourOptions& opt) {
    return winding_numbers(problem, contour, {xi}, opt).front();
}

// ---------------------------------------------------------------- origin expansion

namespace {

// Clenshaw-Curtis nodes cos(pi i / N) and weights on [-1, 1].
void clenshaw_curtis(int n, std::vector<double>& x, std::vector<double>& w) {
    const int N = n - 1;
    x.resize(static_cast<std::size_t>(n));
    w.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i <= N; ++i) {
        x[static_cast<std::size_t>(i)] = std::cos(pi * i / N);
        double s = 0.0;
        for (int j = 1; j <= N / 2; ++j) {
            const double b = (2 * j == N) ? 1.0 : 2.0;
            s += b / (4.0 * j * j - 1.0) * std::cos(2.0 * pi * i * j / N);
        }
        const double c = (i == 0 || i == N) ? 1.0 : 2.0;
        w[static_cast<std::size_t>(i)] = c / N * (1.0 - s);
    }
}

double factorial(int j) {
    double f = 1.0;
    for (int i = 2; i <= j; ++i) f *= i;
    return f;
}

}  // namespace

OriginExpansion origin_taylor(const linearize::SpectralProblem& problem, const TaylorOptions& opt) {
    if (problem.dim <= 0) throw DomainError("problem has no first-order form");
    if (opt.n_cheb < 33 || opt.n_cheb > 201) throw DomainError("n_cheb must lie in [33, 201]");
    const double X = problem.period;
    const int d = problem.dim;
    const int K = std::max(opt.K, d);
    double R = opt.R > 0.0 ? opt.R : 1e-2 * 2.0 * pi / X;
    const int threads = resolve_threads(opt.threads);

    ContourOptions co;
    co.threads = threads;
    co.integration = opt.integration;
    int winding = -1;
    for (int shrink = 0;; ++shrink) {
        Contour c;
        c.shape = ContourShape::circle;
        c.radius = R;
        winding = winding_number(problem, c, 0.0, co).winding;
        if (winding == 2) break;
        if (shrink >= opt.max_shrink) throw WrongRootCount("expected a double root at the origin", winding);
        R *= 0.5;
    }

    std::vector<double> th, w;
    clenshaw_curtis(opt.n_cheb, th, w);
    const std::size_t n = th.size();
    std::vector<EvansFrame> frames(n);
    parallel_for(n, threads, [&](std::size_t i) {
        frames[i] = evans_frame(problem, R * std::exp(cd(0.0, pi * th[i])), opt.integration);
    });
    // Common normalisation so values can be materialised.
    const double e_ref = frames[0].log_scale.real();
    std::vector<cd> gam(static_cast<std::size_t>(K + 1));
    for (int j = 0; j <= K; ++j) gam[static_cast<std::size_t>(j)] = std::exp(cd(0.0, 2.0 * pi * j / (K + 1)));
    // f[k][i]: coefficient of gamma^k at node i.
    std::vector<std::vector<cd>> f(static_cast<std::size_t>(K + 1), std::vector<cd>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<cd> D(static_cast<std::size_t>(K + 1));
        for (int j = 0; j <= K; ++j) {
            const EvansValue v = frames[i].at(2.0 * pi * j / ((K + 1) * X));
            D[static_cast<std::size_t>(j)] = v.mantissa * std::exp(v.exponent - e_ref);
        }
        for (int k = 0; k <= K; ++k) {
            cd s = 0.0;
            for (int j = 0; j <= K; ++j) s += D[static_cast<std::size_t>(j)] * std::pow(gam[static_cast<std::size_t>(j)], -k);
            f[static_cast<std::size_t>(k)][i] = s / static_cast<double>(K + 1);
        }
    }
    OriginExpansion e;
    e.R = R;
    e.n_cheb = opt.n_cheb;
    e.K = K;
    e.winding_at_R = winding;
    // Held-out xi: compare the gamma polynomial with a direct evaluation.
    {
        const double xh = 0.37 * pi / X;
        const cd gh = std::exp(cd(0.0, xh * X));
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; i += std::max<std::size_t>(1, n / 8)) {
            const EvansValue v = frames[i].at(xh);
            const cd direct = v.mantissa * std::exp(v.exponent - e_ref);
            cd poly = 0.0;
            for (int k = K; k >= 0; --k) poly = poly * gh + f[static_cast<std::size_t>(k)][i];
            worst = std::max(worst, std::abs(poly - direct));
            scale = std::max(scale, std::abs(direct));
        }
        e.representation_residual = scale > 0.0 ? worst / scale : worst;
    }
    // a[k][r] = (1/2) int f_k(R e^{i pi th}) (R e^{i pi th})^{-r} dth.
    std::vector<std::array<cd, 4>> a(static_cast<std::size_t>(K + 1));
    for (int k = 0; k <= K; ++k) {
        for (int r = 0; r <= 3; ++r) {
            cd s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                s += w[i] * f[static_cast<std::size_t>(k)][i] * std::pow(R, -r) * std::exp(cd(0.0, -pi * r * th[i]));
            a[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = 0.5 * s;
        }
    }
    for (int r = 0; r <= 3; ++r) {
        for (int j = 0; r + j <= 3; ++j) {
            cd s = 0.0;
            for (int k = 0; k <= K; ++k)
                s += a[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] * std::pow(cd(0.0, k * X), j) / factorial(j);
            e.c[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] = s;
        }
    }
    const auto& c = e.c;
    double cmax = 0.0;
    for (int r = 0; r <= 3; ++r)
        for (int j = 0; r + j <= 3; ++j) cmax = std::max(cmax, std::abs(c[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]));
    const cd c20 = c[2][0], c11 = c[1][1], c02 = c[0][2];
    if (!(std::abs(c20) > 1e-12 * cmax)) throw DegenerateQuadratic("c20 vanishes; the origin is not a double root");
    const cd disc = std::sqrt(c11 * c11 - 4.0 * c20 * c02);
    e.alpha[0] = (-c11 + disc) / (2.0 * c20);
    e.alpha[1] = (-c11 - disc) / (2.0 * c20);
    if (std::imag(e.alpha[0]) < std::imag(e.alpha[1])) std::swap(e.alpha[0], e.alpha[1]);
    const double amax = std::max(std::abs(e.alpha[0]), std::abs(e.alpha[1]));
    e.near_double_alpha = std::abs(e.alpha[0] - e.alpha[1]) < 1e-4 * amax;
    for (int j = 0; j < 2; ++j) {
        const cd al = e.alpha[static_cast<std::size_t>(j)];
        const cd num = c[3][0] * al * al * al + c[2][1] * al * al + c[1][2] * al + c[0][3];
        const cd den = 2.0 * c20 * al + c11;
        e.beta[static_cast<std::size_t>(j)] = std::abs(den) > 0.0 ? -num / den : cd(NAN, NAN);
    }
    return e;
}

std::array<cd, 2> taylor_roots(const OriginExpansion& e, double xi) {
    return {e.alpha[0] * xi + e.beta[0] * xi * xi, e.alpha[1] * xi + e.beta[1] * xi * xi};
}

// ---------------------------------------------------------------- polishing

PolishedRoot polish_root(const linearize::SpectralProblem& problem, cd lambda0, double xi, const PolishOptions& opt) {
    auto D = [&](cd l) { return evans_value(problem, l, xi, opt.integration); };
    const double h = 1e-3 * std::max(std::abs(lambda0), 1e-2);
    cd x0 = lambda0 - h, x1 = lambda0 + h, x2 = lambda0;
    const EvansValue v0 = D(x0), v1 = D(x1);
    EvansValue v2 = D(x2);
    const double ref = v2.exponent;
    auto mat = [&](const EvansValue& v) { return v.mantissa * std::exp(v.exponent - ref); };
    cd f0 = mat(v0), f1 = mat(v1), f2 = mat(v2);
    const double scale = std::max(std::abs(f0), std::abs(f1));
    PolishedRoot out;
    out.lambda = x2;
    out.residual = scale > 0.0 ? std::abs(f2) / scale : 0.0;
    if (out.residual <= opt.tol) return out;
    // Root uncertainty implied by the integration error: |D(tol) - D(tol/100)| / |D'|.
    IntegrationOptions fine = opt.integration;
    fine.tol *= 1e-2;
    const cd f2_fine = mat(evans_value(problem, x2, xi, fine));
    const double slope = std::abs(f1 - f0) / (2.0 * h);
    const double floor = slope > 0.0 ? 4.0 * std::abs(f2_fine - f2) / slope : 0.0;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const cd h1 = x1 - x0, h2 = x2 - x1;
        const cd d1 = (f1 - f0) / h1, d2 = (f2 - f1) / h2;
        const cd a = (d2 - d1) / (h2 + h1);
        const cd b = a * h2 + d2;
        const cd disc = std::sqrt(b * b - 4.0 * a * f2);
        const cd den = std::abs(b + disc) >= std::abs(b - disc) ? b + disc : b - disc;
        cd step = den != cd(0.0) ? -2.0 * f2 / den : -f2 / d2;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) step = -f2 / d2;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x2 + step;
        v2 = D(x2);
        f2 = mat(v2);
        out.lambda = x2;
        out.iterations = it;
        out.residual = std::abs(f2) / scale;
        if (out.residual <= opt.tol || std::abs(step) <= std::max(1e-13 * std::max(std::abs(x2), 1e-6), floor))
            return out;
    }
    throw NonConvergence("root polishing did not converge", out.residual);
}

// ---------------------------------------------------------------- verdict

const char* overall_name(Overall o) {
    switch (o) {
        case Overall::stable: return "stable";
        case Overall::unstable: return "unstable";
        default: return "indeterminate";
    }
}

linearize::SpectralProblem problem_for(const WaveProfile& profile) {
    if (profile.frame == Frame::physical) return linearize::evans_matrix(profile);
    return linearize::limit_matrices_alpha_m2(profile, profile.params.F);
}

namespace {

std::string fmt(double v) { return model::format_double(v); }
std::string fmt(cd v) { return fmt(v.real()) + (v.imag() < 0 ? "" : "+") + fmt(v.imag()) + "i"; }

}  // namespace

StabilityVerdict verdict(const WaveProfile& profile, const VerdictConfig& cfg) {
    StabilityVerdict v;
    const int threads = resolve_threads(cfg.threads);
    const linearize::SpectralProblem problem = problem_for(profile);
    const double X = problem.period;

    if (profile.frame == Frame::physical || std::isfinite(profile.params.F)) {
        const WaveProfile phys = profile.frame == Frame::physical ? profile : rollwave::profile::to_physical_frame(profile);
        v.slope_margin = model::slope_margin(phys);
        v.slope.holds = v.slope_margin > 0.0;
        v.slope.detail = "min(F^-2 - 2 nu u_x) = " + fmt(v.slope_margin);
    } else {
        v.slope.detail = "not defined for the limiting profile";
    }

    // D1: Hill scan away from the origin, then an Evans cross-check.
    hill::SpectrumOptions so;
    so.threads = threads;
    const hill::SpectralCloud cloud = hill::spectrum(problem, cfg.modes, hill::xi_grid(X, cfg.xi_points), so);
    const auto wit = hill::max_unstable(cloud, cfg.r0);
    bool hill_ok = false;
    if (wit) {
        v.witness = wit;
        hill_ok = wit->max_re <= cfg.re_tol;
        v.D1.detail = "Hill max Re = " + fmt(wit->max_re) + " at xi = " + fmt(wit->xi) + ", lambda = " + fmt(wit->lambda);
        v.D1.holds = hill_ok;
    } else {
        v.D1.detail = "no Hill eigenvalues outside the exclusion ball";
    }
    if (hill_ok && cfg.use_evans) {
        double Rout = cfg.outer_radius;
        if (!(Rout > 0.0)) {
            Rout = 10.0 * cfg.r0;
            for (const auto& s : cloud.spectra)
                for (const cd& l : s.eigenvalues)
                    if (std::abs(l) <= 1.0) Rout = std::max(Rout, std::abs(l));
            Rout *= 1.05;
        }
        Contour c;
        c.shape = ContourShape::half_annulus;
        c.inner_radius = cfg.r0;
        c.radius = Rout;
        std::vector<double> xs;
        for (int i = 0; i < cfg.evans_xi; ++i) xs.push_back(pi / X * (i + 0.5) / cfg.evans_xi);
        ContourOptions co = cfg.contour;
        co.threads = threads;
        try {
            const auto reps = winding_numbers(problem, c, xs, co);
            int bad = 0;
            for (const auto& r : reps) bad += r.winding != 0;
            v.D1.detail += "; Evans winding on " + c.describe() + " is " + (bad ? "nonzero" : "zero") + " for " +
                           std::to_string(reps.size()) + " xi";
            if (bad) v.D1.holds = false;
        } catch (const NumericalError& e) {
            v.D1.holds.reset();
            v.D1.detail += std::string("; Evans cross-check failed: ") + e.what();
        }
    }

    // D2, D3, H1 from the expansion at the origin.
    try {
        TaylorOptions to = cfg.taylor;
        to.threads = threads;
        const OriginExpansion e = origin_taylor(problem, to);
        v.expansion = e;
        const double c20 = std::abs(e.c[2][0]);
        const double lead = std::max({std::abs(e.c[0][0]), std::abs(e.c[1][0]), std::abs(e.c[0][1])});
        v.D3.holds = lead <= cfg.double_root_tol * c20;
        v.D3.detail = "winding 2 at R = " + fmt(e.R) + ", max(|c00|,|c10|,|c01|)/|c20| = " + fmt(lead / c20);
        const double amax = std::max(std::abs(e.alpha[0]), std::abs(e.alpha[1]));
        v.H1.holds = std::abs(e.alpha[0] - e.alpha[1]) >= cfg.h1_tol * amax;
        v.H1.detail = "|alpha1 - alpha2| = " + fmt(std::abs(e.alpha[0] - e.alpha[1]));
        bool imag = true, damped = true;
        for (int j = 0; j < 2; ++j) {
            imag = imag && std::abs(e.alpha[j].real()) <= cfg.alpha_imag_tol * amax;
            damped = damped && e.beta[j].real() < 0.0;
        }
        v.D2.holds = imag && damped;
        v.D2.detail = "alpha = {" + fmt(e.alpha[0]) + ", " + fmt(e.alpha[1]) + "}, beta = {" + fmt(e.beta[0]) + ", " +
                      fmt(e.beta[1]) + "}";
    } catch (const NumericalError& e) {
        v.D2.detail = v.D3.detail = v.H1.detail = std::string("expansion failed: ") + e.what();
    }

    const bool d2_unstable = v.D2.holds == false && v.H1.holds == true;
    if (v.D1.holds == false || d2_unstable) {
        v.overall = Overall::unstable;
        v.reason = v.D1.holds == false ? "spectrum in the right half plane: " + v.D1.detail
                                       : "modulational instability at the origin: " + v.D2.detail;
    } else if (v.D1.holds == true && v.D2.holds == true && v.D3.holds == true && v.H1.holds == true) {
        v.overall = Overall::stable;
        v.reason = "D1-D3 and H1 hold";
    } else {
        v.overall = Overall::indeterminate;
        std::string why;
        if (!v.D1.holds) why += "D1 undecided; ";
        if (!v.D2.holds) why += "D2 undecided; ";
        if (v.D3.holds != true) why += "D3 not confirmed; ";
        if (v.H1.holds != true) why += "H1 not confirmed (alpha near-double); ";
        v.reason = why;
    }
    return v;
}

// ---------------------------------------------------------------- JSON

namespace {

nlohmann::json cjson(cd z) { return nlohmann::json::array({z.real(), z.imag()}); }

nlohmann::json cond(const Condition& c) {
    nlohmann::json j;
    j["holds"] = c.holds ? nlohmann::json(*c.holds) : nlohmann::json(nullptr);
    j["detail"] = c.detail;
    return j;
}

nlohmann::json expansion_json(const OriginExpansion& e) {
    nlohmann::json j;
    nlohmann::json c = nlohmann::json::object();
    for (int r = 0; r <= 3; ++r)
        for (int k = 0; r + k <= 3; ++k)
            c["c" + std::to_string(r) + std::to_string(k)] = cjson(e.c[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)]);
    j["c"] = c;
    j["alpha"] = {cjson(e.alpha[0]), cjson(e.alpha[1])};
    j["beta"] = {cjson(e.beta[0]), cjson(e.beta[1])};
    j["R"] = e.R;
    j["n_cheb"] = e.n_cheb;
    j["K"] = e.K;
    j["winding_at_R"] = e.winding_at_R;
    j["representation_residual"] = e.representation_residual;
    j["near_double_alpha"] = e.near_double_alpha;
    return j;
}

}  // namespace

std::string to_json(const ContourReport& r) {
    nlohmann::json j;
    j["contour"] = r.contour.describe();
    j["xi"] = r.xi;
    j["winding"] = r.winding;
    j["winding_raw"] = r.winding_raw;
    j["points"] = r.t.size();
    j["max_rel_jump"] = r.max_rel_jump;
    j["refinements"] = r.refinements;
    j["perturbations"] = r.perturbations;
    j["trusted"] = r.trusted;
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        pts.push_back({{"lambda", cjson(r.lambda[i])},
                       {"mantissa", cjson(r.values[i].mantissa)},
                       {"exponent", r.values[i].exponent}});
    }
    j["samples"] = pts;
    return j.dump(1);
}

std::string to_json(const OriginExpansion& e) { return expansion_json(e).dump(1); }

std::string to_json(const StabilityVerdict& v) {
    nlohmann::json j;
    j["overall"] = overall_name(v.overall);
    j["reason"] = v.reason;
    j["D1"] = cond(v.D1);
    j["D2"] = cond(v.D2);
    j["D3"] = cond(v.D3);
    j["H1"] = cond(v.H1);
    j["slope"] = cond(v.slope);
    j["slope_margin"] = v.slope_margin;
    if (v.witness) j["witness"] = {{"max_re", v.witness->max_re}, {"xi", v.witness->xi}, {"lambda", cjson(v.witness->lambda)}};
    if (v.expansion) j["expansion"] = expansion_json(*v.expansion);
    return j.dump(1);
}

}  // namespace rollwave::evans
