#include "rollwave/cli.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/evans.hpp"
#include "rollwave/hill.hpp"
#include "rollwave/io.hpp"
#include "rollwave/kdv_limit.hpp"
#include "rollwave/linearize.hpp"
#include "rollwave/model.hpp"
#include "rollwave/parallel.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace rollwave::cli {

using nlohmann::json;

const std::string& RunConfig::get(const std::string& key) const {
    for (const auto& [k, v] : values)
        if (k == key) return v;
    throw Error(ErrorClass::internal, "undeclared key '" + key + "'");
}

bool RunConfig::has(const std::string& key) const { return !get(key).empty(); }

std::string RunConfig::manifest() const {
    std::string s = "command = " + command + "\n";
    for (const auto& [k, v] : values)
        if (!v.empty()) s += k + " = " + v + "\n";
    return s;
}

namespace {

struct Key {
    std::string name;
    std::string fallback;
    std::string help;
};

struct Context {
    const RunConfig& cfg;
    std::ostream& out;
    std::ostream& err;
};

struct Command {
    std::string name;
    std::string help;
    std::vector<Key> keys;
    std::string primary;  // key naming the main output file
    std::function<void(Context&)> handler;
};

// ---------------------------------------------------------------- value parsing

double number(const RunConfig& c, const std::string& key) {
    const std::string& v = c.get(key);
    if (v.empty()) throw DomainError("missing value for '" + key + "'");
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw DomainError("value of '" + key + "' is not a number: " + v);
    }
    if (used != v.size()) throw DomainError("value of '" + key + "' is not a number: " + v);
    return d;
}

std::optional<double> optional_number(const RunConfig& c, const std::string& key) {
    if (!c.has(key)) return std::nullopt;
    return number(c, key);
}

long integer(const RunConfig& c, const std::string& key) {
    const double d = number(c, key);
    if (d != std::floor(d) || std::abs(d) > 1e15) throw DomainError("value of '" + key + "' is not an integer");
    return static_cast<long>(d);
}

std::size_t count(const RunConfig& c, const std::string& key) {
    const long v = integer(c, key);
    if (v <= 0) throw DomainError("value of '" + key + "' must be positive");
    return static_cast<std::size_t>(v);
}

bool boolean(const RunConfig& c, const std::string& key) {
    const std::string& v = c.get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DomainError("value of '" + key + "' must be true or false");
}

std::string text(const RunConfig& c, const std::string& key) {
    if (!c.has(key)) throw DomainError("missing value for '" + key + "'");
    return c.get(key);
}

std::string choice(const RunConfig& c, const std::string& key, std::initializer_list<const char*> allowed) {
    const std::string v = c.get(key);
    for (const char* a : allowed)
        if (v == a) return v;
    std::string msg = "value of '" + key + "' must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw DomainError(msg);
}

// "a,b,c", "lin:a:b:n" or "log:a:b:n".
std::vector<double> number_list(const RunConfig& c, const std::string& key) {
    const std::string v = text(c, key);
    auto parse = [&](const std::string& s) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(s, &used);
        } catch (const std::exception&) {
            throw DomainError("bad number '" + s + "' in '" + key + "'");
        }
        if (used != s.size()) throw DomainError("bad number '" + s + "' in '" + key + "'");
        return d;
    };
    std::vector<std::string> parts;
    const bool range = v.rfind("lin:", 0) == 0 || v.rfind("log:", 0) == 0;
    std::stringstream ss(range ? v.substr(4) : v);
    std::string item;
    while (std::getline(ss, item, range ? ':' : ',')) parts.push_back(item);
    std::vector<double> out;
    if (!range) {
        for (const auto& p : parts) out.push_back(parse(p));
        return out;
    }
    if (parts.size() != 3) throw DomainError("range '" + key + "' must be lin:a:b:n or log:a:b:n");
    const double a = parse(parts[0]), b = parse(parts[1]);
    const double nd = parse(parts[2]);
    if (nd < 1 || nd != std::floor(nd)) throw DomainError("range count in '" + key + "' must be a positive integer");
    const int n = static_cast<int>(nd);
    const bool logs = v[1] == 'o';
    if (logs && !(a > 0.0 && b > 0.0)) throw DomainError("log range in '" + key + "' needs positive ends");
    for (int i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out.push_back(logs ? std::exp(std::log(a) + t * (std::log(b) - std::log(a))) : a + t * (b - a));
    }
    return out;
}

// ---------------------------------------------------------------- outputs

void emit(Context& ctx, const std::string& key, const std::string& content) {
    if (ctx.cfg.has(key))
        io::write_atomic(ctx.cfg.get(key), content);
    else
        ctx.out << content;
}

void emit_if(Context& ctx, const std::string& key, const std::string& content) {
    if (ctx.cfg.has(key)) io::write_atomic(ctx.cfg.get(key), content);
}

WaveProfile load_profile(const RunConfig& c) { return profile::from_json(io::read_file(text(c, "in"))); }

std::string cloud_json(const hill::SpectralCloud& cl) {
    json j;
    j["problem"] = cl.problem;
    j["period"] = cl.period;
    j["modes"] = cl.modes;
    j["components"] = cl.components;
    j["convention"] = cl.convention == hill::Convention::fundamental ? "fundamental" : "doubled";
    j["spectra"] = json::array();
    for (const auto& s : cl.spectra) {
        json e;
        e["xi"] = s.xi;
        e["ok"] = s.ok;
        if (!s.ok) e["error"] = s.error;
        std::vector<double> re, im;
        for (const auto& l : s.eigenvalues) {
            re.push_back(l.real());
            im.push_back(l.imag());
        }
        e["re"] = re;
        e["im"] = im;
        j["spectra"].push_back(e);
    }
    return j.dump(1) + "\n";
}

std::string cloud_text(const RunConfig& c, const hill::SpectralCloud& cl) {
    return choice(c, "format", {"csv", "json"}) == "csv" ? hill::to_csv(cl) : cloud_json(cl);
}

// Spectral problem for a profile; F overrides the profile's F in the alpha_m2 frame.
linearize::SpectralProblem problem_of(const RunConfig& c, const WaveProfile& p) {
    if (!c.has("F")) return evans::problem_for(p);
    if (p.frame != Frame::alpha_m2) throw DomainError("F override applies to alpha_m2 profiles only");
    return linearize::limit_matrices_alpha_m2(p, number(c, "F"));
}

void describe_profile(Context& ctx, const WaveProfile& p) {
    ctx.err << "profile: n = " << p.n() << ", c = " << model::format_double(p.params.c)
            << ", q = " << model::format_double(p.params.q) << ", amplitude = " << model::format_double(p.amplitude())
            << ", residual = " << model::format_double(p.residual_norm) << "\n";
}

PhysicalParams target_params(const RunConfig& c) {
    PhysicalParams p;
    p.F = number(c, "F");
    p.nu = number(c, "nu");
    p.q = number(c, "q");
    p.X = number(c, "X");
    p.validate();
    return p;
}

// ---------------------------------------------------------------- subcommands

void cmd_profile(Context& ctx) {
    const auto& c = ctx.cfg;
    const PhysicalParams target = target_params(c);
    const double tol = number(c, "tol");
    WaveProfile w;
    if (c.has("seed")) {
        const WaveProfile seed = profile::from_json(io::read_file(c.get("seed")));
        PhysicalParams t = target;
        t.c = seed.params.c;
        profile::SolveOptions so;
        so.tol = tol;
        w = profile::solve_profile(t, seed, so);
    } else {
        profile::KdvHomotopyOptions h;
        h.n = count(c, "n");
        h.continuation.solve.tol = tol;
        w = profile::solve_from_kdv(target, h);
    }
    if (choice(c, "frame", {"physical", "alpha_m2"}) == "alpha_m2") w = profile::to_alpha_m2_frame(w);
    describe_profile(ctx, w);
    emit(ctx, "out", profile::to_json(w));
}

void cmd_continue(Context& ctx) {
    const auto& c = ctx.cfg;
    const WaveProfile from = load_profile(c);
    PhysicalParams to = from.params;
    if (auto v = optional_number(c, "F")) to.F = *v;
    if (auto v = optional_number(c, "nu")) to.nu = *v;
    if (auto v = optional_number(c, "q")) to.q = *v;
    if (auto v = optional_number(c, "X")) to.X = *v;
    to.validate();
    profile::ContinuationOptions opt;
    opt.solve.tol = number(c, "tol");
    opt.max_n = count(c, "max-n");
    const auto path = profile::continue_profile(from, to, opt);
    describe_profile(ctx, path.back());
    std::string csv = "F,nu,q,X,c,amplitude,residual,n\n";
    for (const auto& w : path) {
        const auto& p = w.params;
        csv += model::format_double(p.F) + "," + model::format_double(p.nu) + "," + model::format_double(p.q) + "," +
               model::format_double(p.X) + "," + model::format_double(p.c) + "," +
               model::format_double(w.amplitude()) + "," + model::format_double(w.residual_norm) + "," +
               std::to_string(w.n()) + "\n";
    }
    emit_if(ctx, "path-out", csv);
    emit(ctx, "out", profile::to_json(path.back()));
}

void cmd_spectrum(Context& ctx) {
    const auto& c = ctx.cfg;
    const WaveProfile p = load_profile(c);
    const auto problem = problem_of(c, p);
    hill::SpectrumOptions so;
    so.convention = choice(c, "convention", {"fundamental", "doubled"}) == "fundamental" ? hill::Convention::fundamental
                                                                                         : hill::Convention::doubled;
    so.threads = c.threads;
    const int modes = static_cast<int>(count(c, "modes"));
    const auto xi = hill::xi_grid(problem.period, static_cast<int>(count(c, "xi-points")), so.convention);
    const auto cloud = hill::spectrum(problem, modes, xi, so);
    if (auto w = hill::max_unstable(cloud, number(c, "r0")))
        ctx.err << "max Re lambda outside r0: " << model::format_double(w->max_re) << " at xi = "
                << model::format_double(w->xi) << "\n";
    emit(ctx, "out", cloud_text(c, cloud));
}

evans::IntegrationOptions integration(const RunConfig& c) {
    evans::IntegrationOptions io;
    io.tol = number(c, "tol");
    return io;
}

void cmd_evans(Context& ctx) {
    const auto& c = ctx.cfg;
    const WaveProfile p = load_profile(c);
    const auto problem = problem_of(c, p);
    const auto contour = evans::parse_contour(text(c, "contour"));
    std::vector<double> xi;
    if (c.has("xi"))
        xi = number_list(c, "xi");
    else
        xi = hill::xi_grid(problem.period, static_cast<int>(count(c, "xi-points")));
    evans::ContourOptions opt;
    opt.rel_jump = number(c, "rel-jump");
    opt.initial_points = count(c, "initial-points");
    opt.max_points = count(c, "max-points");
    opt.threads = c.threads;
    opt.integration = integration(c);
    const auto reports = evans::winding_numbers(problem, contour, xi, opt);
    std::string s = "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        ctx.err << "xi = " << model::format_double(r.xi) << ": winding " << r.winding << ", " << r.lambda.size()
                << " points\n";
        s += evans::to_json(r) + (i + 1 < reports.size() ? ",\n" : "\n");
    }
    s += "]\n";
    emit(ctx, "out", s);
}

void cmd_taylor(Context& ctx) {
    const auto& c = ctx.cfg;
    const WaveProfile p = load_profile(c);
    const auto problem = problem_of(c, p);
    evans::TaylorOptions opt;
    opt.R = number(c, "R");
    opt.K = static_cast<int>(integer(c, "K"));
    opt.n_cheb = static_cast<int>(count(c, "n-cheb"));
    opt.threads = c.threads;
    opt.integration = integration(c);
    const auto e = evans::origin_taylor(problem, opt);
    ctx.err << "alpha = " << model::format_double(e.alpha[0].real()) << "+" << model::format_double(e.alpha[0].imag())
            << "i, " << model::format_double(e.alpha[1].real()) << "+" << model::format_double(e.alpha[1].imag())
            << "i\n";
    emit(ctx, "out", evans::to_json(e) + "\n");
}

void cmd_verdict(Context& ctx) {
    const auto& c = ctx.cfg;
    const WaveProfile p = load_profile(c);
    evans::VerdictConfig v;
    v.modes = static_cast<int>(count(c, "modes"));
    v.xi_points = static_cast<int>(count(c, "xi-points"));
    v.r0 = number(c, "r0");
    v.re_tol = number(c, "re-tol");
    v.evans_xi = static_cast<int>(count(c, "evans-xi"));
    v.use_evans = boolean(c, "use-evans");
    v.threads = c.threads;
    v.taylor.threads = c.threads;
    v.contour.threads = c.threads;
    const auto verdict = evans::verdict(p, v);
    ctx.err << "overall: " << evans::overall_name(verdict.overall) << " (" << verdict.reason << ")\n";
    emit(ctx, "report", evans::to_json(verdict) + "\n");
}

sweep::QRule q_rule(const RunConfig& c) {
    if (c.has("q-rule")) return sweep::parse_q_rule(c.get("q-rule"));
    return sweep::QRule::scaling(number(c, "alpha"), number(c, "q0"));
}

sweep::ProbeOptions probe_options(const RunConfig& c) {
    sweep::ProbeOptions o;
    o.n = count(c, "n");
    o.verdict.modes = static_cast<int>(count(c, "modes"));
    o.verdict.xi_points = static_cast<int>(count(c, "xi-points"));
    o.verdict.threads = 1;
    return o;
}

void cmd_sweep(Context& ctx) {
    const auto& c = ctx.cfg;
    const std::string mode = choice(c, "mode", {"map", "boundary"});
    const double alpha = number(c, "alpha");
    const double nu = number(c, "nu");
    const sweep::QRule q = q_rule(c);
    const auto Fs = number_list(c, "F");
    if (mode == "map") {
        sweep::GridSpec g;
        g.alpha = alpha;
        g.nu = nu;
        g.q = q;
        g.F = Fs;
        g.X = number_list(c, "X");
        g.x_is_rescaled = boolean(c, "x-rescaled");
        sweep::MapOptions mo;
        mo.threads = c.threads;
        mo.record_timing = boolean(c, "timing");
        mo.probe = probe_options(c);
        std::vector<sweep::SweepRecord> records;
        const auto s = sweep::stability_map(g, text(c, "store"), records, mo);
        ctx.err << "records: " << s.total << " total, " << s.computed << " computed, " << s.skipped << " skipped, "
                << s.failed << " failed\n";
        std::string csv = "alpha,F,nu,q,X,X0,overall,max_re\n";
        for (const auto& r : records)
            csv += model::format_double(r.alpha) + "," + model::format_double(r.F) + "," + model::format_double(r.nu) +
                   "," + model::format_double(r.q) + "," + model::format_double(r.X) + "," +
                   model::format_double(r.X0) + "," + r.overall + "," +
                   (r.max_re ? model::format_double(*r.max_re) : std::string()) + "\n";
        emit_if(ctx, "out", csv);
        return;
    }
    const sweep::Which which = sweep::parse_which(c.get("which"));
    sweep::BisectOptions bo;
    bo.rel_tol = number(c, "rel-tol");
    bo.probe = probe_options(c);
    const double lo = number(c, "X-lo"), hi = number(c, "X-hi");
    std::vector<std::string> rows(Fs.size());
    parallel_for(Fs.size(), c.threads, [&](std::size_t i) {
        const auto r = sweep::boundary_bisect(alpha, Fs[i], nu, q, lo, hi, which, bo);
        rows[i] = sweep::boundary_csv_row(alpha, r.F, nu, r.q, which == sweep::Which::lower ? std::optional(r.X) : std::nullopt,
                                          which == sweep::Which::upper ? std::optional(r.X) : std::nullopt);
    });
    std::string csv = sweep::boundary_csv_header() + "\n";
    for (const auto& r : rows) csv += r + "\n";
    emit(ctx, "out", csv);
}

void cmd_fit(Context& ctx) {
    const auto& c = ctx.cfg;
    const std::string column = choice(c, "column", {"lower", "upper"});
    std::istringstream in(io::read_file(text(c, "in")));
    std::string line;
    if (!std::getline(in, line) || line != sweep::boundary_csv_header())
        throw DomainError("fit input must be a boundary CSV with header " + sweep::boundary_csv_header());
    std::vector<sweep::FitPoint> pts;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        while (f.size() < 6) f.emplace_back();
        if (f.size() != 6) throw DomainError("line " + std::to_string(lineno) + ": expected 6 fields");
        const std::string& x = column == "lower" ? f[4] : f[5];
        if (x.empty()) continue;
        try {
            pts.push_back({std::stod(f[1]), std::stod(f[3]), std::stod(x)});
        } catch (const std::exception&) {
            throw DomainError("line " + std::to_string(lineno) + ": bad number");
        }
    }
    const auto fit = sweep::powerlaw_fit(pts);
    if (!fit.note.empty()) ctx.err << fit.note << "\n";
    emit(ctx, "out", sweep::to_json(fit) + "\n");
}

void cmd_kdv(Context& ctx) {
    const auto& c = ctx.cfg;
    double k = 0.0;
    if (c.has("k")) {
        k = number(c, "k");
        if (!(k > 0.0 && k < 1.0)) throw DomainError("k must lie in (0, 1)");
    } else if (c.has("X")) {
        k = kdv::k_of_period(number(c, "X"));
    } else {
        throw DomainError("kdv needs k or X");
    }
    if (!c.has("delta")) {
        json j;
        j["k"] = k;
        j["X"] = kdv::period_of_k(k);
        j["kappa"] = kdv::selection_kappa(k);
        emit(ctx, "out", j.dump(1) + "\n");
        return;
    }
    const double delta = number(c, "delta");
    const double X = kdv::period_of_k(k);
    kdv::KdvKsSpectrumOptions so;
    so.n = count(c, "n");
    so.threads = c.threads;
    const auto cloud = kdv::kdvks_hill_spectrum(delta, number(c, "a0"), k, static_cast<int>(count(c, "modes")),
                                                hill::xi_grid(X, static_cast<int>(count(c, "xi-points"))), so);
    if (auto w = hill::max_unstable(cloud, number(c, "r0")))
        ctx.err << "X = " << model::format_double(X) << ", max Re Lambda outside r0: " << model::format_double(w->max_re)
                << "\n";
    emit(ctx, "out", cloud_text(c, cloud));
}

void cmd_limit(Context& ctx) {
    const auto& c = ctx.cfg;
    const int modes = static_cast<int>(count(c, "modes"));
    const int nxi = static_cast<int>(count(c, "xi-points"));
    hill::SpectrumOptions so;
    so.threads = c.threads;
    if (choice(c, "mode", {"alpha", "ham"}) == "alpha") {
        const auto w = profile::limit_profile_from_physical(number(c, "q0"), number(c, "X0"), number(c, "nu"),
                                                            number(c, "F-start"), count(c, "n"));
        describe_profile(ctx, w);
        if (c.has("spectrum-out")) {
            const auto problem = linearize::limit_matrices_alpha_m2(w, std::numeric_limits<double>::infinity());
            const auto cloud = hill::spectrum(problem, modes, hill::xi_grid(problem.period, nxi), so);
            if (auto u = hill::max_unstable(cloud, number(c, "r0")))
                ctx.err << "max Re lambda outside r0: " << model::format_double(u->max_re) << "\n";
            emit_if(ctx, "spectrum-out", cloud_text(c, cloud));
        }
        emit(ctx, "out", profile::to_json(w));
        return;
    }
    const auto orbit = profile::ham_orbit(number(c, "h-minus"), count(c, "n"));
    const auto forms = profile::ham_selection_forms(orbit);
    json j;
    j["h_minus"] = orbit.h_minus;
    j["h_plus"] = orbit.h_plus;
    j["mu"] = orbit.mu;
    j["X_mu"] = orbit.X_mu;
    j["c0_squared"] = forms.c0_squared;
    j["form_ratio"] = forms.form_ratio;
    j["form_third"] = forms.form_third;
    j["form_h"] = forms.form_h;
    j["min_inv_a3"] = forms.min_inv_a3;
    j["max_inv_a3"] = forms.max_inv_a3;
    const auto problem = linearize::ham_limit_operator(orbit);
    const auto cloud = hill::spectrum(problem, modes, hill::xi_grid(problem.period, nxi), so);
    if (auto u = hill::max_unstable(cloud, number(c, "r0"))) {
        j["max_re_Lambda"] = u->max_re;
        j["witness_xi"] = u->xi;
    }
    emit_if(ctx, "spectrum-out", cloud_text(c, cloud));
    emit(ctx, "out", j.dump(1) + "\n");
}

// ---------------------------------------------------------------- registry

std::vector<Command> commands() {
    const Key in{"in", "", "input profile JSON"};
    const Key out{"out", "", "output file (stdout when omitted)"};
    const Key fmt{"format", "csv", "csv or json"};
    const Key modes{"modes", "101", "Fourier modes 2N+1"};
    const Key xip{"xi-points", "21", "Floquet parameters"};
    const Key r0{"r0", "1e-3", "exclusion radius around the origin"};
    const Key fover{"F", "", "F override for alpha_m2 profiles (inf for the limit)"};
    const Key tol{"tol", "1e-10", "integration tolerance"};
    return {
        {"profile", "solve a roll wave profile",
         {{"F", "", "Froude number"}, {"nu", "", "viscosity"}, {"q", "", "outflow constant"}, {"X", "", "period"},
          {"n", "256", "initial grid"}, {"tol", "1e-9", "residual tolerance"},
          {"seed", "", "seed profile JSON (Newton from the seed instead of the KdV homotopy)"},
          {"frame", "physical", "physical or alpha_m2"}, out},
         "out", cmd_profile},
        {"continue", "continue a profile to new parameters",
         {in, {"F", "", "target F"}, {"nu", "", "target nu"}, {"q", "", "target q"}, {"X", "", "target X"},
          {"tol", "1e-9", "residual tolerance"}, {"max-n", "2048", "largest grid"},
          {"path-out", "", "CSV of the continuation path"}, out},
         "out", cmd_continue},
        {"spectrum", "Hill spectrum of a profile", {in, modes, xip, {"convention", "fundamental", "fundamental or doubled"}, r0, fover, fmt, out},
         "out", cmd_spectrum},
        {"evans", "Evans winding numbers on a contour",
         {in, {"contour", "semicircle:R=0.2", "circle:c=..,r=.. | semicircle:R=.. | half_annulus:r=..,R=.."},
          {"xi", "", "Floquet parameters (list or range)"}, {"xi-points", "1", "Floquet grid size when xi is empty"},
          tol, {"rel-jump", "0.2", "largest relative change between neighbours"},
          {"initial-points", "64", "initial contour points"}, {"max-points", "20000", "point budget per xi"}, fover, out},
         "out", cmd_evans},
        {"taylor", "Evans expansion at the origin",
         {in, {"R", "0", "circle radius (0: automatic)"}, {"K", "3", "largest power of exp(i xi X)"},
          {"n-cheb", "65", "quadrature nodes"}, tol, fover, out},
         "out", cmd_taylor},
        {"verdict", "stability verdict of a profile",
         {in, modes, xip, r0, {"re-tol", "1e-8", "real parts below this count as non-positive"},
          {"evans-xi", "3", "Floquet parameters for the Evans check"}, {"use-evans", "true", "run the Evans check"},
          {"report", "", "verdict JSON (stdout when omitted)"}},
         "report", cmd_verdict},
        {"sweep", "stability maps and boundary bisection",
         {{"mode", "map", "map or boundary"}, {"alpha", "-2", "scaling exponent"}, {"nu", "0.1", "viscosity"},
          {"q0", "0.4", "q0 of the scaling family"}, {"q-rule", "", "explicit q = coef*F^exp (overrides q0)"},
          {"F", "", "Froude numbers (list or range)"}, {"X", "", "periods for map mode"},
          {"x-rescaled", "false", "X values are rescaled periods X0"}, {"store", "", "JSON-lines result store"},
          {"timing", "false", "record wall-clock seconds"}, {"which", "lower", "lower or upper"},
          {"X-lo", "", "bracket start"}, {"X-hi", "", "bracket end"}, {"rel-tol", "1e-2", "bisection width"},
          {"n", "256", "profile grid"}, modes, xip, out},
         "out", cmd_sweep},
        {"fit", "power-law fit of a boundary CSV", {in, {"column", "lower", "lower or upper"}, out}, "out", cmd_fit},
        {"kdv", "KdV limit: period map and KdV-KS spectra",
         {{"k", "", "elliptic modulus"}, {"X", "", "period (k from the inverse map)"},
          {"delta", "", "KdV-KS parameter; spectrum when given"}, {"a0", "0", "cnoidal offset"},
          {"n", "256", "profile grid"}, {"modes", "161", "Fourier modes"}, {"xi-points", "41", "Floquet parameters"},
          r0, fmt, out},
         "out", cmd_kdv},
        {"limit-inf", "F to infinity limits",
         {{"mode", "alpha", "alpha or ham"}, {"q0", "0.4", "q0"}, {"X0", "", "rescaled period"}, {"nu", "0.1", "viscosity"},
          {"F-start", "10", "F of the physical starting wave"}, {"h-minus", "", "orbit minimum for ham mode"},
          {"n", "256", "grid"}, {"modes", "81", "Fourier modes"}, {"xi-points", "21", "Floquet parameters"}, r0,
          {"spectrum-out", "", "spectrum output"}, fmt, out},
         "out", cmd_limit},
    };
}

int exit_code(ErrorClass c) { return static_cast<int>(c); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    auto cmds = commands();
    for (auto& cmd : cmds) {
        cmd.keys.push_back({"threads", "0", "worker threads (0: ROLLWAVE_THREADS or 1)"});
        cmd.keys.push_back({"manifest", "", "manifest path (default: primary output + .manifest)"});
    }
    CLI::App app{"Roll wave profiles and their spectral stability"};
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value configuration file; flags win");
    std::vector<std::map<std::string, std::string>> storage(cmds.size());
    std::vector<std::map<std::string, CLI::Option*>> options(cmds.size());
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        for (const auto& k : cmds[i].keys) {
            auto* o = sub->add_option("--" + k.name, storage[i][k.name], k.help);
            if (!k.fallback.empty()) o->default_str(k.fallback);
            options[i][k.name] = o;
        }
        subs.push_back(sub);
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(ErrorClass::domain);
    }
    try {
        model::KeyValues file;
        std::string from_file;
        if (!config_path.empty()) {
            for (auto& [k, v] : model::parse_key_values(io::read_file(config_path))) {
                if (k == "command") {
                    from_file = v;
                    continue;
                }
                for (const auto& [k2, v2] : file)
                    if (k2 == k) throw DomainError("duplicate key '" + k + "' in " + config_path);
                file.emplace_back(k, v);
            }
        }
        std::size_t idx = cmds.size();
        for (std::size_t i = 0; i < cmds.size(); ++i)
            if (subs[i]->parsed()) idx = i;
        if (idx == cmds.size()) {
            for (std::size_t i = 0; i < cmds.size(); ++i)
                if (cmds[i].name == from_file) idx = i;
            if (idx == cmds.size())
                throw DomainError(from_file.empty() ? "no subcommand given" : "unknown command '" + from_file + "'");
        } else if (!from_file.empty() && from_file != cmds[idx].name) {
            throw DomainError("config is for '" + from_file + "', not '" + cmds[idx].name + "'");
        }
        const Command& cmd = cmds[idx];
        for (const auto& [k, v] : file)
            if (!options[idx].count(k)) throw DomainError("unknown key '" + k + "' for " + cmd.name);
        RunConfig cfg;
        cfg.command = cmd.name;
        for (const auto& k : cmd.keys) {
            std::string v = k.fallback;
            for (const auto& [fk, fv] : file)
                if (fk == k.name) v = fv;
            if (options[idx][k.name]->count() > 0) v = storage[idx][k.name];
            cfg.values.emplace_back(k.name, v);
        }
        cfg.threads = resolve_threads(static_cast<int>(integer(cfg, "threads")));
        for (auto& [k, v] : cfg.values)
            if (k == "threads") v = std::to_string(cfg.threads);
        // The manifest path is not part of the echoed configuration.
        std::string manifest_path = cfg.get("manifest");
        if (manifest_path.empty() && cfg.has(cmd.primary)) {
            std::error_code ec;
            const auto st = std::filesystem::status(cfg.get(cmd.primary), ec);
            if (ec || !std::filesystem::exists(st) || std::filesystem::is_regular_file(st))
                manifest_path = cfg.get(cmd.primary) + ".manifest";
        }
        for (auto& [k, v] : cfg.values)
            if (k == "manifest") v.clear();
        Context ctx{cfg, out, err};
        cmd.handler(ctx);
        if (manifest_path.empty())
            err << cfg.manifest();
        else
            io::write_atomic(manifest_path, cfg.manifest());
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.error_class());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_code(ErrorClass::internal);
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace rollwave::cli
