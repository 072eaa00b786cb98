#include "rollwave/sweep.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/io.hpp"
#include "rollwave/model.hpp"
#include "rollwave/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>

namespace rollwave::sweep {

using nlohmann::json;

double QRule::operator()(double F) const { return coef * std::pow(F, exponent); }

QRule QRule::scaling(double alpha, double q0) { return QRule{q0, model::q_exponent(alpha)}; }

std::string QRule::describe() const {
    if (exponent == 0.0) return model::format_double(coef);
    return model::format_double(coef) + "*F^" + model::format_double(exponent);
}

QRule parse_q_rule(const std::string& text) {
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw DomainError("bad q rule: " + text);
        }
        if (used != s.size() || !std::isfinite(v)) throw DomainError("bad q rule: " + text);
        return v;
    };
    const auto star = text.find("*F^");
    if (star == std::string::npos) return QRule{number(text), 0.0};
    QRule r{number(text.substr(0, star)), number(text.substr(star + 3))};
    if (!(r.coef > 0.0)) throw DomainError("q rule coefficient must be positive");
    return r;
}

// ---------------------------------------------------------------- probes

WaveProfile Prober::solve(const PhysicalParams& p) {
    const WaveProfile* best = nullptr;
    for (const auto& w : solved_) {
        const auto& a = w.params;
        if (a.F != p.F || a.nu != p.nu || a.q != p.q) continue;
        if (!best || std::abs(std::log(a.X / p.X)) < std::abs(std::log(best->params.X / p.X))) best = &w;
    }
    WaveProfile out;
    if (best) {
        PhysicalParams target = p;
        target.c = best->params.c;
        out = profile::continue_profile(*best, target, opt_.continuation).back();
    } else {
        profile::KdvHomotopyOptions h = opt_.homotopy;
        h.n = opt_.n;
        out = profile::solve_from_kdv(p, h);
    }
    solved_.push_back(out);
    if (solved_.size() > 16) solved_.erase(solved_.begin());
    return out;
}

Probe Prober::probe(const PhysicalParams& p) {
    Probe pr;
    pr.params = p;
    pr.profile = solve(p);
    pr.verdict = evans::verdict(pr.profile, opt_.verdict);
    return pr;
}

const char* which_name(Which w) { return w == Which::lower ? "lower" : "upper"; }

Which parse_which(const std::string& s) {
    if (s == "lower") return Which::lower;
    if (s == "upper") return Which::upper;
    throw DomainError("boundary must be lower or upper, got " + s);
}

std::optional<bool> side_stable(const evans::StabilityVerdict& v, Which which) {
    return which == Which::lower ? v.D2.holds : v.D1.holds;
}

// ---------------------------------------------------------------- bisection

namespace {

bool probe_side(Prober& prober, PhysicalParams p, Which which, std::vector<BisectStep>& history) {
    std::optional<bool> s;
    try {
        s = side_stable(prober.probe(p).verdict, which);
    } catch (const DomainError& e) {
        throw DomainError("probe at X = " + model::format_double(p.X) + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError("probe at X = " + model::format_double(p.X) + ": " + e.what());
    }
    if (!s) throw NumericalError("probe at X = " + model::format_double(p.X) + ": " + which_name(which) + " criterion undecided");
    history.push_back({p.X, *s});
    return *s;
}

}  // namespace

BoundaryResult boundary_bisect(double alpha, double F, double nu, const QRule& q, double X_lo, double X_hi,
                               Which which, const BisectOptions& opt) {
    if (!(X_lo > 0.0 && X_hi > X_lo)) throw DomainError("boundary_bisect needs 0 < X_lo < X_hi");
    if (!(opt.rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
    BoundaryResult r;
    r.which = which;
    r.alpha = alpha;
    r.F = F;
    r.nu = nu;
    r.q = q(F);
    PhysicalParams p;
    p.F = F;
    p.nu = nu;
    p.q = r.q;
    p.X = X_lo;
    p.validate();
    Prober prober(opt.probe);
    double lo = X_lo, hi = X_hi;
    p.X = lo;
    const bool s_lo = probe_side(prober, p, which, r.history);
    p.X = hi;
    const bool s_hi = probe_side(prober, p, which, r.history);
    if (s_lo == s_hi)
        throw NotBracketed(std::string(which_name(which)) + " criterion is " + (s_lo ? "stable" : "unstable") +
                           " at both X = " + model::format_double(lo) + " and X = " + model::format_double(hi));
    int probes = 2;
    while (hi / lo - 1.0 > opt.rel_tol) {
        if (probes >= opt.max_probes) throw NumericalError("bisection probe budget exhausted");
        p.X = std::sqrt(lo * hi);
        const bool s = probe_side(prober, p, which, r.history);
        ++probes;
        (s == s_lo ? lo : hi) = p.X;
    }
    r.X = std::sqrt(lo * hi);
    r.X_stable = s_lo ? lo : hi;
    r.X_unstable = s_lo ? hi : lo;
    return r;
}

std::string boundary_csv_header() { return "alpha,F,nu,q,X_lower,X_upper"; }

std::string boundary_csv_row(double alpha, double F, double nu, double q, std::optional<double> X_lower,
                             std::optional<double> X_upper) {
    auto f = [](double v) { return model::format_double(v); };
    return f(alpha) + "," + f(F) + "," + f(nu) + "," + f(q) + "," + (X_lower ? f(*X_lower) : "") + "," +
           (X_upper ? f(*X_upper) : "");
}

// ---------------------------------------------------------------- records

std::string SweepRecord::key() const {
    auto f = [](double v) { return model::format_double(v); };
    return f(alpha) + "|" + f(F) + "|" + f(nu) + "|" + f(q) + "|" + f(X);
}

namespace {

template <class T>
json opt_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

}  // namespace

std::string to_json_line(const SweepRecord& r) {
    json j;
    j["alpha"] = r.alpha;
    j["F"] = r.F;
    j["nu"] = r.nu;
    j["q"] = r.q;
    j["X"] = r.X;
    j["X0"] = r.X0;
    j["overall"] = r.overall;
    j["reason"] = r.reason;
    j["max_re"] = opt_json(r.max_re);
    j["witness_xi"] = opt_json(r.witness_xi);
    j["lower_stable"] = opt_json(r.lower_stable);
    j["upper_stable"] = opt_json(r.upper_stable);
    j["c"] = r.c;
    j["n"] = r.n;
    j["newton_iterations"] = r.newton_iterations;
    if (r.seconds) j["seconds"] = *r.seconds;
    return j.dump();
}

SweepRecord record_from_json(const std::string& line) {
    const json j = json::parse(line);
    SweepRecord r;
    r.alpha = j.at("alpha").get<double>();
    r.F = j.at("F").get<double>();
    r.nu = j.at("nu").get<double>();
    r.q = j.at("q").get<double>();
    r.X = j.at("X").get<double>();
    r.X0 = j.value("X0", 0.0);
    r.overall = j.at("overall").get<std::string>();
    r.reason = j.value("reason", std::string());
    r.max_re = opt_from<double>(j, "max_re");
    r.witness_xi = opt_from<double>(j, "witness_xi");
    r.lower_stable = opt_from<bool>(j, "lower_stable");
    r.upper_stable = opt_from<bool>(j, "upper_stable");
    r.c = j.value("c", 0.0);
    r.n = j.value("n", std::size_t{0});
    r.newton_iterations = j.value("newton_iterations", 0);
    r.seconds = opt_from<double>(j, "seconds");
    return r;
}

std::vector<SweepRecord> enumerate(const GridSpec& grid) {
    std::vector<SweepRecord> out;
    for (double F : grid.F) {
        const double scale = std::pow(F, model::X_exponent(grid.alpha));
        for (double x : grid.X) {
            SweepRecord r;
            r.alpha = grid.alpha;
            r.F = F;
            r.nu = grid.nu;
            r.q = grid.q(F);
            r.X = grid.x_is_rescaled ? x * scale : x;
            r.X0 = grid.x_is_rescaled ? x : x / scale;
            out.push_back(r);
        }
    }
    return out;
}

SweepRecord compute_record(const SweepRecord& key, const ProbeOptions& opt, bool record_timing) {
    SweepRecord r = key;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        PhysicalParams p;
        p.F = key.F;
        p.nu = key.nu;
        p.q = key.q;
        p.X = key.X;
        p.validate();
        Prober prober(opt);
        const Probe pr = prober.probe(p);
        const auto& v = pr.verdict;
        r.overall = evans::overall_name(v.overall);
        r.reason = v.reason;
        if (v.witness) {
            r.max_re = v.witness->max_re;
            r.witness_xi = v.witness->xi;
        }
        r.lower_stable = side_stable(v, Which::lower);
        r.upper_stable = side_stable(v, Which::upper);
        r.c = pr.profile.params.c;
        r.n = pr.profile.n();
        r.newton_iterations = pr.profile.newton_iterations;
    } catch (const Error& e) {
        r.overall = "failed";
        r.reason = e.what();
    }
    if (record_timing)
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

MapSummary stability_map(const GridSpec& grid, const std::string& path, std::vector<SweepRecord>& out,
                         const MapOptions& opt, const std::function<SweepRecord(const SweepRecord&)>& compute) {
    const std::vector<SweepRecord> keys = enumerate(grid);
    std::map<std::string, SweepRecord> store;
    std::vector<std::string> foreign;  // keys present in the store but not in this grid, in file order
    if (!path.empty() && io::exists(path)) {
        std::istringstream in(io::read_file(path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            SweepRecord r;
            try {
                r = record_from_json(line);
            } catch (const std::exception&) {
                continue;  // torn final line from an interrupted run
            }
            if (store.emplace(r.key(), r).second) foreign.push_back(r.key());
        }
    }
    std::map<std::string, std::size_t> in_grid;
    for (std::size_t i = 0; i < keys.size(); ++i) in_grid.emplace(keys[i].key(), i);
    std::erase_if(foreign, [&](const std::string& k) { return in_grid.count(k) > 0; });

    std::vector<std::size_t> todo;
    std::map<std::string, bool> queued;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string k = keys[i].key();
        if (store.count(k) || queued.count(k)) continue;
        queued.emplace(k, true);
        todo.push_back(i);
    }
    MapSummary s;
    s.total = in_grid.size();
    s.skipped = s.total - todo.size();

    ProbeOptions probe = opt.probe;
    const int threads = resolve_threads(opt.threads);
    if (threads > 1) probe.verdict.threads = 1;
    std::mutex mu;
    parallel_for(todo.size(), threads, [&](std::size_t j) {
        const SweepRecord& key = keys[todo[j]];
        SweepRecord r = compute ? compute(key) : compute_record(key, probe, opt.record_timing);
        const std::string line = to_json_line(r);
        std::lock_guard<std::mutex> lock(mu);
        if (!path.empty()) io::append_line(path, line);
        store[r.key()] = r;
    });
    s.computed = todo.size();

    out.clear();
    std::string text;
    std::vector<std::pair<std::size_t, std::string>> order;
    for (const auto& [k, i] : in_grid) order.emplace_back(i, k);
    std::sort(order.begin(), order.end());
    for (const auto& [i, k] : order) {
        const SweepRecord& r = store.at(k);
        if (r.overall == "failed") ++s.failed;
        out.push_back(r);
        text += to_json_line(r) + "\n";
    }
    for (const auto& k : foreign) text += to_json_line(store.at(k)) + "\n";
    if (!path.empty()) io::write_atomic(path, text);
    return s;
}

// ---------------------------------------------------------------- power-law fit

BoundaryFit powerlaw_fit(const std::vector<FitPoint>& points) {
    const std::size_t n = points.size();
    if (n < 4) throw DomainError("power-law fit needs at least 4 boundary points");
    double fmin = INFINITY, fmax = 0.0;
    for (const auto& p : points) {
        if (!(p.F > 0.0 && p.q > 0.0 && p.X > 0.0)) throw DomainError("power-law fit needs positive F, q and X");
        fmin = std::min(fmin, p.F);
        fmax = std::max(fmax, p.F);
    }
    if (fmax < 2.0 * fmin) throw DomainError("power-law fit needs F spanning at least a factor 2");

    Eigen::MatrixXd A(static_cast<Eigen::Index>(n), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        A(r, 0) = std::log(points[i].F);
        A(r, 1) = std::log(points[i].q);
        A(r, 2) = 1.0;
        y(r) = std::log(points[i].X);
    }
    BoundaryFit fit;
    fit.points = n;
    // Drop b2, then b1, until the remaining columns have full rank.
    std::vector<int> cols{0, 1, 2};
    auto rank_of = [&](const std::vector<int>& c) {
        Eigen::MatrixXd M(A.rows(), static_cast<Eigen::Index>(c.size()));
        for (std::size_t k = 0; k < c.size(); ++k) {
            Eigen::VectorXd col = A.col(c[k]);
            M.col(static_cast<Eigen::Index>(k)) = col / std::max(col.norm(), 1e-300);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const auto& sv = svd.singularValues();
        int r = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > 1e-10 * sv(0);
        return r;
    };
    fit.rank = rank_of(cols);
    std::string note;
    for (int drop : {1, 0}) {
        if (rank_of(cols) == static_cast<int>(cols.size())) break;
        cols.erase(std::find(cols.begin(), cols.end(), drop));
        fit.identified[static_cast<std::size_t>(drop)] = false;
        note += std::string(note.empty() ? "" : "; ") + (drop == 1 ? "b2" : "b1") + " not identifiable, fixed to 0";
    }
    if (!fit.identified[1] && fit.identified[0]) {
        // log q = e log F + g over the data; b1 and b3 absorb the q dependence.
        Eigen::MatrixXd B(A.rows(), 2);
        B.col(0) = A.col(0);
        B.col(1) = A.col(2);
        const Eigen::Vector2d eg = B.colPivHouseholderQr().solve(A.col(1));
        note += " (log q = " + model::format_double(eg(0)) + " log F + " + model::format_double(eg(1)) +
                " on the data; b1 and b3 absorb the q dependence)";
    }
    fit.note = note;

    Eigen::MatrixXd M(A.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) M.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
    const Eigen::VectorXd b = M.colPivHouseholderQr().solve(y);
    std::array<double, 3> coef{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < cols.size(); ++k) coef[static_cast<std::size_t>(cols[k])] = b(static_cast<Eigen::Index>(k));
    fit.b1 = coef[0];
    fit.b2 = coef[1];
    fit.b3 = coef[2];

    const Eigen::VectorXd res = y - M * b;
    const auto dof = static_cast<double>(static_cast<Eigen::Index>(n) - M.cols());
    if (dof > 0) {
        const double s2 = res.squaredNorm() / dof;
        const Eigen::MatrixXd cov = s2 * (M.transpose() * M).inverse();
        for (std::size_t k = 0; k < cols.size(); ++k)
            fit.std_error[static_cast<std::size_t>(cols[k])] = std::sqrt(std::max(0.0, cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))));
    }
    double sum_abs = 0.0, sum_rel = 0.0;
    for (Eigen::Index i = 0; i < res.size(); ++i) {
        const double a = std::abs(res(i));
        const double rel = y(i) != 0.0 ? a / std::abs(y(i)) : a;
        fit.max_abs_error = std::max(fit.max_abs_error, a);
        fit.max_rel_error = std::max(fit.max_rel_error, rel);
        sum_abs += a;
        sum_rel += rel;
    }
    fit.mean_abs_error = sum_abs / static_cast<double>(n);
    fit.mean_rel_error = sum_rel / static_cast<double>(n);
    return fit;
}

std::string to_json(const BoundaryFit& fit) {
    json j;
    j["b1"] = fit.b1;
    j["b2"] = fit.b2;
    j["b3"] = fit.b3;
    j["identified"] = {fit.identified[0], fit.identified[1], fit.identified[2]};
    j["std_error"] = {fit.std_error[0], fit.std_error[1], fit.std_error[2]};
    j["rank"] = fit.rank;
    j["note"] = fit.note;
    j["max_abs_error"] = fit.max_abs_error;
    j["mean_abs_error"] = fit.mean_abs_error;
    j["max_rel_error"] = fit.max_rel_error;
    j["mean_rel_error"] = fit.mean_rel_error;
    j["points"] = fit.points;
    return j.dump(1);
}

}  // namespace rollwave::sweep
