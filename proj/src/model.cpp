#include "rollwave/model.hpp"

#include "rollwave/errors.hpp"
#include "rollwave/wave_profile.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

namespace rollwave {

void PhysicalParams::validate() const {
    if (!(F > 0.0)) throw DomainError("F must be positive");
    if (!(nu > 0.0)) throw DomainError("nu must be positive");
    if (!(X > 0.0)) throw DomainError("X must be positive");
    if (tau0 && !(*tau0 > 0.0)) throw DomainError("tau0 must be positive");
}

void ScalingFamily::validate() const {
    if (!(alpha >= -2.0)) throw DomainError("alpha must be >= -2");
}

namespace model {

double q_exponent(double alpha) { return -alpha / 2.0; }
double c_exponent(double alpha) { return -1.0 - 1.5 * alpha; }
double X_exponent(double alpha) { return -0.5 - 1.25 * alpha; }

PhysicalParams scale_to_physical(const ScalingFamily& fam, double F, double nu) {
    if (!(F > 0.0)) throw DomainError("F must be positive");
    fam.validate();
    PhysicalParams p;
    p.F = F;
    p.nu = nu;
    p.q = fam.q0 * std::pow(F, q_exponent(fam.alpha));
    p.c = fam.c0 * std::pow(F, c_exponent(fam.alpha));
    p.X = fam.X0 * std::pow(F, X_exponent(fam.alpha));
    return p;
}

ScalingFamily physical_to_scaling(const PhysicalParams& p, double alpha) {
    if (!(p.F > 0.0)) throw DomainError("F must be positive");
    ScalingFamily fam;
    fam.alpha = alpha;
    fam.validate();
    fam.q0 = p.q / std::pow(p.F, q_exponent(alpha));
    fam.c0 = p.c / std::pow(p.F, c_exponent(alpha));
    fam.X0 = p.X / std::pow(p.F, X_exponent(alpha));
    fam.k0 = 1.0 / fam.X0;
    return fam;
}

double equilibrium_u(double tau0) { return 1.0 / std::sqrt(tau0); }
double equilibrium_q(double tau0, double c) { return equilibrium_u(tau0) + c * tau0; }
double hopf_speed(double tau0, double F) { return std::pow(tau0, -1.5) / F; }
double reference_speed(double tau0) { return 0.5 * std::pow(tau0, -1.5); }

double hopf_frequency(double tau0, double F, double nu) {
    if (!(F > 2.0)) throw DomainError("Hopf frequency requires F > 2");
    return std::pow(tau0, 1.25) / std::sqrt(nu) * std::sqrt(F - 2.0);
}

double hopf_period(double tau0, double F, double nu) {
    return 2.0 * std::numbers::pi / hopf_frequency(tau0, F, nu);
}

double hopf_tau0(double q, double F) {
    if (!(q > 0.0)) throw DomainError("q must be positive");
    const double r = (1.0 + 1.0 / F) / q;
    return r * r;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DomainError("line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw DomainError("line " + std::to_string(lineno) + ": empty key or value");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::string to_key_value(const PhysicalParams& p, const std::optional<ScalingFamily>& fam) {
    std::string s;
    auto put = [&](const char* k, double v) { s += std::string(k) + " = " + format_double(v) + "\n"; };
    put("F", p.F);
    put("nu", p.nu);
    put("q", p.q);
    put("c", p.c);
    put("X", p.X);
    if (p.tau0) put("tau0", *p.tau0);
    if (fam) {
        put("alpha", fam->alpha);
        put("q0", fam->q0);
        put("c0", fam->c0);
        put("k0", fam->k0);
        put("X0", fam->X0);
    }
    return s;
}

ParsedParams parse_params(const std::string& text) {
    static const char* allowed[] = {"F", "nu", "q", "c", "X", "tau0", "alpha", "q0", "c0", "k0", "X0"};
    ParsedParams out;
    for (const auto& [k, v] : parse_key_values(text)) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw DomainError("unknown parameter key '" + k + "'");
        if (out.values.count(k)) throw DomainError("duplicate parameter key '" + k + "'");
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(v, &used);
        } catch (const std::exception&) {
            throw DomainError("value of '" + k + "' is not a number");
        }
        if (used != v.size()) throw DomainError("value of '" + k + "' is not a number");
        out.values[k] = d;
    }
    return out;
}

PhysicalParams ParsedParams::params() const {
    PhysicalParams p;
    auto get = [&](const char* k, double& dst) {
        auto it = values.find(k);
        if (it != values.end()) dst = it->second;
    };
    get("F", p.F);
    get("nu", p.nu);
    get("q", p.q);
    get("c", p.c);
    get("X", p.X);
    if (auto it = values.find("tau0"); it != values.end()) p.tau0 = it->second;
    return p;
}

std::optional<ScalingFamily> ParsedParams::family() const {
    if (!values.count("alpha")) return std::nullopt;
    ScalingFamily f;
    f.alpha = values.at("alpha");
    auto get = [&](const char* k, double& dst) {
        auto it = values.find(k);
        if (it != values.end()) dst = it->second;
    };
    get("q0", f.q0);
    get("c0", f.c0);
    get("k0", f.k0);
    get("X0", f.X0);
    return f;
}

double slope_margin(const WaveProfile& p) {
    const double base = 1.0 / (p.params.F * p.params.F);
    double m = p.dtau.size() ? std::numeric_limits<double>::infinity() : base;
    for (Eigen::Index j = 0; j < p.dtau.size(); ++j) {
        const double ux = -p.params.c * p.dtau[j];
        m = std::min(m, base - 2.0 * p.params.nu * ux);
    }
    return m;
}

double eulerian_period(const WaveProfile& p) { return p.params.X * p.tau.mean(); }

}  // namespace model

EquationCoefficients WaveProfile::coefficients() const {
    if (frame == Frame::physical) return {1.0 / (params.F * params.F), 1.0};
    return {1.0, std::isinf(params.F) ? 0.0 : 1.0 / params.F};
}

Eigen::VectorXd WaveProfile::u() const {
    const double e = coefficients().e;
    return (params.q - e * params.c * tau.array()).matrix();
}

namespace model {

}  // namespace model
}  // namespace rollwave
