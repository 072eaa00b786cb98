#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rollwave {

// Wave parameters in Lagrangian variables: Froude number F, viscosity nu,
// outflow constant q, speed c and Lagrangian period X.
struct PhysicalParams {
    double F = 0.0;
    double nu = 0.0;
    double q = 0.0;
    double c = 0.0;
    double X = 0.0;
    std::optional<double> tau0;

    bool roll_wave_regime() const { return F > 2.0; }
    // Throws DomainError when F, nu, X (or tau0 if present) are not positive.
    void validate() const;
};

// Constants of the large-F family tau = a F^alpha, c = c0 F^(-1-3 alpha/2),
// X = X0 F^(-1/2-5 alpha/4), q = q0 F^(-alpha/2), k = k0 F^(1/2+5 alpha/4).
struct ScalingFamily {
    double alpha = 0.0;
    double q0 = 0.0;
    double c0 = 0.0;
    double k0 = 0.0;
    double X0 = 0.0;

    void validate() const;
};

namespace model {

double q_exponent(double alpha);  // -alpha/2
double c_exponent(double alpha);  // -1 - 3 alpha/2
double X_exponent(double alpha);  // -1/2 - 5 alpha/4

PhysicalParams scale_to_physical(const ScalingFamily& fam, double F, double nu);
ScalingFamily physical_to_scaling(const PhysicalParams& p, double alpha);

// Constant states and Hopf data.
double equilibrium_u(double tau0);                       // tau0^(-1/2)
double equilibrium_q(double tau0, double c);             // u0 + c tau0
double hopf_speed(double tau0, double F);                // tau0^(-3/2)/F
double reference_speed(double tau0);                     // tau0^(-3/2)/2
double hopf_frequency(double tau0, double F, double nu); // tau0^(5/4) nu^(-1/2) sqrt(F-2)
double hopf_period(double tau0, double F, double nu);    // 2 pi / frequency
double hopf_tau0(double q, double F);                    // ((1 + 1/F)/q)^2

// key = value text blocks with keys F, nu, q, c, X, tau0, alpha, q0, c0, k0, X0.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(const std::string& text);
std::string format_double(double v);
std::string to_key_value(const PhysicalParams& p, const std::optional<ScalingFamily>& fam = std::nullopt);

struct ParsedParams {
    std::map<std::string, double> values;
    PhysicalParams params() const;
    std::optional<ScalingFamily> family() const;
};
ParsedParams parse_params(const std::string& text);

}  // namespace model
}  // namespace rollwave
