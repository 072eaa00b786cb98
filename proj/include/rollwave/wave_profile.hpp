#pragma once

#include "rollwave/model.hpp"

#include <Eigen/Dense>

#include <string>

namespace rollwave {

// Variables a profile is expressed in. In the alpha_m2 frame tau stands for the
// rescaled a = F^2 tau, x for y = x/F^2, q for q0 and c for c0; F may be infinite.
enum class Frame { physical, alpha_m2 };

// Coefficients of the profile equation
//   c nu (tau^-2 tau')' + (c^2 - p tau^-3) tau' - 1 + tau (q - e c tau)^2 = 0,
// with (p, e) = (F^-2, 1) physically and (1, 1/F) in the alpha_m2 frame.
struct EquationCoefficients {
    double p = 0.0;
    double e = 1.0;
};

// Periodic profile tau on n uniform nodes over [0, X); u = q - e c tau is implied.
struct WaveProfile {
    PhysicalParams params;
    Frame frame = Frame::physical;
    Eigen::VectorXd tau;
    Eigen::VectorXd dtau;
    double residual_norm = 0.0;
    int newton_iterations = 0;
    std::string provenance;

    std::size_t n() const { return static_cast<std::size_t>(tau.size()); }
    double node(std::size_t j) const { return params.X * static_cast<double>(j) / static_cast<double>(n()); }
    EquationCoefficients coefficients() const;
    Eigen::VectorXd u() const;
    double amplitude() const { return tau.maxCoeff() - tau.minCoeff(); }
};

// Periodic orbit of h'' = 1/h - 1 at energy mu = h - ln h + h'^2/2.
struct HamOrbit {
    double h_minus = 1.0;
    double h_plus = 1.0;
    double mu = 1.0;
    double X_mu = 0.0;
    double c0_squared = 0.0;
    // Samples over one period [0, X_mu), h_minus at node 0.
    Eigen::VectorXd h;
    Eigen::VectorXd dh;
};

namespace model {

// min over nodes of F^-2 - 2 nu u_x with u_x = -c tau' (physical frame).
double slope_margin(const WaveProfile& p);
// Integral of tau over one period.
double eulerian_period(const WaveProfile& p);

}  // namespace model
}  // namespace rollwave
