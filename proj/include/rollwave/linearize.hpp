#pragma once

#include "rollwave/wave_profile.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rollwave::linearize {

using cd = std::complex<double>;

enum class ProblemKind { physical, alpha_m2_finite, alpha_m2_limit, ham_limit, kdvks, constant };

const char* kind_name(ProblemKind k);

// Coefficient functions sampled on m uniform nodes of one period.
//
// Second-order (Hill) form for v with `components` entries:
//   sum_o op[o] d^o v = lambda sum_o mass[o] d^o v,
// op[o][i * components + j] holding the samples of entry (i, j); an empty vector is zero.
// An empty `mass` means the identity.
//
// First-order (Evans) form of dimension d: Z' = (A0 + lambda A1) Z, entries row major.
struct Coefficients {
    std::size_t m = 0;
    std::vector<std::vector<Eigen::VectorXd>> op;
    std::vector<std::vector<Eigen::VectorXd>> mass;
    std::vector<Eigen::VectorXd> A0;
    std::vector<Eigen::VectorXd> A1;
};

struct SpectralProblem {
    ProblemKind kind = ProblemKind::physical;
    double period = 1.0;
    int components = 1;
    int dim = 0;                 // first-order dimension, 0 when unavailable
    std::size_t native_grid = 0; // grid the coefficients are resolved on
    std::string description;
    // Pure and reentrant; m must be a power of two.
    bool identity_mass = true;
    std::function<Coefficients(std::size_t m)> sample;
    // Filled lazily by the Evans integrator; shared by copies made after filling.
    mutable std::shared_ptr<const void> first_order_cache;
};

// Two-field linearization shared by the physical and rescaled problems:
//   lambda a = c a' + b'
//   lambda b = c b' + (P a)' - Q a - S b + nu (W b')'
// with P = tau^-3 (p + 2 c nu tau'), Q = ubar^2, S = 2 e tau ubar, W = tau^-2, ubar = q - e c tau.
struct TwoField {
    double c = 0.0;
    double nu = 0.0;
    Eigen::VectorXd P, dP, Q, S, W, dW;
};
TwoField two_field(const WaveProfile& profile, std::size_t m);

// Physical Bloch problem in (tau, u); carries both the Hill and the 3x3 first-order form
// with Z = (tau, u, tau^-2 u').
SpectralProblem bloch_coeffs(const WaveProfile& profile);
SpectralProblem evans_matrix(const WaveProfile& profile);

// alpha = -2 problems; `profile` is in the alpha_m2 frame and F overrides its F
// (infinity selects the limiting problem). In these variables lambda equals the
// physical lambda.
SpectralProblem limit_matrices_alpha_m2(const WaveProfile& profile, double F);

// Lambda a' = a'' + h^-2 a over period X_mu: Hill form with mass d/dx, first-order
// form A = [[0, 1], [-h^-2, Lambda]].
SpectralProblem ham_limit_operator(const HamOrbit& orbit);

// Constant-coefficient problem of the constant state tau0 under (F, nu, q, c).
SpectralProblem constant_problem(double tau0, const PhysicalParams& p, double period);

// Roots lambda of the plane-wave symbol at wavenumber eta for the constant state tau0.
std::array<cd, 2> constant_dispersion(double tau0, const PhysicalParams& p, double eta);

// First-order matrix A0 + lambda A1 at node j of the given samples.
Eigen::MatrixXcd first_order_matrix(const Coefficients& co, int dim, std::size_t j, cd lambda);

// Conversions between spectral parameters of the Hamiltonian limit:
// Lambda = X_mu * Lambda_check and lambda = F^(-1/2) Lambda.
cd ham_check_to_Lambda(cd Lambda_check, double X_mu);
cd Lambda_to_lambda(cd Lambda, double F);

}  // namespace rollwave::linearize
