#pragma once

#include "rollwave/hill.hpp"
#include "rollwave/wave_profile.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace rollwave::kdv {

// Complete elliptic integrals and Jacobi cn for modulus k (not parameter m = k^2).
// The *_c variants take the complementary modulus k' = sqrt(1 - k^2) directly,
// which keeps full relative accuracy as k -> 1.
double elliptic_K(double k);
double elliptic_E(double k);
double elliptic_K_c(double k, double kc);
double elliptic_E_c(double k, double kc);
double jacobi_cn(double x, double k);
double complementary_modulus(double k);

// Selection function G(k) and the limiting period X(k) = 2K/G.
double selection_kappa(double k);
double selection_kappa_c(double k, double kc);
double period_of_k(double k);
double period_of_kc(double k, double kc);
// Inverse of period_of_k on X > 2 pi by bisection in log k'.
double k_of_period(double X, double tol = 1e-10);

struct CnoidalWave {
    double a0 = 0.0;
    double k = 0.0;
    double kappa = 0.0;
    double sigma0 = 0.0;
    double qtilde = 0.0;
    double X = 0.0;
    // Samples of T0 on n uniform nodes over [0, X), crest at node 0.
    Eigen::VectorXd T0;
};

CnoidalWave cnoidal_profile(double a0, double k, double kappa, std::size_t n);
// Same wave with kappa = G(k).
CnoidalWave selected_cnoidal(double a0, double k, std::size_t n);

// Integral of T0 (T0'' + T0'''') over one period.
double selection_residual(const CnoidalWave& w);

// Odd periodic solution of -T1''' - ((T0 - sigma0) T1)' = T0'' + T0'''' with zero
// projection on T0'. Throws NumericalError when the solvability condition fails.
Eigen::VectorXd corrector_T1(const CnoidalWave& w, double solvability_tol = 1e-8);
// Residual of the corrector equation in max norm.
double corrector_residual(const CnoidalWave& w, const Eigen::VectorXd& T1);

struct AsymptoticWave {
    WaveProfile profile;  // predicted tau samples with (F, nu, q, c, X)
    double delta = 0.0;
    double tau0 = 0.0;
    double delta_tilde = 0.0;
    CnoidalWave cnoidal;
};

// Predicted roll wave at F = 2 + delta^2 built from T0 + delta_tilde T1.
AsymptoticWave asymptotic_rollwave(double delta, double a0, double k, double tau0, double nu, std::size_t n);
// Outflow constant of the predicted wave (closed form in tau0).
double asymptotic_q(double delta, double a0, double k, double tau0);
// tau0 for which the predicted wave has the given outflow q.
double asymptotic_tau0(double delta, double a0, double k, double q);

// Periodic KdV-KS traveling wave v'' + v^2/2 - sigma v + delta (v' + v''') = const with
// period X(k), mean fixed to that of T0 + delta T1, refined by Newton from T0 + delta T1.
struct KdvKsWave {
    double delta = 0.0;
    double sigma = 0.0;
    double X = 0.0;
    Eigen::VectorXd v;
    double residual = 0.0;
};
KdvKsWave kdvks_profile(double delta, double a0, double k, std::size_t n);

// Bloch problem Lambda z = -((T - sigma) z)' - z''' - delta (z'' + z'''').
linearize::SpectralProblem kdvks_problem(const Eigen::VectorXd& T, double sigma, double delta, double X);

struct KdvKsSpectrumOptions {
    std::size_t n = 256;          // profile grid
    bool refine_profile = true;   // false: use T0 + delta T1 directly
    int threads = 1;
};
hill::SpectralCloud kdvks_hill_spectrum(double delta, double a0, double k, int modes,
                                        const std::vector<double>& xi_grid,
                                        const KdvKsSpectrumOptions& opt = {});

}  // namespace rollwave::kdv
