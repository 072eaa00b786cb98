#pragma once

#include "rollwave/wave_profile.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace rollwave::profile {

struct HopfData {
    double tau0 = 0.0;
    double speed = 0.0;      // tau0^(-3/2)/F
    double frequency = 0.0;  // tau0^(5/4) nu^(-1/2) sqrt(F-2)
    double period = 0.0;
};
HopfData hopf_data(double tau0, double F, double nu);

// Constant state tau0 with u0 = tau0^(-1/2), q = u0 + c tau0, sampled on n nodes.
WaveProfile equilibrium(double tau0, double F, double nu, double c, double X, std::size_t n = 8);

enum class FreeParameter { c, q };

struct SolveOptions {
    double tol = 1e-9;         // max-norm residual of the tau'' form
    int max_iterations = 40;
    FreeParameter free = FreeParameter::c;
    double min_rcond = 1e-15;
};

// Residual of tau'' = (-tau^2/(c nu)) (c^2 tau' - p tau'/tau^3 - 1 + tau (q - e c tau)^2 - 2 c nu tau'^2/tau^3)
// at the nodes of `p`, for its parameters and frame.
Eigen::VectorXd residual(const WaveProfile& p);
double residual_norm(const WaveProfile& p);

// Newton-collocation solve at `target` (frame and grid taken from `seed`). The phase
// condition <tau - seed, seed'> = 0 pins translation; c (or q) is an unknown.
WaveProfile solve_profile(const PhysicalParams& target, const WaveProfile& seed, const SolveOptions& opt = {});

using ParamPath = std::function<PhysicalParams(double s)>;

struct ContinuationOptions {
    double initial_step = 0.05;
    double min_step = 1e-4;
    double max_step = 0.25;
    SolveOptions solve;
    bool arclength_fallback = true;
    int max_arclength_steps = 400;
    bool adapt_grid = true;
    double tail_tol = 1e-10;
    std::size_t max_n = 2048;
    bool keep_path = true;
};

// Natural-parameter continuation along path(s), s in [0, 1], with step halving and a
// pseudo-arclength fallback. Throws ContinuationStalled with the last good s.
std::vector<WaveProfile> continue_along(const WaveProfile& from, const ParamPath& path,
                                        const ContinuationOptions& opt = {});
// Straight-line path in (F, nu, q, X) from the profile's parameters to `to`.
std::vector<WaveProfile> continue_profile(const WaveProfile& from, const PhysicalParams& to,
                                          const ContinuationOptions& opt = {});

// Physical profile at (F, nu, q, X) reached from a weakly nonlinear wave at F = 2 + 0.01
// along F(s) = 2 + delta(s)^2 with X(s) scaled to keep the KdV period fixed.
struct KdvHomotopyOptions {
    std::size_t n = 256;
    double delta0 = 0.1;
    double a0 = 0.0;
    ContinuationOptions continuation;
};
WaveProfile solve_from_kdv(const PhysicalParams& target, const KdvHomotopyOptions& opt = {});

// Same profile expressed in the alpha = -2 frame (a = F^2 tau, y = x/F^2) and back.
WaveProfile to_alpha_m2_frame(const WaveProfile& physical);
WaveProfile to_physical_frame(const WaveProfile& rescaled);

// Periodic solution of c0 nu (a^-2 a')' + (c0^2 - a^-3) a' - 1 + a (q0 - c0 a/F)^2 = 0 with
// period X0 (F = infinity gives the limiting equation). The seed is an alpha_m2-frame profile.
WaveProfile limit_profile_alpha_m2(double q0, double X0, double nu, const WaveProfile& seed, double F,
                                   const ContinuationOptions& opt = {});
// Limiting wave at (q0, X0, nu) from a physical wave at F_start continued in 1/F to 0.
WaveProfile limit_profile_from_physical(double q0, double X0, double nu, double F_start, std::size_t n = 256,
                                        double F_end = 0.0);

// Orbit of h'' = 1/h - 1 through h_minus, sampled on n nodes.
HamOrbit ham_orbit(double h_minus, std::size_t n = 256);
double ham_period(double h_minus);

struct SelectionForms {
    double c0_squared = 0.0;  // integral of a^-5 a'^2 over integral of a^-2 a'^2
    double form_ratio = 0.0;  // -(1/2) int (1/a)'(a^-2)' / int (1/a)' a'
    double form_third = 0.0;  // int a^-1 ((1/a)')^2 / int a^2 ((1/a)')^2
    double form_h = 0.0;      // q0^6 int h h'^2 / int h^-2 h'^2
    double printed_third = 0.0;  // int a^-1 ((1/a)')^2 / int ((1/a)')^2; not a selection form
    double min_inv_a3 = 0.0;
    double max_inv_a3 = 0.0;
};
// Wavespeed selection for a = (q0^2 h)^-1; throws NumericalError for a constant orbit.
SelectionForms ham_selection_forms(const HamOrbit& orbit, double q0 = 1.0);
double ham_selection_c0(const HamOrbit& orbit, double q0 = 1.0);

// JSON with keys params, frame, n, tau, dtau, c, q, residual, provenance.
std::string to_json(const WaveProfile& p);
WaveProfile from_json(const std::string& text);

}  // namespace rollwave::profile
