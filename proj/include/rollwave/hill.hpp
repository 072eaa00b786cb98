#pragma once

#include "rollwave/linearize.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace rollwave::hill {

using cd = std::complex<double>;

// fundamental: xi in [-pi/X, pi/X); doubled: Fourier basis of period 2X, xi in [-pi/2X, pi/2X).
enum class Convention { fundamental, doubled };

struct XiSpectrum {
    double xi = 0.0;
    std::vector<cd> eigenvalues;  // sorted by real part, then imaginary part
    bool ok = true;
    std::string error;
    double backward_error = 0.0;  // eps * ||A||_F bound for the standard problem solved
};

struct SpectralCloud {
    std::string problem;
    double period = 0.0;
    int modes = 0;  // 2N + 1
    int components = 1;
    Convention convention = Convention::fundamental;
    std::vector<XiSpectrum> spectra;  // ascending xi
};

struct Matrices {
    Eigen::MatrixXcd M1;
    Eigen::VectorXcd M2diag;  // empty for the identity
    Eigen::MatrixXcd M2;      // full mass matrix when not diagonal, else empty
};

Matrices assemble(const linearize::SpectralProblem& problem, int modes, double xi,
                  Convention conv = Convention::fundamental);

// Eigenvalues of M2^-1 M1 by a dense complex Schur-based solver.
std::vector<cd> eigenvalues(const Matrices& m, double* backward_error = nullptr);

// `points` values spaced evenly over the convention's Floquet cell, left end included.
std::vector<double> xi_grid(double period, int points, Convention conv = Convention::fundamental);

struct SpectrumOptions {
    Convention convention = Convention::fundamental;
    int threads = 1;
};
SpectralCloud spectrum(const linearize::SpectralProblem& problem, int modes, const std::vector<double>& xi,
                       const SpectrumOptions& opt = {});

struct UnstableWitness {
    double max_re = 0.0;
    double xi = 0.0;
    cd lambda;
};
// Largest real part outside |lambda| <= r0; nullopt when every eigenvalue is excluded.
std::optional<UnstableWitness> max_unstable(const SpectralCloud& cloud, double r0);

// CSV with header xi,re,im.
std::string to_csv(const SpectralCloud& cloud);

}  // namespace rollwave::hill
