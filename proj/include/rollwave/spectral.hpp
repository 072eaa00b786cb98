#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

// Trigonometric tools on uniform periodic grids x_j = j X / n, n a power of two.
namespace rollwave::spectral {

using cd = std::complex<double>;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

// Signed wavenumber of FFT slot k on an n-point grid; the Nyquist slot maps to -n/2.
long wavenumber(std::size_t k, std::size_t n);

// Normalized forward transform: c_k = (1/n) sum_j f_j exp(-2 pi i j k / n).
Eigen::VectorXcd forward(const Eigen::VectorXd& f);
Eigen::VectorXcd forward(const Eigen::VectorXcd& f);
// Inverse of forward(); the real part is returned for real data.
Eigen::VectorXcd inverse(const Eigen::VectorXcd& c);
Eigen::VectorXd inverse_real(const Eigen::VectorXcd& c);

// Spectral derivative of the given order; the Nyquist mode is dropped for odd orders.
Eigen::VectorXd derivative(const Eigen::VectorXd& f, double period, int order = 1);

// Trigonometric interpolation onto m uniform nodes (zero padding or truncation).
Eigen::VectorXd resample(const Eigen::VectorXd& f, std::size_t m);

// Dense Fourier differentiation matrices (order 1 or 2) for period X.
Eigen::MatrixXd diff_matrix(std::size_t n, double period, int order);

// Largest |c_k| in the upper quarter of the spectrum relative to max |c_k|, k != 0.
double tail_ratio(const Eigen::VectorXd& f);

double mean(const Eigen::VectorXd& f);

// Evaluates a group of real trigonometric interpolants sharing one grid at
// arbitrary points. Reentrant; evaluation cost is O(n) per point for the group.
class InterpolantGroup {
public:
    InterpolantGroup() = default;
    InterpolantGroup(const std::vector<Eigen::VectorXd>& samples, double period);

    std::size_t size() const { return coeffs_.size(); }
    double period() const { return period_; }
    // Writes f_i(x) into out[0..size()).
    void evaluate(double x, double* out) const;
    std::vector<double> operator()(double x) const;

private:
    double period_ = 1.0;
    std::size_t n_ = 0;
    std::vector<std::vector<cd>> coeffs_;  // k = 0 .. n/2
};

}  // namespace rollwave::spectral
