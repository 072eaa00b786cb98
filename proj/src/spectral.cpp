#include "rollwave/spectral.hpp"

#include "rollwave/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace rollwave::spectral {

namespace {

Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
}

void require_grid(std::size_t n) {
    if (!is_power_of_two(n) || n < 4)
        throw DomainError("grid size must be a power of two >= 4, got " + std::to_string(n));
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

long wavenumber(std::size_t k, std::size_t n) {
    return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

Eigen::VectorXcd forward(const Eigen::VectorXcd& f) {
    Eigen::VectorXcd c;
    engine().fwd(c, f);
    return c / static_cast<double>(f.size());
}

Eigen::VectorXcd forward(const Eigen::VectorXd& f) { return forward(Eigen::VectorXcd(f.cast<cd>())); }

Eigen::VectorXcd inverse(const Eigen::VectorXcd& c) {
    Eigen::VectorXcd f;
    engine().inv(f, c);
    return f * static_cast<double>(c.size());
}

Eigen::VectorXd inverse_real(const Eigen::VectorXcd& c) { return inverse(c).real(); }

Eigen::VectorXd derivative(const Eigen::VectorXd& f, double period, int order) {
    const std::size_t n = f.size();
    require_grid(n);
    Eigen::VectorXcd c = forward(f);
    const double w = 2.0 * std::numbers::pi / period;
    for (std::size_t k = 0; k < n; ++k) {
        const long j = wavenumber(k, n);
        if (order % 2 == 1 && k == n / 2) {
            c[k] = 0.0;
            continue;
        }
        c[k] *= std::pow(cd(0.0, w * static_cast<double>(j)), order);
    }
    return inverse_real(c);
}

Eigen::VectorXd resample(const Eigen::VectorXd& f, std::size_t m) {
    const std::size_t n = f.size();
    require_grid(n);
    require_grid(m);
    if (m == n) return f;
    const Eigen::VectorXcd c = forward(f);
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(m);
    if (m > n) {
        for (std::size_t k = 0; k < n / 2; ++k) d[k] = c[k];
        for (std::size_t k = n / 2 + 1; k < n; ++k) d[m - n + k] = c[k];
        d[n / 2] = 0.5 * c[n / 2];
        d[m - n / 2] = 0.5 * c[n / 2];
    } else {
        for (std::size_t k = 0; k < m / 2; ++k) d[k] = c[k];
        for (std::size_t k = 1; k < m / 2; ++k) d[m - k] = c[n - k];
        d[m / 2] = c[m / 2] + c[n - m / 2];
    }
    return inverse_real(d);
}

Eigen::MatrixXd diff_matrix(std::size_t n, double period, int order) {
    require_grid(n);
    const double pi = std::numbers::pi;
    const double h = 2.0 * pi / static_cast<double>(n);
    const double w = 2.0 * pi / period;
    Eigen::MatrixXd D(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const long d = static_cast<long>(i) - static_cast<long>(j);
            const double sgn = (d % 2 == 0) ? 1.0 : -1.0;
            const double half = 0.5 * static_cast<double>(d) * h;
            if (order == 1) {
                D(i, j) = (d == 0) ? 0.0 : 0.5 * sgn / std::tan(half) * w;
            } else if (order == 2) {
                if (d == 0)
                    D(i, j) = (-pi * pi / (3.0 * h * h) - 1.0 / 6.0) * w * w;
                else
                    D(i, j) = -0.5 * sgn / (std::sin(half) * std::sin(half)) * w * w;
            } else {
                throw DomainError("diff_matrix supports orders 1 and 2");
            }
        }
    }
    return D;
}

double tail_ratio(const Eigen::VectorXd& f) {
    const std::size_t n = f.size();
    const Eigen::VectorXcd c = forward(f);
    double peak = 0.0, tail = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const long j = std::labs(wavenumber(k, n));
        peak = std::max(peak, std::abs(c[k]));
        if (4 * j >= static_cast<long>(n)) tail = std::max(tail, std::abs(c[k]));
    }
    return peak > 0.0 ? tail / peak : 0.0;
}

double mean(const Eigen::VectorXd& f) { return f.mean(); }

InterpolantGroup::InterpolantGroup(const std::vector<Eigen::VectorXd>& samples, double period)
    : period_(period) {
    if (samples.empty()) return;
    n_ = samples.front().size();
    require_grid(n_);
    coeffs_.reserve(samples.size());
    for (const auto& s : samples) {
        if (static_cast<std::size_t>(s.size()) != n_)
            throw DomainError("interpolant samples must share one grid");
        const Eigen::VectorXcd c = forward(s);
        std::vector<cd> half(n_ / 2 + 1);
        half[0] = c[0];
        for (std::size_t k = 1; k < n_ / 2; ++k) half[k] = 2.0 * c[k];
        half[n_ / 2] = c[n_ / 2];
        coeffs_.push_back(std::move(half));
    }
}

void InterpolantGroup::evaluate(double x, double* out) const {
    const std::size_t nf = coeffs_.size();
    const std::size_t kmax = n_ / 2;
    const double theta = 2.0 * std::numbers::pi * x / period_;
    const cd z(std::cos(theta), std::sin(theta));
    for (std::size_t i = 0; i < nf; ++i) out[i] = coeffs_[i][0].real();
    cd zk(1.0, 0.0);
    for (std::size_t k = 1; k < kmax; ++k) {
        zk *= z;
        if (k % 64 == 0) {
            const double a = theta * static_cast<double>(k);
            zk = cd(std::cos(a), std::sin(a));
        }
        for (std::size_t i = 0; i < nf; ++i) {
            const cd& c = coeffs_[i][k];
            out[i] += c.real() * zk.real() - c.imag() * zk.imag();
        }
    }
    const double cn = std::cos(theta * static_cast<double>(kmax));
    for (std::size_t i = 0; i < nf; ++i) out[i] += coeffs_[i][kmax].real() * cn;
}

std::vector<double> InterpolantGroup::operator()(double x) const {
    std::vector<double> out(coeffs_.size());
    evaluate(x, out.data());
    return out;
}

}  // namespace rollwave::spectral
