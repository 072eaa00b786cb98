#include "rollwave/hill.hpp"

#include "lapack.hpp"
#include "rollwave/errors.hpp"
#include "rollwave/model.hpp"
#include "rollwave/parallel.hpp"
#include "rollwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rollwave::hill {

namespace {

using Blocks = std::vector<std::vector<Eigen::VectorXcd>>;

Blocks transform(const std::vector<std::vector<Eigen::VectorXd>>& op) {
    Blocks out(op.size());
    for (std::size_t o = 0; o < op.size(); ++o) {
        out[o].resize(op[o].size());
        for (std::size_t e = 0; e < op[o].size(); ++e)
            if (op[o][e].size() > 0) out[o][e] = spectral::forward(op[o][e]);
    }
    return out;
}

// Fourier coefficient of an X-periodic function at index d of the chosen basis.
cd coefficient(const Eigen::VectorXcd& fhat, long d, Convention conv) {
    if (conv == Convention::doubled) {
        if (d % 2 != 0) return 0.0;
        d /= 2;
    }
    const long m = fhat.size();
    if (2 * std::labs(d) >= m) return 0.0;
    return fhat[((d % m) + m) % m];
}

Eigen::MatrixXcd fill(const Blocks& blocks, int comps, int modes, double kappa, double xi, Convention conv) {
    const int N = (modes - 1) / 2;
    const int size = comps * modes;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(size, size);
    for (std::size_t o = 0; o < blocks.size(); ++o) {
        for (int i = 0; i < comps; ++i) {
            for (int j = 0; j < comps; ++j) {
                const Eigen::VectorXcd& fhat = blocks[o][i * comps + j];
                if (fhat.size() == 0) continue;
                for (int r = -N; r <= N; ++r) {
                    const cd symbol = std::pow(cd(0.0, r * kappa + xi), static_cast<int>(o));
                    for (int p = -N; p <= N; ++p) {
                        const cd f = coefficient(fhat, p - r, conv);
                        if (f == 0.0) continue;
                        M(i * modes + p + N, j * modes + r + N) += f * symbol;
                    }
                }
            }
        }
    }
    return M;
}

bool is_diagonal(const Eigen::MatrixXcd& M) {
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            if (i != j && M(i, j) != 0.0) return false;
    return true;
}

}  // namespace

Matrices assemble(const linearize::SpectralProblem& problem, int modes, double xi, Convention conv) {
    if (modes < 1 || modes % 2 == 0) throw DomainError("modes must be odd and positive (2N+1)");
    const int N = (modes - 1) / 2;
    const double L = conv == Convention::doubled ? 2.0 * problem.period : problem.period;
    const double kappa = 2.0 * std::numbers::pi / L;
    const std::size_t m =
        spectral::next_power_of_two(std::max<std::size_t>({static_cast<std::size_t>(4 * N + 2), problem.native_grid, 8}));
    const linearize::Coefficients co = problem.sample(m);
    Matrices out;
    out.M1 = fill(transform(co.op), problem.components, modes, kappa, xi, conv);
    if (!co.mass.empty()) {
        Eigen::MatrixXcd M2 = fill(transform(co.mass), problem.components, modes, kappa, xi, conv);
        if (is_diagonal(M2)) {
            out.M2diag = M2.diagonal();
            for (Eigen::Index i = 0; i < out.M2diag.size(); ++i)
                if (std::abs(out.M2diag[i]) < 1e-14)
                    throw DomainError("singular mass matrix at xi = " + model::format_double(xi) + "; exclude xi = 0");
        } else {
            out.M2 = std::move(M2);
        }
    }
    return out;
}

std::vector<cd> eigenvalues(const Matrices& mats, double* backward_error) {
    Eigen::MatrixXcd A = mats.M1;
    const lapack_int n = static_cast<lapack_int>(A.rows());
    std::vector<cd> w(n);
    if (mats.M2.size() > 0) {
        Eigen::MatrixXcd B = mats.M2;
        std::vector<cd> alpha(n), beta(n);
        const lapack_int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, B.data(), n, alpha.data(),
                                              beta.data(), nullptr, 1, nullptr, 1);
        if (info != 0) throw NumericalError("zggev failed with info " + std::to_string(info));
        for (lapack_int i = 0; i < n; ++i)
            w[i] = std::abs(beta[i]) > 0.0 ? alpha[i] / beta[i] : cd(std::numeric_limits<double>::infinity(), 0.0);
    } else {
        if (mats.M2diag.size() > 0)
            for (Eigen::Index i = 0; i < A.rows(); ++i) A.row(i) /= mats.M2diag[i];
        if (backward_error) *backward_error = std::numeric_limits<double>::epsilon() * A.norm();
        const lapack_int info =
            LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, A.data(), n, w.data(), nullptr, 1, nullptr, 1);
        if (info != 0) throw NumericalError("zgeev failed with info " + std::to_string(info));
    }
    std::sort(w.begin(), w.end(), [](const cd& a, const cd& b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    return w;
}

std::vector<double> xi_grid(double period, int points, Convention conv) {
    std::vector<double> xi;
    if (points <= 0) return xi;
    const double half = (conv == Convention::doubled ? 0.5 : 1.0) * std::numbers::pi / period;
    xi.reserve(points);
    for (int j = 0; j < points; ++j) xi.push_back(-half + 2.0 * half * j / points);
    return xi;
}

SpectralCloud spectrum(const linearize::SpectralProblem& problem, int modes, const std::vector<double>& xi,
                       const SpectrumOptions& opt) {
    SpectralCloud cloud;
    cloud.problem = problem.description;
    cloud.period = problem.period;
    cloud.modes = modes;
    cloud.components = problem.components;
    cloud.convention = opt.convention;
    std::vector<double> sorted = xi;
    std::sort(sorted.begin(), sorted.end());
    cloud.spectra.resize(sorted.size());
    parallel_for(sorted.size(), opt.threads, [&](std::size_t i) {
        XiSpectrum& s = cloud.spectra[i];
        s.xi = sorted[i];
        try {
            const Matrices m = assemble(problem, modes, s.xi, opt.convention);
            s.eigenvalues = eigenvalues(m, &s.backward_error);
        } catch (const DomainError&) {
            throw;
        } catch (const std::exception& e) {
            s.ok = false;
            s.error = e.what();
        }
    });
    return cloud;
}

std::optional<UnstableWitness> max_unstable(const SpectralCloud& cloud, double r0) {
    std::optional<UnstableWitness> best;
    for (const auto& s : cloud.spectra) {
        for (const cd& l : s.eigenvalues) {
            if (!std::isfinite(l.real()) || std::abs(l) <= r0) continue;
            if (!best || l.real() > best->max_re) best = UnstableWitness{l.real(), s.xi, l};
        }
    }
    return best;
}

std::string to_csv(const SpectralCloud& cloud) {
    std::string out = "xi,re,im\n";
    for (const auto& s : cloud.spectra)
        for (const cd& l : s.eigenvalues)
            out += model::format_double(s.xi) + "," + model::format_double(l.real()) + "," +
                   model::format_double(l.imag()) + "\n";
    return out;
}

}  // namespace rollwave::hill
