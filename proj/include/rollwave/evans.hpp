#pragma once

#include "rollwave/hill.hpp"
#include "rollwave/linearize.hpp"
#include "rollwave/wave_profile.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace rollwave::evans {

using cd = std::complex<double>;

struct IntegrationOptions {
    double tol = 1e-10;  // local error per step, absolute and relative
    std::size_t max_steps = 1000000;
};

// Fundamental matrix at x = X of Z' = (A0 + lambda A1) Z, Psi(0) = I.
struct Monodromy {
    Eigen::MatrixXcd Psi;
    cd log_det;        // log det Psi(X) from the integrated matrix
    cd trace_integral; // integral of tr A over one period
    double liouville_error = 0.0;  // |det Psi / exp(int tr A) - 1|
    bool trusted = true;           // liouville_error <= 1e-6
    std::size_t steps = 0;
};
Monodromy monodromy(const linearize::SpectralProblem& problem, cd lambda, const IntegrationOptions& opt = {});

// D = mantissa * exp(exponent); exponent is real so |mantissa| carries the scale
// only up to the accumulated normalisation.
struct EvansValue {
    cd mantissa;
    double exponent = 0.0;
    double liouville_error = 0.0;
    bool trusted = true;
    std::size_t steps = 0;

    cd value() const;
    double log_abs() const;
    bool is_zero() const { return mantissa == cd(0.0, 0.0); }
};
// D2 / D1 without forming either.
cd ratio(const EvansValue& num, const EvansValue& den);

// Evans frame at lambda: everything needed to evaluate D(lambda, xi) for any xi.
struct EvansFrame {
    Eigen::MatrixXcd top, bottom;  // orthonormalised [Psi; I] frame
    cd log_scale;                  // accumulated log det R
    double liouville_error = 0.0;
    bool trusted = true;
    std::size_t steps = 0;
    double period = 1.0;

    EvansValue at(double xi) const;
};
// Continuously re-orthonormalised propagation of the doubled frame [Psi; I].
EvansFrame evans_frame(const linearize::SpectralProblem& problem, cd lambda, const IntegrationOptions& opt = {});
// D(lambda, xi) = det(Psi(X, lambda) - exp(i xi X) I).
EvansValue evans_value(const linearize::SpectralProblem& problem, cd lambda, double xi,
                       const IntegrationOptions& opt = {});

enum class ContourShape { circle, semicircle, half_annulus };

struct Contour {
    ContourShape shape = ContourShape::circle;
    cd center = 0.0;
    double radius = 1.0;        // outer radius
    double inner_radius = 0.0;  // half_annulus only
    std::string describe() const;
    // Point at parameter t in [0, 1), traversed counterclockwise.
    cd point(double t) const;
};
// "circle:c=<re>[,ci=<im>],r=<r>", "semicircle:R=<R>", "half_annulus:r=<r>,R=<R>".
Contour parse_contour(const std::string& spec);

struct ContourOptions {
    double rel_jump = 0.2;
    std::size_t initial_points = 64;
    std::size_t max_points = 20000;
    int max_perturbations = 3;
    int threads = 1;
    IntegrationOptions integration;
};

struct ContourReport {
    Contour contour;
    double xi = 0.0;
    std::vector<double> t;  // contour parameters of the accepted points
    std::vector<cd> lambda;
    std::vector<EvansValue> values;
    int winding = 0;
    double winding_raw = 0.0;
    double max_rel_jump = 0.0;
    int refinements = 0;
    int perturbations = 0;
    bool trusted = true;
};
ContourReport winding_number(const linearize::SpectralProblem& problem, const Contour& contour, double xi,
                             const ContourOptions& opt = {});
// Same contour for several xi: values for all xi come from one frame per lambda and
// each xi keeps its own adaptive point set.
std::vector<ContourReport> winding_numbers(const linearize::SpectralProblem& problem, const Contour& contour,
                                           const std::vector<double>& xi, const ContourOptions& opt = {});

struct TaylorOptions {
    double R = 0.0;  // 0 selects 1e-2 * 2 pi / X
    int K = 3;       // largest power of exp(i xi X); raised to the system dimension if smaller
    int n_cheb = 65;
    int max_shrink = 4;
    int threads = 1;
    IntegrationOptions integration;
};

struct OriginExpansion {
    // c[r][j]: coefficient of lambda^r xi^j for r + j <= 3.
    std::array<std::array<cd, 4>, 4> c{};
    std::array<cd, 2> alpha{};
    std::array<cd, 2> beta{};
    double R = 0.0;
    int n_cheb = 0;
    int K = 0;
    int winding_at_R = 0;
    double representation_residual = 0.0;  // held-out xi check
    bool near_double_alpha = false;
};
OriginExpansion origin_taylor(const linearize::SpectralProblem& problem, const TaylorOptions& opt = {});
// Roots lambda(xi) of the truncated expansion closest to alpha_j xi.
std::array<cd, 2> taylor_roots(const OriginExpansion& e, double xi);

struct PolishOptions {
    double tol = 1e-10;
    int max_iterations = 30;
    IntegrationOptions integration;
};
struct PolishedRoot {
    cd lambda;
    int iterations = 0;
    double residual = 0.0;  // |D| relative to the local scale
};
PolishedRoot polish_root(const linearize::SpectralProblem& problem, cd lambda0, double xi,
                         const PolishOptions& opt = {});

enum class Overall { stable, unstable, indeterminate };
const char* overall_name(Overall o);

struct Condition {
    std::optional<bool> holds;  // empty when not decided
    std::string detail;
};

struct VerdictConfig {
    int modes = 101;
    int xi_points = 21;
    double r0 = 1e-3;       // exclusion radius for the Hill scan
    double re_tol = 1e-8;   // real parts below this count as non-positive
    int evans_xi = 3;       // xi subsample for the half-annulus winding
    double outer_radius = 0.0;  // 0 selects the Hill spectral radius among |lambda| <= 1
    double alpha_imag_tol = 1e-6;
    double double_root_tol = 1e-6;
    double h1_tol = 1e-4;
    bool use_evans = true;
    int threads = 1;
    TaylorOptions taylor;
    ContourOptions contour;
};

struct StabilityVerdict {
    Condition D1, D2, D3, H1, slope;
    Overall overall = Overall::indeterminate;
    std::string reason;
    std::optional<hill::UnstableWitness> witness;
    std::optional<OriginExpansion> expansion;
    double slope_margin = 0.0;
};
// Spectral problem used for verdicts: physical frame or alpha_m2 frame at the profile's F.
linearize::SpectralProblem problem_for(const WaveProfile& profile);
StabilityVerdict verdict(const WaveProfile& profile, const VerdictConfig& config = {});

std::string to_json(const ContourReport& r);
std::string to_json(const OriginExpansion& e);
std::string to_json(const StabilityVerdict& v);

}  // namespace rollwave::evans
