#pragma once

#include "rollwave/evans.hpp"
#include "rollwave/profile.hpp"
#include "rollwave/wave_profile.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rollwave::sweep {

// q = coef * F^exponent. scaling(alpha, q0) is the rule q = q0 F^(-alpha/2).
struct QRule {
    double coef = 0.4;
    double exponent = -2.0;
    double operator()(double F) const;
    static QRule scaling(double alpha, double q0);
    std::string describe() const;
};
// "coef*F^exp", e.g. "0.4*F^-2", or a plain number for constant q.
QRule parse_q_rule(const std::string& text);

struct ProbeOptions {
    std::size_t n = 256;
    evans::VerdictConfig verdict;
    profile::KdvHomotopyOptions homotopy;
    profile::ContinuationOptions continuation;
};

struct Probe {
    PhysicalParams params;
    WaveProfile profile;
    evans::StabilityVerdict verdict;
};

// Profile solves with warm starts: a new X at the same (F, nu, q) continues from the
// nearest profile already solved, otherwise it comes from the KdV homotopy.
class Prober {
public:
    explicit Prober(ProbeOptions opt = {}) : opt_(std::move(opt)) {}
    WaveProfile solve(const PhysicalParams& p);
    Probe probe(const PhysicalParams& p);
    const ProbeOptions& options() const { return opt_; }

private:
    ProbeOptions opt_;
    std::vector<WaveProfile> solved_;
};

enum class Which { lower, upper };
const char* which_name(Which w);
Which parse_which(const std::string& s);

// Stability of the relevant part of the spectrum: lower uses the expansion at the origin
// (D2), upper uses the spectrum away from the origin (D1). Empty when undecided.
std::optional<bool> side_stable(const evans::StabilityVerdict& v, Which which);

struct BisectOptions {
    double rel_tol = 1e-2;
    int max_probes = 60;
    ProbeOptions probe;
};

struct BisectStep {
    double X = 0.0;
    bool stable = false;
};

struct BoundaryResult {
    Which which = Which::lower;
    double alpha = 0.0, F = 0.0, nu = 0.0, q = 0.0;
    double X = 0.0;           // geometric midpoint of the final bracket
    double X_stable = 0.0;    // end of the final bracket classified stable
    double X_unstable = 0.0;  // end classified unstable
    std::vector<BisectStep> history;
};

// Bisection in log X between two periods whose side verdicts differ. Throws NotBracketed
// when they agree; probe failures are rethrown with the failing X in the message.
BoundaryResult boundary_bisect(double alpha, double F, double nu, const QRule& q, double X_lo, double X_hi,
                               Which which, const BisectOptions& opt = {});

std::string boundary_csv_header();  // alpha,F,nu,q,X_lower,X_upper
std::string boundary_csv_row(double alpha, double F, double nu, double q, std::optional<double> X_lower,
                             std::optional<double> X_upper);

struct SweepRecord {
    double alpha = 0.0, F = 0.0, nu = 0.0, q = 0.0, X = 0.0;
    double X0 = 0.0;  // X F^(1/2 + 5 alpha/4)
    std::string overall;  // stable, unstable, indeterminate or failed
    std::string reason;
    std::optional<double> max_re;
    std::optional<double> witness_xi;
    std::optional<bool> lower_stable, upper_stable;
    double c = 0.0;
    std::size_t n = 0;
    int newton_iterations = 0;
    std::optional<double> seconds;  // only when timing is requested

    std::string key() const;
};
std::string to_json_line(const SweepRecord& r);
SweepRecord record_from_json(const std::string& line);

struct GridSpec {
    double alpha = -2.0;
    double nu = 0.1;
    QRule q;
    std::vector<double> F;
    std::vector<double> X;  // physical periods, or X0 values when x_is_rescaled
    bool x_is_rescaled = false;
};
// Records in the order F-major, X-minor.
std::vector<SweepRecord> enumerate(const GridSpec& grid);

struct MapOptions {
    int threads = 1;
    bool record_timing = false;
    ProbeOptions probe;
};

struct MapSummary {
    std::size_t total = 0;
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

// Computes every grid record not already in the JSON-lines store at `path` (if nonempty),
// appending each as it completes. On completion the store is rewritten in grid order.
MapSummary stability_map(const GridSpec& grid, const std::string& path, std::vector<SweepRecord>& out,
                         const MapOptions& opt = {},
                         const std::function<SweepRecord(const SweepRecord&)>& compute = nullptr);
// The default per-record computation.
SweepRecord compute_record(const SweepRecord& key, const ProbeOptions& opt, bool record_timing);

struct FitPoint {
    double F = 0.0, q = 0.0, X = 0.0;
};

struct BoundaryFit {
    // log X = b1 log F + b2 log q + b3
    double b1 = 0.0, b2 = 0.0, b3 = 0.0;
    std::array<bool, 3> identified{true, true, true};
    std::array<double, 3> std_error{};
    int rank = 3;
    std::string note;  // describes any restriction to an identifiable subspace
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
    double max_rel_error = 0.0;
    double mean_rel_error = 0.0;
    std::size_t points = 0;
};
// Errors are residuals of log X; relative errors divide by |log X|.
BoundaryFit powerlaw_fit(const std::vector<FitPoint>& points);
std::string to_json(const BoundaryFit& fit);

}  // namespace rollwave::sweep
