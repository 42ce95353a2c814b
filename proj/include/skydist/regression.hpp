#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skydist/metrics.hpp"

namespace skydist {

enum class FitKind { FreeSlope, FixedSlope };

/// log(m) = alpha + beta * log(d), i.e. m = k * d^beta with k = e^alpha.
/// Natural logarithms throughout.
struct RegressionFit {
    double alpha = 0.0;
    double beta = 0.0;
    double k = 1.0;
    double r2 = 0.0;  // NaN when every log(m) is equal
    std::size_t n = 0;
    FitKind kind = FitKind::FreeSlope;
};

struct FitPoint {
    double metric = 0.0;
    double distance = 0.0;
    std::string point_id;
    std::string group;
};

/// Ordinary least squares of log(m) on log(d). Needs N >= 3, positive
/// inputs and at least two distinct distances.
RegressionFit fit_loglog(std::span<const FitPoint> points);

/// Inverse-power model: beta fixed at -1, alpha = mean(log m + log d).
/// R^2 uses the unconstrained total sum of squares, so it can go negative.
RegressionFit fit_fixed_slope(std::span<const FitPoint> points);

double r_squared(std::span<const double> observed, std::span<const double> predicted);

/// Inverts the power law: d = (m / k)^(1 / beta).
double predict_distance(const RegressionFit& fit, double metric);

inline constexpr std::size_t kMinCellPoints = 3;

/// All fits for one (group, metric, window) cell.
struct FitCell {
    std::string group;
    MetricKind kind = MetricKind::SV;
    std::optional<int> window;
    std::optional<RegressionFit> free_fit;
    std::optional<RegressionFit> fixed_fit;  // SV cells only
    std::size_t n_usable = 0;
    std::size_t n_excluded_zero_metric = 0;
    std::size_t n_duplicate_metric = 0;
    std::string status;  // "ok", "insufficient" or "degenerate"
};

/// Fits every (group, kind, window) cell present in `samples`. Skipped
/// samples and the sky group are left out; zero-valued metrics are counted
/// and excluded. Samples sharing image and metric span are counted as
/// duplicates but still fitted. Throws DomainError if a sample's point has
/// no distance.
std::vector<FitCell> fit_by_group(std::span<const MetricSample> samples,
                                  const std::map<std::string, double>& distance_by_point);

/// JSON array with one entry per fitted model (or one per empty cell).
std::string fit_report_json(std::span<const FitCell> cells);

}  // namespace skydist
