#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skydist/refdata.hpp"
#include "skydist/skyline.hpp"

namespace skydist {

/// First-order differences d[x] = y[x] - y[x-1] for 1 <= x < W.
struct DiffSignal {
    int width = 0;
    std::vector<std::int64_t> d;  // d[x - 1] holds the difference at column x

    std::int64_t at(int x) const { return d[static_cast<std::size_t>(x - 1)]; }
    bool operator==(const DiffSignal&) const = default;
};

DiffSignal first_diff(const SkylineSignal& signal);

enum class MetricKind { NSL, SV, P1, P2 };

inline constexpr MetricKind kAllMetricKinds[] = {MetricKind::NSL, MetricKind::SV, MetricKind::P1,
                                                 MetricKind::P2};

std::string_view metric_name(MetricKind k);
std::optional<MetricKind> metric_from_name(std::string_view name);

inline constexpr int kMinSegmentWidth = 2;
inline constexpr int kMinWindow = 4;

// Segment metrics. Each averages over the D - 1 differences inside the
// segment, x in [x_c + 1, x_c + D - 1], and throws DomainError if D < 2.

/// Normalized segment length; 1 for a flat segment.
double nsl(const DiffSignal& diff, const PointContext& ctx);
double nsl(const SkylineSignal& signal, const PointContext& ctx);

/// Variance of the in-segment differences, divided by the term count.
double sample_variance(const DiffSignal& diff, const PointContext& ctx);

/// Mean of |d|^p. p = 1 is the average absolute deviation; p = 2 is the
/// Allan-variance form.
double power_p(const DiffSignal& diff, const PointContext& ctx, double p);

double segment_mean_diff(const DiffSignal& diff, const PointContext& ctx);

/// (y[x_c + D - 1] - y[x_c]) / (D - 1), the telescoped form of the mean.
double segment_mean_telescoped(const SkylineSignal& signal, const PointContext& ctx);

/// Window [lower, upper] around a reference column, clamped to its segment.
/// The terms summed are lower + 1 .. upper - 1.
struct WindowBounds {
    int lower = 0;
    int upper = 0;

    int term_count() const { return upper - lower - 1; }
};

WindowBounds window_bounds(const PointContext& ctx, int x_i, int window);

/// Metric restricted to the window around x_i. SV is centred on the
/// window-local mean. Throws DomainError for L < 4, x_i outside the
/// segment, or an empty window.
double windowed_metric(const DiffSignal& diff, const PointContext& ctx, int x_i, int window,
                       MetricKind kind);

/// Unwindowed metric of the given kind (P1/P2 are power_p with p = 1, 2).
double segment_metric(const DiffSignal& diff, const PointContext& ctx, MetricKind kind);

struct MetricSample {
    std::string point_id;
    std::string group;
    MetricKind kind = MetricKind::SV;
    std::optional<int> window;  // nullopt: whole segment
    double value = 0.0;
    bool skipped = false;
    std::string skip_reason;

    // Where the value came from; equal spans mean equal values.
    int span_lower = 0;
    int span_upper = 0;
};

/// One sample per (point, kind). Unusable points are emitted skip-flagged
/// rather than raising. Throws DomainError for a point with x outside the
/// skyline.
std::vector<MetricSample> metrics_for_points(const Skyline& skyline, std::span<const ReferencePoint> points,
                                             const ClassGroups& groups, std::optional<int> window);

/// Header: point_id,group,kind,L,value,skipped,skip_reason
std::string metrics_to_csv(std::span<const MetricSample> samples);

}  // namespace skydist
