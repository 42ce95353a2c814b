#include "skydist/metrics.hpp"

#include <cmath>

namespace skydist {

namespace {

void require_segment(const PointContext& ctx) {
    if (ctx.width < kMinSegmentWidth) {
        throw DomainError("segment width " + std::to_string(ctx.width) + " < 2, metric undefined");
    }
}

__extension__ using Wide = __int128;

// Integer moments over columns [first, last] of the difference signal.
struct Moments {
    std::int64_t n = 0;
    Wide sum = 0;
    Wide sum_sq = 0;
};

Moments moments(const DiffSignal& diff, int first, int last) {
    Moments m;
    for (int x = first; x <= last; ++x) {
        const auto v = diff.at(x);
        m.sum += v;
        m.sum_sq += static_cast<Wide>(v) * v;
        ++m.n;
    }
    return m;
}

// (n * sum_sq - sum^2) / n^2 is invariant under shifting every term by a
// constant, exactly, because the numerator is computed in integers.
double variance_of(const Moments& m) {
    const Wide num = static_cast<Wide>(m.n) * m.sum_sq - m.sum * m.sum;
    const double n = static_cast<double>(m.n);
    return static_cast<double>(num) / (n * n);
}

double nsl_over(const DiffSignal& diff, int first, int last) {
    double acc = 0.0;
    for (int x = first; x <= last; ++x) {
        const double v = static_cast<double>(diff.at(x));
        acc += std::sqrt(v * v + 1.0);
    }
    return acc / static_cast<double>(last - first + 1);
}

double power_over(const DiffSignal& diff, int first, int last, double p) {
    if (!(p > 0.0)) throw DomainError("power p must be > 0");
    if (p == 1.0 || p == 2.0) {
        const auto m = moments(diff, first, last);
        if (p == 2.0) return static_cast<double>(m.sum_sq) / static_cast<double>(m.n);
        Wide abs_sum = 0;
        for (int x = first; x <= last; ++x) abs_sum += diff.at(x) < 0 ? -diff.at(x) : diff.at(x);
        return static_cast<double>(abs_sum) / static_cast<double>(m.n);
    }
    double acc = 0.0;
    for (int x = first; x <= last; ++x) acc += std::pow(std::abs(static_cast<double>(diff.at(x))), p);
    return acc / static_cast<double>(last - first + 1);
}

double metric_over(const DiffSignal& diff, int first, int last, MetricKind kind) {
    switch (kind) {
        case MetricKind::NSL: return nsl_over(diff, first, last);
        case MetricKind::SV: return variance_of(moments(diff, first, last));
        case MetricKind::P1: return power_over(diff, first, last, 1.0);
        case MetricKind::P2: return power_over(diff, first, last, 2.0);
    }
    return 0.0;
}

}  // namespace

DiffSignal first_diff(const SkylineSignal& signal) {
    if (signal.width < 2) throw DomainError("first differences need W >= 2");
    DiffSignal out;
    out.width = signal.width;
    out.d.reserve(signal.y.size() - 1);
    for (std::size_t x = 1; x < signal.y.size(); ++x) {
        out.d.push_back(static_cast<std::int64_t>(signal.y[x]) - signal.y[x - 1]);
    }
    return out;
}

std::string_view metric_name(MetricKind k) {
    switch (k) {
        case MetricKind::NSL: return "NSL";
        case MetricKind::SV: return "SV";
        case MetricKind::P1: return "P1";
        case MetricKind::P2: return "P2";
    }
    return "";
}

std::optional<MetricKind> metric_from_name(std::string_view name) {
    for (auto k : kAllMetricKinds) {
        if (metric_name(k) == name) return k;
    }
    return std::nullopt;
}

double nsl(const DiffSignal& diff, const PointContext& ctx) {
    require_segment(ctx);
    return nsl_over(diff, ctx.start + 1, ctx.start + ctx.width - 1);
}

double nsl(const SkylineSignal& signal, const PointContext& ctx) {
    return nsl(first_diff(signal), ctx);
}

double sample_variance(const DiffSignal& diff, const PointContext& ctx) {
    require_segment(ctx);
    return variance_of(moments(diff, ctx.start + 1, ctx.start + ctx.width - 1));
}

double power_p(const DiffSignal& diff, const PointContext& ctx, double p) {
    require_segment(ctx);
    return power_over(diff, ctx.start + 1, ctx.start + ctx.width - 1, p);
}

double segment_mean_diff(const DiffSignal& diff, const PointContext& ctx) {
    require_segment(ctx);
    const auto m = moments(diff, ctx.start + 1, ctx.start + ctx.width - 1);
    return static_cast<double>(m.sum) / static_cast<double>(m.n);
}

double segment_mean_telescoped(const SkylineSignal& signal, const PointContext& ctx) {
    require_segment(ctx);
    const auto first = signal.y[static_cast<std::size_t>(ctx.start)];
    const auto last = signal.y[static_cast<std::size_t>(ctx.start + ctx.width - 1)];
    return static_cast<double>(static_cast<std::int64_t>(last) - first) / static_cast<double>(ctx.width - 1);
}

WindowBounds window_bounds(const PointContext& ctx, int x_i, int window) {
    const int half = window / 2;
    return {std::max(ctx.start, x_i - half), std::min(ctx.start + ctx.width, x_i + half)};
}

double windowed_metric(const DiffSignal& diff, const PointContext& ctx, int x_i, int window, MetricKind kind) {
    if (window < kMinWindow) throw DomainError("window L must be >= 4");
    if (x_i < ctx.start || x_i >= ctx.start + ctx.width) throw DomainError("reference column outside its segment");
    const auto b = window_bounds(ctx, x_i, window);
    if (b.term_count() < 1) throw DomainError("window holds no differences");
    return metric_over(diff, b.lower + 1, b.upper - 1, kind);
}

double segment_metric(const DiffSignal& diff, const PointContext& ctx, MetricKind kind) {
    require_segment(ctx);
    return metric_over(diff, ctx.start + 1, ctx.start + ctx.width - 1, kind);
}

std::vector<MetricSample> metrics_for_points(const Skyline& skyline, std::span<const ReferencePoint> points,
                                             const ClassGroups& groups, std::optional<int> window) {
    for (const auto& p : points) {
        if (p.x < 0 || p.x >= skyline.signal.width) {
            throw DomainError("point '" + p.point_id + "' column " + std::to_string(p.x) + " outside image");
        }
    }
    const auto joined = join_points(points, skyline, groups);
    const DiffSignal diff = skyline.signal.width >= 2 ? first_diff(skyline.signal) : DiffSignal{};

    std::vector<MetricSample> out;
    out.reserve(joined.size() * std::size(kAllMetricKinds));
    for (const auto& j : joined) {
        const auto& ctx = *j.context;
        std::string reason;
        WindowBounds span{ctx.start, ctx.start + ctx.width};
        if (ctx.sky) {
            reason = "sky_column";
        } else if (ctx.width < kMinSegmentWidth) {
            reason = "segment_too_narrow";
        } else if (window) {
            if (*window < kMinWindow) {
                reason = "window_too_small";
            } else {
                span = window_bounds(ctx, j.point.x, *window);
                if (span.term_count() < 1) reason = "empty_window";
            }
        }
        for (auto kind : kAllMetricKinds) {
            MetricSample s;
            s.point_id = j.point.point_id;
            s.group = ctx.sky ? "Sky" : std::string(group_name(ctx.group));
            s.kind = kind;
            s.window = window;
            s.span_lower = span.lower;
            s.span_upper = span.upper;
            if (!reason.empty()) {
                s.skipped = true;
                s.skip_reason = reason;
            } else {
                s.value = metric_over(diff, span.lower + 1, span.upper - 1, kind);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::string metrics_to_csv(std::span<const MetricSample> samples) {
    std::string out = "point_id,group,kind,L,value,skipped,skip_reason\n";
    for (const auto& s : samples) {
        out += s.point_id + ',' + s.group + ',' + std::string(metric_name(s.kind)) + ',' +
               (s.window ? std::to_string(*s.window) : std::string("none")) + ',' +
               (s.skipped ? std::string() : format_real(s.value)) + ',' + (s.skipped ? "true" : "false") + ',' +
               s.skip_reason + '\n';
    }
    return out;
}

}  // namespace skydist
