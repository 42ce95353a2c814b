#include "skydist/regression.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "json.hpp"

namespace skydist {

namespace {

void check_inputs(std::span<const FitPoint> points, std::size_t min_n) {
    if (points.size() < min_n) {
        throw DomainError("fit needs at least " + std::to_string(min_n) + " points, got " +
                          std::to_string(points.size()));
    }
    for (const auto& p : points) {
        if (!(p.metric > 0.0) || !(p.distance > 0.0)) {
            throw DomainError("fit inputs must be positive (point '" + p.point_id + "')");
        }
    }
}

struct LogData {
    std::vector<double> u;  // log d
    std::vector<double> v;  // log m
};

LogData logs_of(std::span<const FitPoint> points) {
    LogData out;
    out.u.reserve(points.size());
    out.v.reserve(points.size());
    for (const auto& p : points) {
        out.u.push_back(std::log(p.distance));
        out.v.push_back(std::log(p.metric));
    }
    return out;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

// R^2 that tolerates a flat response: NaN instead of an error.
double r2_or_nan(const LogData& data, double alpha, double beta) {
    const double vbar = mean_of(data.v);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < data.v.size(); ++i) {
        const double r = data.v[i] - (alpha + beta * data.u[i]);
        ss_res += r * r;
        ss_tot += (data.v[i] - vbar) * (data.v[i] - vbar);
    }
    if (ss_tot == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

RegressionFit fit_loglog(std::span<const FitPoint> points) {
    check_inputs(points, 3);
    const auto data = logs_of(points);
    const double ubar = mean_of(data.u);
    const double vbar = mean_of(data.v);
    double suu = 0.0, suv = 0.0;
    for (std::size_t i = 0; i < data.u.size(); ++i) {
        suu += (data.u[i] - ubar) * (data.u[i] - ubar);
        suv += (data.u[i] - ubar) * (data.v[i] - vbar);
    }
    bool distinct = false;
    for (const auto& p : points) distinct = distinct || p.distance != points.front().distance;
    if (!distinct || suu == 0.0) throw DomainError("all distances are equal; slope undefined");

    RegressionFit fit;
    fit.kind = FitKind::FreeSlope;
    fit.beta = suv / suu;
    fit.alpha = vbar - fit.beta * ubar;
    fit.k = std::exp(fit.alpha);
    fit.n = points.size();
    fit.r2 = r2_or_nan(data, fit.alpha, fit.beta);
    return fit;
}

RegressionFit fit_fixed_slope(std::span<const FitPoint> points) {
    check_inputs(points, 2);
    const auto data = logs_of(points);
    double s = 0.0;
    for (std::size_t i = 0; i < data.u.size(); ++i) s += data.v[i] + data.u[i];

    RegressionFit fit;
    fit.kind = FitKind::FixedSlope;
    fit.beta = -1.0;
    fit.alpha = s / static_cast<double>(points.size());
    fit.k = std::exp(fit.alpha);
    fit.n = points.size();
    fit.r2 = r2_or_nan(data, fit.alpha, fit.beta);
    return fit;
}

double r_squared(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size()) throw DomainError("observed and predicted lengths differ");
    if (observed.empty()) throw DomainError("R^2 of an empty series");
    double mean = 0.0;
    for (double o : observed) mean += o;
    mean /= static_cast<double>(observed.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
    }
    if (ss_tot == 0.0) throw DomainError("observed values have zero variance");
    return 1.0 - ss_res / ss_tot;
}

double predict_distance(const RegressionFit& fit, double metric) {
    if (fit.beta == 0.0) throw DomainError("cannot invert a zero-slope fit");
    if (!(metric > 0.0)) throw DomainError("metric must be > 0");
    return std::pow(metric / fit.k, 1.0 / fit.beta);
}

std::vector<FitCell> fit_by_group(std::span<const MetricSample> samples,
                                  const std::map<std::string, double>& distance_by_point) {
    // Group order, then metric order, then window with "none" first.
    using Key = std::tuple<int, int, int>;
    struct Acc {
        FitCell cell;
        std::vector<FitPoint> points;
        std::set<std::tuple<std::string, int, int>> spans;
    };
    std::map<Key, Acc> cells;

    for (const auto& s : samples) {
        if (s.skipped) continue;
        const auto g = group_from_name(s.group);
        if (!g) continue;
        const Key key{static_cast<int>(*g), static_cast<int>(s.kind), s.window ? *s.window : -1};
        auto& acc = cells[key];
        acc.cell.group = s.group;
        acc.cell.kind = s.kind;
        acc.cell.window = s.window;

        const auto it = distance_by_point.find(s.point_id);
        if (it == distance_by_point.end()) throw DomainError("no distance for point '" + s.point_id + "'");
        if (!(s.value > 0.0)) {
            ++acc.cell.n_excluded_zero_metric;
            continue;
        }
        ReferencePoint probe;
        probe.point_id = s.point_id;
        if (!acc.spans.emplace(probe.image_key(), s.span_lower, s.span_upper).second) {
            ++acc.cell.n_duplicate_metric;
        }
        acc.points.push_back({s.value, it->second, s.point_id, s.group});
    }

    std::vector<FitCell> out;
    out.reserve(cells.size());
    for (auto& [key, acc] : cells) {
        auto cell = std::move(acc.cell);
        cell.n_usable = acc.points.size();
        if (acc.points.size() < kMinCellPoints) {
            cell.status = "insufficient";
        } else {
            try {
                cell.free_fit = fit_loglog(acc.points);
                if (cell.kind == MetricKind::SV) cell.fixed_fit = fit_fixed_slope(acc.points);
                cell.status = "ok";
            } catch (const DomainError&) {
                cell.status = "degenerate";
            }
        }
        out.push_back(std::move(cell));
    }
    return out;
}

namespace {

nlohmann::ordered_json real_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    // Route through the 9-digit formatter so reports are byte-stable.
    return nlohmann::ordered_json::parse(format_real(v));
}

nlohmann::ordered_json fit_entry(const FitCell& cell, const RegressionFit* fit, std::string_view model) {
    nlohmann::ordered_json e;
    e["group"] = cell.group;
    e["kind"] = std::string(metric_name(cell.kind));
    e["L"] = cell.window ? nlohmann::ordered_json(*cell.window) : nlohmann::ordered_json("none");
    e["model"] = std::string(model);
    e["alpha"] = fit ? real_or_null(fit->alpha) : nullptr;
    e["beta"] = fit ? real_or_null(fit->beta) : nullptr;
    e["k"] = fit ? real_or_null(fit->k) : nullptr;
    e["r2"] = fit ? real_or_null(fit->r2) : nullptr;
    e["n"] = cell.n_usable;
    e["n_excluded_zero_metric"] = cell.n_excluded_zero_metric;
    e["n_duplicate_metric"] = cell.n_duplicate_metric;
    e["status"] = cell.status;
    return e;
}

}  // namespace

std::string fit_report_json(std::span<const FitCell> cells) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : cells) {
        if (!c.free_fit) {
            arr.push_back(fit_entry(c, nullptr, "free"));
            if (c.kind == MetricKind::SV) arr.push_back(fit_entry(c, nullptr, "fixed"));
            continue;
        }
        arr.push_back(fit_entry(c, &*c.free_fit, "free"));
        if (c.fixed_fit) arr.push_back(fit_entry(c, &*c.fixed_fit, "fixed"));
    }
    return arr.dump(2) + "\n";
}

}  // namespace skydist
