#include "skydist/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "skydist/synthetic.hpp"

namespace fs = std::filesystem;

namespace skydist::pipeline {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::optional<int>> parse_window_spec(std::string_view spec, int max_width) {
    std::vector<std::optional<int>> out;
    auto bound = [&](std::string_view tok) -> int {
        tok = trim(tok);
        if (!tok.empty() && tok.back() == 'W') {
            const auto mult = tok.size() == 1 ? 1 : parse_int(tok.substr(0, tok.size() - 1), "window multiplier");
            return static_cast<int>(mult * max_width);
        }
        return static_cast<int>(parse_int(tok, "window length"));
    };
    try {
        for (auto item : split(spec, ',')) {
            item = trim(item);
            if (item == "none") {
                out.emplace_back(std::nullopt);
                continue;
            }
            const auto parts = split(item, ':');
            if (parts.size() == 1) {
                out.emplace_back(bound(parts[0]));
            } else if (parts.size() == 3) {
                const int lo = bound(parts[0]), hi = bound(parts[1]), step = bound(parts[2]);
                if (step < 1 || hi < lo) throw UsageError("window range must satisfy lo <= hi and step >= 1");
                for (int l = lo; l <= hi; l += step) out.emplace_back(l);
            } else {
                throw UsageError("cannot parse window item '" + std::string(item) + "'");
            }
        }
    } catch (const ParseError& e) {
        throw UsageError(std::string("invalid window spec: ") + e.what());
    }
    if (out.empty()) throw UsageError("window spec is empty");
    for (const auto& w : out) {
        if (w && *w < kMinWindow) throw UsageError("window lengths must be >= " + std::to_string(kMinWindow));
    }
    return out;
}

ClassGroups load_groups_or_default(const std::string& path) {
    return load_class_groups(path.empty() ? default_class_groups_config() : read_file(path));
}

std::string stem_of(const std::string& path, std::string_view suffix) {
    auto name = fs::path(path).filename().string();
    if (!suffix.empty() && name.size() > suffix.size() && name.ends_with(suffix)) {
        return name.substr(0, name.size() - suffix.size());
    }
    return fs::path(name).stem().string();
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string out_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::string csv_field(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

ExtractResult run_extract(const ExtractOptions& opt) {
    if (opt.masks.empty()) throw UsageError("extract needs at least one mask file");
    if (!(opt.theta >= 0.0 && opt.theta <= 1.0)) throw UsageError("--theta must be in [0, 1]");
    const auto groups = load_groups_or_default(opt.groups_path);
    ensure_dir(opt.out_dir);

    auto paths = opt.masks;
    std::sort(paths.begin(), paths.end());
    ExtractResult res;
    res.items.resize(paths.size());

    parallel_for(paths.size(), opt.jobs, [&](std::size_t i) {
        auto& item = res.items[i];
        item.path = paths[i];
        item.stem = stem_of(paths[i], ".lmask");
        try {
            const auto mask = parse_mask(read_file(paths[i]));
            const auto sk = extract_skyline(mask, groups);
            std::string reason;
            if (!passes_sky_filter(mask, groups, opt.theta)) reason = "sky";
            if (!has_tree_below_skyline(sk.segments, groups)) reason += reason.empty() ? "tree" : ";tree";
            item.reason = reason;
            if (opt.filter && !reason.empty()) {
                item.status = "filtered";
                return;
            }
            write_file(out_path(opt.out_dir, item.stem + ".skyline.csv"), skyline_to_csv(sk, groups));
            write_file(out_path(opt.out_dir, item.stem + ".segments.csv"), segments_to_csv(sk, groups));
            item.status = "processed";
        } catch (const Error& e) {
            item.status = "error";
            item.reason = csv_field(e.what());
        }
    });

    std::string report = "file,status,reason\n";
    std::size_t errors = 0;
    for (const auto& it : res.items) {
        report += csv_field(it.path) + ',' + it.status + ',' + it.reason + '\n';
        if (it.status == "error") ++errors;
    }
    write_file(out_path(opt.out_dir, "extract_report.csv"), report);
    if (errors == res.items.size()) res.exit_code = kExitInvalid;
    else if (errors > 0) res.exit_code = kExitPartial;
    return res;
}

std::map<std::string, Skyline> load_skyline_dir(const std::string& dir) {
    constexpr std::string_view suffix = ".skyline.csv";
    if (!fs::is_directory(dir)) throw UsageError("skyline directory '" + dir + "' not found");
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.ends_with(suffix)) files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, Skyline> out;
    for (const auto& f : files) out.emplace(stem_of(f, suffix), skyline_from_csv(read_file(f)));
    return out;
}

Dataset load_dataset(const std::string& skyline_dir, const std::string& refs_path, const std::string& groups_path) {
    Dataset d;
    d.groups = load_groups_or_default(groups_path);
    d.skylines = load_skyline_dir(skyline_dir);
    if (d.skylines.empty()) throw UsageError("no *.skyline.csv files in '" + skyline_dir + "'");
    try {
        d.references = parse_reference_csv(read_file(refs_path));
    } catch (const ParseError& e) {
        throw UsageError(std::string("reference CSV: ") + e.what());
    }
    for (const auto& [k, s] : d.skylines) d.max_width = std::max(d.max_width, s.signal.width);
    return d;
}

namespace {

// Reference indices per image, in reference order.
std::map<std::string, std::vector<std::size_t>> points_by_image(const Dataset& data) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < data.references.size(); ++i) out[data.references[i].image_key()].push_back(i);
    return out;
}

std::vector<MetricSample> skip_samples(const ReferencePoint& p, std::optional<int> window, std::string_view reason) {
    std::vector<MetricSample> out;
    for (auto kind : kAllMetricKinds) {
        MetricSample s;
        s.point_id = p.point_id;
        s.kind = kind;
        s.window = window;
        s.skipped = true;
        s.skip_reason = std::string(reason);
        out.push_back(std::move(s));
    }
    return out;
}

std::map<std::string, double> distances_of(const Dataset& data) {
    std::map<std::string, double> out;
    for (const auto& p : data.references) out.emplace(p.point_id, p.distance_m);
    return out;
}

}  // namespace

AnalysisOutput analyze(const Dataset& data, const std::vector<std::optional<int>>& windows, int jobs) {
    const auto by_image = points_by_image(data);
    const auto n_refs = data.references.size();
    AnalysisOutput out;

    out.joined.resize(n_refs);
    for (const auto& [key, idx] : by_image) {
        const auto it = data.skylines.find(key);
        std::vector<ReferencePoint> pts;
        for (auto i : idx) pts.push_back(data.references[i]);
        if (it == data.skylines.end()) {
            for (auto i : idx) out.joined[i] = {data.references[i], JoinStatus::NoSkyline, {}, 0, {}};
            continue;
        }
        auto joined = join_points(pts, it->second, data.groups);
        for (std::size_t k = 0; k < idx.size(); ++k) out.joined[idx[k]] = std::move(joined[k]);
    }

    // Slot per (window, reference) so the output order is fixed.
    std::vector<std::vector<MetricSample>> slots(windows.size() * n_refs);
    parallel_for(windows.size(), jobs, [&](std::size_t w) {
        const auto window = windows[w];
        for (const auto& [key, idx] : by_image) {
            const auto it = data.skylines.find(key);
            std::vector<ReferencePoint> in_range;
            std::vector<std::size_t> in_idx;
            for (auto i : idx) {
                const auto& j = out.joined[i];
                if (j.status == JoinStatus::NoSkyline || j.status == JoinStatus::OutOfRange) {
                    slots[w * n_refs + i] = skip_samples(data.references[i], window, join_status_name(j.status));
                } else {
                    in_range.push_back(data.references[i]);
                    in_idx.push_back(i);
                }
            }
            if (in_range.empty()) continue;
            auto samples = metrics_for_points(it->second, in_range, data.groups, window);
            const auto per = std::size(kAllMetricKinds);
            for (std::size_t k = 0; k < in_idx.size(); ++k) {
                auto& slot = slots[w * n_refs + in_idx[k]];
                slot.assign(std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>(k * per)),
                            std::make_move_iterator(samples.begin() + static_cast<std::ptrdiff_t>((k + 1) * per)));
            }
        }
    });
    for (auto& s : slots) {
        for (auto& m : s) out.samples.push_back(std::move(m));
    }
    out.cells = fit_by_group(out.samples, distances_of(data));
    return out;
}

int run_analyze(const AnalyzeOptions& opt) {
    const auto data = load_dataset(opt.skyline_dir, opt.refs_path, opt.groups_path);
    const auto windows = parse_window_spec(opt.window_spec, data.max_width);
    const auto res = analyze(data, windows, opt.jobs);
    const bool any_usable =
        std::any_of(res.samples.begin(), res.samples.end(), [](const MetricSample& s) { return !s.skipped; });
    if (!any_usable) throw UsageError("no usable reference points");
    ensure_dir(opt.out_dir);
    write_file(out_path(opt.out_dir, "metrics.csv"), metrics_to_csv(res.samples));
    write_file(out_path(opt.out_dir, "joined.csv"), joined_to_csv(res.joined));
    write_file(out_path(opt.out_dir, "fits.json"), fit_report_json(res.cells));
    const bool partial = std::any_of(res.joined.begin(), res.joined.end(), [](const JoinedPoint& j) {
        return j.status == JoinStatus::NoSkyline || j.status == JoinStatus::OutOfRange;
    });
    return partial ? kExitPartial : kExitOk;
}

std::vector<SweepRow> sweep(const Dataset& data, const std::vector<int>& grid, int jobs) {
    std::vector<std::optional<int>> windows(grid.begin(), grid.end());
    const auto res = analyze(data, windows, jobs);
    std::vector<SweepRow> rows;
    for (const auto& c : res.cells) {
        if (c.status != "ok" || !c.free_fit || !std::isfinite(c.free_fit->r2)) continue;
        rows.push_back({c.group, c.kind, *c.window, c.free_fit->r2, c.free_fit->n});
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "group,kind,L,r2,n\n";
    for (const auto& r : rows) {
        out += r.group + ',' + std::string(metric_name(r.kind)) + ',' + std::to_string(r.window) + ',' +
               format_real(r.r2) + ',' + std::to_string(r.n) + '\n';
    }
    return out;
}

int run_sweep(const SweepOptions& opt) {
    const auto data = load_dataset(opt.skyline_dir, opt.refs_path, opt.groups_path);
    const auto spec = parse_window_spec(opt.window_spec.empty() ? "25:2W:25" : opt.window_spec, data.max_width);
    std::vector<int> grid;
    for (const auto& w : spec) {
        if (!w) throw UsageError("sweep grid cannot contain 'none'");
        grid.push_back(*w);
    }
    const auto rows = sweep(data, grid, opt.jobs);
    ensure_dir(opt.out_dir);
    write_file(out_path(opt.out_dir, "sweep.csv"), sweep_to_csv(rows));
    return kExitOk;
}

std::string width_bucket(int width, const std::vector<int>& edges) {
    if (edges.empty()) return "all";
    if (width < edges.front()) return "<" + std::to_string(edges.front());
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (width < edges[i]) return std::to_string(edges[i - 1]) + "-" + std::to_string(edges[i]);
    }
    return ">=" + std::to_string(edges.back());
}

std::vector<AlignedProfile> aligned_profiles(const Dataset& data, const std::string& group,
                                             const std::vector<int>& edges) {
    std::vector<AlignedProfile> out;
    for (const auto& p : data.references) {
        const auto it = data.skylines.find(p.image_key());
        if (it == data.skylines.end()) continue;
        const auto& sk = it->second;
        if (p.x < 0 || p.x >= sk.signal.width) continue;
        const auto ctx = point_context(sk.segments, p.x, data.groups);
        if (ctx.sky) continue;
        const std::string g(group_name(ctx.group));
        if (!group.empty() && g != group) continue;

        AlignedProfile prof;
        prof.point_id = p.point_id;
        prof.group = g;
        prof.segment_width = ctx.width;
        prof.bucket = width_bucket(ctx.width, edges);
        long long sum = 0;
        for (int x = ctx.start; x < ctx.start + ctx.width; ++x) sum += sk.signal.y[static_cast<std::size_t>(x)];
        const double mean = static_cast<double>(sum) / ctx.width;
        for (int x = ctx.start; x < ctx.start + ctx.width; ++x) {
            prof.offsets.push_back(x - p.x);
            prof.values.push_back(sk.signal.y[static_cast<std::size_t>(x)] - mean);
        }
        out.push_back(std::move(prof));
    }
    return out;
}

std::string profiles_to_csv(const std::vector<AlignedProfile>& profiles) {
    std::string out = "point_id,group,D,bucket,offset,value\n";
    for (const auto& p : profiles) {
        for (std::size_t i = 0; i < p.offsets.size(); ++i) {
            out += p.point_id + ',' + p.group + ',' + std::to_string(p.segment_width) + ',' + p.bucket + ',' +
                   std::to_string(p.offsets[i]) + ',' + format_real(p.values[i]) + '\n';
        }
    }
    return out;
}

int run_profiles(const ProfilesOptions& opt) {
    const auto data = load_dataset(opt.skyline_dir, opt.refs_path, opt.groups_path);
    if (!opt.group.empty() && !group_from_name(opt.group)) throw UsageError("unknown group '" + opt.group + "'");
    auto edges = opt.bucket_edges;
    if (!std::is_sorted(edges.begin(), edges.end())) throw UsageError("bucket edges must be ascending");
    const auto profiles = aligned_profiles(data, opt.group, edges);
    ensure_dir(opt.out_dir);
    write_file(out_path(opt.out_dir, "profiles.csv"), profiles_to_csv(profiles));
    return kExitOk;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

GainSummary summarize_gains(const std::vector<double>& gains, double bin_width) {
    if (gains.empty()) throw DomainError("no gains to summarize");
    if (!(bin_width > 0.0)) throw DomainError("bin width must be > 0");
    GainSummary s;
    s.n = gains.size();
    s.bin_width = bin_width;
    auto sorted = gains;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double g : gains) sum += g;
    s.mean = sum / static_cast<double>(gains.size());
    s.median = quantile_sorted(sorted, 0.5);
    for (const auto& [name, q] : {std::pair{"q05", 0.05}, {"q25", 0.25}, {"q50", 0.5}, {"q75", 0.75}, {"q95", 0.95}}) {
        s.quantiles[name] = quantile_sorted(sorted, q);
    }
    const auto first = static_cast<long long>(std::floor(sorted.front() / bin_width));
    const auto last = static_cast<long long>(std::floor(sorted.back() / bin_width));
    for (long long b = first; b <= last; ++b) {
        s.bins.push_back({static_cast<double>(b) * bin_width, static_cast<double>(b + 1) * bin_width, 0});
    }
    for (double g : gains) {
        const auto b = static_cast<long long>(std::floor(g / bin_width));
        ++s.bins[static_cast<std::size_t>(b - first)].count;
    }
    return s;
}

std::string gain_summary_json(const GainSummary& s) {
    auto real = [](double v) { return nlohmann::ordered_json::parse(format_real(v)); };
    nlohmann::ordered_json j;
    j["n"] = s.n;
    j["mean"] = real(s.mean);
    j["median"] = real(s.median);
    nlohmann::ordered_json q;
    for (const auto& [k, v] : s.quantiles) q[k] = real(v);
    j["quantiles"] = q;
    j["bin_width"] = real(s.bin_width);
    auto bins = nlohmann::ordered_json::array();
    for (const auto& b : s.bins) bins.push_back({{"lo", real(b.lo)}, {"hi", real(b.hi)}, {"count", b.count}});
    j["bins"] = bins;
    return j.dump(2) + "\n";
}

int run_crf_gain(const CrfOptions& opt) {
    if (opt.pairs.empty()) throw UsageError("crf-gain needs at least one pair");
    if (!(opt.bin_width > 0.0)) throw UsageError("--bin-width must be > 0");
    std::string csv = "pair,with,without,gain,status\n";
    std::vector<double> gains;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < opt.pairs.size(); ++i) {
        const auto& p = opt.pairs[i];
        csv += std::to_string(i) + ',' + csv_field(p.with_path) + ',' + csv_field(p.without_path) + ',';
        try {
            const auto with = skyline_from_csv(read_file(p.with_path));
            const auto without = skyline_from_csv(read_file(p.without_path));
            const double g = crf_gain(with.signal, without.signal);
            gains.push_back(g);
            csv += format_real(g) + ",ok\n";
        } catch (const Error& e) {
            ++failures;
            csv += "," + csv_field(e.what()) + '\n';
        }
    }
    ensure_dir(opt.out_dir);
    write_file(out_path(opt.out_dir, "gains.csv"), csv);
    if (gains.empty()) return kExitInvalid;
    write_file(out_path(opt.out_dir, "gain_summary.json"), gain_summary_json(summarize_gains(gains, opt.bin_width)));
    return failures ? kExitPartial : kExitOk;
}

int run_synth(const SynthOptions& opt) {
    synth::ExperimentConfig cfg;
    try {
        cfg = opt.manifest_path.empty() ? synth::default_experiment()
                                        : synth::experiment_from_json(read_file(opt.manifest_path));
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    if (opt.seed) cfg.seeds = {*opt.seed};
    synth::Experiment ex;
    try {
        ex = synth::build_experiment(cfg);
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid manifest: ") + e.what());
    }
    ensure_dir(opt.out_dir);
    ensure_dir(out_path(opt.out_dir, "truth"));
    const auto groups = load_class_groups(default_class_groups_config());
    parallel_for(ex.scenes.size(), opt.jobs, [&](std::size_t i) {
        const auto& scene = ex.scenes[i];
        write_file(out_path(opt.out_dir, scene.name + ".lmask"), serialize_mask(synth::scene_to_mask(scene)));
        write_file(out_path(out_path(opt.out_dir, "truth"), scene.name + ".skyline.csv"),
                   skyline_to_csv(scene.skyline, groups));
    });
    write_file(out_path(opt.out_dir, "references.csv"), reference_to_csv(ex.references));
    write_file(out_path(opt.out_dir, "groups.txt"), default_class_groups_config());
    write_file(out_path(opt.out_dir, "manifest.json"), synth::experiment_to_json(cfg, ex.expected_beta));
    return kExitOk;
}

}  // namespace skydist::pipeline
