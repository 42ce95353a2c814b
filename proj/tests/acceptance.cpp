// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "skydist/metrics.hpp"
#include "skydist/pipeline.hpp"
#include "skydist/regression.hpp"
#include "skydist/synthetic.hpp"

namespace fs = std::filesystem;
using namespace skydist;
namespace pl = skydist::pipeline;

namespace {

struct Outcome {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail << "failed: " << what << "; ";
        } else if (!cond) {
            detail << what << "; ";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

PointContext ctx_of(int start, int width) {
    PointContext c;
    c.start = start;
    c.width = width;
    c.cls = 1;
    c.group = Group::Trees;
    return c;
}

SkylineSignal signal_of(std::vector<int> y) {
    SkylineSignal s;
    s.width = static_cast<int>(y.size());
    s.y = std::move(y);
    for (int v : s.y) s.height = std::max(s.height, v);
    return s;
}

fs::path scratch_dir(const std::string& tag) {
    const auto p = fs::temp_directory_path() /
                   ("skydist_accept_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ClassGroups default_groups() { return load_class_groups(default_class_groups_config()); }

// ---------------------------------------------------------------------------

void exact_algebra(Outcome& out) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> width_dist(2, 512);
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = width_dist(rng);
        std::vector<int> y(static_cast<std::size_t>(w));
        const int spread = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? 0 : 400;
        std::uniform_int_distribution<int> val(0, spread);
        for (auto& v : y) v = val(rng);
        const auto s = signal_of(y);
        const auto d = first_diff(s);

        const int start = std::uniform_int_distribution<int>(0, w - 2)(rng);
        const int width = std::uniform_int_distribution<int>(2, w - start)(rng);
        const auto c = ctx_of(start, width);

        const double mean = segment_mean_diff(d, c);
        out.require(mean == segment_mean_telescoped(s, c), "telescoping mean identity");

        const double sv = sample_variance(d, c);
        const double p2 = power_p(d, c, 2.0);
        out.require(std::abs(p2 - (sv + mean * mean)) <= 1e-9 * std::max(1.0, std::abs(p2)), "P2 = SV + mean^2");

        bool flat = true;
        for (int x = start + 1; x < start + width; ++x) flat = flat && d.at(x) == 0;
        const double n = nsl(d, c);
        out.require(n >= 1.0, "NSL >= 1");
        out.require((n == 1.0) == flat, "NSL == 1 iff flat");

        const int k = std::uniform_int_distribution<int>(-1000, 1000)(rng);
        auto shifted = y;
        for (auto& v : shifted) v += k;
        const auto ds = first_diff(signal_of(shifted));
        for (auto kind : kAllMetricKinds) {
            out.require(segment_metric(d, c, kind) == segment_metric(ds, c, kind), "offset invariance");
        }
        if (width >= 4) {
            const int xi = std::uniform_int_distribution<int>(start, start + width - 1)(rng);
            const int len = std::uniform_int_distribution<int>(4, 2 * width)(rng);
            const auto b = window_bounds(c, xi, len);
            if (b.term_count() > 0) {
                for (auto kind : kAllMetricKinds) {
                    out.require(windowed_metric(d, c, xi, len, kind) == windowed_metric(ds, c, xi, len, kind),
                                "windowed offset invariance");
                }
            }
        }

        const int a = std::uniform_int_distribution<int>(-7, 7)(rng);
        auto ramp = y;
        for (std::size_t x = 0; x < ramp.size(); ++x) ramp[x] += a * static_cast<int>(x);
        out.require(sv == sample_variance(first_diff(signal_of(ramp)), c), "SV ramp invariance");
        ++checked;
    }
    const double t = seconds_since(t0);
    out.require(t < 5.0, "runtime < 5 s");
    out.detail << checked << " skylines in " << t << " s";
}

void hand_oracles(Outcome& out) {
    const auto s = signal_of({5, 7, 6, 6});
    const auto d = first_diff(s);
    const auto c = ctx_of(0, 4);
    const double nsl_exact = (std::sqrt(5.0) + std::sqrt(2.0) + 1.0) / 3.0;
    out.require(std::abs(nsl(d, c) - nsl_exact) <= 1e-12, "NSL");
    out.require(std::abs(nsl(s, c) - nsl_exact) <= 1e-12, "NSL from heights");
    out.require(std::abs(sample_variance(d, c) - 14.0 / 9.0) <= 1e-12, "SV");
    out.require(power_p(d, c, 1.0) == 1.0, "P1");

    const auto b = window_bounds(ctx_of(0, 10), 5, 4);
    out.require(b.lower == 3 && b.upper == 7 && b.term_count() == 3, "window [3, 7)");
    // Terms {4, 5, 6}: a diff signal that is non-zero only there.
    std::vector<int> y(10, 0);
    for (int x = 4; x < 10; ++x) y[static_cast<std::size_t>(x)] = 1 + (x >= 5) + (x >= 6);
    const auto dw = first_diff(signal_of(y));
    out.require(windowed_metric(dw, ctx_of(0, 10), 5, 4, MetricKind::P1) == 1.0, "window covers terms 4, 5, 6");
    out.detail << "NSL=" << nsl(d, c) << " SV=" << sample_variance(d, c) << " window=[" << b.lower << ","
               << b.upper << ")";
}

std::vector<FitPoint> points_from(const std::vector<double>& u, const std::vector<double>& v) {
    std::vector<FitPoint> p;
    for (std::size_t i = 0; i < u.size(); ++i) p.push_back({std::exp(v[i]), std::exp(u[i]), "p", "Trees"});
    return p;
}

void regression(Outcome& out) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int trial = 0; trial < 20; ++trial) {
        const double beta = -3.0 + 4.0 * unit(rng), k = 0.01 + 100.0 * unit(rng);
        std::vector<FitPoint> pts;
        for (int i = 0; i < 12; ++i) {
            const double dist = 10.0 * std::pow(100.0, i / 11.0);
            pts.push_back({k * std::pow(dist, beta), dist, "p", "Trees"});
        }
        const auto f = fit_loglog(pts);
        out.require(std::abs(f.beta - beta) <= 1e-9 && std::abs(f.alpha - std::log(k)) <= 1e-9 &&
                        std::abs(f.r2 - 1.0) <= 1e-9,
                    "exact power law");
    }

    const auto three = fit_loglog(points_from({0, 1, 2}, {0, 1, 1}));
    out.require(std::abs(three.beta - 0.5) <= 1e-9 && std::abs(three.alpha - 1.0 / 6.0) <= 1e-9 &&
                    std::abs(three.r2 - 0.75) <= 1e-9,
                "three-point case");

    double worst_grid = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(unit(rng) * 6);
        const double a = -2.0 + 4.0 * unit(rng), b = -2.0 + 4.0 * unit(rng);
        std::vector<double> u, v;
        for (int i = 0; i < n; ++i) {
            u.push_back(3.0 * i / (n - 1) + 0.05 * unit(rng));
            v.push_back(a + b * u.back() + 0.6 * (unit(rng) - 0.5));
        }
        const auto f = fit_loglog(points_from(u, v));
        const auto [ga, gb] = oracle::grid_search_fit(u, v);
        worst_grid = std::max({worst_grid, std::abs(f.alpha - ga), std::abs(f.beta - gb)});
    }
    out.require(worst_grid <= 2e-3, "grid-search agreement");

    std::size_t free_wins = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(unit(rng) * 30);
        std::vector<double> u, v;
        for (int i = 0; i < n; ++i) {
            u.push_back(std::log(10.0) + std::log(100.0) * i / (n - 1));
            v.push_back(5.0 * unit(rng) - 2.0 * unit(rng) * u.back());
        }
        const auto pts = points_from(u, v);
        const auto f = fit_loglog(pts);
        const auto g = fit_fixed_slope(pts);
        if (f.r2 >= g.r2) ++free_wins;
    }
    out.require(free_wins == 100, "free R^2 >= fixed R^2");

    const double t = seconds_since(t0);
    out.require(t < 10.0, "runtime < 10 s");
    out.detail << "grid max dev " << worst_grid << ", free>=fixed " << free_wins << "/100, " << t << " s";
}

// synth -> extract -> analyze through files; returns the SV fits for `group`.
struct SvFits {
    double beta = NAN, r2 = NAN, fixed_r2 = NAN;
    long long n = 0;
};

SvFits end_to_end(const fs::path& dir, const std::string& manifest, const std::string& group, int jobs,
                  bool filter, std::string* err) {
    pl::SynthOptions so;
    so.manifest_path = (dir / "manifest_in.json").string();
    write_file(so.manifest_path, manifest);
    so.out_dir = (dir / "synth").string();
    so.jobs = jobs;
    if (pl::run_synth(so) != pl::kExitOk) *err += "synth failed; ";

    pl::ExtractOptions eo;
    for (const auto& e : fs::directory_iterator(dir / "synth")) {
        if (e.path().extension() == ".lmask") eo.masks.push_back(e.path().string());
    }
    eo.groups_path = (dir / "synth/groups.txt").string();
    eo.out_dir = (dir / "skylines").string();
    eo.jobs = jobs;
    eo.filter = filter;
    const auto ex = pl::run_extract(eo);
    for (const auto& it : ex.items) {
        if (it.status != "processed") *err += it.stem + " " + it.status + "; ";
    }

    pl::AnalyzeOptions ao;
    ao.skyline_dir = eo.out_dir;
    ao.refs_path = (dir / "synth/references.csv").string();
    ao.groups_path = eo.groups_path;
    ao.out_dir = (dir / "analysis").string();
    ao.jobs = jobs;
    if (pl::run_analyze(ao) != pl::kExitOk) *err += "analyze exit code; ";

    SvFits r;
    for (const auto& f : nlohmann::json::parse(read_file((dir / "analysis/fits.json").string()))) {
        if (f["group"] != group || f["kind"] != "SV" || f["L"] != "none" || f["status"] != "ok") continue;
        if (f["model"] == "free") {
            r.beta = f["beta"].get<double>();
            r.r2 = f["r2"].is_null() ? NAN : f["r2"].get<double>();
            r.n = f["n"].get<long long>();
        } else if (f["model"] == "fixed") {
            r.fixed_r2 = f["r2"].is_null() ? NAN : f["r2"].get<double>();
        }
    }
    return r;
}

void synthetic_recovery(Outcome& out) {
    const auto dir = scratch_dir("trees");
    const auto t0 = Clock::now();
    std::string err;
    const auto trees = end_to_end(dir, synth::experiment_to_json(synth::default_experiment(), -1.0), "Trees", 0, true, &err);
    const double t = seconds_since(t0);
    out.require(err.empty(), "tree pipeline: " + err);
    out.require(trees.n == 200, "200 tree points");
    out.require(trees.beta >= -1.4 && trees.beta <= -0.6, "tree beta in [-1.4, -0.6]");
    out.require(trees.r2 >= 0.8, "tree R^2 >= 0.8");
    out.require(trees.fixed_r2 >= 0.7, "fixed-slope R^2 >= 0.7");
    out.require(t < 30.0, "end-to-end runtime < 30 s");

    auto bcfg = synth::default_experiment();
    bcfg.name = "bld";
    bcfg.object = synth::ObjectKind::Building;
    const auto bdir = scratch_dir("buildings");
    std::string berr;
    const auto bld = end_to_end(bdir, synth::experiment_to_json(bcfg, 0.0), "Houses", 0, false, &berr);
    out.require(berr.empty(), "building pipeline: " + berr);
    out.require(std::abs(bld.beta) <= 0.2 || bld.r2 <= 0.1, "buildings flat");

    fs::remove_all(dir);
    fs::remove_all(bdir);
    out.detail << "trees beta=" << trees.beta << " R2=" << trees.r2 << " fixed R2=" << trees.fixed_r2 << " n="
               << trees.n << " in " << t << " s; buildings beta=" << bld.beta << " R2=" << bld.r2;
}

pl::Dataset dataset_of(const synth::Experiment& ex) {
    pl::Dataset d;
    d.groups = default_groups();
    d.references = ex.references;
    for (const auto& s : ex.scenes) {
        d.skylines[s.name] = s.skyline;
        d.max_width = std::max(d.max_width, s.skyline.signal.width);
    }
    return d;
}

void windowing(Outcome& out) {
    synth::ExperimentConfig cfg;
    cfg.name = "pair";
    cfg.layout = synth::Layout::Pair;
    cfg.distances = synth::log_spaced(10.0, 400.0, 40);
    cfg.depth = 14;
    cfg.amplitude = 905.0;
    cfg.object_width = 64;
    const auto pair = dataset_of(synth::build_experiment(cfg));
    const int w = pair.max_width;
    double r2_single = NAN, r2_full = NAN;
    for (const auto& r : pl::sweep(pair, {64, 2 * w}, 0)) {
        if (r.group != "Trees" || r.kind != MetricKind::SV) continue;
        (r.window == 64 ? r2_single : r2_full) = r.r2;
    }
    out.require(r2_single - r2_full >= 0.05, "R^2(L=64) - R^2(L=2W) >= 0.05");

    const auto single = dataset_of(synth::build_experiment(synth::default_experiment()));
    int max_d = 0;
    for (const auto& [name, sk] : single.skylines) {
        for (const auto& s : sk.segments.segments) {
            if (!single.groups.is_sky(s.cls)) max_d = std::max(max_d, s.width);
        }
    }
    const std::vector<int> grid{2 * max_d, 2 * max_d + 1, 2 * max_d + 33, 2 * single.max_width,
                                4 * single.max_width};
    const auto res = pl::analyze(single, {grid.begin(), grid.end()}, 0);
    std::map<std::pair<std::string, int>, double> first;
    std::size_t compared = 0;
    bool metrics_equal = true;
    for (const auto& s : res.samples) {
        if (s.skipped) continue;
        const auto key = std::make_pair(s.point_id, static_cast<int>(s.kind));
        const auto [it, inserted] = first.emplace(key, s.value);
        if (!inserted) {
            metrics_equal = metrics_equal && it->second == s.value;
            ++compared;
        }
    }
    out.require(compared > 0 && metrics_equal, "metrics identical for L >= 2 max D");
    std::map<std::string, std::vector<double>> r2s;
    for (const auto& c : res.cells) {
        if (c.free_fit) r2s[c.group + metric_name(c.kind).data()].push_back(c.free_fit->r2);
    }
    bool r2_equal = !r2s.empty();
    for (const auto& [k, v] : r2s) {
        r2_equal = r2_equal && v.size() == grid.size();
        for (double r : v) r2_equal = r2_equal && r == v.front();
    }
    out.require(r2_equal, "R^2(L) constant for L >= 2 max D");
    out.detail << "pair R2(64)=" << r2_single << " R2(" << 2 * w << ")=" << r2_full << "; single-object "
               << grid.size() << " windows from L=" << 2 * max_d << ", " << compared << " metric pairs equal";
}

// Files under root; the root prefix is stripped from file contents since
// reports echo input paths.
std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    const auto prefix = root.string();
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        auto body = read_file(e.path().string());
        for (auto pos = body.find(prefix); pos != std::string::npos; pos = body.find(prefix, pos)) {
            body.erase(pos, prefix.size());
        }
        files[fs::relative(e.path(), root).string()] = body;
    }
    return files;
}

void fidelity(Outcome& out) {
    const auto groups = default_groups();
    std::size_t scenes = 0;
    auto pair_cfg = synth::default_experiment();
    pair_cfg.name = "pair";
    pair_cfg.layout = synth::Layout::Pair;
    pair_cfg.distances = synth::log_spaced(10.0, 400.0, 40);
    pair_cfg.depth = 14;
    pair_cfg.amplitude = 905.0;
    pair_cfg.object_width = 64;
    auto bld_cfg = synth::default_experiment();
    bld_cfg.name = "bld";
    bld_cfg.object = synth::ObjectKind::Building;
    for (const auto& cfg : {synth::default_experiment(), pair_cfg, bld_cfg}) {
        for (const auto& scene : synth::build_experiment(cfg).scenes) {
            const auto mask = synth::scene_to_mask(scene);
            const auto text = serialize_mask(mask);
            const auto parsed = parse_mask(text);
            out.require(parsed == mask && serialize_mask(parsed) == text, "mask round trip " + scene.name);
            out.require(extract_skyline(parsed, groups) == scene.skyline, "render-extract " + scene.name);
            ++scenes;
        }
    }

    double worst = 0.0;
    const auto without = signal_of(oracle::engineered_crf_pair_without());
    for (int b = 1; b <= 3; ++b) {
        const double g = crf_gain(signal_of(oracle::engineered_crf_pair_with(b)), without);
        worst = std::max(worst, std::abs(g - oracle::engineered_gain(b)));
    }
    out.require(worst <= 1e-9, "engineered CRF gains");

    auto small = synth::default_experiment();
    small.distances = synth::log_spaced(10.0, 1000.0, 12);
    small.seeds = {4, 9};
    const auto manifest = synth::experiment_to_json(small, -1.0);
    const auto a = scratch_dir("rerun_a");
    const auto b = scratch_dir("rerun_b");
    std::string err;
    end_to_end(a, manifest, "Trees", 1, true, &err);
    end_to_end(b, manifest, "Trees", 4, true, &err);
    out.require(err.empty(), "rerun pipeline: " + err);
    const auto fa = read_tree(a), fb = read_tree(b);
    std::size_t differing = 0;
    for (const auto& [name, body] : fa) {
        const auto it = fb.find(name);
        if (it == fb.end() || it->second != body) {
            if (differing++ == 0) out.detail << "first difference in " << name << "; ";
        }
    }
    out.require(fa.size() == fb.size() && differing == 0, "deterministic reruns");
    // Truth skylines from synth match extracted ones byte for byte.
    std::size_t truth_mismatch = 0;
    for (const auto& [name, body] : fa) {
        if (name.rfind("synth/truth/", 0) != 0) continue;
        const auto ex = fa.find("skylines/" + name.substr(12));
        if (ex == fa.end() || ex->second != body) ++truth_mismatch;
    }
    out.require(truth_mismatch == 0, "extracted skyline files equal truth files");
    fs::remove_all(a);
    fs::remove_all(b);
    out.detail << scenes << " scenes round-tripped, CRF max dev " << worst << ", " << fa.size()
               << " output files identical across reruns";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"1 exact algebra", exact_algebra},
        {"2 hand oracles", hand_oracles},
        {"3 regression correctness", regression},
        {"4 synthetic inverse-power recovery", synthetic_recovery},
        {"5 windowing behavior", windowing},
        {"6 pipeline fidelity", fidelity},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome out;
        try {
            fn(out);
        } catch (const std::exception& e) {
            out.ok = false;
            out.detail << "exception: " << e.what();
        }
        std::printf("%s %s: %s\n", out.ok ? "PASS" : "FAIL", name.c_str(), out.detail.str().c_str());
        std::fflush(stdout);
        if (!out.ok) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
