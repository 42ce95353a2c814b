#include "skydist/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"

namespace skydist::synth {

namespace {

// Uniform on [-1, 1] from the raw 64-bit stream; the standard
// distributions are not reproducible across library implementations.
double symmetric_unit(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

FractalTemplate gen_fractal_template(int depth, double hurst, double amplitude, std::uint64_t seed) {
    if (depth < 1 || depth > 24) throw DomainError("template depth must be in [1, 24]");
    if (!(hurst > 0.0 && hurst < 1.0)) throw DomainError("Hurst exponent must be in (0, 1)");
    if (!(amplitude > 0.0)) throw DomainError("amplitude must be > 0");

    FractalTemplate t;
    t.depth = depth;
    t.hurst = hurst;
    t.amplitude = amplitude;
    t.seed = seed;
    const std::size_t len = (std::size_t{1} << depth) + 1;
    t.samples.assign(len, 0.0);

    std::mt19937_64 rng(seed);
    const double shrink = std::pow(2.0, -hurst);
    double scale = amplitude;
    for (std::size_t step = len - 1; step >= 2; step /= 2) {
        const std::size_t half = step / 2;
        for (std::size_t i = half; i < len; i += step) {
            t.samples[i] = 0.5 * (t.samples[i - half] + t.samples[i + half]) + scale * symmetric_unit(rng);
        }
        scale *= shrink;
    }
    return t;
}

int full_span_width(const FractalTemplate& tmpl, double distance, double d_ref) {
    const double stride = distance / d_ref;
    return static_cast<int>(std::floor(static_cast<double>(tmpl.samples.size() - 1) / stride)) + 1;
}

std::vector<int> render_at_distance(const FractalTemplate& tmpl, double distance, double d_ref, int pixel_width,
                                    int baseline) {
    if (!(d_ref > 0.0) || !(distance >= d_ref)) throw DomainError("render needs d >= d_ref > 0");
    if (pixel_width < 1) throw DomainError("render width must be >= 1");
    const double stride = distance / d_ref;
    const double scale = d_ref / distance;
    const auto last = static_cast<long long>(tmpl.samples.size()) - 1;
    if (std::llround(static_cast<double>(pixel_width - 1) * stride) > last) {
        throw DomainError("stride " + format_real(stride) + " x width " + std::to_string(pixel_width) +
                          " exceeds template length " + std::to_string(tmpl.samples.size()));
    }
    std::vector<int> out(static_cast<std::size_t>(pixel_width));
    for (int i = 0; i < pixel_width; ++i) {
        const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * stride));
        out[static_cast<std::size_t>(i)] = static_cast<int>(std::llround(tmpl.samples[idx] * scale)) + baseline;
    }
    return out;
}

std::vector<int> gen_building_profile(int width, int height, bool pixel_noise, std::uint64_t seed) {
    if (width < 4) throw DomainError("building width must be >= 4");
    if (height < 1) throw DomainError("building height must be >= 1");
    std::vector<int> out(static_cast<std::size_t>(width), height);
    out.front() = 0;
    out.back() = 0;
    if (pixel_noise) {
        std::mt19937_64 rng(seed);
        for (int x = 1; x + 1 < width; ++x) {
            const int jitter = static_cast<int>(rng() % 3) - 1;
            out[static_cast<std::size_t>(x)] = std::max(1, height + jitter);
        }
    }
    return out;
}

std::vector<ReferencePoint> RenderedScene::reference_points() const {
    std::vector<ReferencePoint> out;
    for (const auto& o : objects) {
        ReferencePoint p;
        p.point_id = o.point_id;
        p.x = o.ref_x;
        p.y = skyline.signal.y[static_cast<std::size_t>(o.ref_x)];
        p.distance_m = o.distance_m;
        out.push_back(std::move(p));
    }
    return out;
}

RenderedScene compose_scene(std::string name, const std::vector<std::vector<int>>& profiles,
                            const std::vector<ClassId>& classes, const std::vector<double>& distances,
                            int ground_rows, int margin, int sky_rows) {
    if (profiles.size() != classes.size() || profiles.size() != distances.size()) {
        throw DomainError("profiles, classes and distances must align");
    }
    if (ground_rows < 1 || margin < 1 || sky_rows < kSkyFilterRows) {
        throw DomainError("scene needs ground >= 1, margin >= 1, sky rows >= 10");
    }
    RenderedScene scene;
    scene.name = std::move(name);
    scene.ground_rows = ground_rows;

    auto& y = scene.skyline.signal.y;
    auto& cls = scene.skyline.column_class;
    auto ground = [&](int n) {
        for (int i = 0; i < n; ++i) {
            y.push_back(ground_rows);
            cls.push_back(kGroundId);
        }
    };
    ground(margin);
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        RenderedObject obj;
        obj.cls = classes[k];
        obj.distance_m = distances[k];
        int first = -1, last = -1;
        for (std::size_t i = 0; i < profiles[k].size(); ++i) {
            const int h = profiles[k][i];
            if (h < 0) throw DomainError("profile heights must be >= 0");
            const int x = static_cast<int>(y.size());
            y.push_back(ground_rows + h);
            cls.push_back(h > 0 ? classes[k] : kGroundId);
            if (h > 0) {
                if (first < 0) first = x;
                last = x;
            }
        }
        if (first < 0) throw DomainError("object has no visible columns");
        obj.start = first;
        obj.width = last - first + 1;
        obj.ref_x = first + obj.width / 2;
        obj.point_id = scene.name + "#" + std::to_string(k);
        scene.objects.push_back(std::move(obj));
    }
    ground(margin);

    auto& sig = scene.skyline.signal;
    sig.width = static_cast<int>(y.size());
    sig.height = *std::max_element(y.begin(), y.end()) + sky_rows;
    scene.skyline.segments = segment_runs(cls);
    return scene;
}

LabelMask scene_to_mask(const RenderedScene& scene) {
    const auto& sig = scene.skyline.signal;
    LabelMask m;
    m.width = sig.width;
    m.height = sig.height;
    m.cells.assign(static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height), kSkyId);
    for (int x = 0; x < m.width; ++x) {
        const int h = sig.y[static_cast<std::size_t>(x)];
        const auto c = scene.skyline.column_class[static_cast<std::size_t>(x)];
        for (int r = m.height - h; r < m.height; ++r) {
            const bool in_ground = r >= m.height - scene.ground_rows;
            m.cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(m.width) + static_cast<std::size_t>(x)] =
                in_ground ? kGroundId : c;
        }
    }
    m.class_map = {{kSkyId, "sky-other"}, {kGroundId, "dirt"}};
    for (const auto& o : scene.objects) {
        m.class_map.emplace(o.cls, o.cls == kTreeId ? "tree" : o.cls == kHouseId ? "house" : "object");
    }
    return m;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw DomainError("log_spaced needs count >= 2 and 0 < lo < hi");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

ExperimentConfig default_experiment() {
    ExperimentConfig c;
    c.distances = log_spaced(10.0, 1000.0, 40);
    return c;
}

namespace {

// Shifts a rendered profile so its lowest column sits one pixel above ground.
std::vector<int> lift(std::vector<int> heights) {
    const int lo = *std::min_element(heights.begin(), heights.end());
    for (auto& h : heights) h = h - lo + 1;
    return heights;
}

std::vector<int> building_at(const ExperimentConfig& c, double d, std::uint64_t seed) {
    const double scale = c.d_ref / d;
    const int w = std::max(4, static_cast<int>(std::lround(c.building_width * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(c.building_height * scale)));
    return gen_building_profile(w, h, c.building_noise, seed);
}

std::vector<int> tree_at(const ExperimentConfig& c, const FractalTemplate& t, double d) {
    const int w = c.object_width > 0 ? c.object_width : full_span_width(t, d, c.d_ref);
    return lift(render_at_distance(t, d, c.d_ref, w, 0));
}

}  // namespace

Experiment build_experiment(const ExperimentConfig& config) {
    const auto& ds = config.distances;
    if (ds.size() < 10) throw DomainError("experiment needs at least 10 distances");
    const auto [lo, hi] = std::minmax_element(ds.begin(), ds.end());
    if (!(*lo > 0.0) || std::log10(*hi / *lo) < 1.5) {
        throw DomainError("experiment distances must be positive and span at least 1.5 decades");
    }
    if (*lo < config.d_ref) throw DomainError("every distance must be >= d_ref");
    if (config.seeds.empty()) throw DomainError("experiment needs at least one seed");
    if (config.layout == Layout::Pair && !(config.pair_ratio > 1.0)) throw DomainError("pair ratio must be > 1");

    Experiment ex;
    ex.config = config;
    ex.expected_beta = config.object == ObjectKind::Tree ? 2.0 * config.hurst - 2.0 : 0.0;
    const ClassId cls = config.object == ObjectKind::Tree ? kTreeId : kHouseId;

    for (const auto seed : config.seeds) {
        std::vector<FractalTemplate> templates;
        if (config.object == ObjectKind::Tree) {
            templates.push_back(gen_fractal_template(config.depth, config.hurst, config.amplitude, seed));
            if (config.layout == Layout::Pair) {
                templates.push_back(
                    gen_fractal_template(config.depth, config.hurst, config.amplitude, mix_seed(seed, 1)));
            }
        }
        for (std::size_t i = 0; i < ds.size(); ++i) {
            char name[96];
            std::snprintf(name, sizeof name, "%s_s%llu_d%03zu", config.name.c_str(),
                          static_cast<unsigned long long>(seed), i);
            std::vector<double> dist{ds[i]};
            if (config.layout == Layout::Pair) dist.push_back(ds[i] * config.pair_ratio);

            std::vector<std::vector<int>> profiles;
            for (std::size_t k = 0; k < dist.size(); ++k) {
                if (config.object == ObjectKind::Tree) {
                    profiles.push_back(tree_at(config, templates[k], dist[k]));
                } else {
                    profiles.push_back(building_at(config, dist[k], mix_seed(seed, 100 + i * 2 + k)));
                }
            }
            if (config.object == ObjectKind::Building && config.layout == Layout::Pair) {
                // Drop the shared ground column so both blocks form one segment.
                profiles[0].pop_back();
                profiles[1].erase(profiles[1].begin());
            }
            auto scene = compose_scene(name, profiles, std::vector<ClassId>(dist.size(), cls), dist,
                                       config.ground_rows, config.margin, config.sky_rows);
            for (auto& p : scene.reference_points()) ex.references.push_back(std::move(p));
            ex.scenes.push_back(std::move(scene));
        }
    }
    return ex;
}

ExperimentConfig experiment_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("manifest must be a JSON object");
    ExperimentConfig c;
    try {
        c.name = j.value("name", c.name);
        const auto object = j.value("object", std::string("tree"));
        if (object == "tree") c.object = ObjectKind::Tree;
        else if (object == "building") c.object = ObjectKind::Building;
        else throw ParseError("manifest object must be 'tree' or 'building'");
        const auto layout = j.value("layout", std::string("single"));
        if (layout == "single") c.layout = Layout::Single;
        else if (layout == "pair") c.layout = Layout::Pair;
        else throw ParseError("manifest layout must be 'single' or 'pair'");

        if (j.contains("distances")) {
            const auto& d = j.at("distances");
            if (d.is_array()) {
                c.distances = d.get<std::vector<double>>();
            } else {
                c.distances = log_spaced(d.at("min").get<double>(), d.at("max").get<double>(),
                                         d.at("count").get<int>());
            }
        } else {
            c.distances = default_experiment().distances;
        }
        if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        c.hurst = j.value("hurst", c.hurst);
        c.depth = j.value("depth", c.depth);
        c.amplitude = j.value("amplitude", c.amplitude);
        c.d_ref = j.value("d_ref", c.d_ref);
        c.object_width = j.value("object_width", c.object_width);
        c.pair_ratio = j.value("pair_ratio", c.pair_ratio);
        c.building_width = j.value("building_width", c.building_width);
        c.building_height = j.value("building_height", c.building_height);
        c.building_noise = j.value("building_noise", c.building_noise);
        c.ground_rows = j.value("ground_rows", c.ground_rows);
        c.margin = j.value("margin", c.margin);
        c.sky_rows = j.value("sky_rows", c.sky_rows);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid manifest field: ") + e.what());
    } catch (const DomainError& e) {
        throw ParseError(std::string("invalid manifest: ") + e.what());
    }
    if (c.name.empty() || c.name.find_first_of("#/\\, ") != std::string::npos) {
        throw ParseError("manifest name must be non-empty without '#', '/', ',' or spaces");
    }
    return c;
}

std::string experiment_to_json(const ExperimentConfig& c, double expected_beta) {
    nlohmann::ordered_json j;
    auto real = [](double v) { return nlohmann::ordered_json::parse(format_real(v)); };
    j["name"] = c.name;
    j["object"] = c.object == ObjectKind::Tree ? "tree" : "building";
    j["layout"] = c.layout == Layout::Single ? "single" : "pair";
    auto ds = nlohmann::ordered_json::array();
    for (double d : c.distances) ds.push_back(real(d));
    j["distances"] = ds;
    j["seeds"] = c.seeds;
    j["hurst"] = real(c.hurst);
    j["depth"] = c.depth;
    j["amplitude"] = real(c.amplitude);
    j["d_ref"] = real(c.d_ref);
    j["object_width"] = c.object_width;
    j["pair_ratio"] = real(c.pair_ratio);
    j["building_width"] = c.building_width;
    j["building_height"] = c.building_height;
    j["building_noise"] = c.building_noise;
    j["ground_rows"] = c.ground_rows;
    j["margin"] = c.margin;
    j["sky_rows"] = c.sky_rows;
    j["expected_beta"] = real(expected_beta);
    return j.dump(2) + "\n";
}

}  // namespace skydist::synth
