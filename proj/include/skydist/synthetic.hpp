#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skydist/mask_io.hpp"
#include "skydist/refdata.hpp"
#include "skydist/skyline.hpp"

namespace skydist::synth {

/// Class ids used by generated scenes; they match default_class_groups_config().
inline constexpr ClassId kSkyId = 0;
inline constexpr ClassId kTreeId = 1;
inline constexpr ClassId kHouseId = 2;
inline constexpr ClassId kGroundId = 5;

/// Midpoint-displacement profile with 2^depth + 1 samples and zero endpoints.
struct FractalTemplate {
    std::vector<double> samples;
    int depth = 0;
    double hurst = 0.5;
    double amplitude = 1.0;
    std::uint64_t seed = 0;
};

/// Each level sets midpoints to the neighbour average plus a uniform
/// perturbation on [-s, s]; s starts at `amplitude` and shrinks by
/// 2^-hurst per level. Requires 1 <= depth <= 24, 0 < hurst < 1,
/// amplitude > 0.
FractalTemplate gen_fractal_template(int depth, double hurst, double amplitude, std::uint64_t seed);

/// Number of output columns that fit the whole template at distance d.
int full_span_width(const FractalTemplate& tmpl, double distance, double d_ref);

/// Samples the template as seen from `distance`: heights scaled by
/// d_ref / d, columns taken every d / d_ref samples (nearest sample),
/// rounded to whole pixels and offset by `baseline`. Throws DomainError
/// when d < d_ref or the requested width runs past the template.
std::vector<int> render_at_distance(const FractalTemplate& tmpl, double distance, double d_ref, int pixel_width,
                                    int baseline);

/// Flat-topped block: zero at both ends, `height` in between. With
/// `pixel_noise`, each top column moves by -1, 0 or +1 (never below 1).
std::vector<int> gen_building_profile(int width, int height, bool pixel_noise, std::uint64_t seed);

struct RenderedObject {
    ClassId cls = kTreeId;
    int start = 0;
    int width = 0;
    double distance_m = 0.0;
    int ref_x = 0;
    std::string point_id;
};

/// A composed single-image scene: a strip of ground, objects standing on
/// it, and enough sky on top to pass the sky filter.
struct RenderedScene {
    std::string name;
    Skyline skyline;
    std::vector<RenderedObject> objects;
    int ground_rows = 3;

    std::vector<ReferencePoint> reference_points() const;
};

/// Places `profiles` side by side between ground margins. Profile values
/// are heights above the ground strip; columns at 0 show ground.
RenderedScene compose_scene(std::string name, const std::vector<std::vector<int>>& profiles,
                            const std::vector<ClassId>& classes, const std::vector<double>& distances,
                            int ground_rows, int margin, int sky_rows);

LabelMask scene_to_mask(const RenderedScene& scene);

enum class ObjectKind { Tree, Building };
enum class Layout { Single, Pair };

struct ExperimentConfig {
    std::string name = "trees";
    ObjectKind object = ObjectKind::Tree;
    Layout layout = Layout::Single;
    std::vector<double> distances;  // near distance per scene
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    double hurst = 0.5;
    int depth = 11;
    double amplitude = 320.0;
    double d_ref = 10.0;
    int object_width = 0;  // 0: whole template span at each distance
    double pair_ratio = 5.0;
    int building_width = 800;
    int building_height = 300;
    bool building_noise = true;
    int ground_rows = 3;
    int margin = 4;
    int sky_rows = 12;
};

/// `count` distances spaced evenly in log between lo and hi inclusive.
std::vector<double> log_spaced(double lo, double hi, int count);

/// The default tree experiment: 40 distances in [10, 1000] m, 5 seeds.
ExperimentConfig default_experiment();

struct Experiment {
    ExperimentConfig config;
    std::vector<RenderedScene> scenes;
    std::vector<ReferencePoint> references;
    double expected_beta = 0.0;  // 2H - 2 for trees, 0 for buildings
};

/// Throws DomainError unless there are >= 10 distances spanning >= 1.5
/// decades.
Experiment build_experiment(const ExperimentConfig& config);

ExperimentConfig experiment_from_json(std::string_view text);
std::string experiment_to_json(const ExperimentConfig& config, double expected_beta);

}  // namespace skydist::synth
