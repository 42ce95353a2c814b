#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skydist/metrics.hpp"
#include "skydist/regression.hpp"
#include "skydist/skyline.hpp"

namespace skydist::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitInvalid = 2;

/// Bad flags or unusable inputs as a whole; maps to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Runs fn(0..n-1) on up to `jobs` threads. Callers write results into
/// slot i, so output order never depends on scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Window grid: "none", "425", "none,100,425", "25:1000:25" or
/// "25:2W:25", where W is `max_width`.
std::vector<std::optional<int>> parse_window_spec(std::string_view spec, int max_width);

ClassGroups load_groups_or_default(const std::string& path);

/// A skyline file stem ("scene_01" for "scene_01.skyline.csv").
std::string stem_of(const std::string& path, std::string_view suffix);

struct ExtractOptions {
    std::vector<std::string> masks;
    std::string groups_path;
    std::string out_dir;
    int jobs = 1;
    bool filter = true;
    double theta = kDefaultSkyFraction;
};

struct ExtractItem {
    std::string path;
    std::string stem;
    std::string status;  // processed, filtered, error
    std::string reason;
};

struct ExtractResult {
    std::vector<ExtractItem> items;
    int exit_code = kExitOk;
};

/// Writes <stem>.skyline.csv and <stem>.segments.csv per mask plus
/// extract_report.csv. Images failing the sky or tree filter are listed
/// and skipped unless filtering is off.
ExtractResult run_extract(const ExtractOptions& opt);

/// Skylines keyed by stem, read from every *.skyline.csv in a directory.
std::map<std::string, Skyline> load_skyline_dir(const std::string& dir);

struct Dataset {
    std::map<std::string, Skyline> skylines;
    std::vector<ReferencePoint> references;
    ClassGroups groups;
    int max_width = 0;
};

Dataset load_dataset(const std::string& skyline_dir, const std::string& refs_path, const std::string& groups_path);

struct AnalysisOutput {
    std::vector<MetricSample> samples;
    std::vector<JoinedPoint> joined;
    std::vector<FitCell> cells;
};

/// Metrics for every reference point and window, then per-cell fits.
/// Points without a skyline or outside their image are skip-flagged.
AnalysisOutput analyze(const Dataset& data, const std::vector<std::optional<int>>& windows, int jobs = 1);

struct AnalyzeOptions {
    std::string skyline_dir;
    std::string refs_path;
    std::string groups_path;
    std::string window_spec = "none";
    std::string out_dir;
    int jobs = 1;
};

/// Writes metrics.csv, joined.csv and fits.json. Throws UsageError when no
/// point is usable.
int run_analyze(const AnalyzeOptions& opt);

struct SweepRow {
    std::string group;
    MetricKind kind = MetricKind::SV;
    int window = 0;
    double r2 = 0.0;
    std::size_t n = 0;
};

std::vector<SweepRow> sweep(const Dataset& data, const std::vector<int>& grid, int jobs = 1);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

struct SweepOptions {
    std::string skyline_dir;
    std::string refs_path;
    std::string groups_path;
    std::string window_spec;  // empty: 25:2W:25
    std::string out_dir;
    int jobs = 1;
};

int run_sweep(const SweepOptions& opt);

struct AlignedProfile {
    std::string point_id;
    std::string group;
    int segment_width = 0;
    std::string bucket;
    std::vector<int> offsets;     // x - x_i
    std::vector<double> values;   // y - segment mean
};

std::string width_bucket(int width, const std::vector<int>& edges);

/// Profiles of every usable point whose group matches `group` (empty
/// matches all groups).
std::vector<AlignedProfile> aligned_profiles(const Dataset& data, const std::string& group,
                                             const std::vector<int>& edges);
std::string profiles_to_csv(const std::vector<AlignedProfile>& profiles);

struct ProfilesOptions {
    std::string skyline_dir;
    std::string refs_path;
    std::string groups_path;
    std::string group = "Houses";
    std::vector<int> bucket_edges{200, 400, 800};
    std::string out_dir;
};

int run_profiles(const ProfilesOptions& opt);

struct GainSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    std::map<std::string, double> quantiles;  // q05, q25, q50, q75, q95
    double bin_width = 0.1;
    struct Bin {
        double lo = 0.0;
        double hi = 0.0;
        std::size_t count = 0;
    };
    std::vector<Bin> bins;
};

/// Linear-interpolated quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

GainSummary summarize_gains(const std::vector<double>& gains, double bin_width);
std::string gain_summary_json(const GainSummary& s);

struct CrfPair {
    std::string with_path;
    std::string without_path;
};

struct CrfOptions {
    std::vector<CrfPair> pairs;
    double bin_width = 0.1;
    std::string out_dir;
};

/// Writes gains.csv and gain_summary.json. A pair with mismatched widths
/// is reported and skipped (exit code 1).
int run_crf_gain(const CrfOptions& opt);

struct SynthOptions {
    std::string manifest_path;  // empty: default experiment
    std::optional<std::uint64_t> seed;  // replaces the manifest seed list
    std::string out_dir;
    int jobs = 1;
};

/// Writes <scene>.lmask, truth/<scene>.skyline.csv, references.csv,
/// groups.txt and manifest.json.
int run_synth(const SynthOptions& opt);

}  // namespace skydist::pipeline
