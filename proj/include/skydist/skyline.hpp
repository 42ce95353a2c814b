#pragma once

#include <span>
#include <string>
#include <vector>

#include "skydist/mask_io.hpp"

namespace skydist {

/// Class assigned to columns that contain no non-sky pixel.
inline constexpr ClassId kSkySentinel = -1;

/// Skyline height per column, counted in pixels up from the bottom edge.
/// A value of 0 means the column is entirely sky.
struct SkylineSignal {
    int width = 0;
    int height = 0;
    std::vector<int> y;

    bool operator==(const SkylineSignal&) const = default;
};

/// Maximal run of equal column classes: columns [start, start + width).
struct Segment {
    int start = 0;
    int width = 0;
    ClassId cls = kSkySentinel;

    bool contains(int x) const { return start <= x && x < start + width; }
    bool operator==(const Segment&) const = default;
};

struct SegmentList {
    int width = 0;
    std::vector<Segment> segments;

    bool operator==(const SegmentList&) const = default;
};

struct Skyline {
    SkylineSignal signal;
    SegmentList segments;
    std::vector<ClassId> column_class;

    bool operator==(const Skyline&) const = default;
};

/// The segment a reference column falls in, plus its analysis group.
struct PointContext {
    int start = 0;
    int width = 0;
    ClassId cls = kSkySentinel;
    Group group = Group::OtherClasses;
    bool sky = false;
};

/// Run-length decomposition of a per-column class signal.
SegmentList segment_runs(std::span<const ClassId> column_class);

/// Topmost non-sky pixel per column; y = H - row. Holes below the first
/// non-sky pixel are ignored.
Skyline extract_skyline(const LabelMask& mask, const ClassGroups& groups);

/// Throws DomainError unless 0 <= x < W.
PointContext point_context(const SegmentList& segments, int x, const ClassGroups& groups);

inline constexpr double kDefaultSkyFraction = 0.95;
inline constexpr int kSkyFilterRows = 10;

/// True when at least `theta` of the pixels in the top 10 rows (fewer if
/// the image is shorter) are sky.
bool passes_sky_filter(const LabelMask& mask, const ClassGroups& groups,
                       double theta = kDefaultSkyFraction);

bool has_tree_below_skyline(const SegmentList& segments, const ClassGroups& groups);

/// Arc length of the whole skyline: sum of sqrt(dy^2 + 1) over W - 1 steps.
double skyline_length(const SkylineSignal& signal);

/// Relative length gain of a refined skyline over the unrefined one.
/// Negative values mean the refinement shortened the skyline.
double crf_gain(const SkylineSignal& with_crf, const SkylineSignal& without_crf);

/// "Sky" for the sentinel and sky ids, otherwise the analysis group name.
std::string group_label(ClassId cls, const ClassGroups& groups);

// CSV exports. Headers: "x,y,class_id,group" and "x_c,D,class_id,group".
std::string skyline_to_csv(const Skyline& skyline, const ClassGroups& groups);
std::string segments_to_csv(const Skyline& skyline, const ClassGroups& groups);

/// Rebuilds a skyline (signal, column classes, segments) from its CSV
/// export. The image height is not stored, so it is taken as max(y).
Skyline skyline_from_csv(std::string_view text);

}  // namespace skydist
