#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skydist/skyline.hpp"

namespace skydist {

/// An annotated skyline pixel with its measured ground distance.
///
/// `point_id` names the photo, optionally followed by `#<n>` when one photo
/// carries several points ("P0042#2"). The part before '#' is the image key
/// used to pair points with skylines.
struct ReferencePoint {
    std::string point_id;
    int x = 0;
    std::optional<double> y;  // advisory only; metrics use the extracted skyline
    double distance_m = 0.0;

    std::string image_key() const;
    bool operator==(const ReferencePoint&) const = default;
};

inline constexpr std::string_view kReferenceHeader = "point_id,x,y,distance_m";

/// Rows with x outside an image are accepted here and flagged at join time.
std::vector<ReferencePoint> parse_reference_csv(std::string_view text);
std::string reference_to_csv(std::span<const ReferencePoint> points);

enum class JoinStatus { Usable, OutOfRange, SkyColumn, NoSkyline };

std::string_view join_status_name(JoinStatus s);

struct JoinedPoint {
    ReferencePoint point;
    JoinStatus status = JoinStatus::Usable;
    std::optional<PointContext> context;  // set whenever x is in range
    int y_skyline = 0;
    std::optional<double> y_mismatch;     // |y_i - y[x_i]| when y_i is given

    bool usable() const { return status == JoinStatus::Usable; }
};

/// One output per input, in input order.
std::vector<JoinedPoint> join_points(std::span<const ReferencePoint> points, const Skyline& skyline,
                                     const ClassGroups& groups);

/// Header: point_id,x,y_skyline,group,x_c,D,distance_m,flags
std::string joined_to_csv(std::span<const JoinedPoint> joined);

}  // namespace skydist
