#include "skydist/refdata.hpp"

#include <cmath>
#include <set>

namespace skydist {

std::string ReferencePoint::image_key() const {
    const auto hash = point_id.find('#');
    return hash == std::string::npos ? point_id : point_id.substr(0, hash);
}

std::vector<ReferencePoint> parse_reference_csv(std::string_view text) {
    auto lines = split(text, '\n');
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError("reference CSV is empty");

    const auto header = split(trim(lines[0]), ',');
    int col_id = -1, col_x = -1, col_y = -1, col_d = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto h = trim(header[i]);
        const auto idx = static_cast<int>(i);
        if (h == "point_id") col_id = idx;
        else if (h == "x") col_x = idx;
        else if (h == "y") col_y = idx;
        else if (h == "distance_m") col_d = idx;
    }
    if (col_id < 0 || col_x < 0 || col_y < 0 || col_d < 0) {
        throw ParseError("reference CSV header must contain " + std::string(kReferenceHeader));
    }

    std::vector<ReferencePoint> points;
    std::set<std::string> seen;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        const auto line = trim(lines[row]);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != header.size()) {
            throw ParseError("reference row " + std::to_string(row) + " has " + std::to_string(f.size()) +
                             " fields, expected " + std::to_string(header.size()));
        }
        ReferencePoint p;
        p.point_id = std::string(trim(f[static_cast<std::size_t>(col_id)]));
        if (p.point_id.empty()) throw ParseError("empty point_id on row " + std::to_string(row));
        const auto x = parse_int(f[static_cast<std::size_t>(col_x)], "x");
        if (x < INT32_MIN || x > INT32_MAX) throw ParseError("x out of range on row " + std::to_string(row));
        p.x = static_cast<int>(x);
        const auto ytok = trim(f[static_cast<std::size_t>(col_y)]);
        if (!ytok.empty()) p.y = parse_real(ytok, "y");
        p.distance_m = parse_real(f[static_cast<std::size_t>(col_d)], "distance_m");
        if (!(p.distance_m > 0.0)) {
            throw ParseError("distance_m must be > 0 for point '" + p.point_id + "'");
        }
        if (!seen.insert(p.point_id).second) throw ParseError("duplicate point_id '" + p.point_id + "'");
        points.push_back(std::move(p));
    }
    return points;
}

std::string reference_to_csv(std::span<const ReferencePoint> points) {
    std::string out(kReferenceHeader);
    out += '\n';
    for (const auto& p : points) {
        out += p.point_id + ',' + std::to_string(p.x) + ',' + (p.y ? format_real(*p.y) : std::string()) + ',' +
               format_real(p.distance_m) + '\n';
    }
    return out;
}

std::string_view join_status_name(JoinStatus s) {
    switch (s) {
        case JoinStatus::Usable: return "";
        case JoinStatus::OutOfRange: return "out_of_range";
        case JoinStatus::SkyColumn: return "sky_column";
        case JoinStatus::NoSkyline: return "no_skyline";
    }
    return "";
}

std::vector<JoinedPoint> join_points(std::span<const ReferencePoint> points, const Skyline& skyline,
                                     const ClassGroups& groups) {
    std::vector<JoinedPoint> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        JoinedPoint j;
        j.point = p;
        if (p.x < 0 || p.x >= skyline.signal.width) {
            j.status = JoinStatus::OutOfRange;
            out.push_back(std::move(j));
            continue;
        }
        j.context = point_context(skyline.segments, p.x, groups);
        j.y_skyline = skyline.signal.y[static_cast<std::size_t>(p.x)];
        if (p.y) j.y_mismatch = std::abs(*p.y - j.y_skyline);
        if (j.context->sky) j.status = JoinStatus::SkyColumn;
        out.push_back(std::move(j));
    }
    return out;
}

std::string joined_to_csv(std::span<const JoinedPoint> joined) {
    std::string out = "point_id,x,y_skyline,group,x_c,D,distance_m,flags\n";
    for (const auto& j : joined) {
        out += j.point.point_id + ',' + std::to_string(j.point.x) + ',';
        if (j.context) {
            out += std::to_string(j.y_skyline) + ',' +
                   (j.context->sky ? std::string("Sky") : std::string(group_name(j.context->group))) + ',' +
                   std::to_string(j.context->start) + ',' + std::to_string(j.context->width);
        } else {
            out += ",,,";
        }
        out += ',' + format_real(j.point.distance_m) + ',';
        std::string flags(join_status_name(j.status));
        if (j.y_mismatch && *j.y_mismatch > 0.0) {
            if (!flags.empty()) flags += ';';
            flags += "y_mismatch=" + format_real(*j.y_mismatch);
        }
        out += flags + '\n';
    }
    return out;
}

}  // namespace skydist
