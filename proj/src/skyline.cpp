#include "skydist/skyline.hpp"

#include <algorithm>
#include <cmath>

namespace skydist {

SegmentList segment_runs(std::span<const ClassId> column_class) {
    SegmentList out;
    out.width = static_cast<int>(column_class.size());
    for (int x = 0; x < out.width; ++x) {
        const auto c = column_class[static_cast<std::size_t>(x)];
        if (!out.segments.empty() && out.segments.back().cls == c) {
            ++out.segments.back().width;
        } else {
            out.segments.push_back({x, 1, c});
        }
    }
    return out;
}

Skyline extract_skyline(const LabelMask& mask, const ClassGroups& groups) {
    Skyline sk;
    sk.signal.width = mask.width;
    sk.signal.height = mask.height;
    sk.signal.y.assign(static_cast<std::size_t>(mask.width), 0);
    sk.column_class.assign(static_cast<std::size_t>(mask.width), kSkySentinel);

    // Row-major scan, so every column is resolved the first time a non-sky
    // pixel shows up in it.
    int unresolved = mask.width;
    for (int r = 0; r < mask.height && unresolved > 0; ++r) {
        for (int x = 0; x < mask.width; ++x) {
            auto& cls = sk.column_class[static_cast<std::size_t>(x)];
            if (cls != kSkySentinel) continue;
            const auto id = mask.at(x, r);
            if (groups.is_sky(id)) continue;
            cls = id;
            sk.signal.y[static_cast<std::size_t>(x)] = mask.height - r;
            --unresolved;
        }
    }
    sk.segments = segment_runs(sk.column_class);
    return sk;
}

PointContext point_context(const SegmentList& segments, int x, const ClassGroups& groups) {
    if (x < 0 || x >= segments.width) {
        throw DomainError("column " + std::to_string(x) + " outside [0, " +
                          std::to_string(segments.width) + ")");
    }
    const auto it = std::upper_bound(segments.segments.begin(), segments.segments.end(), x,
                                     [](int col, const Segment& s) { return col < s.start; });
    const auto& seg = *std::prev(it);
    PointContext ctx;
    ctx.start = seg.start;
    ctx.width = seg.width;
    ctx.cls = seg.cls;
    ctx.sky = seg.cls == kSkySentinel || groups.is_sky(seg.cls);
    ctx.group = ctx.sky ? Group::OtherClasses : groups.group_of(seg.cls);
    return ctx;
}

bool passes_sky_filter(const LabelMask& mask, const ClassGroups& groups, double theta) {
    const int rows = std::min(kSkyFilterRows, mask.height);
    std::size_t sky = 0;
    for (int r = 0; r < rows; ++r) {
        for (int x = 0; x < mask.width; ++x) {
            if (groups.is_sky(mask.at(x, r))) ++sky;
        }
    }
    const auto total = static_cast<double>(rows) * mask.width;
    return static_cast<double>(sky) >= theta * total;
}

bool has_tree_below_skyline(const SegmentList& segments, const ClassGroups& groups) {
    return std::any_of(segments.segments.begin(), segments.segments.end(), [&](const Segment& s) {
        return s.cls != kSkySentinel && !groups.is_sky(s.cls) && groups.group_of(s.cls) == Group::Trees;
    });
}

double skyline_length(const SkylineSignal& signal) {
    if (signal.width < 2) throw DomainError("skyline length needs W >= 2");
    double len = 0.0;
    for (std::size_t x = 1; x < signal.y.size(); ++x) {
        const double dy = signal.y[x] - signal.y[x - 1];
        len += std::sqrt(dy * dy + 1.0);
    }
    return len;
}

double crf_gain(const SkylineSignal& with_crf, const SkylineSignal& without_crf) {
    if (with_crf.width != without_crf.width) {
        throw DomainError("CRF pair widths differ: " + std::to_string(with_crf.width) + " vs " +
                          std::to_string(without_crf.width));
    }
    return skyline_length(with_crf) / skyline_length(without_crf) - 1.0;
}

std::string group_label(ClassId cls, const ClassGroups& groups) {
    if (cls == kSkySentinel || groups.is_sky(cls)) return "Sky";
    return std::string(group_name(groups.group_of(cls)));
}

std::string skyline_to_csv(const Skyline& skyline, const ClassGroups& groups) {
    std::string out = "x,y,class_id,group\n";
    for (int x = 0; x < skyline.signal.width; ++x) {
        const auto cls = skyline.column_class[static_cast<std::size_t>(x)];
        out += std::to_string(x) + ',' + std::to_string(skyline.signal.y[static_cast<std::size_t>(x)]) +
               ',' + std::to_string(cls) + ',' + group_label(cls, groups) + '\n';
    }
    return out;
}

std::string segments_to_csv(const Skyline& skyline, const ClassGroups& groups) {
    std::string out = "x_c,D,class_id,group\n";
    for (const auto& s : skyline.segments.segments) {
        out += std::to_string(s.start) + ',' + std::to_string(s.width) + ',' + std::to_string(s.cls) +
               ',' + group_label(s.cls, groups) + '\n';
    }
    return out;
}

Skyline skyline_from_csv(std::string_view text) {
    auto lines = split(text, '\n');
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty() || trim(lines[0]) != "x,y,class_id,group") {
        throw ParseError("skyline CSV must start with header 'x,y,class_id,group'");
    }
    Skyline sk;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(trim(lines[i]), ',');
        if (f.size() != 4) throw ParseError("skyline CSV row " + std::to_string(i) + " needs 4 fields");
        const auto x = parse_int(f[0], "x");
        if (x != static_cast<std::int64_t>(i - 1)) throw ParseError("skyline CSV columns must be 0..W-1 in order");
        const auto y = parse_int(f[1], "y");
        if (y < 0) throw ParseError("negative skyline height");
        sk.signal.y.push_back(static_cast<int>(y));
        sk.column_class.push_back(parse_int(f[2], "class_id"));
    }
    if (sk.signal.y.empty()) throw ParseError("skyline CSV has no rows");
    sk.signal.width = static_cast<int>(sk.signal.y.size());
    sk.signal.height = *std::max_element(sk.signal.y.begin(), sk.signal.y.end());
    sk.segments = segment_runs(sk.column_class);
    return sk;
}

}  // namespace skydist
