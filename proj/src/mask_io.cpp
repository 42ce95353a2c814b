#include "skydist/mask_io.hpp"

#include <sstream>

namespace skydist {

namespace {

constexpr std::string_view kMagic = "LMASK 1";

std::vector<std::string_view> lines_of(std::string_view text) {
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    }
    return lines;
}

std::vector<ClassId> parse_id_list(std::string_view list, std::string_view what) {
    std::vector<ClassId> ids;
    for (auto tok : split(list, ',')) {
        const auto id = parse_int(tok, what);
        if (id < 0) throw ParseError("negative class id in " + std::string(what));
        ids.push_back(id);
    }
    return ids;
}

}  // namespace

std::string_view group_name(Group g) {
    switch (g) {
        case Group::Trees: return "Trees";
        case Group::Houses: return "Houses";
        case Group::OtherPlants: return "Other Plants";
        case Group::OtherBuildings: return "Other Buildings";
        case Group::OtherClasses: return "Other Classes";
    }
    return "Other Classes";
}

std::optional<Group> group_from_name(std::string_view name) {
    for (auto g : kAllGroups) {
        if (group_name(g) == name) return g;
    }
    return std::nullopt;
}

Group ClassGroups::group_of(ClassId id) const {
    const auto it = assigned.find(id);
    return it == assigned.end() ? Group::OtherClasses : it->second;
}

void validate(const LabelMask& mask) {
    if (mask.width < 1 || mask.height < 1) throw ParseError("mask dimensions must be >= 1");
    const auto expected = static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height);
    if (mask.cells.size() != expected) {
        throw ParseError("mask has " + std::to_string(mask.cells.size()) + " cells, expected " +
                         std::to_string(expected));
    }
    for (const auto id : mask.cells) {
        if (!mask.class_map.contains(id)) {
            throw ParseError("class id " + std::to_string(id) + " has no class entry");
        }
    }
}

LabelMask parse_mask(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty() || trim(lines[0]) != kMagic) throw ParseError("bad magic line, expected 'LMASK 1'");
    if (lines.size() < 2) throw ParseError("missing dimension line");

    const auto dims = split_ws(lines[1]);
    if (dims.size() != 2) throw ParseError("dimension line must be 'W H'");
    LabelMask mask;
    const auto w = parse_int(dims[0], "width");
    const auto h = parse_int(dims[1], "height");
    if (w < 1 || h < 1) throw ParseError("mask dimensions must be >= 1");
    if (w > (1 << 20) || h > (1 << 20)) throw ParseError("mask dimensions too large");
    mask.width = static_cast<int>(w);
    mask.height = static_cast<int>(h);
    if (lines.size() < 2 + static_cast<std::size_t>(h)) throw ParseError("mask has fewer rows than H");

    mask.cells.reserve(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int r = 0; r < mask.height; ++r) {
        const auto line = lines[2 + static_cast<std::size_t>(r)];
        std::size_t count = 0;
        std::size_t i = 0;
        // Hand-rolled scan: masks run to millions of cells.
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
            mask.cells.push_back(parse_int(line.substr(i, j - i), "class id"));
            ++count;
            i = j;
        }
        if (count != static_cast<std::size_t>(w)) {
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(count) +
                             " cells, expected " + std::to_string(w));
        }
    }

    for (std::size_t l = 2 + static_cast<std::size_t>(h); l < lines.size(); ++l) {
        const auto line = trim(lines[l]);
        if (line.empty()) continue;
        const auto toks = split_ws(line);
        if (toks.size() < 3 || toks[0] != "class") {
            throw ParseError("expected 'class <id> <name>', got '" + std::string(line) + "'");
        }
        const auto id = parse_int(toks[1], "class id");
        if (id < 0) throw ParseError("negative class id");
        const auto name_pos = static_cast<std::size_t>(toks[2].data() - line.data());
        if (!mask.class_map.emplace(id, std::string(line.substr(name_pos))).second) {
            throw ParseError("duplicate class entry " + std::to_string(id));
        }
    }
    for (const auto id : mask.cells) {
        if (id < 0) throw ParseError("negative class id in grid");
    }
    validate(mask);
    return mask;
}

std::string serialize_mask(const LabelMask& mask) {
    std::string out;
    out.reserve(static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height) * 3 + 64);
    out += kMagic;
    out += '\n';
    out += std::to_string(mask.width) + ' ' + std::to_string(mask.height) + '\n';
    for (int r = 0; r < mask.height; ++r) {
        for (int x = 0; x < mask.width; ++x) {
            if (x) out += ' ';
            out += std::to_string(mask.at(x, r));
        }
        out += '\n';
    }
    for (const auto& [id, name] : mask.class_map) {
        out += "class " + std::to_string(id) + ' ' + name + '\n';
    }
    return out;
}

ClassGroups load_class_groups(std::string_view text) {
    ClassGroups groups;
    for (auto raw : lines_of(text)) {
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto toks = split_ws(line);
        if (toks[0] == "sky") {
            if (toks.size() != 2) throw ParseError("expected 'sky <id>[,<id>...]'");
            for (auto id : parse_id_list(toks[1], "sky ids")) groups.sky_ids.insert(id);
        } else if (toks[0] == "group") {
            if (toks.size() < 3) throw ParseError("expected 'group <GroupName> <id>[,<id>...]'");
            // Group names contain spaces; the id list is the last token.
            const auto name_begin = static_cast<std::size_t>(toks[1].data() - line.data());
            const auto name_end = static_cast<std::size_t>(toks.back().data() - line.data());
            const auto name = trim(line.substr(name_begin, name_end - name_begin));
            const auto g = group_from_name(name);
            if (!g) throw ParseError("unknown group name '" + std::string(name) + "'");
            for (auto id : parse_id_list(toks.back(), "group ids")) {
                const auto [it, fresh] = groups.assigned.emplace(id, *g);
                if (!fresh && it->second != *g) {
                    throw ParseError("class id " + std::to_string(id) + " assigned to two groups");
                }
            }
        } else {
            throw ParseError("unknown config directive '" + std::string(toks[0]) + "'");
        }
    }
    for (const auto& [id, g] : groups.assigned) {
        if (groups.sky_ids.contains(id)) {
            throw ParseError("class id " + std::to_string(id) + " is both sky and " +
                             std::string(group_name(g)));
        }
    }
    return groups;
}

std::string serialize_class_groups(const ClassGroups& groups) {
    std::ostringstream out;
    auto join = [](const auto& ids) {
        std::string s;
        for (const auto id : ids) {
            if (!s.empty()) s += ',';
            s += std::to_string(id);
        }
        return s;
    };
    if (!groups.sky_ids.empty()) out << "sky " << join(groups.sky_ids) << '\n';
    for (auto g : kAllGroups) {
        std::vector<ClassId> ids;
        for (const auto& [id, gg] : groups.assigned) {
            if (gg == g) ids.push_back(id);
        }
        if (!ids.empty()) out << "group " << group_name(g) << ' ' << join(ids) << '\n';
    }
    return out.str();
}

std::string default_class_groups_config() {
    return "# class id -> analysis group; ids not listed fall in Other Classes\n"
           "sky 0\n"
           "group Trees 1\n"
           "group Houses 2\n"
           "group Other Plants 3\n"
           "group Other Buildings 4\n";
}

}  // namespace skydist
