#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "skydist/common.hpp"

namespace skydist {

/// Per-pixel class labels of one photo. Row 0 is the top image row and
/// cells are stored row-major.
struct LabelMask {
    int width = 0;
    int height = 0;
    std::vector<ClassId> cells;
    std::map<ClassId, std::string> class_map;

    ClassId at(int x, int row) const {
        return cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                     static_cast<std::size_t>(x)];
    }

    bool operator==(const LabelMask&) const = default;
};

enum class Group { Trees, Houses, OtherPlants, OtherBuildings, OtherClasses };

inline constexpr Group kAllGroups[] = {Group::Trees, Group::Houses, Group::OtherPlants,
                                       Group::OtherBuildings, Group::OtherClasses};

std::string_view group_name(Group g);
std::optional<Group> group_from_name(std::string_view name);

/// Which ids are sky and which analysis group every other id falls in.
/// Ids the config does not mention belong to "Other Classes".
struct ClassGroups {
    std::set<ClassId> sky_ids;
    std::map<ClassId, Group> assigned;

    bool is_sky(ClassId id) const { return sky_ids.contains(id); }
    Group group_of(ClassId id) const;
};

/// Throws ParseError if the cell count or class map is inconsistent.
void validate(const LabelMask& mask);

LabelMask parse_mask(std::string_view text);
std::string serialize_mask(const LabelMask& mask);

ClassGroups load_class_groups(std::string_view text);
std::string serialize_class_groups(const ClassGroups& groups);

/// Editable default matching the class ids emitted by the synthetic scene
/// generator. Real segmentation outputs need their own config.
std::string default_class_groups_config();

}  // namespace skydist
