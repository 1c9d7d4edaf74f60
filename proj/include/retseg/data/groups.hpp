#pragma once

#include <optional>
#include <string>
#include <vector>

#include "retseg/data/manifest.hpp"

namespace retseg::data {

// Cross-dataset evaluation groups: Duke-I/II/III are pooled into one group,
// the two Rabbani sets into another, Zhang and BIOMISA stand alone.
enum class GroupId { r, d, z, b };

std::string to_string(GroupId id);
std::optional<GroupId> parse_group_id(const std::string& text);
const std::vector<GroupId>& all_groups();

std::vector<DatasetId> group_members(GroupId id);
std::optional<GroupId> group_of(DatasetId id);

DatasetManifest group(const DatasetManifest& manifest, GroupId id);

}  // namespace retseg::data
