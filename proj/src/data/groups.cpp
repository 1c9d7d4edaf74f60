#include "retseg/data/groups.hpp"

#include <algorithm>

namespace retseg::data {

std::string to_string(GroupId id) {
    switch (id) {
        case GroupId::r: return "R";
        case GroupId::d: return "D";
        case GroupId::z: return "Z";
        case GroupId::b: return "B";
    }
    return "?";
}

std::optional<GroupId> parse_group_id(const std::string& text) {
    if (text == "R" || text == "r") return GroupId::r;
    if (text == "D" || text == "d") return GroupId::d;
    if (text == "Z" || text == "z") return GroupId::z;
    if (text == "B" || text == "b") return GroupId::b;
    return std::nullopt;
}

const std::vector<GroupId>& all_groups() {
    static const std::vector<GroupId> groups = {GroupId::r, GroupId::d, GroupId::z, GroupId::b};
    return groups;
}

std::vector<DatasetId> group_members(GroupId id) {
    switch (id) {
        case GroupId::r: return {DatasetId::rabbani_i, DatasetId::rabbani_ii};
        case GroupId::d: return {DatasetId::duke_i, DatasetId::duke_ii, DatasetId::duke_iii};
        case GroupId::z: return {DatasetId::zhang};
        case GroupId::b: return {DatasetId::biomisa};
    }
    return {};
}

std::optional<GroupId> group_of(DatasetId id) {
    for (GroupId g : all_groups()) {
        const auto members = group_members(g);
        if (std::find(members.begin(), members.end(), id) != members.end()) return g;
    }
    return std::nullopt;
}

DatasetManifest group(const DatasetManifest& manifest, GroupId id) {
    const auto members = group_members(id);
    std::vector<ScanRecord> records;
    for (const auto& r : manifest.records()) {
        if (std::find(members.begin(), members.end(), r.dataset_id) != members.end()) {
            records.push_back(r);
        }
    }
    return DatasetManifest(std::move(records));
}

}  // namespace retseg::data
