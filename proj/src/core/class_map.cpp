#include "retseg/core/class_map.hpp"

#include <set>
#include <sstream>

#include "retseg/core/types.hpp"

namespace retseg {

ClassMap::ClassMap(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw ValidationError("class map must not be empty");
    }
    std::set<int> indices;
    std::set<std::string> names;
    for (const auto& e : entries_) {
        if (!indices.insert(e.index).second) {
            throw ValidationError("class map has duplicate index " + std::to_string(e.index));
        }
        if (!names.insert(e.name).second) {
            throw ValidationError("class map has duplicate name '" + e.name + "'");
        }
    }
    for (int i = 0; i < static_cast<int>(entries_.size()); ++i) {
        if (entries_[static_cast<std::size_t>(i)].index != i) {
            throw ValidationError("class map indices must be contiguous from 0");
        }
    }
    if (entries_[0].name != "background") {
        throw ValidationError("class map index 0 must be background");
    }
    if (entries_[0].color.has_value()) {
        throw ValidationError("background must not carry an overlay color");
    }
    for (std::size_t i = 1; i < entries_.size(); ++i) {
        if (!entries_[i].color.has_value()) {
            throw ValidationError("lesion class '" + entries_[i].name + "' needs a color");
        }
    }
}

const ClassEntry& ClassMap::entry(int index) const {
    if (!valid_index(index)) {
        throw ValidationError("class index " + std::to_string(index) + " out of range");
    }
    return entries_[static_cast<std::size_t>(index)];
}

std::optional<int> ClassMap::index_of(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.index;
    }
    return std::nullopt;
}

std::string ClassMap::serialize() const {
    std::ostringstream out;
    out << "# retseg class map\n";
    for (const auto& e : entries_) {
        out << "class." << e.index << ".name = " << e.name << "\n";
        if (e.color) {
            out << "class." << e.index << ".color = " << int(e.color->r) << ","
                << int(e.color->g) << "," << int(e.color->b) << "\n";
        }
    }
    return out.str();
}

ClassMap ClassMap::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<ClassEntry> entries;
    auto entry_for = [&entries](int idx) -> ClassEntry& {
        while (static_cast<int>(entries.size()) <= idx) {
            entries.push_back(ClassEntry{static_cast<int>(entries.size()), "", std::nullopt});
        }
        return entries[static_cast<std::size_t>(idx)];
    };
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.rfind("class.", 0) != 0) continue;
        const auto dot = key.find('.', 6);
        if (dot == std::string::npos) {
            throw ValidationError("class map line " + std::to_string(lineno) + ": bad key '" + key + "'");
        }
        int idx = 0;
        try {
            idx = std::stoi(key.substr(6, dot - 6));
        } catch (const std::exception&) {
            throw ValidationError("class map line " + std::to_string(lineno) + ": bad index in '" + key + "'");
        }
        const std::string field = key.substr(dot + 1);
        if (field == "name") {
            entry_for(idx).name = value;
        } else if (field == "color") {
            std::istringstream cs(value);
            int r = 0, g = 0, b = 0;
            char c1 = 0, c2 = 0;
            if (!(cs >> r >> c1 >> g >> c2 >> b) || c1 != ',' || c2 != ',' ||
                r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) {
                throw ValidationError("class map line " + std::to_string(lineno) + ": bad color '" + value + "'");
            }
            entry_for(idx).color = Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                       static_cast<std::uint8_t>(b)};
        } else {
            throw ValidationError("class map line " + std::to_string(lineno) + ": unknown field '" + field + "'");
        }
    }
    return ClassMap(std::move(entries));
}

ClassMap default_class_map() {
    return ClassMap({
        {0, "background", std::nullopt},
        {1, "irf", Rgb{255, 0, 0}},
        {2, "srf", Rgb{255, 255, 0}},
        {3, "he", Rgb{0, 0, 255}},
        {4, "drusen", Rgb{255, 105, 180}},
        {5, "ca", Rgb{0, 255, 0}},
    });
}

}  // namespace retseg
