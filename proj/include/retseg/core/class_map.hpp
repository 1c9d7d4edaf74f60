#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace retseg {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// Label indices are frozen in the file format: 0 is always background,
// lesion classes follow in this order.
enum class LesionClass : int {
    background = 0,
    irf = 1,
    srf = 2,
    he = 3,
    drusen = 4,
    ca = 5,
};

constexpr int kNumClasses = 6;
constexpr int kNumLesionClasses = 5;

struct ClassEntry {
    int index = 0;
    std::string name;
    // Background carries no overlay color.
    std::optional<Rgb> color;
    bool operator==(const ClassEntry&) const = default;
};

// Fixed lesion-class indexing plus the display colors used by overlays.
class ClassMap {
public:
    explicit ClassMap(std::vector<ClassEntry> entries);

    const std::vector<ClassEntry>& entries() const { return entries_; }
    const ClassEntry& entry(int index) const;
    int size() const { return static_cast<int>(entries_.size()); }
    bool valid_index(int index) const { return index >= 0 && index < size(); }

    std::optional<int> index_of(const std::string& name) const;

    // Key/value text form; parse(serialize(m)) == m bit-exactly.
    std::string serialize() const;
    static ClassMap parse(const std::string& text);

    bool operator==(const ClassMap&) const = default;

private:
    std::vector<ClassEntry> entries_;
};

// The canonical six-entry map: background plus IRF=red, SRF=yellow,
// HE=blue, drusen=pink, CA=green.
ClassMap default_class_map();

}  // namespace retseg
