#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace retseg {

// Line-oriented `key = value` configuration text. '#' starts a comment,
// blank lines are ignored, later keys override earlier ones.
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse_text(const std::string& text);
    static KvConfig parse_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;

    std::string require(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;

    // Keys in insertion order; serialization is byte-stable.
    std::string serialize() const;

    const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

private:
    std::vector<std::pair<std::string, std::string>> items_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace retseg
