#include "retseg/core/kv_config.hpp"

#include <fstream>
#include <sstream>

#include "retseg/core/types.hpp"

namespace retseg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse_text(const std::string& text) {
    KvConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + trim(line) + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.set(key, value);
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

void KvConfig::set(const std::string& key, const std::string& value) {
    auto it = index_.find(key);
    if (it != index_.end()) {
        items_[it->second].second = value;
    } else {
        index_[key] = items_.size();
        items_.emplace_back(key, value);
    }
}

bool KvConfig::has(const std::string& key) const { return index_.count(key) > 0; }

std::optional<std::string> KvConfig::get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return items_[it->second].second;
}

std::string KvConfig::require(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        throw ValidationError("missing required config key '" + key + "'");
    }
    return *v;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
}

std::string KvConfig::serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : items_) {
        out << k << " = " << v << "\n";
    }
    return out.str();
}

}  // namespace retseg
