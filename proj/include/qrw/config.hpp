#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace qrw {

/// JSON experiment config with one section per CLI subcommand. CLI flags
/// override config values; unknown keys fail validation with their path.
class ConfigFile {
  public:
    ConfigFile() : root_(nlohmann::json::object()) {}

    static ConfigFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;

    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& section, const std::string& key,
                         std::size_t fallback) const;
    uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;

    /// Throws ConfigError naming section.key for any key outside `allowed`.
    void validate_section(const std::string& section,
                          const std::vector<std::string>& allowed) const;

  private:
    nlohmann::json root_;

    const nlohmann::json* find(const std::string& section, const std::string& key) const;
};

}  // namespace qrw
