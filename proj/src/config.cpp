#include "qrw/config.hpp"

#include <algorithm>
#include <fstream>

#include "qrw/error.hpp"

namespace qrw {

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ConfigFile config;
    try {
        in >> config.root_;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": parse error: " + e.what());
    }
    if (!config.root_.is_object()) throw ConfigError(path + ": top level must be an object");
    for (const auto& [section, value] : config.root_.items()) {
        if (!value.is_object())
            throw ConfigError(path + ": section \"" + section + "\" must be an object");
    }
    return config;
}

const nlohmann::json* ConfigFile::find(const std::string& section, const std::string& key) const {
    auto sit = root_.find(section);
    if (sit == root_.end()) return nullptr;
    auto kit = sit->find(key);
    if (kit == sit->end()) return nullptr;
    return &*kit;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

namespace {

[[noreturn]] void type_error(const std::string& section, const std::string& key,
                             const char* expected) {
    throw ConfigError("config field " + section + "." + key + ": expected " + expected);
}

}  // namespace

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    const auto* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_number()) type_error(section, key, "a number");
    return v->get<double>();
}

std::size_t ConfigFile::get_size(const std::string& section, const std::string& key,
                                 std::size_t fallback) const {
    const auto* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !v->is_number_integer()) type_error(section, key, "an integer");
    auto n = v->get<int64_t>();
    if (n < 0) type_error(section, key, "a non-negative integer");
    return static_cast<std::size_t>(n);
}

uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                             uint64_t fallback) const {
    const auto* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !v->is_number_integer()) type_error(section, key, "an integer");
    return v->get<uint64_t>();
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    const auto* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_boolean()) type_error(section, key, "a boolean");
    return v->get<bool>();
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const auto* v = find(section, key);
    if (!v) return fallback;
    if (!v->is_string()) type_error(section, key, "a string");
    return v->get<std::string>();
}

void ConfigFile::validate_section(const std::string& section,
                                  const std::vector<std::string>& allowed) const {
    auto sit = root_.find(section);
    if (sit == root_.end()) return;
    for (const auto& [key, value] : sit->items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("config field " + section + "." + key + ": unknown key");
    }
}

}  // namespace qrw
