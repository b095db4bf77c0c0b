#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "darnet/classifier.hpp"
#include "darnet/degrade.hpp"
#include "darnet/expert_training.hpp"
#include "darnet/router_training.hpp"

namespace darnet {

enum class ConfigSource { Default, File, Cli };

struct ConfigEntry {
    std::string key;
    std::string value;
    bool published = false; // the default is the published setting
    std::string help;
    ConfigSource source = ConfigSource::Default;
};

// Flat key = value settings for every command. Precedence: CLI > file > default.
class RunConfig {
public:
    RunConfig();

    // "key = value" lines; '#' starts a comment. Unknown keys are rejected.
    void load_file(const std::filesystem::path& path);
    void parse(std::string_view text, ConfigSource source);
    void set(std::string_view key, std::string value, ConfigSource source = ConfigSource::Cli);

    bool contains(std::string_view key) const;
    const std::string& get(std::string_view key) const;
    double get_double(std::string_view key) const;
    int get_int(std::string_view key) const;
    std::uint64_t get_u64(std::string_view key) const;
    bool get_bool(std::string_view key) const;
    const std::vector<ConfigEntry>& entries() const noexcept { return entries_; }

    // Effective settings, each marked "published" or "decision" and with its source.
    std::string dump() const;
    // FNV-1a over the effective key = value pairs.
    std::string hash() const;

    DegradationConfig degradations() const;
    ClassifierTrainConfig classifier_config() const;
    ClassifierArch classifier_arch() const;
    ExpertTrainConfig expert_config() const;

private:
    ConfigEntry& entry(std::string_view key);
    const ConfigEntry& entry(std::string_view key) const;

    std::vector<ConfigEntry> entries_;
};

std::string to_string(ConfigSource source);

} // namespace darnet
