#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace darnet {

struct RouteLabel {
    std::string name;
    int ordinal = 0;

    bool operator==(const RouteLabel&) const = default;
};

namespace labels {
inline constexpr std::string_view kClean = "Clean";
inline constexpr std::string_view kNoise = "Noise";
inline constexpr std::string_view kBlur = "Blur";
inline constexpr std::string_view kOverexposure = "Overexposure";
inline constexpr std::string_view kSaltPepper = "SaltPepper";
} // namespace labels

// Canonical spelling of a label given in any case ("noise" -> "Noise").
// Unrecognized names are returned unchanged.
std::string canonical_label(std::string_view name);

// Ordered label set; ordinals are dense and "Clean" is always ordinal 0.
class LabelRegistry {
public:
    LabelRegistry();
    explicit LabelRegistry(const std::vector<std::string>& names);

    // Appends a label; throws InvalidArgument on duplicates.
    RouteLabel add(std::string_view name);

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    bool contains(std::string_view name) const { return find(name).has_value(); }
    std::optional<RouteLabel> find(std::string_view name) const;
    RouteLabel at(std::string_view name) const;
    RouteLabel at(int ordinal) const;

    void save(const std::filesystem::path& path) const;
    static LabelRegistry load(const std::filesystem::path& path);

    bool operator==(const LabelRegistry&) const = default;

private:
    std::vector<std::string> names_;
};

} // namespace darnet
