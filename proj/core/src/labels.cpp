#include "darnet/labels.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>

#include "darnet/error.hpp"

namespace darnet {

namespace {

constexpr std::string_view kRegistryMagic = "darnet-labels";
constexpr int kRegistryVersion = 1;

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
               return std::tolower(x) == std::tolower(y);
           });
}

} // namespace

std::string canonical_label(std::string_view name)
{
    static constexpr std::array known{labels::kClean, labels::kNoise, labels::kBlur,
                                      labels::kOverexposure, labels::kSaltPepper};
    for (auto k : known)
        if (iequals(k, name))
            return std::string(k);
    if (iequals(name, "overexp") || iequals(name, "overexposed"))
        return std::string(labels::kOverexposure);
    if (iequals(name, "salt-and-pepper") || iequals(name, "salt_pepper") || iequals(name, "saltandpepper"))
        return std::string(labels::kSaltPepper);
    return std::string(name);
}

LabelRegistry::LabelRegistry() : names_{std::string(labels::kClean)} {}

LabelRegistry::LabelRegistry(const std::vector<std::string>& names) : LabelRegistry()
{
    for (const auto& n : names)
        if (canonical_label(n) != labels::kClean)
            add(n);
}

RouteLabel LabelRegistry::add(std::string_view name)
{
    std::string canon = canonical_label(name);
    if (canon.empty())
        throw InvalidArgument("empty label name");
    if (contains(canon))
        throw InvalidArgument("label already registered: " + canon);
    names_.push_back(canon);
    return {canon, static_cast<int>(names_.size()) - 1};
}

std::optional<RouteLabel> LabelRegistry::find(std::string_view name) const
{
    const std::string canon = canonical_label(name);
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == canon)
            return RouteLabel{names_[i], static_cast<int>(i)};
    return std::nullopt;
}

RouteLabel LabelRegistry::at(std::string_view name) const
{
    if (auto label = find(name))
        return *label;
    throw InvalidArgument("unknown label: " + std::string(name));
}

RouteLabel LabelRegistry::at(int ordinal) const
{
    if (ordinal < 0 || static_cast<std::size_t>(ordinal) >= names_.size())
        throw InvalidArgument("label ordinal out of range: " + std::to_string(ordinal));
    return {names_[static_cast<std::size_t>(ordinal)], ordinal};
}

void LabelRegistry::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << kRegistryMagic << ' ' << kRegistryVersion << '\n';
    for (const auto& n : names_)
        out << n << '\n';
    if (!out)
        throw DataError("write failed: " + path.string());
}

LabelRegistry LabelRegistry::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open label registry " + path.string());
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != kRegistryMagic)
        throw FormatError("not a label registry: " + path.string());
    if (version != kRegistryVersion)
        throw FormatError("unsupported label registry version " + std::to_string(version));
    std::vector<std::string> names;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty())
            names.push_back(line);
    if (names.empty() || names.front() != labels::kClean)
        throw FormatError("label registry must start with Clean: " + path.string());
    LabelRegistry registry;
    for (std::size_t i = 1; i < names.size(); ++i)
        registry.add(names[i]);
    return registry;
}

} // namespace darnet
