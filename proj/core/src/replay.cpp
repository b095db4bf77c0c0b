#include "darnet/replay.hpp"

#include <algorithm>

#include "darnet/error.hpp"

namespace darnet {

ReplayBuffer::ReplayBuffer(int capacity_per_class) : capacity_(capacity_per_class)
{
    if (capacity_per_class < 0)
        throw InvalidArgument("replay capacity must be non-negative");
}

std::size_t ReplayBuffer::size() const noexcept
{
    std::size_t n = 0;
    for (const auto& [label, r] : classes_)
        n += r.items.size();
    return n;
}

std::size_t ReplayBuffer::count(int label) const
{
    auto it = classes_.find(label);
    return it == classes_.end() ? 0 : it->second.items.size();
}

std::uint64_t ReplayBuffer::seen(int label) const
{
    auto it = classes_.find(label);
    return it == classes_.end() ? 0 : it->second.seen;
}

std::vector<int> ReplayBuffer::classes() const
{
    std::vector<int> out;
    for (const auto& [label, r] : classes_)
        if (!r.items.empty())
            out.push_back(label);
    return out;
}

const std::vector<Exemplar>& ReplayBuffer::items(int label) const
{
    static const std::vector<Exemplar> none;
    auto it = classes_.find(label);
    return it == classes_.end() ? none : it->second.items;
}

void ReplayBuffer::update(std::span<const Image> images, std::span<const int> labels, Rng& rng)
{
    if (images.size() != labels.size())
        throw ShapeError("replay update needs one label per image");
    for (std::size_t i = 0; i < images.size(); ++i) {
        Reservoir& r = classes_[labels[i]];
        ++r.seen;
        if (r.items.size() < static_cast<std::size_t>(capacity_)) {
            r.items.push_back({images[i], labels[i]});
            continue;
        }
        const auto slot = rng.uniform_int(0, static_cast<std::int64_t>(r.seen) - 1);
        if (slot < capacity_)
            r.items[static_cast<std::size_t>(slot)] = {images[i], labels[i]};
    }
}

void ReplayBuffer::restore_seen(const std::map<int, std::uint64_t>& seen)
{
    for (const auto& [label, count] : seen)
        classes_[label].seen = std::max<std::uint64_t>(count, classes_[label].items.size());
}

const Exemplar& ReplayBuffer::sample(Rng& rng) const
{
    const auto stored = classes();
    if (stored.empty())
        throw InvalidArgument("cannot sample from an empty replay buffer");
    const int label = stored[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(stored.size()) - 1))];
    const auto& items = classes_.at(label).items;
    return items[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(items.size()) - 1))];
}

ReplayBuffer replay_update(ReplayBuffer buffer, std::span<const Image> images, std::span<const int> labels, Rng& rng)
{
    buffer.update(images, labels, rng);
    return buffer;
}

} // namespace darnet
