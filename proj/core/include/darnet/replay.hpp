#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "darnet/image.hpp"
#include "darnet/rng.hpp"

namespace darnet {

struct Exemplar {
    Image image;
    int label = 0;
};

// Class-balanced exemplar store: one reservoir per class, each capped at
// capacity_per_class.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity_per_class = 200);

    int capacity_per_class() const noexcept { return capacity_; }
    std::size_t size() const noexcept;
    bool empty() const noexcept { return size() == 0; }
    std::size_t count(int label) const;
    // Number of items ever offered for this class.
    std::uint64_t seen(int label) const;
    std::vector<int> classes() const;
    const std::vector<Exemplar>& items(int label) const;

    // Reservoir sampling per class: the i-th item of a class (1-based) is kept
    // with probability capacity / i, replacing a uniformly chosen slot.
    void update(std::span<const Image> images, std::span<const int> labels, Rng& rng);

    // Overrides the per-class offer counters (used when loading from disk).
    void restore_seen(const std::map<int, std::uint64_t>& seen);

    // Class drawn uniformly among stored classes, then an exemplar uniformly.
    const Exemplar& sample(Rng& rng) const;

private:
    struct Reservoir {
        std::vector<Exemplar> items;
        std::uint64_t seen = 0;
    };

    int capacity_;
    std::map<int, Reservoir> classes_;
};

ReplayBuffer replay_update(ReplayBuffer buffer, std::span<const Image> images, std::span<const int> labels,
                           Rng& rng);

} // namespace darnet
