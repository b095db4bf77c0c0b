#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "darnet/checkpoint.hpp"
#include "darnet/tensor.hpp"

namespace darnet {

struct UNetProfile {
    std::string name;
    std::vector<int> widths; // one per encoder level; bottleneck is 2 x last

    static UNetProfile tiny() { return {"tiny", {16, 32, 64, 128}}; }
    static UNetProfile full() { return {"full", {48, 96, 192, 384}}; }
    static UNetProfile by_name(std::string_view name);
};

// Encoder: per level two 3x3 conv+relu, then 2x2 max pool. Bottleneck: two
// 3x3 conv+relu at twice the last width. Decoder: nearest upsample, 3x3
// conv+relu to the level width, concatenation with the encoder skip, two 3x3
// conv+relu. Head: 1x1 conv to RGB and sigmoid.
class UNet {
public:
    UNet(std::vector<int> widths, std::uint64_t seed);

    UNet(const UNet& other);
    UNet& operator=(const UNet& other);
    UNet(UNet&&) noexcept = default;
    UNet& operator=(UNet&&) noexcept = default;

    // x: N x 3 x H x W with H, W multiples of 2^levels.
    Var<float> forward(const Var<float>& x) const;

    int levels() const noexcept { return static_cast<int>(widths_.size()); }
    int size_multiple() const noexcept { return 1 << levels(); }
    const std::vector<int>& widths() const noexcept { return widths_; }

    std::span<Var<float>> parameters() noexcept { return params_; }
    std::size_t parameter_count() const;
    std::vector<NamedTensor> state() const;
    void load_state(const std::vector<NamedTensor>& tensors);

    // Widths recovered from encoder weight shapes in a checkpoint.
    static std::vector<int> widths_from_state(const std::vector<NamedTensor>& tensors);

private:
    void add_conv(const std::string& name, int in, int out, int kernel, std::uint64_t seed);
    const Var<float>& weight(const std::string& name) const;
    const Var<float>& bias(const std::string& name) const;
    Var<float> conv_relu(const Var<float>& x, const std::string& name) const;

    std::vector<int> widths_;
    std::vector<std::string> names_;
    std::vector<Var<float>> params_;
};

// Closed-form parameter count of the architecture above.
std::size_t unet_parameter_count(std::span<const int> widths);

} // namespace darnet
