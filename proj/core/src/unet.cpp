#include "darnet/unet.hpp"

#include <cmath>

#include "darnet/error.hpp"
#include "darnet/ops.hpp"
#include "darnet/rng.hpp"

namespace darnet {

UNetProfile UNetProfile::by_name(std::string_view name)
{
    if (name == "tiny")
        return tiny();
    if (name == "full")
        return full();
    throw InvalidArgument("unknown U-Net profile: " + std::string(name) + " (expected tiny or full)");
}

std::size_t unet_parameter_count(std::span<const int> widths)
{
    auto conv = [](std::size_t in, std::size_t out, std::size_t k) { return out * in * k * k + out; };
    std::size_t total = 0;
    std::size_t in = 3;
    for (int w : widths) {
        total += conv(in, w, 3) + conv(w, w, 3);
        in = w;
    }
    const std::size_t bottleneck = 2 * in;
    total += conv(in, bottleneck, 3) + conv(bottleneck, bottleneck, 3);
    std::size_t below = bottleneck;
    for (auto it = widths.rbegin(); it != widths.rend(); ++it) {
        const std::size_t w = static_cast<std::size_t>(*it);
        total += conv(below, w, 3) + conv(2 * w, w, 3) + conv(w, w, 3);
        below = w;
    }
    total += conv(below, 3, 1);
    return total;
}

void UNet::add_conv(const std::string& name, int in, int out, int kernel, std::uint64_t seed)
{
    Rng rng(derive_seed(seed, hash_string(name)));
    Tensor<float> w({out, in, kernel, kernel});
    const double stddev = std::sqrt(2.0 / (in * kernel * kernel));
    for (float& v : w.values())
        v = static_cast<float>(rng.normal(0.0, stddev));
    names_.push_back(name + ".weight");
    params_.push_back(Var<float>::parameter(std::move(w)));
    names_.push_back(name + ".bias");
    params_.push_back(Var<float>::parameter(Tensor<float>({out})));
}

UNet::UNet(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths))
{
    if (widths_.empty())
        throw InvalidArgument("U-Net needs at least one level");
    int in = 3;
    for (int l = 0; l < levels(); ++l) {
        const int w = widths_[static_cast<std::size_t>(l)];
        add_conv("enc" + std::to_string(l) + ".conv1", in, w, 3, seed);
        add_conv("enc" + std::to_string(l) + ".conv2", w, w, 3, seed);
        in = w;
    }
    add_conv("bottleneck.conv1", in, 2 * in, 3, seed);
    add_conv("bottleneck.conv2", 2 * in, 2 * in, 3, seed);
    int below = 2 * in;
    for (int l = levels() - 1; l >= 0; --l) {
        const int w = widths_[static_cast<std::size_t>(l)];
        add_conv("dec" + std::to_string(l) + ".up", below, w, 3, seed);
        add_conv("dec" + std::to_string(l) + ".conv1", 2 * w, w, 3, seed);
        add_conv("dec" + std::to_string(l) + ".conv2", w, w, 3, seed);
        below = w;
    }
    add_conv("head", below, 3, 1, seed);
}

UNet::UNet(const UNet& other) : widths_(other.widths_), names_(other.names_)
{
    for (const auto& p : other.params_)
        params_.push_back(Var<float>::parameter(p.value()));
}

UNet& UNet::operator=(const UNet& other)
{
    if (this != &other) {
        UNet copy(other);
        *this = std::move(copy);
    }
    return *this;
}

const Var<float>& UNet::weight(const std::string& name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name + ".weight")
            return params_[i];
    throw InvalidArgument("no U-Net layer " + name);
}

const Var<float>& UNet::bias(const std::string& name) const
{
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name + ".bias")
            return params_[i];
    throw InvalidArgument("no U-Net layer " + name);
}

Var<float> UNet::conv_relu(const Var<float>& x, const std::string& name) const
{
    return ops::relu(ops::conv2d(x, weight(name), bias(name), 1, 1));
}

Var<float> UNet::forward(const Var<float>& x) const
{
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != 3)
        throw ShapeError("U-Net expects N x 3 x H x W input, got " + shape_string(s));
    if (s[2] % size_multiple() != 0 || s[3] % size_multiple() != 0)
        throw ShapeError("U-Net input sides must be multiples of " + std::to_string(size_multiple()));

    std::vector<Var<float>> skips;
    Var<float> h = x;
    for (int l = 0; l < levels(); ++l) {
        const std::string p = "enc" + std::to_string(l);
        h = conv_relu(conv_relu(h, p + ".conv1"), p + ".conv2");
        skips.push_back(h);
        h = ops::maxpool2(h);
    }
    h = conv_relu(conv_relu(h, "bottleneck.conv1"), "bottleneck.conv2");
    for (int l = levels() - 1; l >= 0; --l) {
        const std::string p = "dec" + std::to_string(l);
        h = conv_relu(ops::upsample_nearest2(h), p + ".up");
        h = ops::concat_channels(skips[static_cast<std::size_t>(l)], h);
        h = conv_relu(conv_relu(h, p + ".conv1"), p + ".conv2");
    }
    return ops::sigmoid(ops::conv2d(h, weight("head"), bias("head"), 1, 0));
}

std::size_t UNet::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_)
        n += p.value().size();
    return n;
}

std::vector<NamedTensor> UNet::state() const
{
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < params_.size(); ++i)
        out.push_back({names_[i], params_[i].value()});
    return out;
}

void UNet::load_state(const std::vector<NamedTensor>& tensors)
{
    if (tensors.size() != params_.size())
        throw FormatError("U-Net checkpoint has " + std::to_string(tensors.size()) + " tensors, expected " +
                          std::to_string(params_.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].name != names_[i] || tensors[i].tensor.shape() != params_[i].shape())
            throw FormatError("U-Net checkpoint tensor " + tensors[i].name + " does not match " + names_[i]);
        params_[i].mutable_value() = tensors[i].tensor;
    }
}

std::vector<int> UNet::widths_from_state(const std::vector<NamedTensor>& tensors)
{
    std::vector<int> widths;
    for (const auto& nt : tensors)
        if (nt.name.starts_with("enc") && nt.name.ends_with(".conv1.weight"))
            widths.push_back(nt.tensor.dim(0));
    if (widths.empty())
        throw FormatError("checkpoint holds no U-Net encoder weights");
    return widths;
}

} // namespace darnet
