#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "darnet/checkpoint.hpp"
#include "darnet/image.hpp"
#include "darnet/labels.hpp"
#include "darnet/tensor.hpp"

namespace darnet {

struct Classification {
    RouteLabel label;
    std::vector<float> logits;
};

// Picks the largest logit; ties go to the lowest ordinal.
int argmax_lowest(std::span<const float> logits);

// The gate in front of the experts: one label per image, nothing weighted.
class Router {
public:
    virtual ~Router() = default;
    virtual Classification classify(const Image& img) const = 0;
    virtual const LabelRegistry& labels() const = 0;
};

struct ClassifierArch {
    std::vector<int> widths{16, 32, 64, 128};
    int input_size = 96;
};

// Blocks of [3x3 conv -> relu -> 2x2 maxpool], global average pooling and a
// linear head with one row per label.
class ClassifierModel : public Router {
public:
    ClassifierModel(LabelRegistry labels, ClassifierArch arch, std::uint64_t seed);

    // Copies own fresh parameter nodes; moves transfer them.
    ClassifierModel(const ClassifierModel& other);
    ClassifierModel& operator=(const ClassifierModel& other);
    ClassifierModel(ClassifierModel&&) noexcept = default;
    ClassifierModel& operator=(ClassifierModel&&) noexcept = default;

    Classification classify(const Image& img) const override;
    std::vector<Classification> classify_batch(std::span<const Image> images) const;
    const LabelRegistry& labels() const override { return labels_; }
    const ClassifierArch& arch() const noexcept { return arch_; }
    int num_classes() const noexcept { return static_cast<int>(labels_.size()); }

    // Forward on an N x 3 x S x S batch (S = input_size); returns N x C logits.
    Var<float> forward(const Tensor<float>& batch) const;

    // Crop/resize to the classifier input.
    Image prepare(const Image& img) const;

    std::span<Var<float>> parameters() noexcept { return params_; }
    std::vector<NamedTensor> state() const;
    void load_state(const std::vector<NamedTensor>& tensors);

    // Checkpoint at `path` plus label sidecar at `path` + ".labels".
    void save(const std::filesystem::path& path) const;
    static ClassifierModel load(const std::filesystem::path& path);

    friend ClassifierModel extend_head(const ClassifierModel& model, std::string_view new_label);

private:
    ClassifierModel(LabelRegistry labels, ClassifierArch arch);
    Var<float>& param(std::string_view name);
    const Var<float>& param(std::string_view name) const;

    LabelRegistry labels_;
    ClassifierArch arch_;
    std::vector<std::string> names_;
    std::vector<Var<float>> params_;
};

// Copy of `model` with one extra zero-initialized output row for new_label.
// Every other parameter is copied bit for bit.
ClassifierModel extend_head(const ClassifierModel& model, std::string_view new_label);

std::filesystem::path label_sidecar_path(const std::filesystem::path& checkpoint);

} // namespace darnet
