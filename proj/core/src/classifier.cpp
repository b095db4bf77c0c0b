#include "darnet/classifier.hpp"

#include <cmath>

#include "darnet/error.hpp"
#include "darnet/ops.hpp"
#include "darnet/rng.hpp"
#include "darnet/training.hpp"

namespace darnet {

namespace {

Tensor<float> he_normal(Shape shape, int fan_in, Rng& rng)
{
    Tensor<float> t(std::move(shape));
    const double stddev = std::sqrt(2.0 / fan_in);
    for (float& v : t.values())
        v = static_cast<float>(rng.normal(0.0, stddev));
    return t;
}

} // namespace

int argmax_lowest(std::span<const float> logits)
{
    int best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[static_cast<std::size_t>(best)])
            best = static_cast<int>(i);
    return best;
}

std::filesystem::path label_sidecar_path(const std::filesystem::path& checkpoint)
{
    return checkpoint.string() + ".labels";
}

ClassifierModel::ClassifierModel(LabelRegistry labels, ClassifierArch arch)
    : labels_(std::move(labels)), arch_(std::move(arch))
{
    if (arch_.widths.empty())
        throw InvalidArgument("classifier needs at least one block");
    if (arch_.input_size < (1 << arch_.widths.size()))
        throw InvalidArgument("classifier input too small for the pooling depth");
}

ClassifierModel::ClassifierModel(LabelRegistry labels, ClassifierArch arch, std::uint64_t seed)
    : ClassifierModel(std::move(labels), std::move(arch))
{
    Rng rng(seed);
    int in = 3;
    for (std::size_t b = 0; b < arch_.widths.size(); ++b) {
        const int out = arch_.widths[b];
        const std::string prefix = "block" + std::to_string(b);
        names_.push_back(prefix + ".weight");
        params_.push_back(Var<float>::parameter(he_normal({out, in, 3, 3}, in * 9, rng)));
        names_.push_back(prefix + ".bias");
        params_.push_back(Var<float>::parameter(Tensor<float>({out})));
        in = out;
    }
    names_.push_back("head.weight");
    params_.push_back(Var<float>::parameter(Tensor<float>({num_classes(), in})));
    names_.push_back("head.bias");
    params_.push_back(Var<float>::parameter(Tensor<float>({num_classes()})));
}

ClassifierModel::ClassifierModel(const ClassifierModel& other)
    : labels_(other.labels_), arch_(other.arch_), names_(other.names_)
{
    for (const auto& p : other.params_)
        params_.push_back(Var<float>::parameter(p.value()));
}

ClassifierModel& ClassifierModel::operator=(const ClassifierModel& other)
{
    if (this != &other) {
        ClassifierModel copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Var<float>& ClassifierModel::param(std::string_view name)
{
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name)
            return params_[i];
    throw InvalidArgument("no classifier parameter named " + std::string(name));
}

const Var<float>& ClassifierModel::param(std::string_view name) const
{
    return const_cast<ClassifierModel*>(this)->param(name);
}

Var<float> ClassifierModel::forward(const Tensor<float>& batch) const
{
    Var<float> x = Var<float>::constant(batch);
    for (std::size_t b = 0; b < arch_.widths.size(); ++b) {
        const std::string prefix = "block" + std::to_string(b);
        x = ops::conv2d(x, param(prefix + ".weight"), param(prefix + ".bias"), 1, 1);
        x = ops::maxpool2(ops::relu(x));
    }
    return ops::linear(ops::global_avg_pool(x), param("head.weight"), param("head.bias"));
}

Image ClassifierModel::prepare(const Image& img) const
{
    return fit_square(img, arch_.input_size);
}

std::vector<Classification> ClassifierModel::classify_batch(std::span<const Image> images) const
{
    std::vector<Image> inputs;
    inputs.reserve(images.size());
    for (const Image& im : images)
        inputs.push_back(prepare(im));
    NoGradGuard no_grad;
    const Tensor<float> logits = forward(images_to_tensor(inputs)).value();
    const int c = num_classes();
    std::vector<Classification> out;
    out.reserve(images.size());
    for (std::size_t n = 0; n < images.size(); ++n) {
        std::vector<float> row(logits.data() + n * c, logits.data() + (n + 1) * c);
        for (float v : row)
            if (!std::isfinite(v))
                throw NumericError("classifier produced a non-finite logit");
        const int k = argmax_lowest(row);
        out.push_back({labels_.at(k), std::move(row)});
    }
    return out;
}

Classification ClassifierModel::classify(const Image& img) const
{
    return classify_batch(std::span<const Image>(&img, 1)).front();
}

std::vector<NamedTensor> ClassifierModel::state() const
{
    std::vector<NamedTensor> out;
    for (std::size_t i = 0; i < params_.size(); ++i)
        out.push_back({names_[i], params_[i].value()});
    return out;
}

void ClassifierModel::load_state(const std::vector<NamedTensor>& tensors)
{
    if (tensors.size() != params_.size())
        throw FormatError("classifier checkpoint has " + std::to_string(tensors.size()) + " tensors, expected " +
                          std::to_string(params_.size()));
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].name != names_[i] || tensors[i].tensor.shape() != params_[i].shape())
            throw FormatError("classifier checkpoint tensor " + tensors[i].name + " " +
                              shape_string(tensors[i].tensor.shape()) + " does not match " + names_[i] + " " +
                              shape_string(params_[i].shape()));
        params_[i].mutable_value() = tensors[i].tensor;
    }
}

void ClassifierModel::save(const std::filesystem::path& path) const
{
    save_checkpoint(path, state());
    labels_.save(label_sidecar_path(path));
}

ClassifierModel ClassifierModel::load(const std::filesystem::path& path)
{
    auto tensors = load_checkpoint(path);
    LabelRegistry labels = LabelRegistry::load(label_sidecar_path(path));

    // Architecture follows from the tensor shapes.
    ClassifierArch arch;
    arch.widths.clear();
    for (const auto& nt : tensors)
        if (nt.name.starts_with("block") && nt.name.ends_with(".weight"))
            arch.widths.push_back(nt.tensor.dim(0));
    if (arch.widths.empty())
        throw FormatError(path.string() + " is not a classifier checkpoint");
    if (tensors.back().tensor.shape() != Shape{static_cast<int>(labels.size())})
        throw FormatError("classifier head width does not match label registry " +
                          label_sidecar_path(path).string());

    ClassifierModel model(std::move(labels), arch, 0);
    model.load_state(tensors);
    return model;
}

ClassifierModel extend_head(const ClassifierModel& model, std::string_view new_label)
{
    LabelRegistry labels = model.labels_;
    labels.add(new_label);

    ClassifierModel out(std::move(labels), model.arch_);
    out.names_ = model.names_;
    for (std::size_t i = 0; i < model.params_.size(); ++i) {
        Tensor<float> t = model.params_[i].value();
        if (model.names_[i] == "head.weight") {
            std::vector<float> values(t.values().begin(), t.values().end());
            values.resize(values.size() + static_cast<std::size_t>(t.dim(1)), 0.0f);
            t = Tensor<float>({t.dim(0) + 1, t.dim(1)}, std::move(values));
        } else if (model.names_[i] == "head.bias") {
            std::vector<float> values(t.values().begin(), t.values().end());
            values.push_back(0.0f);
            t = Tensor<float>({t.dim(0) + 1}, std::move(values));
        }
        out.params_.push_back(Var<float>::parameter(std::move(t)));
    }
    return out;
}

} // namespace darnet
