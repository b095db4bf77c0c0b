#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "darnet/degrade.hpp"
#include "darnet/image.hpp"
#include "darnet/labels.hpp"
#include "darnet/unet.hpp"

namespace darnet {

// A restoration model for one degradation class. restore() counts every call
// so tests can check that exactly one expert runs per routed image.
class Expert {
public:
    virtual ~Expert() = default;

    virtual std::string name() const = 0;
    virtual std::string handles() const = 0;

    // Dimension- and range-preserving by contract; checked here.
    Image restore(const Image& img) const;

    std::size_t call_count() const noexcept { return calls_.load(); }
    void reset_call_count() const noexcept { calls_.store(0); }

protected:
    virtual Image restore_impl(const Image& img) const = 0;

private:
    mutable std::atomic<std::size_t> calls_{0};
};

class IdentityExpert final : public Expert {
public:
    explicit IdentityExpert(std::string label = std::string(labels::kClean)) : label_(std::move(label)) {}
    std::string name() const override { return "identity"; }
    std::string handles() const override { return label_; }

protected:
    Image restore_impl(const Image& img) const override { return img; }

private:
    std::string label_;
};

std::shared_ptr<const Expert> identity_expert();

// Reflect-pads to the network's size multiple, runs the U-Net, crops back.
Image unet_forward(const UNet& net, const Image& img);

class UNetExpert final : public Expert {
public:
    UNetExpert(std::string label, UNet net, std::string profile);

    std::string name() const override { return "unet-" + profile_; }
    std::string handles() const override { return label_; }
    const UNet& network() const noexcept { return net_; }
    const std::string& profile() const noexcept { return profile_; }

protected:
    Image restore_impl(const Image& img) const override { return unet_forward(net_, img); }

private:
    std::string label_;
    UNet net_;
    std::string profile_;
};

// Frequency-domain Wiener deconvolution against the Gaussian blur kernel,
// per channel, on the half-sample symmetric extension of the image.
Image wiener_deblur(const Image& img, double sigma_blur, double noise_to_signal);

// img^gamma: undoes overexpose(., gamma, Power) wherever nothing clipped.
Image inverse_gamma_expert(const Image& img, double gamma_estimate);

// img / gain: undoes overexpose(., gain, Gain) wherever nothing clipped.
Image inverse_gain_expert(const Image& img, double gain_estimate);

// 3x3 per-channel median with symmetric borders.
Image median3(const Image& img);

class WienerExpert final : public Expert {
public:
    WienerExpert(double sigma_blur, double noise_to_signal, std::string label = std::string(labels::kBlur));
    std::string name() const override { return "wiener"; }
    std::string handles() const override { return label_; }
    double sigma() const noexcept { return sigma_; }
    double noise_to_signal() const noexcept { return nsr_; }

protected:
    Image restore_impl(const Image& img) const override { return wiener_deblur(img, sigma_, nsr_); }

private:
    double sigma_;
    double nsr_;
    std::string label_;
};

class InverseExposureExpert final : public Expert {
public:
    InverseExposureExpert(double gamma, OverexposureMode mode,
                          std::string label = std::string(labels::kOverexposure));
    std::string name() const override { return "inverse-" + to_string(mode_); }
    std::string handles() const override { return label_; }
    double gamma() const noexcept { return gamma_; }
    OverexposureMode mode() const noexcept { return mode_; }

protected:
    Image restore_impl(const Image& img) const override;

private:
    double gamma_;
    OverexposureMode mode_;
    std::string label_;
};

class MedianExpert final : public Expert {
public:
    explicit MedianExpert(std::string label) : label_(std::move(label)) {}
    std::string name() const override { return "median3"; }
    std::string handles() const override { return label_; }

protected:
    Image restore_impl(const Image& img) const override { return median3(img); }

private:
    std::string label_;
};

// Classical expert for a label using its mid-range magnitude as the estimate.
std::shared_ptr<const Expert> classical_expert(std::string_view label, const DegradationConfig& cfg = {});

// Label -> expert. Starts with Clean -> identity.
class ExpertRegistry {
public:
    ExpertRegistry();

    // Adds or replaces; expert->handles() must equal label.
    void set(std::string_view label, std::shared_ptr<const Expert> expert);
    bool contains(std::string_view label) const;
    const Expert& at(std::string_view label) const;
    std::shared_ptr<const Expert> shared(std::string_view label) const;
    std::vector<std::string> labels() const;
    bool is_total_over(const LabelRegistry& labels) const;
    std::size_t total_calls() const;
    void reset_call_counts() const;

private:
    std::map<std::string, std::shared_ptr<const Expert>> experts_;
};

ExpertRegistry register_expert(ExpertRegistry registry, std::string_view label,
                               std::shared_ptr<const Expert> expert);

struct ExpertManifest {
    std::string name;
    std::string label;
    std::string kind; // unet | wiener | inverse_exposure | median | identity
    std::string profile;
    std::string config_hash;
    std::map<std::string, double> params;
};

// Lower-case directory name for a label ("Overexposure" -> "overexposure").
std::string expert_dir_name(std::string_view label);

// Writes <root>/<label>/manifest.json (and expert.darn for U-Nets). Touches
// nothing outside that directory.
std::filesystem::path save_expert(const Expert& expert, const std::filesystem::path& root,
                                  const std::string& config_hash = "");
std::shared_ptr<const Expert> load_expert(const std::filesystem::path& dir);
ExpertManifest read_manifest(const std::filesystem::path& dir);

// Clean -> identity plus every sub-directory of root that holds a manifest.
ExpertRegistry load_expert_registry(const std::filesystem::path& root);

} // namespace darnet
