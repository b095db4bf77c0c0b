#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "darnet/image.hpp"
#include "darnet/labels.hpp"
#include "darnet/rng.hpp"

namespace darnet {

enum class OverexposureMode {
    Gain,  // clamp(gamma * I)
    Power, // clamp(I^(1/gamma))
};

std::string to_string(OverexposureMode mode);
OverexposureMode parse_overexposure_mode(std::string_view text);

struct MagnitudeRange {
    double min = 0.0;
    double max = 0.0;

    double mid() const noexcept { return 0.5 * (min + max); }
    bool contains(double v) const noexcept { return v >= min && v <= max; }
};

// Magnitude ranges per degradation class and the overexposure operator.
struct DegradationConfig {
    MagnitudeRange noise{15.0, 50.0};      // sigma, 8-bit units
    MagnitudeRange blur{0.5, 3.0};         // sigma, pixels
    MagnitudeRange overexposure{1.3, 2.0}; // gamma
    MagnitudeRange salt_pepper{0.02, 0.10}; // fraction of corrupted pixels
    OverexposureMode overexposure_mode = OverexposureMode::Gain;

    // Range for a degradation label; nullopt for Clean, throws for unknown labels.
    std::optional<MagnitudeRange> range_for(std::string_view label) const;
};

struct DegradationSpec {
    std::string label;
    std::optional<double> magnitude; // empty for Clean

    bool operator==(const DegradationSpec&) const = default;
};

// Labels the engine knows how to synthesize.
const std::vector<std::string>& degradation_labels();

Image add_gaussian_noise(const Image& img, double sigma_8bit, Rng& rng);

// Normalized 1-D Gaussian taps, radius ceil(3 sigma); element r is the center.
std::vector<double> gaussian_kernel(double sigma);

// Half-sample symmetric boundary: ... b a | a b c ... c | c b ...
int reflect_index(int i, int n) noexcept;

Image gaussian_blur(const Image& img, double sigma);

Image overexpose(const Image& img, double gamma, OverexposureMode mode = OverexposureMode::Gain);

// Impulse noise: each pixel is replaced by black or white (all channels) with
// total probability `density`.
Image add_salt_pepper(const Image& img, double density, Rng& rng);

DegradationSpec sample_degradation(std::string_view label, Rng& rng,
                                   const DegradationConfig& cfg = {});

Image apply(const DegradationSpec& spec, const Image& img, Rng& rng,
            const DegradationConfig& cfg = {});

} // namespace darnet
