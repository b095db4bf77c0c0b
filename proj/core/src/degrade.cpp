#include "darnet/degrade.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "darnet/error.hpp"

namespace darnet {

std::string to_string(OverexposureMode mode)
{
    return mode == OverexposureMode::Gain ? "gain" : "power";
}

OverexposureMode parse_overexposure_mode(std::string_view text)
{
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "gain")
        return OverexposureMode::Gain;
    if (lower == "power" || lower == "gamma")
        return OverexposureMode::Power;
    throw InvalidArgument("unknown overexposure mode: " + std::string(text));
}

std::optional<MagnitudeRange> DegradationConfig::range_for(std::string_view label) const
{
    const std::string canon = canonical_label(label);
    if (canon == labels::kClean)
        return std::nullopt;
    if (canon == labels::kNoise)
        return noise;
    if (canon == labels::kBlur)
        return blur;
    if (canon == labels::kOverexposure)
        return overexposure;
    if (canon == labels::kSaltPepper)
        return salt_pepper;
    throw InvalidArgument("unknown degradation label: " + std::string(label));
}

const std::vector<std::string>& degradation_labels()
{
    static const std::vector<std::string> all{std::string(labels::kClean), std::string(labels::kNoise),
                                              std::string(labels::kBlur), std::string(labels::kOverexposure),
                                              std::string(labels::kSaltPepper)};
    return all;
}

Image add_gaussian_noise(const Image& img, double sigma_8bit, Rng& rng)
{
    if (!(sigma_8bit >= 0.0))
        throw InvalidArgument("noise sigma must be non-negative");
    if (sigma_8bit == 0.0)
        return img;
    const double stddev = sigma_8bit / 255.0;
    std::vector<double> out(img.values().begin(), img.values().end());
    for (double& v : out)
        v = std::clamp(v + stddev * rng.normal(), 0.0, 1.0);
    return Image(img.height(), img.width(), std::move(out));
}

std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0.0))
        throw InvalidArgument("blur sigma must be positive");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-(d * d) / (2.0 * sigma * sigma));
        taps[static_cast<std::size_t>(d + radius)] = w;
        sum += w;
    }
    for (double& w : taps)
        w /= sum;
    return taps;
}

int reflect_index(int i, int n) noexcept
{
    if (n == 1)
        return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - 1 - i;
}

Image gaussian_blur(const Image& img, double sigma)
{
    const auto taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    const int h = img.height();
    const int w = img.width();
    const auto src = img.values();

    std::vector<double> rows(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    const int xx = reflect_index(x + d, w);
                    acc += taps[static_cast<std::size_t>(d + radius)] *
                           src[(static_cast<std::size_t>(y) * w + xx) * 3 + c];
                }
                rows[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
            }

    std::vector<double> out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int d = -radius; d <= radius; ++d) {
                    const int yy = reflect_index(y + d, h);
                    acc += taps[static_cast<std::size_t>(d + radius)] *
                           rows[(static_cast<std::size_t>(yy) * w + x) * 3 + c];
                }
                out[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
                    std::clamp(acc, 0.0, 1.0);
            }
    return Image(h, w, std::move(out));
}

Image overexpose(const Image& img, double gamma, OverexposureMode mode)
{
    if (!(gamma >= 1.0))
        throw InvalidArgument("overexposure gamma must be >= 1");
    std::vector<double> out(img.values().begin(), img.values().end());
    if (mode == OverexposureMode::Gain) {
        for (double& v : out)
            v = std::min(1.0, gamma * v);
    } else {
        const double exponent = 1.0 / gamma;
        for (double& v : out)
            v = std::min(1.0, std::pow(v, exponent));
    }
    return Image(img.height(), img.width(), std::move(out));
}

Image add_salt_pepper(const Image& img, double density, Rng& rng)
{
    if (!(density >= 0.0 && density <= 1.0))
        throw InvalidArgument("salt-and-pepper density must lie in [0,1]");
    std::vector<double> out(img.values().begin(), img.values().end());
    const std::size_t pixels = static_cast<std::size_t>(img.height()) * img.width();
    for (std::size_t p = 0; p < pixels; ++p) {
        const double u = rng.uniform();
        if (u < density) {
            const double v = u < 0.5 * density ? 0.0 : 1.0;
            std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(p * 3), 3, v);
        }
    }
    return Image(img.height(), img.width(), std::move(out));
}

DegradationSpec sample_degradation(std::string_view label, Rng& rng, const DegradationConfig& cfg)
{
    const std::string canon = canonical_label(label);
    const auto range = cfg.range_for(canon);
    if (!range)
        return {canon, std::nullopt};
    return {canon, rng.uniform(range->min, range->max)};
}

Image apply(const DegradationSpec& spec, const Image& img, Rng& rng, const DegradationConfig& cfg)
{
    const std::string canon = canonical_label(spec.label);
    if (canon == labels::kClean)
        return img;
    if (!spec.magnitude)
        throw InvalidArgument("degradation " + canon + " needs a magnitude");
    const double m = *spec.magnitude;
    if (canon == labels::kNoise)
        return add_gaussian_noise(img, m, rng);
    if (canon == labels::kBlur)
        return gaussian_blur(img, m);
    if (canon == labels::kOverexposure)
        return overexpose(img, m, cfg.overexposure_mode);
    if (canon == labels::kSaltPepper)
        return add_salt_pepper(img, m, rng);
    throw InvalidArgument("unknown degradation label: " + spec.label);
}

} // namespace darnet
