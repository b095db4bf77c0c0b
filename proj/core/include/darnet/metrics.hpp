#pragma once

#include <limits>
#include <string>

#include "darnet/image.hpp"

namespace darnet {

// Returned by psnr() for identical inputs.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

struct MetricRecord {
    double psnr = 0.0; // dB, may be kPsnrInfinity
    double ssim = 0.0;
};

// 10 log10(1 / MSE) over every pixel-channel, peak 1.
double psnr(const Image& a, const Image& b);

// Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows, per channel then
// averaged; C1 = 0.01^2, C2 = 0.03^2. Needs min(H, W) >= 11.
double ssim(const Image& a, const Image& b);

double mean_abs_error(const Image& a, const Image& b);

// alpha (1 - SSIM) + (1 - alpha) mean|pred - ref|.
double hybrid_loss(const Image& pred, const Image& ref, double alpha);

MetricRecord measure(const Image& restored, const Image& reference);

// "inf" for the infinity sentinel, fixed-point otherwise.
std::string format_psnr(double value, int decimals = 2);

} // namespace darnet
