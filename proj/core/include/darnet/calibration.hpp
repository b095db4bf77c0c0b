#pragma once

#include <span>
#include <string>
#include <vector>

#include "darnet/degrade.hpp"
#include "darnet/image.hpp"
#include "darnet/metrics.hpp"

namespace darnet {

// Published corrupted-input metrics for the standard benchmark conditions.
struct CalibrationReference {
    std::string label;
    double level = 0.0;
    MetricRecord metrics;
    double psnr_tolerance = 0.0;
    double ssim_tolerance = 0.0; // 0 when only PSNR is checked
};

const std::vector<CalibrationReference>& calibration_references();

struct CalibrationRow {
    CalibrationReference reference;
    std::string mode; // overexposure operator, empty otherwise
    MetricRecord measured;
    double seconds = 0.0;
    bool within_tolerance() const;
};

struct CalibrationResult {
    std::vector<CalibrationRow> rows;
    OverexposureMode closest_mode = OverexposureMode::Gain;
};

// Mean corrupted metrics over full images for every reference condition; the
// overexposure condition is measured under both operators.
CalibrationResult calibrate_degradations(std::span<const NamedImage> images, std::uint64_t seed, int threads);

std::string calibration_markdown(const CalibrationResult& result);

} // namespace darnet
