#include "darnet/calibration.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "darnet/error.hpp"
#include "darnet/parallel.hpp"
#include "darnet/pipeline.hpp"
#include "darnet/report.hpp"

namespace darnet {

const std::vector<CalibrationReference>& calibration_references()
{
    static const std::vector<CalibrationReference> refs{
        {std::string(labels::kNoise), 25.0, {20.48, 0.391}, 0.5, 0.03},
        {std::string(labels::kBlur), 1.5, {26.07, 0.744}, 0.5, 0.03},
        {std::string(labels::kOverexposure), 1.7, {11.98, 0.768}, 1.5, 0.0},
    };
    return refs;
}

bool CalibrationRow::within_tolerance() const
{
    if (!(std::abs(measured.psnr - reference.metrics.psnr) <= reference.psnr_tolerance))
        return false;
    return reference.ssim_tolerance <= 0.0 ||
           std::abs(measured.ssim - reference.metrics.ssim) <= reference.ssim_tolerance;
}

CalibrationResult calibrate_degradations(std::span<const NamedImage> images, std::uint64_t seed, int threads)
{
    if (images.empty())
        throw DataError("calibration needs at least one image");
    CalibrationResult result;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& ref : calibration_references()) {
        const bool exposure = ref.label == labels::kOverexposure;
        const std::vector<OverexposureMode> modes =
            exposure ? std::vector{OverexposureMode::Gain, OverexposureMode::Power} : std::vector{OverexposureMode::Gain};
        for (const auto mode : modes) {
            DegradationConfig cfg;
            cfg.overexposure_mode = mode;
            const BenchmarkTask task{ref.label, ref.level};
            std::vector<MetricRecord> per_image(images.size());
            const auto started = std::chrono::steady_clock::now();
            parallel_for(images.size(), threads, [&](std::size_t i) {
                per_image[i] = measure(corrupt(images[i].image, images[i].name, task, seed, cfg), images[i].image);
            });
            CalibrationRow row{ref, exposure ? to_string(mode) : "", {}, 0.0};
            for (const auto& m : per_image) {
                row.measured.psnr += m.psnr / static_cast<double>(images.size());
                row.measured.ssim += m.ssim / static_cast<double>(images.size());
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            if (exposure) {
                const double gap = std::abs(row.measured.psnr - ref.metrics.psnr);
                if (gap < best_gap) {
                    best_gap = gap;
                    result.closest_mode = mode;
                }
            }
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::string calibration_markdown(const CalibrationResult& result)
{
    auto fmt = [](double v, int d) {
        std::ostringstream os;
        os << std::fixed << std::setprecision(d) << v;
        return os.str();
    };
    std::vector<std::vector<std::string>> rows{
        {"Condition", "Level", "Operator", "Measured", "Reference", "Within tolerance", "Seconds"}};
    for (const auto& r : result.rows)
        rows.push_back({r.reference.label, fmt(r.reference.level, 2), r.mode.empty() ? "-" : r.mode,
                        fmt(r.measured.psnr, 2) + " / " + fmt(r.measured.ssim, 3),
                        fmt(r.reference.metrics.psnr, 2) + " / " + fmt(r.reference.metrics.ssim, 3),
                        r.within_tolerance() ? "yes" : "no", fmt(r.seconds, 2)});
    return markdown_table(rows) + "\nClosest overexposure operator: " + to_string(result.closest_mode) + "\n";
}

} // namespace darnet
