#include "darnet/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "darnet/error.hpp"
#include "darnet/ssim_kernel.hpp"

namespace darnet {

namespace {

void require_same_shape(const Image& a, const Image& b)
{
    if (a.height() != b.height() || a.width() != b.width())
        throw ShapeError("image dimensions differ: " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
}

std::vector<double> plane(const Image& img, int c)
{
    std::vector<double> out(static_cast<std::size_t>(img.height()) * img.width());
    const auto v = img.values();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = v[i * 3 + static_cast<std::size_t>(c)];
    return out;
}

} // namespace

double psnr(const Image& a, const Image& b)
{
    require_same_shape(a, b);
    double sse = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = static_cast<double>(va[i]) - vb[i];
        sse += d * d;
    }
    if (sse == 0.0)
        return kPsnrInfinity;
    return 10.0 * std::log10(static_cast<double>(va.size()) / sse);
}

double ssim(const Image& a, const Image& b)
{
    require_same_shape(a, b);
    if (std::min(a.height(), a.width()) < detail::kSsimWindow)
        throw ShapeError("SSIM needs images of at least 11x11 pixels");
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto r = detail::ssim_plane(plane(a, c), plane(b, c), a.height(), a.width());
        total += r.sum / static_cast<double>(r.count);
    }
    return total / 3.0;
}

double mean_abs_error(const Image& a, const Image& b)
{
    require_same_shape(a, b);
    double sum = 0.0;
    const auto va = a.values();
    const auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i)
        sum += std::abs(static_cast<double>(va[i]) - vb[i]);
    return sum / static_cast<double>(va.size());
}

double hybrid_loss(const Image& pred, const Image& ref, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("loss alpha must lie in [0,1]");
    require_same_shape(pred, ref);
    double loss = (1.0 - alpha) * mean_abs_error(pred, ref);
    if (alpha > 0.0)
        loss += alpha * (1.0 - ssim(pred, ref));
    return loss;
}

MetricRecord measure(const Image& restored, const Image& reference)
{
    return {psnr(restored, reference), ssim(restored, reference)};
}

std::string format_psnr(double value, int decimals)
{
    if (std::isinf(value))
        return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

} // namespace darnet
