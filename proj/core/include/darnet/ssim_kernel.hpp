#pragma once

// Single-plane SSIM with an optional analytic gradient. Shared by the
// evaluation metric and the differentiable training loss so both compute the
// same quantity.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace darnet::detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

inline const std::array<double, kSsimWindow>& ssim_taps()
{
    static const std::array<double, kSsimWindow> taps = [] {
        std::array<double, kSsimWindow> t{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - kSsimWindow / 2;
            t[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += t[static_cast<std::size_t>(i)];
        }
        for (auto& v : t)
            v /= sum;
        return t;
    }();
    return taps;
}

// Valid-mode separable Gaussian filter: (h, w) -> (h-10, w-10).
inline std::vector<double> ssim_filter_valid(const std::vector<double>& in, int h, int w)
{
    const auto& t = ssim_taps();
    const int oh = h - kSsimWindow + 1;
    const int ow = w - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += t[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kSsimWindow; ++k)
                acc += t[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

// Adjoint of ssim_filter_valid: (h-10, w-10) -> (h, w).
inline std::vector<double> ssim_filter_adjoint(const std::vector<double>& in, int h, int w)
{
    const auto& t = ssim_taps();
    const int oh = h - kSsimWindow + 1;
    const int ow = w - kSsimWindow + 1;
    std::vector<double> cols(static_cast<std::size_t>(h) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int k = 0; k < kSsimWindow; ++k)
            for (int x = 0; x < ow; ++x)
                cols[static_cast<std::size_t>(y + k) * ow + x] +=
                    t[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(y) * ow + x];
    std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x)
            for (int k = 0; k < kSsimWindow; ++k)
                out[static_cast<std::size_t>(y) * w + x + k] +=
                    t[static_cast<std::size_t>(k)] * cols[static_cast<std::size_t>(y) * ow + x];
    return out;
}

struct SsimPlaneResult {
    double sum = 0.0;        // sum of the SSIM map
    std::size_t count = 0;   // number of valid window positions
};

// SSIM over one plane. When grad_x is non-null it receives d(sum)/dx.
inline SsimPlaneResult ssim_plane(const std::vector<double>& x, const std::vector<double>& y, int h, int w,
                                  std::vector<double>* grad_x = nullptr)
{
    const std::size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mx = ssim_filter_valid(x, h, w);
    const auto my = ssim_filter_valid(y, h, w);
    const auto exx = ssim_filter_valid(xx, h, w);
    const auto eyy = ssim_filter_valid(yy, h, w);
    const auto exy = ssim_filter_valid(xy, h, w);

    const std::size_t m = mx.size();
    SsimPlaneResult result;
    result.count = m;
    std::vector<double> g_mx, g_exx, g_exy;
    if (grad_x) {
        g_mx.resize(m);
        g_exx.resize(m);
        g_exy.resize(m);
    }
    for (std::size_t i = 0; i < m; ++i) {
        const double sxx = exx[i] - mx[i] * mx[i];
        const double syy = eyy[i] - my[i] * my[i];
        const double sxy = exy[i] - mx[i] * my[i];
        const double a1 = 2.0 * mx[i] * my[i] + kSsimC1;
        const double a2 = 2.0 * sxy + kSsimC2;
        const double b1 = mx[i] * mx[i] + my[i] * my[i] + kSsimC1;
        const double b2 = sxx + syy + kSsimC2;
        const double s = (a1 * a2) / (b1 * b2);
        result.sum += s;
        if (grad_x) {
            const double d_mx = 2.0 * my[i] * a2 / (b1 * b2) - s * 2.0 * mx[i] / b1;
            const double d_sxx = -s / b2;
            const double d_sxy = 2.0 * a1 / (b1 * b2);
            g_mx[i] = d_mx - 2.0 * mx[i] * d_sxx - my[i] * d_sxy;
            g_exx[i] = d_sxx;
            g_exy[i] = d_sxy;
        }
    }
    if (grad_x) {
        const auto a_mx = ssim_filter_adjoint(g_mx, h, w);
        const auto a_exx = ssim_filter_adjoint(g_exx, h, w);
        const auto a_exy = ssim_filter_adjoint(g_exy, h, w);
        grad_x->resize(n);
        for (std::size_t i = 0; i < n; ++i)
            (*grad_x)[i] = a_mx[i] + 2.0 * x[i] * a_exx[i] + y[i] * a_exy[i];
    }
    return result;
}

} // namespace darnet::detail
