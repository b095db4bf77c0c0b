#pragma once

#include <cmath>
#include <vector>

#include "darnet/image.hpp"

namespace darnet::testing {

// SSIM computed window by window from the definition, without separable
// filtering: 11x11 Gaussian (sigma 1.5) weights, valid positions only.
inline double ssim_oracle(const Image& x, const Image& y)
{
    constexpr int r = 5;
    double g[2 * r + 1];
    double z = 0;
    for (int d = -r; d <= r; ++d)
        z += g[d + r] = std::exp(-d * d / (2 * 1.5 * 1.5));
    for (double& v : g)
        v /= z;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0;
    int count = 0;
    for (int c = 0; c < 3; ++c)
        for (int cy = r; cy < x.height() - r; ++cy)
            for (int cx = r; cx < x.width() - r; ++cx) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        const double w = g[dy + r] * g[dx + r];
                        const double a = x.at(cy + dy, cx + dx, c), b = y.at(cy + dy, cx + dx, c);
                        mx += w * a;
                        my += w * b;
                        sxx += w * a * a;
                        syy += w * b * b;
                        sxy += w * a * b;
                    }
                const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
                total += (2 * mx * my + c1) * (2 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
    return total / count;
}

} // namespace darnet::testing
