#include "darnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "darnet/degrade.hpp"
#include "darnet/error.hpp"

namespace darnet {

PlateauScheduler::PlateauScheduler(const TrainSchedule& schedule)
    : lr_(schedule.lr),
      factor_(schedule.plateau_factor),
      patience_(schedule.plateau_patience),
      early_stop_(schedule.early_stop),
      best_(std::numeric_limits<double>::infinity())
{
}

PlateauScheduler::Decision PlateauScheduler::observe(double validation_loss)
{
    Decision d;
    if (validation_loss < best_) {
        best_ = validation_loss;
        stale_ = 0;
        stale_since_reduction_ = 0;
        d.improved = true;
        return d;
    }
    ++stale_;
    ++stale_since_reduction_;
    if (patience_ > 0 && stale_since_reduction_ >= patience_) {
        lr_ *= factor_;
        stale_since_reduction_ = 0;
        d.lr_reduced = true;
    }
    d.stop = early_stop_ > 0 && stale_ >= early_stop_;
    return d;
}

Tensor<float> images_to_tensor(std::span<const Image> images)
{
    if (images.empty())
        throw InvalidArgument("cannot build a tensor from zero images");
    const int h = images.front().height();
    const int w = images.front().width();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    Tensor<float> t({static_cast<int>(images.size()), 3, h, w});
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& im = images[n];
        if (im.height() != h || im.width() != w)
            throw ShapeError("batch images must share dimensions");
        const auto v = im.values();
        float* dst = t.data() + n * 3 * plane;
        for (std::size_t p = 0; p < plane; ++p)
            for (int c = 0; c < 3; ++c)
                dst[c * plane + p] = static_cast<float>(v[p * 3 + c]);
    }
    return t;
}

Tensor<float> image_to_tensor(const Image& image)
{
    return images_to_tensor(std::span<const Image>(&image, 1));
}

Image tensor_to_image(const Tensor<float>& t, int n)
{
    if (t.rank() != 4 || t.dim(1) != 3)
        throw ShapeError("expected N x 3 x H x W tensor, got " + shape_string(t.shape()));
    const int h = t.dim(2), w = t.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const float* src = t.data() + static_cast<std::size_t>(n) * 3 * plane;
    std::vector<double> values(plane * 3);
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) {
            const float v = src[c * plane + p];
            if (!std::isfinite(v))
                throw NumericError("non-finite value in network output");
            values[p * 3 + c] = std::clamp(static_cast<double>(v), 0.0, 1.0);
        }
    return Image(h, w, std::move(values));
}

Image pad_to_multiple(const Image& img, int multiple)
{
    const int h = (img.height() + multiple - 1) / multiple * multiple;
    const int w = (img.width() + multiple - 1) / multiple * multiple;
    if (h == img.height() && w == img.width())
        return img;
    std::vector<double> values(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        const int sy = reflect_index(y, img.height());
        for (int x = 0; x < w; ++x) {
            const int sx = reflect_index(x, img.width());
            for (int c = 0; c < 3; ++c)
                values[(static_cast<std::size_t>(y) * w + x) * 3 + c] = img.at(sy, sx, c);
        }
    }
    return Image(h, w, std::move(values));
}

} // namespace darnet
