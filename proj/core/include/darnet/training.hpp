#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "darnet/image.hpp"
#include "darnet/tensor.hpp"

namespace darnet {

// Optimizer schedule shared by the classifier and the experts.
struct TrainSchedule {
    std::uint64_t seed = 0;
    int batch_size = 256;
    double lr = 1e-3;
    double plateau_factor = 0.5;
    int plateau_patience = 3;
    int early_stop = 7;
    int max_epochs = 100;
    // Caps for desk-scale runs; 0 means unlimited.
    int max_steps_per_epoch = 0;
    double time_budget_seconds = 0.0;
};

// Reduce-on-plateau plus early stopping, both driven by validation loss.
class PlateauScheduler {
public:
    explicit PlateauScheduler(const TrainSchedule& schedule);

    struct Decision {
        bool improved = false;
        bool lr_reduced = false;
        bool stop = false;
    };

    Decision observe(double validation_loss);

    double lr() const noexcept { return lr_; }
    double best() const noexcept { return best_; }
    int epochs_since_improvement() const noexcept { return stale_; }

private:
    double lr_;
    double factor_;
    int patience_;
    int early_stop_;
    double best_;
    int stale_ = 0;
    int stale_since_reduction_ = 0;
};

// Stacks same-sized images into an N x 3 x H x W tensor.
Tensor<float> images_to_tensor(std::span<const Image> images);
Tensor<float> image_to_tensor(const Image& image);
// Extracts batch element n as an image (values clamped to [0,1]).
Image tensor_to_image(const Tensor<float>& t, int n = 0);

// Reflect-pads bottom/right so both sides are multiples of `multiple`.
Image pad_to_multiple(const Image& img, int multiple);

} // namespace darnet
