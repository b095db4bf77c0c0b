#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "darnet/degrade.hpp"
#include "darnet/experts.hpp"
#include "darnet/training.hpp"
#include "darnet/unet.hpp"

namespace darnet {

struct ExpertTrainConfig {
    TrainSchedule schedule = [] {
        TrainSchedule s;
        s.batch_size = 128;
        return s;
    }();
    int crop_size = 128;
    int crops_per_image = 50;
    double validation_fraction = 0.1;
    int validation_crops_per_image = 4;
    double loss_alpha = 0.5;
    DegradationConfig degradations;
    UNetProfile profile = UNetProfile::full();
};

struct ExpertEpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double lr = 0.0;
    int steps = 0;
};

struct ExpertTrainReport {
    std::string label;
    std::vector<ExpertEpochRecord> epochs;
    int best_epoch = 0;
    double best_validation_loss = 0.0;
    std::size_t train_images = 0;
    std::size_t validation_images = 0;
    double seconds = 0.0;
};

struct TrainedExpert {
    std::shared_ptr<UNetExpert> expert;
    ExpertTrainReport report;
};

// Trains a U-Net for one degradation class from clean images: 90/10 split by
// image, fresh random crops degraded on the fly each epoch, hybrid loss with
// Adam, reduce-on-plateau and early stopping. Returns the best-validation
// parameters.
TrainedExpert train_expert(std::string_view label, std::span<const Image> images, const ExpertTrainConfig& cfg,
                           Rng& rng);

// Repeated Adam steps on one fixed (degraded, clean) batch. Returns the loss
// before every step plus the final loss.
std::vector<double> overfit_batch(UNet& net, const Tensor<float>& degraded, const Tensor<float>& clean, int steps,
                                  double lr, double alpha);

} // namespace darnet
