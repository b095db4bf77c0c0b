#include "darnet/expert_training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "darnet/adam.hpp"
#include "darnet/error.hpp"
#include "darnet/ops.hpp"

namespace darnet {

namespace {

constexpr std::uint64_t kCropTag = 0x63726f70;
constexpr std::uint64_t kValTag = 0x76616c;

struct Pair {
    Image degraded;
    Image clean;
};

Pair make_pair(const Image& source, std::string_view label, int crop_size, std::uint64_t seed,
               const DegradationConfig& cfg)
{
    Rng rng(seed);
    Image clean = random_crop(source, crop_size, rng);
    const DegradationSpec spec = sample_degradation(label, rng, cfg);
    Image degraded = apply(spec, clean, rng, cfg);
    return {std::move(degraded), std::move(clean)};
}

double batch_loss(const UNet& net, const std::vector<Pair>& pairs, std::size_t begin, std::size_t end, double alpha)
{
    std::vector<Image> in, ref;
    for (std::size_t i = begin; i < end; ++i) {
        in.push_back(pairs[i].degraded);
        ref.push_back(pairs[i].clean);
    }
    NoGradGuard no_grad;
    const Var<float> pred = net.forward(Var<float>::constant(images_to_tensor(in)));
    return ops::hybrid_loss(pred, images_to_tensor(ref), alpha).value()[0];
}

double validation_loss(const UNet& net, const std::vector<Pair>& pairs, int batch, double alpha)
{
    if (pairs.empty())
        return 0.0;
    double total = 0.0;
    const auto step = static_cast<std::size_t>(std::max(1, batch));
    for (std::size_t start = 0; start < pairs.size(); start += step) {
        const std::size_t end = std::min(pairs.size(), start + step);
        total += batch_loss(net, pairs, start, end, alpha) * static_cast<double>(end - start);
    }
    return total / static_cast<double>(pairs.size());
}

} // namespace

TrainedExpert train_expert(std::string_view label, std::span<const Image> images, const ExpertTrainConfig& cfg,
                           Rng& rng)
{
    const std::string canon = canonical_label(label);
    if (canon == labels::kClean)
        throw InvalidArgument("the Clean label has no trainable expert");
    if (!cfg.degradations.range_for(canon))
        throw InvalidArgument("unknown degradation label " + std::string(label));
    if (images.empty())
        throw DataError("no training images for the " + canon + " expert");
    for (const Image& im : images)
        if (std::min(im.height(), im.width()) < cfg.crop_size)
            throw DataError("crop size " + std::to_string(cfg.crop_size) + " exceeds an image of " +
                            std::to_string(im.height()) + "x" + std::to_string(im.width()));
    if (cfg.crop_size % (1 << static_cast<int>(cfg.profile.widths.size())) != 0)
        throw InvalidArgument("crop size must be a multiple of the U-Net size multiple");

    const auto started = std::chrono::steady_clock::now();
    const TrainSchedule& sched = cfg.schedule;
    const std::uint64_t split_seed = rng.next_u64();
    const std::uint64_t init_seed = rng.next_u64();
    const std::uint64_t data_seed = rng.next_u64();

    std::vector<std::size_t> train_idx, val_idx;
    if (images.size() == 1) {
        train_idx = {0};
    } else {
        const double val_frac = std::clamp(cfg.validation_fraction, 1.0 / static_cast<double>(images.size()), 0.5);
        const DatasetSplit split = split_dataset(images.size(), 1.0 - val_frac, val_frac, split_seed);
        train_idx = split.train;
        val_idx = split.validation;
        train_idx.insert(train_idx.end(), split.test.begin(), split.test.end());
        if (val_idx.empty()) {
            val_idx.push_back(train_idx.back());
            train_idx.pop_back();
        }
    }
    // A single image validates on its own crops drawn with separate seeds.
    const std::vector<std::size_t>& val_sources = val_idx.empty() ? train_idx : val_idx;

    std::vector<Pair> validation;
    for (std::size_t v = 0; v < val_sources.size(); ++v)
        for (int c = 0; c < cfg.validation_crops_per_image; ++c)
            validation.push_back(make_pair(images[val_sources[v]], canon, cfg.crop_size,
                                           derive_seed(data_seed, kValTag, val_sources[v], c), cfg.degradations));

    UNet net(cfg.profile.widths, init_seed);
    AdamState<float> adam;
    PlateauScheduler scheduler(sched);
    std::vector<NamedTensor> best_state = net.state();

    TrainedExpert result;
    ExpertTrainReport& report = result.report;
    report.label = canon;
    report.train_images = train_idx.size();
    report.validation_images = val_idx.size();

    const std::size_t samples = train_idx.size() * static_cast<std::size_t>(std::max(1, cfg.crops_per_image));
    std::vector<std::size_t> order(samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(data_seed, 0x73687566));
    const auto batch = static_cast<std::size_t>(std::max(1, sched.batch_size));

    for (int epoch = 1; epoch <= sched.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            if (sched.max_steps_per_epoch > 0 && steps >= sched.max_steps_per_epoch)
                break;
            const std::size_t end = std::min(order.size(), start + batch);
            std::vector<Image> in, ref;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t sample = order[k];
                const std::size_t img = train_idx[sample / static_cast<std::size_t>(std::max(1, cfg.crops_per_image))];
                Pair p = make_pair(images[img], canon, cfg.crop_size, derive_seed(data_seed, kCropTag, epoch, sample),
                                   cfg.degradations);
                in.push_back(std::move(p.degraded));
                ref.push_back(std::move(p.clean));
            }
            const Var<float> pred = net.forward(Var<float>::constant(images_to_tensor(in)));
            Var<float> loss = ops::hybrid_loss(pred, images_to_tensor(ref), cfg.loss_alpha);
            loss.backward();
            adam_step(net.parameters(), adam, scheduler.lr());
            zero_grads(net.parameters());
            const double value = loss.value()[0];
            if (!std::isfinite(value))
                throw NumericError("non-finite training loss in the " + canon + " expert");
            loss_sum += value;
            ++steps;
        }

        const double val = validation_loss(net, validation, sched.batch_size, cfg.loss_alpha);
        report.epochs.push_back({epoch, steps ? loss_sum / steps : 0.0, val, scheduler.lr(), steps});
        const auto decision = scheduler.observe(val);
        if (decision.improved) {
            best_state = net.state();
            report.best_epoch = epoch;
            report.best_validation_loss = val;
        }
        if (decision.stop)
            break;
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (sched.time_budget_seconds > 0 && elapsed > sched.time_budget_seconds)
            break;
    }
    net.load_state(best_state);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.expert = std::make_shared<UNetExpert>(canon, std::move(net), cfg.profile.name);
    return result;
}

std::vector<double> overfit_batch(UNet& net, const Tensor<float>& degraded, const Tensor<float>& clean, int steps,
                                  double lr, double alpha)
{
    std::vector<double> history;
    AdamState<float> adam;
    const Var<float> input = Var<float>::constant(degraded);
    for (int s = 0; s < steps; ++s) {
        Var<float> loss = ops::hybrid_loss(net.forward(input), clean, alpha);
        history.push_back(loss.value()[0]);
        loss.backward();
        adam_step(net.parameters(), adam, lr);
        zero_grads(net.parameters());
    }
    NoGradGuard no_grad;
    history.push_back(ops::hybrid_loss(net.forward(input), clean, alpha).value()[0]);
    return history;
}

} // namespace darnet
