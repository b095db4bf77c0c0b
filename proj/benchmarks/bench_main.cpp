#include <benchmark/benchmark.h>

#include <vector>

#include "darnet/classifier.hpp"
#include "darnet/degrade.hpp"
#include "darnet/experts.hpp"
#include "darnet/metrics.hpp"
#include "darnet/ops.hpp"
#include "darnet/rng.hpp"
#include "darnet/unet.hpp"

using namespace darnet;

namespace {

Image noise_image(int side, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(side) * side * 3);
    for (auto& x : v)
        x = rng.uniform();
    return Image(side, side, std::move(v));
}

Tensor<float> noise_tensor(const Shape& shape, std::uint64_t seed)
{
    Rng rng(seed);
    Tensor<float> t(shape);
    for (auto& x : t.values())
        x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

} // namespace

static void BM_Conv3x3Forward(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const int ch = static_cast<int>(state.range(1));
    NoGradGuard no_grad;
    const auto x = Var<float>::constant(noise_tensor({1, ch, side, side}, 1));
    const auto w = Var<float>::constant(noise_tensor({ch, ch, 3, 3}, 2));
    const auto b = Var<float>::constant(noise_tensor({ch}, 3));
    for (auto _ : state)
        benchmark::DoNotOptimize(ops::conv2d(x, w, b, 1, 1).value().data());
    state.SetItemsProcessed(state.iterations() * 2LL * side * side * ch * ch * 9);
}
BENCHMARK(BM_Conv3x3Forward)->Args({64, 16})->Args({64, 64})->Args({128, 32})->Unit(benchmark::kMillisecond);

static void BM_Conv3x3Backward(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const int ch = static_cast<int>(state.range(1));
    const auto x = Var<float>::parameter(noise_tensor({1, ch, side, side}, 1));
    const auto w = Var<float>::parameter(noise_tensor({ch, ch, 3, 3}, 2));
    const auto b = Var<float>::parameter(noise_tensor({ch}, 3));
    const Tensor<float> weights = noise_tensor({1, ch, side, side}, 4);
    for (auto _ : state) {
        Var<float> loss = ops::weighted_sum(ops::conv2d(x, w, b, 1, 1), weights);
        loss.backward();
        benchmark::DoNotOptimize(w.grad().data());
    }
}
BENCHMARK(BM_Conv3x3Backward)->Args({64, 16})->Args({64, 64})->Unit(benchmark::kMillisecond);

static void BM_GaussianBlur(benchmark::State& state)
{
    const Image img = noise_image(static_cast<int>(state.range(0)), 5);
    const double sigma = static_cast<double>(state.range(1)) / 10.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(gaussian_blur(img, sigma).values().data());
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_GaussianBlur)->Args({256, 15})->Args({256, 30})->Args({512, 15})->Unit(benchmark::kMillisecond);

static void BM_Ssim(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const Image a = noise_image(side, 6);
    const Image b = gaussian_blur(a, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(ssim(a, b));
    state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_Ssim)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_Psnr(benchmark::State& state)
{
    const int side = static_cast<int>(state.range(0));
    const Image a = noise_image(side, 7);
    const Image b = noise_image(side, 8);
    for (auto _ : state)
        benchmark::DoNotOptimize(psnr(a, b));
}
BENCHMARK(BM_Psnr)->Arg(256)->Arg(512);

static void BM_WienerDeblur(benchmark::State& state)
{
    const Image img = gaussian_blur(noise_image(static_cast<int>(state.range(0)), 9), 1.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(wiener_deblur(img, 1.5, 1e-2).values().data());
}
BENCHMARK(BM_WienerDeblur)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_ClassifierRoute(benchmark::State& state)
{
    ClassifierArch arch;
    arch.input_size = static_cast<int>(state.range(0));
    const ClassifierModel model(LabelRegistry{{"Clean", "Noise", "Blur", "Overexposure"}}, arch, 10);
    const Image img = noise_image(arch.input_size, 11);
    for (auto _ : state)
        benchmark::DoNotOptimize(model.classify(img).label.ordinal);
}
BENCHMARK(BM_ClassifierRoute)->Arg(48)->Arg(96)->Unit(benchmark::kMillisecond);

static void BM_UNetTinyForward(benchmark::State& state)
{
    const UNet net(UNetProfile::tiny().widths, 12);
    const Image img = noise_image(static_cast<int>(state.range(0)), 13);
    for (auto _ : state)
        benchmark::DoNotOptimize(unet_forward(net, img).values().data());
}
BENCHMARK(BM_UNetTinyForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
