#include <cmath>
#include <fstream>

#include "doctest.h"

#include "darnet/checkpoint.hpp"
#include "darnet/error.hpp"
#include "darnet/expert_training.hpp"
#include "darnet/experts.hpp"
#include "darnet/metrics.hpp"
#include "temp_dir.hpp"

using namespace darnet;

namespace {

Image random_image(int h, int w, Rng& rng)
{
    std::vector<double> v(static_cast<std::size_t>(h * w * 3));
    for (auto& x : v)
        x = rng.uniform();
    return Image(h, w, v);
}

// Low-frequency content that survives blurring.
Image band_limited(int h, int w)
{
    std::vector<double> v;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                v.push_back(0.5 + 0.2 * std::sin(0.09 * x + c) * std::cos(0.07 * y) + 0.1 * std::cos(0.05 * (x + y)));
    return Image(h, w, std::move(v));
}

double interior_max_error(const Image& a, const Image& b, int margin)
{
    double worst = 0;
    for (int y = margin; y < a.height() - margin; ++y)
        for (int x = margin; x < a.width() - margin; ++x)
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(a.at(y, x, c) - b.at(y, x, c)));
    return worst;
}

} // namespace

TEST_CASE("identity expert returns its input and counts calls")
{
    Rng rng(1);
    const Image img = random_image(12, 12, rng);
    const auto e = identity_expert();
    CHECK(e->restore(img) == img);
    CHECK(e->restore(e->restore(img)) == img);
    CHECK(psnr(e->restore(img), img) == kPsnrInfinity);
    CHECK(e->call_count() == 4);
    e->reset_call_count();
    CHECK(e->call_count() == 0);
}

TEST_CASE("unet keeps the spatial size and stays inside (0, 1)")
{
    const UNet net(UNetProfile::tiny().widths, 3);
    Rng rng(2);
    for (auto [h, w] : {std::pair{128, 128}, std::pair{96, 96}, std::pair{321, 481}, std::pair{17, 23}}) {
        const Image out = unet_forward(net, random_image(h, w, rng));
        CHECK(out.height() == h);
        CHECK(out.width() == w);
        for (double v : out.values()) {
            REQUIRE(v > 0.0);
            REQUIRE(v < 1.0);
        }
    }
}

TEST_CASE("unet parameter count matches the closed form")
{
    for (const auto& profile : {UNetProfile::tiny(), UNetProfile::full()}) {
        const UNet net(profile.widths, 0);
        CHECK(net.parameter_count() == unet_parameter_count(profile.widths));
        std::size_t summed = 0;
        for (const auto& t : net.state())
            summed += t.tensor.size();
        CHECK(summed == net.parameter_count());
    }
    // Hand expansion for widths {1, 2}: enc0 3->1->1, enc1 1->2->2, bottleneck 2->4->4,
    // dec1 up 4->2 then 4->2->2, dec0 up 2->1 then 2->1->1, head 1x1 1->3.
    auto conv = [](int in, int out, int k) { return std::size_t(out * in * k * k + out); };
    const std::size_t expected = conv(3, 1, 3) + conv(1, 1, 3) + conv(1, 2, 3) + conv(2, 2, 3) + conv(2, 4, 3) +
                                 conv(4, 4, 3) + conv(4, 2, 3) + conv(4, 2, 3) + conv(2, 2, 3) + conv(2, 1, 3) +
                                 conv(2, 1, 3) + conv(1, 1, 3) + conv(1, 3, 1);
    const std::vector<int> widths{1, 2};
    CHECK(unet_parameter_count(widths) == expected);
    CHECK(UNet(widths, 0).parameter_count() == expected);
}

TEST_CASE("unet state round trip reproduces outputs exactly")
{
    TempDir dir;
    const UNet net(UNetProfile::tiny().widths, 5);
    save_checkpoint(dir.path() / "u.darn", net.state());
    const auto tensors = load_checkpoint(dir.path() / "u.darn");
    UNet back(UNet::widths_from_state(tensors), 99);
    back.load_state(tensors);
    Rng rng(3);
    const Image img = random_image(32, 32, rng);
    CHECK(unet_forward(back, img) == unet_forward(net, img));
}

TEST_CASE("wiener deconvolution inverts the blur away from borders")
{
    const Image img = band_limited(64, 80);
    const Image blurred = gaussian_blur(img, 1.5);
    const Image restored = wiener_deblur(blurred, 1.5, 1e-10);
    CHECK(interior_max_error(restored, img, 8) <= 1e-2);
    CHECK(psnr(crop(restored, 8, 8, 48, 64), crop(img, 8, 8, 48, 64)) >= 35.0);

    const Image flat(20, 30, 0.42);
    const Image f = wiener_deblur(flat, 2.0, 1e-3);
    const Image exact = wiener_deblur(flat, 2.0, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(f.values()[i] == doctest::Approx(f.values()[0]).epsilon(1e-9));
        CHECK(exact.values()[i] == doctest::Approx(0.42).epsilon(1e-9));
    }

    Rng rng(4);
    const Image noise = random_image(24, 24, rng);
    CHECK(interior_max_error(wiener_deblur(noise, 0.1, 0.0), noise, 0) <= 1e-2);
    CHECK_THROWS_AS(wiener_deblur(noise, 0.0, 0.1), InvalidArgument);
}

TEST_CASE("inverse gamma undoes the power operator on unclipped pixels")
{
    Image img(1, 3, std::vector<double>{0.5, 0.2, 0.9, 0.05, 1.0, 0.7, 0.3, 0.3, 0.3});
    const Image over = overexpose(img, 1.7, OverexposureMode::Power);
    const Image back = inverse_gamma_expert(over, 1.7);
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.values()[i] - img.values()[i]) <= 1e-6);
    CHECK(back.at(0, 1, 1) == 1.0);
    CHECK(inverse_gamma_expert(img, 1.0) == img);
    CHECK_THROWS_AS(inverse_gamma_expert(img, 0.9), InvalidArgument);

    const Image gained = overexpose(Image(2, 2, 0.4), 2.0, OverexposureMode::Gain);
    CHECK(inverse_gain_expert(gained, 2.0).at(1, 1, 2) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(inverse_gain_expert(Image(1, 1, 1.0), 2.0).at(0, 0, 0) == 0.5);
}

TEST_CASE("median filter removes isolated impulses")
{
    Image img(5, 5, 0.5);
    img.set(2, 2, 0, 1.0);
    img.set(1, 3, 1, 0.0);
    CHECK(median3(img) == Image(5, 5, 0.5));
}

TEST_CASE("registry checks labels and stays total")
{
    ExpertRegistry reg;
    CHECK(reg.contains("clean"));
    CHECK(reg.at("Clean").name() == "identity");
    CHECK_THROWS_AS(reg.at("Noise"), InvalidArgument);
    CHECK_THROWS_AS(reg.set("Noise", std::make_shared<WienerExpert>(1.0, 0.01)), InvalidArgument);
    reg = register_expert(reg, "noise", std::make_shared<MedianExpert>("Noise"));
    reg.set("Blur", classical_expert("blur"));
    const LabelRegistry labels(std::vector<std::string>{"Clean", "Noise", "Blur"});
    CHECK(reg.is_total_over(labels));
    CHECK(!reg.is_total_over(LabelRegistry(std::vector<std::string>{"Clean", "Overexposure"})));
    const auto blur = reg.shared("Blur");
    reg.set("Noise", std::make_shared<IdentityExpert>("Noise"));
    CHECK(reg.shared("Blur") == blur);
    CHECK(reg.at("Noise").name() == "identity");
}

TEST_CASE("classical experts use mid-range magnitudes")
{
    const DegradationConfig cfg;
    const auto wiener = std::dynamic_pointer_cast<const WienerExpert>(classical_expert("Blur", cfg));
    REQUIRE(wiener);
    CHECK(wiener->sigma() == doctest::Approx(1.75));
    const auto inv = std::dynamic_pointer_cast<const InverseExposureExpert>(classical_expert("Overexposure", cfg));
    REQUIRE(inv);
    CHECK(inv->gamma() == doctest::Approx(1.65));
    CHECK(classical_expert("Clean", cfg)->name() == "identity");
}

TEST_CASE("saving one expert leaves the others byte identical")
{
    TempDir dir;
    save_expert(*std::make_shared<WienerExpert>(1.5, 0.01), dir.path(), "h1");
    save_expert(UNetExpert("Noise", UNet(std::vector<int>{2, 4}, 1), "custom"), dir.path(), "h2");
    const auto noise_sum = file_checksum(dir.path() / "noise" / "expert.darn");
    const auto noise_manifest = file_checksum(dir.path() / "noise" / "manifest.json");
    save_expert(MedianExpert("SaltPepper"), dir.path(), "h3");
    save_expert(InverseExposureExpert(1.65, OverexposureMode::Power), dir.path(), "h4");
    CHECK(file_checksum(dir.path() / "noise" / "expert.darn") == noise_sum);
    CHECK(file_checksum(dir.path() / "noise" / "manifest.json") == noise_manifest);

    const ExpertRegistry reg = load_expert_registry(dir.path());
    CHECK(reg.labels().size() == 5);
    CHECK(reg.at("Noise").name() == "unet-custom");
    CHECK(read_manifest(dir.path() / "noise").config_hash == "h2");
    const auto inv = std::dynamic_pointer_cast<const InverseExposureExpert>(reg.shared("Overexposure"));
    REQUIRE(inv);
    CHECK(inv->mode() == OverexposureMode::Power);
    CHECK(expert_dir_name("SaltPepper") == "saltpepper");

    std::ofstream(dir.path() / "noise" / "manifest.json") << "{ not json";
    CHECK_THROWS_AS(load_expert(dir.path() / "noise"), FormatError);
}

TEST_CASE("expert training validates its inputs")
{
    Rng rng(1);
    ExpertTrainConfig cfg;
    cfg.profile = UNetProfile::tiny();
    const std::vector<Image> small{Image(20, 20, 0.5)};
    CHECK_THROWS_AS(train_expert("Clean", small, cfg, rng), InvalidArgument);
    CHECK_THROWS_AS(train_expert("Noise", std::vector<Image>{}, cfg, rng), DataError);
    CHECK_THROWS_AS(train_expert("Noise", small, cfg, rng), DataError);
    CHECK_THROWS_AS(train_expert("Fog", small, cfg, rng), InvalidArgument);
}

TEST_CASE("a short expert run returns the best validation state")
{
    Rng data_rng(5);
    std::vector<Image> images;
    for (int i = 0; i < 4; ++i)
        images.push_back(band_limited(40, 40));
    ExpertTrainConfig cfg;
    cfg.profile = {"micro", {4, 8}};
    cfg.crop_size = 16;
    cfg.crops_per_image = 4;
    cfg.schedule.batch_size = 4;
    cfg.schedule.max_epochs = 3;
    Rng rng(7);
    const TrainedExpert a = train_expert("Noise", images, cfg, rng);
    CHECK(a.report.epochs.size() == 3);
    CHECK(a.report.train_images + a.report.validation_images == 4);
    CHECK(a.report.best_epoch >= 1);
    CHECK(a.expert->handles() == "Noise");
    Rng rng2(7);
    const TrainedExpert b = train_expert("Noise", images, cfg, rng2);
    CHECK(a.expert->network().state() == b.expert->network().state());
}
