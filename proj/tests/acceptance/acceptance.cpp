// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: darnet_acceptance [criterion...]   (no arguments runs all)
// Exit status: 0 all passed, 1 a criterion failed, 77 a criterion is blocked
// on missing data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "darnet/calibration.hpp"
#include "darnet/checkpoint.hpp"
#include "darnet/classifier.hpp"
#include "darnet/error.hpp"
#include "darnet/expert_training.hpp"
#include "darnet/experts.hpp"
#include "darnet/metrics.hpp"
#include "darnet/parallel.hpp"
#include "darnet/pipeline.hpp"
#include "darnet/report.hpp"
#include "darnet/router_training.hpp"
#include "gradcheck.hpp"
#include "metric_oracle.hpp"
#include "temp_dir.hpp"

using namespace darnet;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Blocked };

constexpr int kBlockedExit = 77;
constexpr std::uint64_t kSeed = 20240611;

// Collects sub-checks of one criterion and prints them as they are made.
class Verdict {
public:
    void check(bool ok, const std::string& what)
    {
        std::cout << "  [" << (ok ? "ok" : "FAILED") << "] " << what << "\n";
        ok_ = ok_ && ok;
    }
    void note(const std::string& what) { std::cout << "  " << what << "\n"; }
    Status status() const { return ok_ ? Status::Pass : Status::Fail; }

private:
    bool ok_ = true;
};

std::string fmt(const char* pattern, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::string fixed(double v, int decimals = 3)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<NamedImage> fixture_photos()
{
    std::vector<NamedImage> photos = load_image_folder(DARNET_FIXTURE_DIR);
    if (photos.size() < 20)
        throw DataError("expected 20 fixture photos in " + std::string(DARNET_FIXTURE_DIR));
    return photos;
}

std::vector<Image> images_of(std::span<const NamedImage> named)
{
    std::vector<Image> out;
    for (const auto& n : named)
        out.push_back(n.image);
    return out;
}

Image random_image(int h, int w, Rng& rng)
{
    std::vector<double> v(static_cast<std::size_t>(h) * w * 3);
    for (auto& x : v)
        x = rng.uniform();
    return Image(h, w, std::move(v));
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

std::string read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> checksum for every file below root.
std::map<std::string, std::uint64_t> tree_checksums(const fs::path& root)
{
    std::map<std::string, std::uint64_t> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).generic_string()] = file_checksum(e.path());
    return out;
}

// Pooled test accuracy over a set of classes (equal test counts per class).
double pooled_accuracy(const std::map<std::string, double>& per_class, std::span<const std::string> classes)
{
    double sum = 0;
    for (const auto& c : classes)
        sum += per_class.at(c);
    return 100.0 * sum / static_cast<double>(classes.size());
}

// ---------------------------------------------------------------- calibration

Status calibration()
{
    Verdict v;
    const char* dir = std::getenv("DAR_BSD68_DIR");
    if (!dir || !fs::is_directory(dir)) {
        v.note("DAR_BSD68_DIR is not set to the BSD68 clean folder; reference numbers cannot be checked.");
        const auto photos = fixture_photos();
        const auto start = std::chrono::steady_clock::now();
        const CalibrationResult proxy = calibrate_degradations(photos, kSeed, resolve_threads(std::nullopt));
        v.note("fixture-photo proxy (informational, " + fixed(seconds_since(start), 1) + " s):");
        std::istringstream md(calibration_markdown(proxy));
        for (std::string line; std::getline(md, line);)
            v.note("  " + line);
        return Status::Blocked;
    }
    const auto images = load_image_folder(dir);
    v.check(images.size() == 68, "BSD68 folder holds 68 images (found " + std::to_string(images.size()) + ")");
    const auto start = std::chrono::steady_clock::now();
    const CalibrationResult result = calibrate_degradations(images, kSeed, resolve_threads(std::nullopt));
    const double secs = seconds_since(start);
    for (const auto& row : result.rows) {
        const auto& ref = row.reference;
        std::string what = ref.label + " " + fixed(ref.level, 2) + (row.mode.empty() ? "" : " (" + row.mode + ")") +
                           ": PSNR " + fixed(row.measured.psnr, 2) + " vs " + fixed(ref.metrics.psnr, 2) + " +/- " +
                           fixed(ref.psnr_tolerance, 1);
        if (ref.ssim_tolerance > 0)
            what += ", SSIM " + fixed(row.measured.ssim) + " vs " + fixed(ref.metrics.ssim) + " +/- " +
                    fixed(ref.ssim_tolerance, 2);
        const bool selected = row.mode.empty() || row.mode == to_string(result.closest_mode);
        if (selected)
            v.check(row.within_tolerance(), what);
        else
            v.note("candidate " + what);
    }
    v.note("closest overexposure operator: " + to_string(result.closest_mode));
    v.check(result.closest_mode == DegradationConfig{}.overexposure_mode,
            "default overexposure operator is the closer candidate");
    v.check(secs < 120.0, "runtime " + fixed(secs, 1) + " s < 120 s");
    return v.status();
}

// ---------------------------------------------------------- metric identities

Status metric_identities()
{
    Verdict v;
    const Image a(16, 16, 0.5);
    const Image b(16, 16, 0.6);
    const double p = psnr(a, b);
    v.check(std::abs(p - 20.0) <= 1e-12, "PSNR of a constant 0.1 offset = " + fmt("%.15f", p) + " dB");

    Rng rng(kSeed);
    const Image x = random_image(48, 40, rng);
    const double self = ssim(x, x);
    v.check(std::abs(self - 1.0) <= 1e-9, "ssim(I, I) = " + fmt("%.15f", self));

    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        const Image u = random_image(32, 32, rng);
        const double amount = rng.uniform(0.0, 0.5);
        std::vector<double> perturbed(u.values().begin(), u.values().end());
        for (auto& s : perturbed)
            s += amount * (rng.uniform() - 0.5);
        const Image w(32, 32, std::move(perturbed));
        worst = std::max(worst, std::abs(ssim(u, w) - testing::ssim_oracle(u, w)));
    }
    v.check(worst <= 1e-6, "ssim vs direct-window oracle on 50 random 32x32 pairs: max |diff| = " + fmt("%.3e", worst));
    return v.status();
}

// -------------------------------------------------------------- gradient suite

Status gradient_suite()
{
    Verdict v;
    constexpr int kShapes = 24;
    const auto start = std::chrono::steady_clock::now();
    const auto results = testing::run_gradient_suite(kSeed, kShapes);
    const double secs = seconds_since(start);
    for (const auto& r : results)
        v.check(r.max_rel_error < 1e-3,
                r.what + ": max relative error " + fmt("%.2e", r.max_rel_error) + " over " + std::to_string(kShapes) +
                    " shapes");
    v.check(secs < 60.0, "runtime " + fixed(secs, 1) + " s < 60 s");
    return v.status();
}

// ---------------------------------------------------------------- desk expert

Status desk_expert()
{
    Verdict v;
    const auto photos = fixture_photos();
    const std::span<const NamedImage> all(photos);
    const auto train = images_of(all.first(16));
    const auto held_out = all.subspan(16, 4);

    ExpertTrainConfig cfg;
    cfg.profile = UNetProfile::tiny();
    cfg.crop_size = 48;
    cfg.crops_per_image = 40;
    cfg.validation_crops_per_image = 8;
    cfg.schedule.seed = kSeed;
    cfg.schedule.batch_size = 16;
    cfg.schedule.lr = 2e-3;
    cfg.schedule.max_epochs = 60;
    cfg.schedule.time_budget_seconds = 20 * 60;
    Rng rng(kSeed);
    const auto start = std::chrono::steady_clock::now();
    const TrainedExpert trained = train_expert(labels::kNoise, train, cfg, rng);
    const double train_secs = seconds_since(start);
    v.note("tiny noise expert: " + std::to_string(trained.report.epochs.size()) + " epochs, best epoch " +
           std::to_string(trained.report.best_epoch) + ", best validation loss " +
           fixed(trained.report.best_validation_loss, 4) + ", " + fixed(train_secs, 0) + " s");

    double corrupted = 0, restored = 0;
    const BenchmarkTask task{std::string(labels::kNoise), 25.0};
    for (const auto& item : held_out) {
        const Image noisy = corrupt(item.image, item.name, task, kSeed);
        const double pc = psnr(noisy, item.image);
        const double pr = psnr(trained.expert->restore(noisy), item.image);
        v.note(item.name + ": corrupted " + fixed(pc, 2) + " dB, restored " + fixed(pr, 2) + " dB");
        corrupted += pc;
        restored += pr;
    }
    corrupted /= static_cast<double>(held_out.size());
    restored /= static_cast<double>(held_out.size());
    const double total_secs = seconds_since(start);
    v.check(restored >= corrupted + 2.0, "held-out sigma 25: restored " + fixed(restored, 2) + " dB >= corrupted " +
                                             fixed(corrupted, 2) + " dB + 2.0");
    v.check(total_secs <= 30 * 60, "runtime " + fixed(total_secs, 0) + " s <= 1800 s");

    // Overfit one fixed batch.
    Rng batch_rng(kSeed + 1);
    std::vector<Image> clean_crops, noisy_crops;
    for (int i = 0; i < 4; ++i) {
        const Image c = random_crop(photos[static_cast<std::size_t>(i)].image, 32, batch_rng);
        clean_crops.push_back(c);
        noisy_crops.push_back(add_gaussian_noise(c, 25.0, batch_rng));
    }
    UNet net(UNetProfile::tiny().widths, kSeed);
    const auto history =
        overfit_batch(net, images_to_tensor(noisy_crops), images_to_tensor(clean_crops), 200, 2e-3, cfg.loss_alpha);
    v.check(history.back() < 0.1 * history.front(), "overfit one batch: loss " + fixed(history.front(), 4) + " -> " +
                                                         fixed(history.back(), 4) + " after 200 steps (< 10%)");

    // Classical experts.
    const Image scene = band_limited(64, 80);
    const double wiener_err = interior_max_error(wiener_deblur(gaussian_blur(scene, 1.5), 1.5, 1e-10), scene, 8);
    v.check(wiener_err <= 1e-2, "Wiener left inverse: interior max error " + fmt("%.2e", wiener_err) + " <= 1e-2");

    const Image smooth = random_image(40, 40, batch_rng);
    const Image over = overexpose(smooth, 1.7, OverexposureMode::Power);
    const Image back = inverse_gamma_expert(over, 1.7);
    double gamma_err = 0;
    std::size_t unclipped = 0;
    for (std::size_t i = 0; i < smooth.size(); ++i)
        if (over.values()[i] < 1.0) {
            ++unclipped;
            gamma_err = std::max(gamma_err, std::abs(back.values()[i] - smooth.values()[i]));
        }
    v.check(unclipped > 0 && gamma_err <= 1e-6, "inverse gamma on " + std::to_string(unclipped) +
                                                    " unclipped pixels: max error " + fmt("%.2e", gamma_err));
    return v.status();
}

// ---------------------------------------------------------- continual routing

struct CurriculumRun {
    std::vector<std::map<std::string, double>> test_accuracy; // per phase
    double seconds = 0.0;
};

ClassifierArch desk_arch()
{
    ClassifierArch arch;
    arch.input_size = 48;
    arch.widths = {24, 48, 96, 192};
    return arch;
}

ClassifierTrainConfig desk_router_config(bool replay)
{
    ClassifierTrainConfig cfg;
    cfg.replay = replay;
    cfg.schedule.seed = kSeed;
    cfg.replay_mix = ReplayMix::Balanced;
    cfg.schedule.batch_size = 16;
    cfg.schedule.lr = 1e-3;
    cfg.schedule.max_epochs = 100;
    cfg.schedule.plateau_patience = 5;
    cfg.schedule.early_stop = 15;
    return cfg;
}

CurriculumRun run_desk_curriculum(const ClassifierDataset& data, const std::vector<std::vector<std::string>>& phases,
                                  bool replay)
{
    const auto start = std::chrono::steady_clock::now();
    const ClassifierTrainConfig cfg = desk_router_config(replay);
    const CurriculumResult result = run_curriculum(phases, data, cfg, desk_arch());
    CurriculumRun run;
    for (const auto& model : result.phase_models)
        run.test_accuracy.push_back(per_class_accuracy(model, data, Split::Test, kSeed, cfg.degradations));
    run.seconds = seconds_since(start);
    return run;
}

Status continual_routing()
{
    Verdict v;
    const auto photos = fixture_photos();
    const auto pool = images_of(photos);
    const auto phases = parse_phase_spec("clean,noise|blur|overexposure");
    std::vector<std::string> classes;
    for (const auto& p : phases)
        classes.insert(classes.end(), p.begin(), p.end());
    const ClassifierDataset data = make_classifier_dataset(pool, classes, 200, desk_arch().input_size, kSeed);

    const auto start = std::chrono::steady_clock::now();
    const CurriculumRun with = run_desk_curriculum(data, phases, true);
    const CurriculumRun without = run_desk_curriculum(data, phases, false);
    const double secs = seconds_since(start);

    auto describe = [&](const CurriculumRun& run, const char* name) {
        for (std::size_t p = 0; p < run.test_accuracy.size(); ++p) {
            std::string line = std::string(name) + " after phase " + std::to_string(p + 1) + ":";
            for (const auto& [label, acc] : run.test_accuracy[p])
                line += " " + label + " " + fixed(100 * acc, 1) + "%";
            v.note(line);
        }
    };
    describe(with, "replay");
    describe(without, "no replay");

    for (const auto& c : classes) {
        const double acc = 100 * with.test_accuracy.back().at(c);
        v.check(acc >= 90.0, "final " + c + " accuracy " + fixed(acc, 1) + "% >= 90%");
    }
    const auto& first = phases.front();
    const double drop_with =
        pooled_accuracy(with.test_accuracy.front(), first) - pooled_accuracy(with.test_accuracy.back(), first);
    const double drop_without =
        pooled_accuracy(without.test_accuracy.front(), first) - pooled_accuracy(without.test_accuracy.back(), first);
    v.check(drop_with <= 5.0, "phase-1 class accuracy drop with replay " + fixed(drop_with, 1) + " points <= 5");
    v.check(drop_without > drop_with, "drop without replay " + fixed(drop_without, 1) + " points > drop with replay");
    v.check(secs < 20 * 60, "runtime " + fixed(secs, 0) + " s < 1200 s");
    return v.status();
}

// ------------------------------------------------------------------ decoupling

ClassifierArch small_arch()
{
    ClassifierArch arch;
    arch.input_size = 32;
    arch.widths = {8, 16, 32};
    return arch;
}

ClassifierTrainConfig small_router_config()
{
    ClassifierTrainConfig cfg;
    cfg.schedule.seed = kSeed;
    cfg.schedule.batch_size = 32;
    cfg.schedule.lr = 3e-3;
    cfg.schedule.max_epochs = 12;
    return cfg;
}

ExpertTrainConfig small_expert_config()
{
    ExpertTrainConfig cfg;
    cfg.profile = UNetProfile::tiny();
    cfg.crop_size = 32;
    cfg.crops_per_image = 4;
    cfg.validation_crops_per_image = 2;
    cfg.schedule.seed = kSeed;
    cfg.schedule.batch_size = 8;
    cfg.schedule.max_epochs = 2;
    cfg.schedule.max_steps_per_epoch = 4;
    return cfg;
}

// Small images keep full-image evaluation cheap.
std::vector<NamedImage> thumbnails(std::span<const NamedImage> photos, std::size_t count)
{
    std::vector<NamedImage> out;
    for (std::size_t i = 0; i < count && i < photos.size(); ++i)
        out.push_back({photos[i].name, fit_square(photos[i].image, 64)});
    return out;
}

Status decoupling()
{
    Verdict v;
    const auto photos = fixture_photos();
    const auto pool = images_of(photos);
    const auto phases = parse_phase_spec("clean,noise|blur|overexposure");
    const std::vector<std::string> classes{"Clean", "Noise", "Blur", "Overexposure", "SaltPepper"};
    const ClassifierDataset data = make_classifier_dataset(pool, classes, 40, small_arch().input_size, kSeed);
    const ClassifierTrainConfig router_cfg = small_router_config();
    CurriculumResult curriculum = run_curriculum(phases, data, router_cfg, small_arch());

    TempDir dir;
    const fs::path root = dir.path() / "experts";
    Rng rng(kSeed);
    const ExpertTrainConfig expert_cfg = small_expert_config();
    save_expert(*train_expert(labels::kNoise, pool, expert_cfg, rng).expert, root);
    save_expert(*classical_expert(labels::kBlur), root);
    save_expert(*classical_expert(labels::kOverexposure), root);
    const ExpertRegistry registry = load_expert_registry(root);
    const ClassifierModel& router = curriculum.phase_models.back();
    v.check(registry.is_total_over(router.labels()), "expert registry covers every router label");

    // (a) one expert call per restored image.
    const auto images = thumbnails(photos, 8);
    const auto tasks = parse_tasks("noise:25,blur:1.5,overexposure:1.7,clean");
    EvaluationOptions options;
    options.seed = kSeed;
    options.threads = 1;
    options.expert_path = false;
    const BenchmarkReport report = evaluate_benchmark(router, registry, images, tasks, options);
    const std::size_t restorations = report.images * report.rows.size();
    v.check(report.expert_calls == restorations,
            "benchmark: " + std::to_string(report.expert_calls) + " expert calls for " +
                std::to_string(restorations) + " restored images");
    bool single = true;
    for (const auto& item : images) {
        const std::size_t before = registry.total_calls();
        restore(router, registry, item.image);
        single = single && registry.total_calls() == before + 1;
    }
    v.check(single, "restore(): every image triggers exactly one expert call");

    // (b) a fifth class touches nothing that exists.
    const auto before = tree_checksums(root);
    ClassifierModel extended = extend_head(router, labels::kSaltPepper);
    const std::vector<std::string> new_phase{std::string(labels::kSaltPepper)};
    train_phase(extended, 4, new_phase, data, curriculum.buffer, router_cfg);
    save_expert(*train_expert(labels::kSaltPepper, pool, expert_cfg, rng).expert, root);
    const auto after = tree_checksums(root);
    bool untouched = true;
    for (const auto& [file, sum] : before)
        untouched = untouched && after.count(file) && after.at(file) == sum;
    std::size_t added = 0;
    for (const auto& [file, sum] : after)
        if (!before.count(file)) {
            ++added;
            untouched = untouched && file.rfind(expert_dir_name(labels::kSaltPepper) + "/", 0) == 0;
        }
    v.check(untouched, std::to_string(before.size()) + " existing expert files byte-identical; " +
                           std::to_string(added) + " new files, all under " +
                           expert_dir_name(labels::kSaltPepper) + "/");
    const ExpertRegistry extended_registry = load_expert_registry(root);
    v.check(extended.num_classes() == 5 && extended_registry.is_total_over(extended.labels()),
            "extend_head + train_phase + train_expert yield a 5-class router with a total registry");
    const auto sp = parse_tasks("saltpepper:0.06");
    const BenchmarkReport sp_report = evaluate_benchmark(extended, extended_registry, images, sp, options);
    v.note("SaltPepper routing accuracy of the extended router: " +
           fixed(100 * sp_report.rows.front().routing_accuracy, 1) + "%");

    // (c) expert-path metrics frozen after introduction.
    std::vector<ExpertRegistry> stage_registries(4);
    const std::vector<std::vector<std::string>> stage_labels{
        {"Noise"}, {"Noise", "Blur"}, {"Noise", "Blur", "Overexposure"}, {"Noise", "Blur", "Overexposure", "SaltPepper"}};
    for (std::size_t s = 0; s < stage_labels.size(); ++s)
        for (const auto& label : stage_labels[s])
            stage_registries[s].set(label, extended_registry.shared(label));
    std::vector<PhaseStage> stages;
    for (std::size_t s = 0; s < 3; ++s)
        stages.push_back({"phase" + std::to_string(s + 1), &curriculum.phase_models[s], &stage_registries[s]});
    stages.push_back({"phase4", &extended, &stage_registries[3]});
    const auto all_tasks = parse_tasks("noise:25,blur:1.5,overexposure:1.7,saltpepper:0.06,clean");
    EvaluationOptions phase_options = options;
    phase_options.expert_path = true;
    const PhaseTable table = phase_evaluation(stages, images, all_tasks, phase_options, 1e-6);
    std::istringstream md(phase_table_markdown(table));
    for (std::string line; std::getline(md, line);)
        v.note(line);
    v.check(table.frozen && table.max_frozen_deviation <= 1e-6,
            "expert-path metrics frozen after introduction: max deviation " + fmt("%.2e", table.max_frozen_deviation));
    return v.status();
}

// ----------------------------------------------------------------- determinism

Status determinism()
{
    Verdict v;
    const auto photos = fixture_photos();
    const auto pool = images_of(photos);
    const auto phases = parse_phase_spec("clean,noise|blur|overexposure");
    std::vector<std::string> classes{"Clean", "Noise", "Blur", "Overexposure"};
    const ClassifierDataset data = make_classifier_dataset(pool, classes, 40, small_arch().input_size, kSeed);
    ClassifierTrainConfig cfg = small_router_config();
    cfg.schedule.max_epochs = 4;
    const CurriculumResult curriculum = run_curriculum(phases, data, cfg, small_arch());

    TempDir dir;
    const fs::path ckpt = dir.path() / "router.darn";
    const ClassifierModel& router = curriculum.phase_models.back();
    router.save(ckpt);
    const ClassifierModel reloaded = ClassifierModel::load(ckpt);
    v.check(reloaded.state() == router.state() && reloaded.labels() == router.labels(),
            "router checkpoint round trip is bit-exact");
    const fs::path ckpt2 = dir.path() / "router2.darn";
    reloaded.save(ckpt2);
    v.check(read_bytes(ckpt) == read_bytes(ckpt2), "re-saving a loaded router reproduces the file byte for byte");

    Rng rng(kSeed);
    const fs::path experts = dir.path() / "experts";
    const auto noise = train_expert(labels::kNoise, pool, small_expert_config(), rng).expert;
    save_expert(*noise, experts);
    save_expert(*classical_expert(labels::kBlur), experts);
    save_expert(*classical_expert(labels::kOverexposure), experts);
    const auto loaded = std::dynamic_pointer_cast<const UNetExpert>(load_expert(experts / "noise"));
    v.check(loaded && loaded->network().state() == noise->network().state(),
            "expert checkpoint round trip is bit-exact");

    const fs::path clean = dir.path() / "clean";
    fs::create_directories(clean);
    for (const auto& item : thumbnails(photos, 10))
        save_image(item.image, clean / (item.name + ".png"));

    auto evaluate = [&](const std::string& out, const std::string& threads) {
        std::ostringstream so, se;
        const int code = cli::run({"evaluate", "--clean", clean.string(), "--router", ckpt.string(), "--experts",
                                   experts.string(), "--report", (dir.path() / out).string(), "--seed", "7",
                                   "--threads", threads},
                                  so, se);
        if (code != 0)
            v.note("evaluate failed: " + se.str());
        return code;
    };
    const int first = evaluate("a.csv", "1");
    const int second = evaluate("b.csv", "1");
    const int third = evaluate("c.csv", std::to_string(std::max(2, resolve_threads(std::nullopt))));
    v.check(first == 0 && second == 0 && third == 0, "three evaluate runs succeed");
    const std::string a_csv = read_bytes(dir.path() / "a.csv");
    v.check(!a_csv.empty() && a_csv == read_bytes(dir.path() / "b.csv") &&
                read_bytes(dir.path() / "a.md") == read_bytes(dir.path() / "b.md"),
            "two evaluate runs with the same seed write byte-identical reports");
    v.check(a_csv == read_bytes(dir.path() / "c.csv"), "the report does not depend on the thread count");
    return v.status();
}

struct Criterion {
    const char* name;
    std::function<Status()> run;
};

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> all{
        {"calibration", calibration},       {"metric_identities", metric_identities},
        {"gradient_suite", gradient_suite}, {"desk_expert", desk_expert},
        {"continual_routing", continual_routing}, {"decoupling", decoupling},
        {"determinism", determinism},
    };
    return all;
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.empty())
        for (const auto& c : criteria())
            wanted.emplace_back(c.name);

    bool failed = false, blocked = false;
    for (const auto& name : wanted) {
        const auto it = std::find_if(criteria().begin(), criteria().end(),
                                     [&](const Criterion& c) { return name == c.name; });
        if (it == criteria().end()) {
            std::cerr << "unknown criterion: " << name << "\n";
            return 2;
        }
        std::cout << "== " << name << "\n" << std::flush;
        const auto start = std::chrono::steady_clock::now();
        Status status = Status::Fail;
        try {
            status = it->run();
        } catch (const std::exception& e) {
            std::cout << "  exception: " << e.what() << "\n";
        }
        std::cout << (status == Status::Pass ? "PASS " : "FAIL ") << name << " ("
                  << fixed(seconds_since(start), 1) << " s)" << (status == Status::Blocked ? " blocked: input data missing" : "")
                  << "\n"
                  << std::flush;
        failed = failed || status == Status::Fail;
        blocked = blocked || status == Status::Blocked;
    }
    if (failed)
        return 1;
    return blocked ? kBlockedExit : 0;
}
