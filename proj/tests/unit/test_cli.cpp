#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cli.hpp"
#include "darnet/checkpoint.hpp"
#include "darnet/classifier.hpp"
#include "darnet/config.hpp"
#include "darnet/error.hpp"
#include "darnet/experts.hpp"
#include "darnet/image.hpp"
#include "temp_dir.hpp"

using namespace darnet;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run darnet_cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_images(const fs::path& dir, int count, int side = 40)
{
    fs::create_directories(dir);
    for (int k = 0; k < count; ++k) {
        std::vector<double> v;
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                for (int c = 0; c < 3; ++c)
                    v.push_back(0.5 + 0.3 * std::sin(0.3 * x + k + c) * std::cos(0.2 * y));
        save_image(Image(side, side, v), dir / ("p" + std::to_string(k) + ".png"));
    }
}

} // namespace

TEST_CASE("usage errors exit with 2")
{
    CHECK(darnet_cli({}).code == cli::kUsage);
    CHECK(darnet_cli({"bogus"}).code == cli::kUsage);
    CHECK(darnet_cli({"train-expert", "--data", "x", "--out", "y"}).code == cli::kUsage);
    CHECK(darnet_cli({"--help"}).code == cli::kOk);
    TempDir dir;
    write_images(dir.path() / "in", 2);
    const Run r = darnet_cli({"synth", "--in", (dir.path() / "in").string(), "--task", "noise", "--level", "-1",
                              "--out", (dir.path() / "out").string()});
    CHECK(r.code == cli::kUsage);
    CHECK(darnet_cli({"train-expert", "--task", "clean", "--kind", "classical", "--out", dir.path().string()}).code ==
          cli::kUsage);
    CHECK(darnet_cli({"train-expert", "--task", "fog", "--kind", "classical", "--out", dir.path().string()}).code ==
          cli::kUsage);
}

TEST_CASE("synth writes a manifest and is byte-identical under a seed")
{
    TempDir dir;
    write_images(dir.path() / "in", 3);
    auto synth = [&](const std::string& out, const std::string& seed) {
        return darnet_cli({"synth", "--in", (dir.path() / "in").string(), "--task", "noise", "--level", "25", "--seed",
                           seed, "--out", (dir.path() / out).string()});
    };
    REQUIRE(synth("a", "5").code == 0);
    REQUIRE(synth("b", "5").code == 0);
    REQUIRE(synth("c", "6").code == 0);
    const std::string manifest = slurp(dir.path() / "a" / "manifest.csv");
    CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 4);
    for (int k = 0; k < 3; ++k) {
        const std::string name = "p" + std::to_string(k) + ".png";
        CHECK(slurp(dir.path() / "a" / name) == slurp(dir.path() / "b" / name));
        CHECK(slurp(dir.path() / "a" / name) != slurp(dir.path() / "c" / name));
    }
    const Run warn = darnet_cli({"synth", "--in", (dir.path() / "in").string(), "--task", "blur", "--level", "9",
                                 "--out", (dir.path() / "d").string()});
    CHECK(warn.code == 0);
    CHECK(warn.err.find("outside") != std::string::npos);
    CHECK(darnet_cli({"synth", "--in", (dir.path() / "nothing").string(), "--task", "noise", "--level", "25",
                      "--out", (dir.path() / "e").string()})
              .code == cli::kDataError);
}

TEST_CASE("config precedence is cli over file over default")
{
    TempDir dir;
    std::ofstream(dir.path() / "c.txt") << "# comment\nlr = 0.01\nseed = 4 # inline\nprofile = tiny\n";
    RunConfig cfg;
    CHECK(cfg.get("lr") == "0.001");
    cfg.load_file(dir.path() / "c.txt");
    CHECK(cfg.get_double("lr") == 0.01);
    cfg.set("seed", "9", ConfigSource::Cli);
    cfg.parse("seed = 1\n", ConfigSource::File);
    CHECK(cfg.get_u64("seed") == 9);
    const std::string dump = cfg.dump();
    CHECK(dump.find("lr = 0.01") != std::string::npos);
    CHECK(dump.find("# published, file") != std::string::npos);
    CHECK(dump.find("# decision, cli") != std::string::npos);
    CHECK_THROWS_AS(cfg.parse("nonsense = 3\n", ConfigSource::File), InvalidArgument);
    CHECK_THROWS_AS(cfg.parse("just words\n", ConfigSource::File), InvalidArgument);
    CHECK(cfg.expert_config().profile.name == "tiny");
    CHECK(RunConfig().classifier_config().schedule.batch_size == 256);
    CHECK(RunConfig().expert_config().schedule.batch_size == 128);
    CHECK(RunConfig().classifier_config().replay_mix == ReplayMix::Fixed);
    cfg.set("replay_mix", "balanced", ConfigSource::Cli);
    CHECK(cfg.classifier_config().replay_mix == ReplayMix::Balanced);
    RunConfig other;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("train-expert touches only its own directory")
{
    TempDir dir;
    write_images(dir.path() / "data", 3, 24);
    const fs::path experts = dir.path() / "experts";
    const Run noise = darnet_cli({"train-expert", "--task", "noise", "--data", (dir.path() / "data").string(),
                                  "--profile", "tiny", "--out", experts.string(), "--set", "crop_size=16", "--set",
                                  "crops_per_image=2", "--set", "expert_batch_size=2", "--set", "max_epochs=1"});
    REQUIRE(noise.code == 0);
    const auto sum = file_checksum(experts / "noise" / "expert.darn");
    const auto time = fs::last_write_time(experts / "noise" / "expert.darn");
    REQUIRE(darnet_cli({"train-expert", "--task", "blur", "--kind", "classical", "--out", experts.string()}).code == 0);
    CHECK(file_checksum(experts / "noise" / "expert.darn") == sum);
    CHECK(fs::last_write_time(experts / "noise" / "expert.darn") == time);
    CHECK(fs::exists(experts / "noise" / "training.csv"));
    CHECK(fs::exists(experts / "blur" / "manifest.json"));
}

TEST_CASE("restore and evaluate with checkpoints on disk")
{
    TempDir dir;
    write_images(dir.path() / "clean", 2, 32);
    const fs::path experts = dir.path() / "experts";
    for (const char* task : {"noise", "blur"})
        REQUIRE(darnet_cli({"train-expert", "--task", task, "--kind", "classical", "--out", experts.string()}).code ==
                0);
    ClassifierArch arch;
    arch.widths = {4, 8};
    arch.input_size = 16;
    const ClassifierModel router(LabelRegistry{std::vector<std::string>{"Clean", "Noise", "Blur"}}, arch, 1);
    router.save(dir.path() / "router.darn");

    const fs::path input = dir.path() / "clean" / "p0.png";
    const Run r = darnet_cli({"restore", "--image", input.string(), "--router", (dir.path() / "router.darn").string(),
                              "--experts", experts.string(), "--out", (dir.path() / "out.png").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("label: Clean") != std::string::npos);
    CHECK(load_image(dir.path() / "out.png") == load_image(input));

    auto evaluate = [&](const std::string& report) {
        return darnet_cli({"evaluate", "--clean", (dir.path() / "clean").string(), "--router",
                           (dir.path() / "router.darn").string(), "--experts", experts.string(), "--report",
                           (dir.path() / report).string(), "--seed", "3", "--tasks", "noise:25,blur:1.5"});
    };
    REQUIRE(evaluate("a.csv").code == 0);
    REQUIRE(evaluate("b.csv").code == 0);
    CHECK(slurp(dir.path() / "a.csv") == slurp(dir.path() / "b.csv"));
    CHECK(slurp(dir.path() / "a.md") == slurp(dir.path() / "b.md"));
    CHECK(fs::exists(dir.path() / "a.config.txt"));

    fs::create_directories(dir.path() / "empty");
    CHECK(darnet_cli({"evaluate", "--clean", (dir.path() / "empty").string(), "--router",
                      (dir.path() / "router.darn").string(), "--experts", experts.string(), "--report",
                      (dir.path() / "c.csv").string()})
              .code == cli::kDataError);

    std::string bytes = slurp(dir.path() / "router.darn");
    bytes[1] = 'Z';
    std::ofstream(dir.path() / "router.darn", std::ios::binary) << bytes;
    const Run bad = darnet_cli({"restore", "--image", input.string(), "--router",
                                (dir.path() / "router.darn").string(), "--experts", experts.string(), "--out",
                                (dir.path() / "out2.png").string()});
    CHECK(bad.code == cli::kFormatError);
    CHECK(bad.err.find("magic") != std::string::npos);
}

TEST_CASE("train-classifier writes one checkpoint per phase and resumes")
{
    TempDir dir;
    write_images(dir.path() / "data", 3, 40);
    const std::vector<std::string> common{"--data",       (dir.path() / "data").string(),
                                          "--set",        "classifier_input=16",
                                          "--set",        "classifier_widths=4,8",
                                          "--set",        "classifier_per_class=10",
                                          "--set",        "batch_size=8",
                                          "--set",        "max_epochs=2",
                                          "--phases",     "clean,noise|blur|overexposure"};
    std::vector<std::string> args{"train-classifier", "--out", (dir.path() / "run" / "router.darn").string()};
    args.insert(args.end(), common.begin(), common.end());
    const Run r = darnet_cli(args);
    REQUIRE(r.code == 0);
    for (int p = 1; p <= 3; ++p)
        CHECK(fs::exists(dir.path() / "run" / ("router.phase" + std::to_string(p) + ".darn")));
    const std::string log = slurp(dir.path() / "run" / "router.accuracy.csv");
    CHECK(std::count(log.begin(), log.end(), '\n') == 1 + 3 * 2);
    CHECK(ClassifierModel::load(dir.path() / "run" / "router.darn").num_classes() == 4);

    std::vector<std::string> resume{"train-classifier", "--out", (dir.path() / "resumed" / "router.darn").string(),
                                    "--resume", (dir.path() / "run" / "router.phase2.darn").string()};
    resume.insert(resume.end(), common.begin(), common.end());
    const Run again = darnet_cli(resume);
    REQUIRE(again.code == 0);
    CHECK(!fs::exists(dir.path() / "resumed" / "router.phase1.darn"));
    CHECK(!fs::exists(dir.path() / "resumed" / "router.phase2.darn"));
    CHECK(fs::exists(dir.path() / "resumed" / "router.phase3.darn"));

    std::vector<std::string> bad{"train-classifier", "--out", (dir.path() / "x.darn").string()};
    bad.insert(bad.end(), common.begin(), common.end());
    bad.back() = "clean,noise|noise";
    CHECK(darnet_cli(bad).code == cli::kUsage);
}
