#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "darnet/calibration.hpp"
#include "darnet/checkpoint.hpp"
#include "darnet/classifier.hpp"
#include "darnet/config.hpp"
#include "darnet/error.hpp"
#include "darnet/expert_training.hpp"
#include "darnet/experts.hpp"
#include "darnet/parallel.hpp"
#include "darnet/pipeline.hpp"
#include "darnet/report.hpp"
#include "darnet/router_training.hpp"

namespace fs = std::filesystem;

namespace darnet::cli {

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config_file, "key = value settings file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "override one setting, KEY=VALUE (repeatable)");
    cmd->add_option("--seed", c.seed, "base seed");
    cmd->add_option("--threads", c.threads, "worker threads (default: DAR_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);
}

RunConfig build_config(const Common& c)
{
    RunConfig cfg;
    if (!c.config_file.empty())
        cfg.load_file(c.config_file);
    for (const auto& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("--set expects KEY=VALUE, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1), ConfigSource::Cli);
    }
    if (c.seed)
        cfg.set("seed", std::to_string(*c.seed), ConfigSource::Cli);
    if (c.threads)
        cfg.set("threads", std::to_string(*c.threads), ConfigSource::Cli);
    return cfg;
}

int threads_of(const RunConfig& cfg)
{
    const int n = cfg.get_int("threads");
    return resolve_threads(n > 0 ? std::optional<int>(n) : std::nullopt);
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write " + path.string());
    out << text;
}

fs::path sibling(const fs::path& path, const std::string& suffix)
{
    return path.parent_path() / (path.stem().string() + suffix);
}

std::vector<NamedImage> load_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw DataError("not a directory: " + dir.string());
    auto images = load_image_folder(dir);
    if (images.empty())
        throw DataError("no PNG images in " + dir.string());
    return images;
}

// ---- synth

struct SynthArgs {
    Common common;
    std::string in, task, out;
    double level = 0.0;
};

int synth(const SynthArgs& a, std::ostream& out, std::ostream& err)
{
    const RunConfig cfg = build_config(a.common);
    const DegradationConfig deg = cfg.degradations();
    const std::string label = canonical_label(a.task);
    const auto range = deg.range_for(label);
    if (!range)
        throw InvalidArgument("synth needs a degradation task, not " + label);
    if (!(a.level >= 0.0) || !std::isfinite(a.level))
        throw InvalidArgument("--level must be a non-negative number");
    if (!range->contains(a.level))
        err << "warning: level " << a.level << " is outside the " << label << " training range [" << range->min << ", "
            << range->max << "]\n";

    const auto images = load_dir(a.in);
    const std::uint64_t seed = cfg.get_u64("seed");
    const BenchmarkTask task{label, a.level};
    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    std::vector<std::string> rows(images.size());
    parallel_for(images.size(), threads_of(cfg), [&](std::size_t i) {
        const std::string file = images[i].name + ".png";
        save_image(corrupt(images[i].image, images[i].name, task, seed, deg), out_dir / file);
        rows[i] = file + "," + label + "," + level_string(a.level) + "," +
                  std::to_string(benchmark_item_seed(seed, images[i].name, task));
    });
    std::string manifest = "file,task,level,seed\n";
    for (const auto& r : rows)
        manifest += r + "\n";
    write_file(out_dir / "manifest.csv", manifest);
    write_file(out_dir / "config.txt", cfg.dump());
    out << "wrote " << images.size() << " corrupted images to " << out_dir.string() << "\n";
    return kOk;
}

// ---- train-classifier

struct TrainClassifierArgs {
    Common common;
    std::string phases, data, out, resume;
};

int train_classifier(const TrainClassifierArgs& a, std::ostream& out, std::ostream&)
{
    RunConfig cfg = build_config(a.common);
    if (!a.phases.empty())
        cfg.set("phases", a.phases, ConfigSource::Cli);
    cfg.set("data_dir", a.data, ConfigSource::Cli);
    const auto phases = parse_phase_spec(cfg.get("phases"));
    for (const auto& p : phases)
        for (const auto& l : p)
            (void)cfg.degradations().range_for(l);

    const auto named = load_dir(a.data);
    std::vector<Image> pool;
    for (const auto& n : named)
        pool.push_back(n.image);
    std::vector<std::string> classes;
    for (const auto& p : phases)
        classes.insert(classes.end(), p.begin(), p.end());

    const ClassifierTrainConfig train_cfg = cfg.classifier_config();
    const ClassifierArch arch = cfg.classifier_arch();
    const ClassifierDataset data = make_classifier_dataset(pool, classes, cfg.get_int("classifier_per_class"),
                                                           arch.input_size, train_cfg.schedule.seed);

    std::optional<std::pair<ClassifierModel, ReplayBuffer>> resume;
    if (!a.resume.empty()) {
        ClassifierModel model = ClassifierModel::load(a.resume);
        const fs::path replay_path = a.resume + ".replay";
        ReplayBuffer buffer = fs::exists(replay_path) ? load_replay_buffer(replay_path)
                                                      : ReplayBuffer(train_cfg.replay_capacity);
        resume.emplace(std::move(model), std::move(buffer));
    }

    const CurriculumResult result = run_curriculum(phases, data, train_cfg, arch, std::move(resume));
    if (result.phase_models.empty()) {
        out << "nothing to train: every phase is already covered by the resumed checkpoint\n";
        return kOk;
    }

    const fs::path ckpt(a.out);
    std::ostringstream log;
    log << "phase,epoch,train_loss,validation_loss,validation_accuracy,lr\n";
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        const PhaseReport& r = result.reports[i];
        for (const auto& e : r.epochs)
            log << e.phase << ',' << e.epoch << ',' << std::setprecision(9) << e.train_loss << ','
                << e.validation_loss << ',' << e.validation_accuracy << ',' << e.lr << '\n';
        const fs::path phase_ckpt = sibling(ckpt, ".phase" + std::to_string(r.phase) + ckpt.extension().string());
        if (phase_ckpt.has_parent_path())
            fs::create_directories(phase_ckpt.parent_path());
        result.phase_models[i].save(phase_ckpt);
        save_replay_buffer(phase_ckpt.string() + ".replay", result.phase_buffers[i]);
        const auto acc = per_class_accuracy(result.phase_models[i], data, Split::Test, train_cfg.schedule.seed,
                                            train_cfg.degradations);
        out << "phase " << r.phase << " (" << r.epochs.size() << " epochs, best " << r.best_epoch << ") -> "
            << phase_ckpt.string() << "\n";
        for (const auto& [label, v] : acc)
            out << "  test accuracy " << label << ": " << std::fixed << std::setprecision(2) << 100.0 * v << "%\n";
    }
    result.phase_models.back().save(ckpt);
    save_replay_buffer(ckpt.string() + ".replay", result.buffer);
    write_file(sibling(ckpt, ".accuracy.csv"), log.str());
    write_file(sibling(ckpt, ".config.txt"), cfg.dump());
    out << "final router -> " << ckpt.string() << "\n";
    return kOk;
}

// ---- train-expert

struct TrainExpertArgs {
    Common common;
    std::string task, data, profile, out, kind = "unet";
};

int train_expert_cmd(const TrainExpertArgs& a, std::ostream& out, std::ostream&)
{
    RunConfig cfg = build_config(a.common);
    if (!a.profile.empty())
        cfg.set("profile", a.profile, ConfigSource::Cli);
    const std::string label = canonical_label(a.task);
    if (label == labels::kClean)
        throw InvalidArgument("Clean is served by the identity expert and cannot be trained");
    (void)cfg.degradations().range_for(label);

    const fs::path root(a.out);
    std::shared_ptr<const Expert> expert;
    std::string log;
    if (a.kind == "classical") {
        expert = classical_expert(label, cfg.degradations());
    } else if (a.kind == "unet") {
        cfg.set("data_dir", a.data, ConfigSource::Cli);
        const auto named = load_dir(a.data);
        std::vector<Image> images;
        for (const auto& n : named)
            images.push_back(n.image);
        const ExpertTrainConfig train_cfg = cfg.expert_config();
        Rng rng(derive_seed(train_cfg.schedule.seed, hash_string(label)));
        const TrainedExpert trained = train_expert(label, images, train_cfg, rng);
        std::ostringstream os;
        os << "epoch,steps,train_loss,validation_loss,lr\n";
        for (const auto& e : trained.report.epochs)
            os << e.epoch << ',' << e.steps << ',' << std::setprecision(9) << e.train_loss << ',' << e.validation_loss
               << ',' << e.lr << '\n';
        log = os.str();
        out << label << " expert: " << trained.report.epochs.size() << " epochs, best " << trained.report.best_epoch
            << ", " << std::fixed << std::setprecision(1) << trained.report.seconds << " s\n";
        expert = trained.expert;
    } else {
        throw InvalidArgument("--kind must be unet or classical");
    }
    const fs::path dir = save_expert(*expert, root, cfg.hash());
    if (!log.empty())
        write_file(dir / "training.csv", log);
    write_file(dir / "config.txt", cfg.dump());
    out << "expert " << expert->name() << " for " << label << " -> " << dir.string() << "\n";
    return kOk;
}

// ---- restore

struct RestoreArgs {
    Common common;
    std::string image, router, experts, out;
};

int restore_cmd(const RestoreArgs& a, std::ostream& out, std::ostream&)
{
    const Image img = load_image(a.image);
    const ClassifierModel router = ClassifierModel::load(a.router);
    const ExpertRegistry registry = load_expert_registry(a.experts);
    if (!registry.is_total_over(router.labels()))
        throw DataError("expert directory " + a.experts + " does not cover every router label");
    const RestorationResult r = restore(router, registry, img);
    const fs::path out_path(a.out);
    if (out_path.has_parent_path())
        fs::create_directories(out_path.parent_path());
    save_image(r.restored, out_path);
    out << "label: " << r.predicted.name << "\nexpert: " << r.expert << "\n";
    return kOk;
}

// ---- evaluate

struct EvaluateArgs {
    Common common;
    std::string clean, router, experts, report, tasks = "noise:25,blur:1.5,overexposure:1.7,clean", dump;
};

int evaluate_cmd(const EvaluateArgs& a, std::ostream& out, std::ostream&)
{
    const RunConfig cfg = build_config(a.common);
    const auto tasks = parse_tasks(a.tasks);
    const auto images = load_dir(a.clean);
    const ClassifierModel router = ClassifierModel::load(a.router);
    const ExpertRegistry registry = load_expert_registry(a.experts);
    if (!registry.is_total_over(router.labels()))
        throw DataError("expert directory " + a.experts + " does not cover every router label");
    EvaluationOptions opts;
    opts.seed = cfg.get_u64("seed");
    opts.threads = threads_of(cfg);
    opts.degradations = cfg.degradations();
    if (!a.dump.empty())
        opts.dump_dir = a.dump;
    const BenchmarkReport report = evaluate_benchmark(router, registry, images, tasks, opts);
    write_report(report, a.report);
    write_file(sibling(a.report, ".config.txt"), cfg.dump());
    out << report_markdown(report);
    return kOk;
}

// ---- report (phase evaluation)

struct PhaseArgs {
    Common common;
    std::string clean, report, tasks = "noise:25,blur:1.5,overexposure:1.7,clean";
    std::vector<std::string> routers, experts;
};

int phase_report_cmd(const PhaseArgs& a, std::ostream& out, std::ostream&)
{
    if (a.routers.size() != a.experts.size())
        throw InvalidArgument("give one --experts directory per --router checkpoint");
    const RunConfig cfg = build_config(a.common);
    const auto tasks = parse_tasks(a.tasks);
    const auto images = load_dir(a.clean);
    std::vector<ClassifierModel> routers;
    std::vector<ExpertRegistry> registries;
    for (std::size_t i = 0; i < a.routers.size(); ++i) {
        if (!fs::exists(a.routers[i]))
            throw FormatError("missing phase checkpoint " + a.routers[i]);
        routers.push_back(ClassifierModel::load(a.routers[i]));
        registries.push_back(load_expert_registry(a.experts[i]));
    }
    std::vector<PhaseStage> stages;
    for (std::size_t i = 0; i < routers.size(); ++i)
        stages.push_back({"Phase" + std::to_string(i + 1), &routers[i], &registries[i]});
    EvaluationOptions opts;
    opts.seed = cfg.get_u64("seed");
    opts.threads = threads_of(cfg);
    opts.degradations = cfg.degradations();
    const PhaseTable table = phase_evaluation(stages, images, tasks, opts);
    write_phase_table(table, a.report);
    write_file(sibling(a.report, ".config.txt"), cfg.dump());
    out << phase_table_markdown(table);
    return table.frozen ? kOk : kFailure;
}

// ---- calibrate

struct CalibrateArgs {
    Common common;
    std::string clean, report;
};

int calibrate_cmd(const CalibrateArgs& a, std::ostream& out, std::ostream&)
{
    const RunConfig cfg = build_config(a.common);
    const auto images = load_dir(a.clean);
    const CalibrationResult result = calibrate_degradations(images, cfg.get_u64("seed"), threads_of(cfg));
    const std::string md = calibration_markdown(result);
    if (!a.report.empty())
        write_file(a.report, md);
    out << md;
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"darnet: degradation-aware routed image restoration", "darnet"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "darnet 0.1.0");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "write deterministically corrupted copies of a folder");
    add_common(synth_cmd, synth_args.common);
    synth_cmd->add_option("--in", synth_args.in, "folder of clean PNGs")->required();
    synth_cmd->add_option("--task", synth_args.task, "degradation label")->required();
    synth_cmd->add_option("--level", synth_args.level, "degradation magnitude")->required();
    synth_cmd->add_option("--out", synth_args.out, "output folder")->required();

    TrainClassifierArgs tc;
    auto* tc_cmd = app.add_subcommand("train-classifier", "run the continual routing curriculum");
    add_common(tc_cmd, tc.common);
    tc_cmd->add_option("--phases", tc.phases, "e.g. clean,noise|blur|overexposure");
    tc_cmd->add_option("--data", tc.data, "folder of clean PNGs")->required();
    tc_cmd->add_option("--out", tc.out, "final router checkpoint")->required();
    tc_cmd->add_option("--resume", tc.resume, "continue from a router checkpoint");

    TrainExpertArgs te;
    auto* te_cmd = app.add_subcommand("train-expert", "train one restoration expert in isolation");
    add_common(te_cmd, te.common);
    te_cmd->add_option("--task", te.task, "degradation label")->required();
    te_cmd->add_option("--data", te.data, "folder of clean PNGs");
    te_cmd->add_option("--profile", te.profile, "U-Net profile")->check(CLI::IsMember({"tiny", "full"}));
    te_cmd->add_option("--kind", te.kind, "unet or classical")->check(CLI::IsMember({"unet", "classical"}));
    te_cmd->add_option("--out", te.out, "expert root directory")->required();

    RestoreArgs ra;
    auto* ra_cmd = app.add_subcommand("restore", "classify and restore one image");
    add_common(ra_cmd, ra.common);
    ra_cmd->add_option("--image", ra.image, "input PNG")->required();
    ra_cmd->add_option("--router", ra.router, "router checkpoint")->required();
    ra_cmd->add_option("--experts", ra.experts, "expert root directory")->required();
    ra_cmd->add_option("--out", ra.out, "restored PNG")->required();

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "benchmark report over a clean folder");
    add_common(ev_cmd, ev.common);
    ev_cmd->add_option("--clean", ev.clean, "folder of clean PNGs")->required();
    ev_cmd->add_option("--router", ev.router, "router checkpoint")->required();
    ev_cmd->add_option("--experts", ev.experts, "expert root directory")->required();
    ev_cmd->add_option("--report", ev.report, "CSV report path (markdown written alongside)")->required();
    ev_cmd->add_option("--tasks", ev.tasks, "e.g. noise:15,noise:25,blur:1.5,clean")->capture_default_str();
    ev_cmd->add_option("--dump", ev.dump, "write corrupted|restored|reference triptychs here");

    PhaseArgs pa;
    auto* pa_cmd = app.add_subcommand("report", "phase-by-phase restoration table");
    add_common(pa_cmd, pa.common);
    pa_cmd->add_option("--clean", pa.clean, "folder of clean PNGs")->required();
    pa_cmd->add_option("--router", pa.routers, "router checkpoint per phase, in order")->required();
    pa_cmd->add_option("--experts", pa.experts, "expert directory per phase, in order")->required();
    pa_cmd->add_option("--report", pa.report, "CSV path (markdown written alongside)")->required();
    pa_cmd->add_option("--tasks", pa.tasks, "benchmark tasks")->capture_default_str();

    CalibrateArgs ca;
    auto* ca_cmd = app.add_subcommand("calibrate", "corrupted-input metrics for the reference conditions");
    add_common(ca_cmd, ca.common);
    ca_cmd->add_option("--clean", ca.clean, "folder of clean PNGs")->required();
    ca_cmd->add_option("--report", ca.report, "markdown output path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (synth_cmd->parsed())
            return synth(synth_args, out, err);
        if (tc_cmd->parsed())
            return train_classifier(tc, out, err);
        if (te_cmd->parsed()) {
            if (te.kind == "unet" && te.data.empty())
                throw InvalidArgument("--data is required to train a U-Net expert");
            return train_expert_cmd(te, out, err);
        }
        if (ra_cmd->parsed())
            return restore_cmd(ra, out, err);
        if (ev_cmd->parsed())
            return evaluate_cmd(ev, out, err);
        if (pa_cmd->parsed())
            return phase_report_cmd(pa, out, err);
        if (ca_cmd->parsed())
            return calibrate_cmd(ca, out, err);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kFormatError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

} // namespace darnet::cli
