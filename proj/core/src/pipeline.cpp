#include "darnet/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "darnet/error.hpp"
#include "darnet/parallel.hpp"

namespace darnet {

RestorationResult restore(const Router& router, const ExpertRegistry& registry, const Image& img,
                          const Image* reference)
{
    const Classification c = router.classify(img);
    if (!registry.contains(c.label.name))
        throw InvalidArgument("router predicted " + c.label.name + " but no expert is registered for it");
    const auto expert = registry.shared(c.label.name);
    RestorationResult r{c.label, expert->restore(img), expert->name(), std::nullopt};
    if (reference)
        r.metrics = measure(r.restored, *reference);
    return r;
}

std::vector<BenchmarkTask> parse_tasks(std::string_view text)
{
    std::vector<BenchmarkTask> tasks;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (item.empty())
            throw InvalidArgument("empty task in '" + std::string(text) + "'");
        const auto colon = item.find(':');
        BenchmarkTask t{canonical_label(item.substr(0, colon)), std::nullopt};
        const DegradationConfig defaults;
        const auto range = defaults.range_for(t.label); // throws on unknown labels
        if (colon != std::string::npos) {
            if (!range)
                throw InvalidArgument("the Clean task takes no level");
            std::size_t used = 0;
            const std::string number = item.substr(colon + 1);
            try {
                t.level = std::stod(number, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != number.size() || number.empty() || !std::isfinite(*t.level))
                throw InvalidArgument("bad level in task '" + item + "'");
        } else if (range) {
            t.level = range->mid();
        }
        tasks.push_back(std::move(t));
    }
    if (tasks.empty())
        throw InvalidArgument("no benchmark tasks given");
    return tasks;
}

std::string level_string(const std::optional<double>& level)
{
    if (!level)
        return "-";
    std::ostringstream os;
    os << *level;
    return os.str();
}

std::string task_key(const BenchmarkTask& task)
{
    return task.level ? task.label + ":" + level_string(task.level) : task.label;
}

std::uint64_t benchmark_item_seed(std::uint64_t seed, std::string_view name, const BenchmarkTask& task)
{
    const std::uint64_t level_bits = task.level ? std::bit_cast<std::uint64_t>(*task.level) : 0;
    return derive_seed(seed, hash_string(name), hash_string(task.label), level_bits);
}

Image corrupt(const Image& clean, std::string_view name, const BenchmarkTask& task, std::uint64_t seed,
              const DegradationConfig& cfg)
{
    Rng rng(benchmark_item_seed(seed, name, task));
    return apply(DegradationSpec{task.label, task.level}, clean, rng, cfg);
}

namespace {

struct ItemResult {
    Image corrupted;
    MetricRecord corrupted_metrics;
    MetricRecord restored_metrics;
    std::optional<MetricRecord> expert_metrics;
    std::string predicted;
};

MetricRecord mean_of(const std::vector<ItemResult>& items, MetricRecord ItemResult::*field)
{
    MetricRecord m;
    for (const auto& it : items) {
        m.psnr += (it.*field).psnr;
        m.ssim += (it.*field).ssim;
    }
    const auto n = static_cast<double>(items.size());
    return {m.psnr / n, m.ssim / n};
}

std::string level_dir(const BenchmarkTask& task)
{
    return task.level ? level_string(task.level) : "none";
}

} // namespace

BenchmarkReport evaluate_benchmark(const Router& router, const ExpertRegistry& registry,
                                   std::span<const NamedImage> images, std::span<const BenchmarkTask> tasks,
                                   const EvaluationOptions& options)
{
    if (images.empty())
        throw DataError("benchmark has no images");
    if (tasks.empty())
        throw InvalidArgument("benchmark has no tasks");
    for (const auto& t : tasks)
        (void)options.degradations.range_for(t.label);
    if (!registry.is_total_over(router.labels()))
        throw InvalidArgument("expert registry does not cover every router label");

    BenchmarkReport report;
    report.seed = options.seed;
    report.router_labels = router.labels().names();
    report.images = images.size();

    for (const auto& task : tasks) {
        std::vector<ItemResult> items(images.size());
        const std::size_t calls_before = registry.total_calls();
        parallel_for(images.size(), options.threads, [&](std::size_t i) {
            const Image& clean = images[i].image;
            ItemResult& r = items[i];
            r.corrupted = corrupt(clean, images[i].name, task, options.seed, options.degradations);
            r.corrupted_metrics = measure(r.corrupted, clean);
            const RestorationResult routed = restore(router, registry, r.corrupted, &clean);
            r.restored_metrics = *routed.metrics;
            r.predicted = routed.predicted.name;
            if (options.dump_dir) {
                const std::filesystem::path dir = *options.dump_dir / expert_dir_name(task.label) / level_dir(task);
                std::filesystem::create_directories(dir);
                const Image panels[] = {r.corrupted, routed.restored, clean};
                save_image(hconcat(panels), dir / (images[i].name + ".png"));
            }
        });
        report.expert_calls += registry.total_calls() - calls_before;

        const bool has_expert = options.expert_path && registry.contains(task.label);
        if (has_expert) {
            const auto expert = registry.shared(task.label);
            parallel_for(images.size(), options.threads, [&](std::size_t i) {
                items[i].expert_metrics = measure(expert->restore(items[i].corrupted), images[i].image);
            });
        }

        BenchmarkRow row;
        row.task = task;
        row.images = images.size();
        row.corrupted = mean_of(items, &ItemResult::corrupted_metrics);
        row.restored = mean_of(items, &ItemResult::restored_metrics);
        int correct = 0;
        auto& confusion = report.confusion[task.label];
        for (const auto& it : items) {
            correct += it.predicted == task.label;
            ++confusion[it.predicted];
        }
        row.routing_accuracy = static_cast<double>(correct) / static_cast<double>(items.size());
        if (has_expert) {
            MetricRecord m;
            for (const auto& it : items) {
                m.psnr += it.expert_metrics->psnr;
                m.ssim += it.expert_metrics->ssim;
            }
            const auto n = static_cast<double>(items.size());
            row.expert_path = MetricRecord{m.psnr / n, m.ssim / n};
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

BenchmarkReport evaluate_benchmark(const Router& router, const ExpertRegistry& registry,
                                   const std::filesystem::path& clean_dir, std::span<const BenchmarkTask> tasks,
                                   const EvaluationOptions& options)
{
    const auto images = load_image_folder(clean_dir);
    if (images.empty())
        throw DataError("no PNG images in " + clean_dir.string());
    return evaluate_benchmark(router, registry, images, tasks, options);
}

PhaseTable phase_evaluation(std::span<const PhaseStage> stages, std::span<const NamedImage> images,
                            std::span<const BenchmarkTask> tasks, const EvaluationOptions& options,
                            double tolerance)
{
    if (stages.empty())
        throw InvalidArgument("phase evaluation needs at least one phase");
    PhaseTable table;
    table.tasks.assign(tasks.begin(), tasks.end());
    table.cells.assign(tasks.size(), std::vector<PhaseCell>(stages.size()));
    table.introduced.assign(tasks.size(), std::nullopt);
    table.corrupted.assign(tasks.size(), MetricRecord{});

    for (std::size_t p = 0; p < stages.size(); ++p) {
        const PhaseStage& stage = stages[p];
        if (!stage.router || !stage.registry)
            throw InvalidArgument("phase " + stage.name + " is missing its router or experts");
        table.phases.push_back(stage.name);
        EvaluationOptions stage_options = options;
        stage_options.dump_dir.reset();
        const BenchmarkReport report = evaluate_benchmark(*stage.router, *stage.registry, images, tasks, stage_options);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
            const BenchmarkRow& row = report.rows[t];
            table.corrupted[t] = row.corrupted;
            table.cells[t][p] = {row.restored, row.expert_path, row.routing_accuracy};
            if (!table.introduced[t] && stage.router->labels().contains(tasks[t].label) &&
                stage.registry->contains(tasks[t].label))
                table.introduced[t] = p;
        }
    }

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!table.introduced[t])
            continue;
        const auto& base = table.cells[t][*table.introduced[t]].expert_path;
        for (std::size_t p = *table.introduced[t] + 1; p < stages.size(); ++p) {
            const auto& cur = table.cells[t][p].expert_path;
            if (!base || !cur) {
                table.frozen = false;
                continue;
            }
            const bool both_inf = std::isinf(base->psnr) && std::isinf(cur->psnr);
            const double dpsnr = both_inf ? 0.0 : std::abs(base->psnr - cur->psnr);
            const double dev = std::max(dpsnr, std::abs(base->ssim - cur->ssim));
            table.max_frozen_deviation = std::max(table.max_frozen_deviation, dev);
            if (!(dev <= tolerance))
                table.frozen = false;
        }
    }
    return table;
}

} // namespace darnet
