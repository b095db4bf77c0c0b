#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "darnet/classifier.hpp"
#include "darnet/degrade.hpp"
#include "darnet/experts.hpp"
#include "darnet/metrics.hpp"

namespace darnet {

struct RestorationResult {
    RouteLabel predicted;
    Image restored;
    std::string expert;
    std::optional<MetricRecord> metrics; // set when a reference was given
};

// Classify once, run the one expert registered for the predicted label.
RestorationResult restore(const Router& router, const ExpertRegistry& registry, const Image& img,
                          const Image* reference = nullptr);

// A benchmark condition; Clean has no level.
struct BenchmarkTask {
    std::string label;
    std::optional<double> level;
    bool operator==(const BenchmarkTask&) const = default;
};

// "noise:15,noise:25,blur:1.5,overexposure:1.7,clean".
std::vector<BenchmarkTask> parse_tasks(std::string_view text);
std::string task_key(const BenchmarkTask& task); // "Noise:25"
std::string level_string(const std::optional<double>& level);

// Per-image degradation seed, independent of directory order.
std::uint64_t benchmark_item_seed(std::uint64_t seed, std::string_view name, const BenchmarkTask& task);
Image corrupt(const Image& clean, std::string_view name, const BenchmarkTask& task, std::uint64_t seed,
              const DegradationConfig& cfg = {});

struct BenchmarkRow {
    BenchmarkTask task;
    std::size_t images = 0;
    MetricRecord corrupted;
    MetricRecord restored;
    double routing_accuracy = 0.0;
    // The task's own expert applied directly (no routing); empty when the
    // registry has no expert for the task.
    std::optional<MetricRecord> expert_path;
};

struct BenchmarkReport {
    std::uint64_t seed = 0;
    std::vector<std::string> router_labels;
    std::vector<BenchmarkRow> rows;
    // task label -> predicted label -> count
    std::map<std::string, std::map<std::string, int>> confusion;
    std::size_t images = 0;
    std::size_t expert_calls = 0; // routed calls only
};

struct EvaluationOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    DegradationConfig degradations;
    bool expert_path = true;
    // When set, corrupted | restored | reference triptychs are written to
    // <dump_dir>/<task>/<level>/<name>.png.
    std::optional<std::filesystem::path> dump_dir;
};

BenchmarkReport evaluate_benchmark(const Router& router, const ExpertRegistry& registry,
                                   std::span<const NamedImage> images, std::span<const BenchmarkTask> tasks,
                                   const EvaluationOptions& options);
BenchmarkReport evaluate_benchmark(const Router& router, const ExpertRegistry& registry,
                                   const std::filesystem::path& clean_dir, std::span<const BenchmarkTask> tasks,
                                   const EvaluationOptions& options);

struct PhaseStage {
    std::string name;
    const Router* router = nullptr;
    const ExpertRegistry* registry = nullptr;
};

struct PhaseCell {
    MetricRecord routed;
    std::optional<MetricRecord> expert_path;
    double routing_accuracy = 0.0;
};

struct PhaseTable {
    std::vector<BenchmarkTask> tasks;
    std::vector<std::string> phases;
    std::vector<MetricRecord> corrupted;           // per task
    std::vector<std::vector<PhaseCell>> cells;     // [task][phase]
    std::vector<std::optional<std::size_t>> introduced; // first phase that routes and restores the task
    // Largest change of an expert-path metric after the task's introduction.
    double max_frozen_deviation = 0.0;
    bool frozen = true;
};

// Evaluates every stage on the same corrupted images and checks that a task's
// expert-path metrics never move once the task has been introduced.
PhaseTable phase_evaluation(std::span<const PhaseStage> stages, std::span<const NamedImage> images,
                            std::span<const BenchmarkTask> tasks, const EvaluationOptions& options,
                            double tolerance = 1e-6);

} // namespace darnet
