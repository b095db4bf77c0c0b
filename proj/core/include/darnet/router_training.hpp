#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "darnet/classifier.hpp"
#include "darnet/degrade.hpp"
#include "darnet/replay.hpp"
#include "darnet/training.hpp"

namespace darnet {

// How a batch is split between current-phase samples and replay exemplars:
// a fixed replay share, or the share of old classes among all trained classes
// so that every class gets the same expected count.
enum class ReplayMix { Fixed, Balanced };

std::string to_string(ReplayMix mix);
ReplayMix parse_replay_mix(std::string_view text);

struct ClassifierTrainConfig {
    TrainSchedule schedule;
    bool replay = true;
    int replay_capacity = 200;
    double replay_fraction = 0.5; // share of each batch drawn from the buffer (Fixed mix)
    ReplayMix replay_mix = ReplayMix::Fixed;
    bool augment = true;          // random flips and quarter turns of training samples
    // Clean images join the current data of every phase, not just the first.
    bool clean_every_phase = true;
    DegradationConfig degradations;
};

// Clean sources per class at classifier input size; degradations are
// synthesized on the fly from the class label.
struct ClassSamples {
    std::vector<Image> train;
    std::vector<Image> validation;
    std::vector<Image> test;
};

struct ClassifierDataset {
    std::map<std::string, ClassSamples> classes;
};

// per_class crops for every class, split 70/10/20. Each crop is a random
// square covering at least half the shorter side of a random pool image,
// resized to input_size.
ClassifierDataset make_classifier_dataset(std::span<const Image> pool, const std::vector<std::string>& class_names,
                                          int per_class, int input_size, std::uint64_t seed);

enum class Split { Train, Validation, Test };

// Degraded copy of sample i of `label` in the given split. Train samples are
// re-degraded each epoch; validation and test samples are fixed.
Image synthesize_sample(const Image& clean, std::string_view label, Split split, std::size_t index, int epoch,
                        int phase, std::uint64_t seed, const DegradationConfig& cfg);

struct EpochRecord {
    int phase = 0;
    int epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
    double lr = 0.0;
};

struct PhaseReport {
    int phase = 0;
    std::vector<std::string> phase_labels;
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    std::map<std::string, double> validation_accuracy; // per class, best model
};

// One continual-learning phase: cross-entropy over the phase's classes (plus
// Clean when clean_every_phase is set) mixed with replay exemplars,
// reduce-on-plateau, early stopping, best-validation parameters restored.
// Afterwards the samples of the phase's own classes are offered to the buffer.
PhaseReport train_phase(ClassifierModel& model, int phase, std::span<const std::string> phase_labels,
                        const ClassifierDataset& data, ReplayBuffer& buffer, const ClassifierTrainConfig& cfg);

// Accuracy per class over the labels the model knows.
std::map<std::string, double> per_class_accuracy(const ClassifierModel& model, const ClassifierDataset& data,
                                                 Split split, std::uint64_t seed, const DegradationConfig& cfg);

// "clean,noise|blur|overexposure" -> {{Clean, Noise}, {Blur}, {Overexposure}}.
std::vector<std::vector<std::string>> parse_phase_spec(std::string_view spec);

struct CurriculumResult {
    std::vector<ClassifierModel> phase_models;
    std::vector<PhaseReport> reports;
    std::vector<ReplayBuffer> phase_buffers; // buffer state after each trained phase
    ReplayBuffer buffer;
};

// Runs phases[first_phase..] in order, head-extending for new labels. With
// `resume` the model and buffer continue from an earlier run.
CurriculumResult run_curriculum(const std::vector<std::vector<std::string>>& phases, const ClassifierDataset& data,
                                const ClassifierTrainConfig& cfg, const ClassifierArch& arch,
                                std::optional<std::pair<ClassifierModel, ReplayBuffer>> resume = std::nullopt);

void save_replay_buffer(const std::filesystem::path& path, const ReplayBuffer& buffer);
ReplayBuffer load_replay_buffer(const std::filesystem::path& path);

} // namespace darnet
