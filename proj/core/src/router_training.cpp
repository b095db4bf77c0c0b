#include "darnet/router_training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "darnet/adam.hpp"
#include "darnet/error.hpp"
#include "darnet/ops.hpp"

namespace darnet {

namespace {

constexpr std::uint64_t kTrainTag = 0x7472;
constexpr std::uint64_t kValTag = 0x76616c;
constexpr std::uint64_t kTestTag = 0x74657374;
constexpr std::uint64_t kExemplarTag = 0x6578656d;

const std::vector<Image>& split_items(const ClassSamples& s, Split split)
{
    switch (split) {
    case Split::Train: return s.train;
    case Split::Validation: return s.validation;
    case Split::Test: return s.test;
    }
    return s.train;
}

// One of the eight flips/rotations of a square image, chosen by k in [0, 8).
Image dihedral(const Image& img, int k)
{
    if (k == 0)
        return img;
    const int h = img.height(), w = img.width();
    const bool transpose = k & 4;
    const int oh = transpose ? w : h, ow = transpose ? h : w;
    std::vector<double> out;
    out.reserve(img.size());
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            int sy = transpose ? x : y, sx = transpose ? y : x;
            if (k & 1)
                sx = w - 1 - sx;
            if (k & 2)
                sy = h - 1 - sy;
            for (int c = 0; c < Image::kChannels; ++c)
                out.push_back(img.at(sy, sx, c));
        }
    return Image(oh, ow, std::move(out));
}

struct Sample {
    const Image* clean;
    std::string label;
    int ordinal;
    std::size_t index;
};

std::vector<Sample> collect(const ClassifierModel& model, const ClassifierDataset& data,
                            std::span<const std::string> labels, Split split)
{
    std::vector<Sample> out;
    for (const auto& name : labels) {
        const auto it = data.classes.find(canonical_label(name));
        if (it == data.classes.end())
            continue;
        const int ordinal = model.labels().at(name).ordinal;
        const auto& items = split_items(it->second, split);
        for (std::size_t i = 0; i < items.size(); ++i)
            out.push_back({&items[i], it->first, ordinal, i});
    }
    return out;
}

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
    std::map<std::string, double> per_class;
};

Evaluation evaluate(const ClassifierModel& model, const std::vector<Sample>& samples, Split split,
                    std::uint64_t seed, const DegradationConfig& cfg)
{
    Evaluation ev;
    if (samples.empty())
        return ev;
    std::map<std::string, std::pair<int, int>> hits; // correct, total
    constexpr std::size_t kChunk = 64;
    double loss = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t end = std::min(samples.size(), start + kChunk);
        std::vector<Image> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < end; ++i) {
            batch.push_back(model.prepare(
                synthesize_sample(*samples[i].clean, samples[i].label, split, samples[i].index, 0, 0, seed, cfg)));
            labels.push_back(samples[i].ordinal);
        }
        NoGradGuard no_grad;
        const Var<float> logits = model.forward(images_to_tensor(batch));
        loss += ops::softmax_cross_entropy(logits, labels).value()[0] * static_cast<double>(batch.size());
        const int c = model.num_classes();
        for (std::size_t n = 0; n < batch.size(); ++n) {
            const std::span<const float> row(logits.value().data() + n * c, static_cast<std::size_t>(c));
            const bool ok = argmax_lowest(row) == labels[n];
            correct += ok;
            auto& h = hits[samples[start + n].label];
            h.first += ok;
            ++h.second;
        }
    }
    ev.loss = loss / static_cast<double>(samples.size());
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
    for (const auto& [label, h] : hits)
        ev.per_class[label] = static_cast<double>(h.first) / h.second;
    return ev;
}

} // namespace

std::string to_string(ReplayMix mix)
{
    return mix == ReplayMix::Balanced ? "balanced" : "fixed";
}

ReplayMix parse_replay_mix(std::string_view text)
{
    if (text == "fixed")
        return ReplayMix::Fixed;
    if (text == "balanced")
        return ReplayMix::Balanced;
    throw InvalidArgument("replay mix must be fixed or balanced, got '" + std::string(text) + "'");
}

ClassifierDataset make_classifier_dataset(std::span<const Image> pool, const std::vector<std::string>& class_names,
                                          int per_class, int input_size, std::uint64_t seed)
{
    if (pool.empty())
        throw DataError("classifier dataset needs at least one source image");
    ClassifierDataset data;
    for (const auto& raw : class_names) {
        const std::string name = canonical_label(raw);
        Rng rng(derive_seed(seed, hash_string(name)));
        std::vector<Image> crops;
        for (int i = 0; i < per_class; ++i) {
            const Image& src = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
            const int shorter = std::min(src.height(), src.width());
            if (shorter < input_size) {
                crops.push_back(fit_square(src, input_size));
                continue;
            }
            const int side = static_cast<int>(rng.uniform_int(std::max(input_size, shorter / 2), shorter));
            const int top = static_cast<int>(rng.uniform_int(0, src.height() - side));
            const int left = static_cast<int>(rng.uniform_int(0, src.width() - side));
            crops.push_back(resize_bilinear(crop(src, top, left, side, side), input_size, input_size));
        }
        const DatasetSplit split = split_dataset(crops.size(), 0.7, 0.1, derive_seed(seed, hash_string(name), 1));
        ClassSamples& s = data.classes[name];
        for (auto i : split.train)
            s.train.push_back(crops[i]);
        for (auto i : split.validation)
            s.validation.push_back(crops[i]);
        for (auto i : split.test)
            s.test.push_back(crops[i]);
    }
    return data;
}

Image synthesize_sample(const Image& clean, std::string_view label, Split split, std::size_t index, int epoch,
                        int phase, std::uint64_t seed, const DegradationConfig& cfg)
{
    std::uint64_t item_seed = 0;
    const std::uint64_t label_hash = hash_string(canonical_label(label));
    switch (split) {
    case Split::Train:
        item_seed = derive_seed(seed, kTrainTag, phase, epoch, label_hash, index);
        break;
    case Split::Validation:
        item_seed = derive_seed(seed, kValTag, label_hash, index);
        break;
    case Split::Test:
        item_seed = derive_seed(seed, kTestTag, label_hash, index);
        break;
    }
    Rng rng(item_seed);
    const DegradationSpec spec = sample_degradation(label, rng, cfg);
    return apply(spec, clean, rng, cfg);
}

PhaseReport train_phase(ClassifierModel& model, int phase, std::span<const std::string> phase_labels,
                        const ClassifierDataset& data, ReplayBuffer& buffer, const ClassifierTrainConfig& cfg)
{
    for (const auto& l : phase_labels)
        if (!model.labels().contains(l))
            throw InvalidArgument("phase label " + l + " is not in the classifier head; extend_head first");
    const auto fresh = collect(model, data, phase_labels, Split::Train);
    if (fresh.empty())
        throw DataError("no training data for phase " + std::to_string(phase));
    std::vector<std::string> current(phase_labels.begin(), phase_labels.end());
    const std::string clean(labels::kClean);
    if (cfg.clean_every_phase && std::find(current.begin(), current.end(), clean) == current.end())
        current.push_back(clean);
    const auto train = collect(model, data, current, Split::Train);
    const auto validation = collect(model, data, model.labels().names(), Split::Validation);

    const TrainSchedule& sched = cfg.schedule;
    const bool use_replay = cfg.replay && !buffer.empty();
    double replay_share = cfg.replay_fraction;
    if (cfg.replay_mix == ReplayMix::Balanced) {
        double old_classes = 0;
        for (int ordinal : buffer.classes())
            old_classes += std::find(current.begin(), current.end(), model.labels().at(ordinal).name) == current.end();
        replay_share = old_classes / (old_classes + static_cast<double>(current.size()));
    }
    const int replay_per_batch =
        use_replay ? std::clamp(static_cast<int>(std::lround(sched.batch_size * replay_share)), 1,
                                std::max(1, sched.batch_size - 1))
                   : 0;
    const int current_per_batch = std::max(1, sched.batch_size - replay_per_batch);

    PhaseReport report;
    report.phase = phase;
    report.phase_labels.assign(phase_labels.begin(), phase_labels.end());

    PlateauScheduler scheduler(sched);
    AdamState<float> adam;
    std::vector<NamedTensor> best_state = model.state();
    Rng rng(derive_seed(sched.seed, 0x706861, phase));
    const auto started = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 1; epoch <= sched.max_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

        double loss_sum = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(current_per_batch)) {
            if (sched.max_steps_per_epoch > 0 && steps >= sched.max_steps_per_epoch)
                break;
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(current_per_batch));
            std::vector<Image> batch;
            std::vector<int> labels;
            for (std::size_t k = start; k < end; ++k) {
                const Sample& s = train[order[k]];
                const Image degraded =
                    synthesize_sample(*s.clean, s.label, Split::Train, s.index, epoch, phase, sched.seed, cfg.degradations);
                batch.push_back(model.prepare(cfg.augment ? dihedral(degraded, static_cast<int>(rng.uniform_int(0, 7))) : degraded));
                labels.push_back(s.ordinal);
            }
            for (int r = 0; r < replay_per_batch; ++r) {
                const Exemplar& e = buffer.sample(rng);
                batch.push_back(model.prepare(cfg.augment ? dihedral(e.image, static_cast<int>(rng.uniform_int(0, 7))) : e.image));
                labels.push_back(e.label);
            }
            Var<float> loss = ops::softmax_cross_entropy(model.forward(images_to_tensor(batch)), labels);
            loss.backward();
            adam_step(model.parameters(), adam, scheduler.lr());
            zero_grads(model.parameters());
            loss_sum += loss.value()[0];
            ++steps;
        }

        const Evaluation ev = evaluate(model, validation, Split::Validation, sched.seed, cfg.degradations);
        report.epochs.push_back({phase, epoch, steps ? loss_sum / steps : 0.0, ev.loss, ev.accuracy, scheduler.lr()});
        const auto decision = scheduler.observe(ev.loss);
        if (decision.improved) {
            best_state = model.state();
            report.best_epoch = epoch;
        }
        if (decision.stop)
            break;
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (sched.time_budget_seconds > 0 && elapsed > sched.time_budget_seconds)
            break;
    }
    model.load_state(best_state);
    report.validation_accuracy = evaluate(model, validation, Split::Validation, sched.seed, cfg.degradations).per_class;

    if (cfg.replay) {
        std::vector<Image> exemplars;
        std::vector<int> labels;
        for (const Sample& s : fresh) {
            exemplars.push_back(synthesize_sample(*s.clean, s.label, Split::Train, s.index, 0,
                                                  static_cast<int>(kExemplarTag), sched.seed, cfg.degradations));
            labels.push_back(s.ordinal);
        }
        Rng replay_rng(derive_seed(sched.seed, kExemplarTag, phase));
        buffer.update(exemplars, labels, replay_rng);
    }
    return report;
}

std::map<std::string, double> per_class_accuracy(const ClassifierModel& model, const ClassifierDataset& data,
                                                 Split split, std::uint64_t seed, const DegradationConfig& cfg)
{
    return evaluate(model, collect(model, data, model.labels().names(), split), split, seed, cfg).per_class;
}

std::vector<std::vector<std::string>> parse_phase_spec(std::string_view spec)
{
    std::vector<std::vector<std::string>> phases;
    std::vector<std::string> current;
    std::string token;
    auto flush_token = [&] {
        std::string t;
        for (char c : token)
            if (!std::isspace(static_cast<unsigned char>(c)))
                t += c;
        if (t.empty())
            throw InvalidArgument("empty label in phase spec");
        current.push_back(canonical_label(t));
        token.clear();
    };
    for (char c : spec) {
        if (c == ',') {
            flush_token();
        } else if (c == '|') {
            flush_token();
            phases.push_back(std::move(current));
            current.clear();
        } else {
            token += c;
        }
    }
    flush_token();
    phases.push_back(std::move(current));

    std::vector<std::string> seen;
    for (const auto& p : phases)
        for (const auto& l : p) {
            if (std::find(seen.begin(), seen.end(), l) != seen.end())
                throw InvalidArgument("label " + l + " appears in more than one phase");
            seen.push_back(l);
        }
    return phases;
}

CurriculumResult run_curriculum(const std::vector<std::vector<std::string>>& phases, const ClassifierDataset& data,
                                const ClassifierTrainConfig& cfg, const ClassifierArch& arch,
                                std::optional<std::pair<ClassifierModel, ReplayBuffer>> resume)
{
    if (phases.empty())
        throw InvalidArgument("curriculum needs at least one phase");
    std::optional<ClassifierModel> model;
    ReplayBuffer buffer(cfg.replay_capacity);
    if (resume) {
        model.emplace(std::move(resume->first));
        buffer = std::move(resume->second);
    } else {
        model.emplace(LabelRegistry{}, arch, derive_seed(cfg.schedule.seed, 0x696e6974));
    }

    CurriculumResult result{{}, {}, {}, ReplayBuffer(cfg.replay_capacity)};
    for (std::size_t p = 0; p < phases.size(); ++p) {
        bool has_new = false;
        for (const auto& label : phases[p])
            if (!model->labels().contains(label)) {
                *model = extend_head(*model, label);
                has_new = true;
            }
        if (!has_new && resume)
            continue; // phase already covered by the resumed checkpoint
        const int phase_number = static_cast<int>(p) + 1;
        result.reports.push_back(train_phase(*model, phase_number, phases[p], data, buffer, cfg));
        result.phase_models.push_back(*model);
        result.phase_buffers.push_back(buffer);
    }
    result.buffer = std::move(buffer);
    return result;
}

void save_replay_buffer(const std::filesystem::path& path, const ReplayBuffer& buffer)
{
    std::vector<NamedTensor> tensors;
    tensors.push_back({"capacity", Tensor<float>({1}, static_cast<float>(buffer.capacity_per_class()))});
    for (int label : buffer.classes()) {
        const std::string prefix = "class" + std::to_string(label);
        tensors.push_back({prefix + ".seen", Tensor<float>({1}, static_cast<float>(buffer.seen(label)))});
        const auto& items = buffer.items(label);
        for (std::size_t i = 0; i < items.size(); ++i) {
            const Image& im = items[i].image;
            std::vector<float> values(im.values().begin(), im.values().end());
            tensors.push_back({prefix + "." + std::to_string(i), Tensor<float>({im.height(), im.width(), 3}, std::move(values))});
        }
    }
    save_checkpoint(path, tensors);
}

ReplayBuffer load_replay_buffer(const std::filesystem::path& path)
{
    const auto tensors = load_checkpoint(path);
    if (tensors.empty() || tensors.front().name != "capacity")
        throw FormatError(path.string() + " is not a replay buffer");
    ReplayBuffer buffer(static_cast<int>(tensors.front().tensor[0]));
    // Rebuild by re-offering exemplars in order; capacity is never exceeded so
    // no randomness is consumed. Seen counts are restored afterwards.
    std::map<int, std::uint64_t> seen;
    Rng unused(0);
    for (std::size_t i = 1; i < tensors.size(); ++i) {
        const auto& nt = tensors[i];
        const auto dot = nt.name.find('.');
        if (!nt.name.starts_with("class") || dot == std::string::npos)
            throw FormatError("unexpected replay tensor " + nt.name);
        const int label = std::stoi(nt.name.substr(5, dot - 5));
        const std::string rest = nt.name.substr(dot + 1);
        if (rest == "seen") {
            seen[label] = static_cast<std::uint64_t>(nt.tensor[0]);
            continue;
        }
        std::vector<double> values(nt.tensor.values().begin(), nt.tensor.values().end());
        const Image im(nt.tensor.dim(0), nt.tensor.dim(1), std::move(values));
        const int l = label;
        buffer.update(std::span<const Image>(&im, 1), std::span<const int>(&l, 1), unused);
    }
    buffer.restore_seen(seen);
    return buffer;
}

} // namespace darnet
