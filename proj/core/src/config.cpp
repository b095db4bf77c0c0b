#include "darnet/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "darnet/error.hpp"

namespace darnet {

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::string to_string(ConfigSource source)
{
    switch (source) {
    case ConfigSource::Default: return "default";
    case ConfigSource::File: return "file";
    case ConfigSource::Cli: return "cli";
    }
    return "default";
}

RunConfig::RunConfig()
{
    auto add = [this](std::string key, std::string value, bool published, std::string help) {
        entries_.push_back({std::move(key), std::move(value), published, std::move(help), ConfigSource::Default});
    };
    add("seed", "0", false, "base seed for every random stream");
    add("threads", "0", false, "worker threads, 0 = DAR_THREADS or hardware concurrency");
    add("batch_size", "256", true, "classifier batch size");
    add("lr", "0.001", true, "initial learning rate");
    add("plateau_factor", "0.5", true, "learning-rate factor on validation plateau");
    add("plateau_patience", "3", false, "epochs without improvement before the lr is reduced");
    add("early_stop", "7", true, "epochs without improvement before stopping");
    add("max_epochs", "100", true, "epoch cap");
    add("max_steps_per_epoch", "0", false, "optimizer steps per epoch cap, 0 = none");
    add("time_budget_seconds", "0", false, "wall-clock cap per training run, 0 = none");
    add("classifier_input", "96", true, "classifier input side (STL-10 native)");
    add("classifier_widths", "16,32,64,128", false, "classifier block widths");
    add("classifier_per_class", "200", false, "source crops per class");
    add("phases", "clean,noise|blur|overexposure", true, "curriculum phases");
    add("replay", "true", true, "experience replay on/off");
    add("replay_capacity", "200", false, "exemplars per class");
    add("replay_fraction", "0.5", false, "replay share of each batch (fixed mix)");
    add("replay_mix", "fixed", false, "fixed: replay_fraction per batch; balanced: equal expected share per class");
    add("clean_every_phase", "true", true, "clean images are trained in every phase");
    add("augment", "true", false, "random flips and quarter turns of classifier training samples");
    add("expert_batch_size", "128", true, "expert batch size");
    add("crop_size", "128", true, "expert training crop side");
    add("crops_per_image", "50", true, "expert crops per image per epoch");
    add("expert_validation_fraction", "0.1", true, "expert validation share of images");
    add("loss_alpha", "0.5", false, "SSIM weight in the hybrid loss");
    add("profile", "full", false, "U-Net profile: tiny or full");
    add("noise_min", "15", true, "noise sigma lower bound (8-bit units)");
    add("noise_max", "50", true, "noise sigma upper bound");
    add("blur_min", "0.5", true, "blur sigma lower bound");
    add("blur_max", "3.0", true, "blur sigma upper bound");
    add("overexposure_min", "1.3", true, "overexposure gamma lower bound");
    add("overexposure_max", "2.0", true, "overexposure gamma upper bound");
    add("overexposure_mode", "gain", false, "overexposure operator: gain or power");
    add("salt_pepper_min", "0.02", false, "salt-and-pepper density lower bound");
    add("salt_pepper_max", "0.10", false, "salt-and-pepper density upper bound");
    add("data_dir", "", false, "training data directory");
    add("clean_dir", "", false, "clean benchmark directory");
}

ConfigEntry& RunConfig::entry(std::string_view key)
{
    const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ConfigEntry& e) { return e.key == key; });
    if (it == entries_.end())
        throw InvalidArgument("unknown config key '" + std::string(key) + "'");
    return *it;
}

const ConfigEntry& RunConfig::entry(std::string_view key) const
{
    return const_cast<RunConfig*>(this)->entry(key);
}

bool RunConfig::contains(std::string_view key) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const ConfigEntry& e) { return e.key == key; });
}

void RunConfig::set(std::string_view key, std::string value, ConfigSource source)
{
    ConfigEntry& e = entry(key);
    if (source < e.source)
        return;
    e.value = std::move(value);
    e.source = source;
}

void RunConfig::parse(std::string_view text, ConfigSource source)
{
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        if (!contains(key))
            throw InvalidArgument("config line " + std::to_string(number) + ": unknown key '" + key + "'");
        set(key, trim(std::string_view(body).substr(eq + 1)), source);
    }
}

void RunConfig::load_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    parse(ss.str(), ConfigSource::File);
}

const std::string& RunConfig::get(std::string_view key) const
{
    return entry(key).value;
}

double RunConfig::get_double(std::string_view key) const
{
    const std::string& v = get(key);
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size())
        throw InvalidArgument("config key " + std::string(key) + " needs a number, got '" + v + "'");
    return d;
}

int RunConfig::get_int(std::string_view key) const
{
    const std::string& v = get(key);
    std::size_t used = 0;
    int i = 0;
    try {
        i = std::stoi(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size())
        throw InvalidArgument("config key " + std::string(key) + " needs an integer, got '" + v + "'");
    return i;
}

std::uint64_t RunConfig::get_u64(std::string_view key) const
{
    const std::string& v = get(key);
    std::size_t used = 0;
    std::uint64_t u = 0;
    try {
        u = std::stoull(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size() || v.front() == '-')
        throw InvalidArgument("config key " + std::string(key) + " needs a non-negative integer, got '" + v + "'");
    return u;
}

bool RunConfig::get_bool(std::string_view key) const
{
    std::string v = get(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw InvalidArgument("config key " + std::string(key) + " needs a boolean, got '" + v + "'");
}

std::string RunConfig::dump() const
{
    std::size_t width = 0;
    for (const auto& e : entries_)
        width = std::max(width, e.key.size() + 3 + e.value.size());
    std::ostringstream os;
    os << "# effective configuration; published = setting from the method description, decision = chosen here\n";
    for (const auto& e : entries_) {
        const std::string kv = e.key + " = " + e.value;
        os << kv << std::string(width - kv.size(), ' ') << "  # " << (e.published ? "published" : "decision") << ", "
           << to_string(e.source) << ": " << e.help << '\n';
    }
    return os.str();
}

std::string RunConfig::hash() const
{
    std::string text;
    for (const auto& e : entries_)
        if (e.key != "threads")
            text += e.key + "=" + e.value + "\n";
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << hash_string(text);
    return os.str();
}

DegradationConfig RunConfig::degradations() const
{
    DegradationConfig cfg;
    cfg.noise = {get_double("noise_min"), get_double("noise_max")};
    cfg.blur = {get_double("blur_min"), get_double("blur_max")};
    cfg.overexposure = {get_double("overexposure_min"), get_double("overexposure_max")};
    cfg.salt_pepper = {get_double("salt_pepper_min"), get_double("salt_pepper_max")};
    cfg.overexposure_mode = parse_overexposure_mode(get("overexposure_mode"));
    for (const auto* r : {&cfg.noise, &cfg.blur, &cfg.overexposure, &cfg.salt_pepper})
        if (!(r->min <= r->max))
            throw InvalidArgument("degradation range has min > max");
    return cfg;
}

namespace {

TrainSchedule schedule_from(const RunConfig& c, int batch)
{
    TrainSchedule s;
    s.seed = c.get_u64("seed");
    s.batch_size = batch;
    s.lr = c.get_double("lr");
    s.plateau_factor = c.get_double("plateau_factor");
    s.plateau_patience = c.get_int("plateau_patience");
    s.early_stop = c.get_int("early_stop");
    s.max_epochs = c.get_int("max_epochs");
    s.max_steps_per_epoch = c.get_int("max_steps_per_epoch");
    s.time_budget_seconds = c.get_double("time_budget_seconds");
    if (s.batch_size < 1 || s.max_epochs < 1 || !(s.lr > 0.0))
        throw InvalidArgument("batch size, max_epochs and lr must be positive");
    return s;
}

} // namespace

ClassifierTrainConfig RunConfig::classifier_config() const
{
    ClassifierTrainConfig cfg;
    cfg.schedule = schedule_from(*this, get_int("batch_size"));
    cfg.replay = get_bool("replay");
    cfg.replay_capacity = get_int("replay_capacity");
    cfg.replay_fraction = get_double("replay_fraction");
    cfg.replay_mix = parse_replay_mix(get("replay_mix"));
    cfg.clean_every_phase = get_bool("clean_every_phase");
    cfg.augment = get_bool("augment");
    cfg.degradations = degradations();
    return cfg;
}

ClassifierArch RunConfig::classifier_arch() const
{
    ClassifierArch arch;
    arch.input_size = get_int("classifier_input");
    arch.widths.clear();
    std::stringstream ss(get("classifier_widths"));
    std::string item;
    while (std::getline(ss, item, ','))
        arch.widths.push_back(std::stoi(trim(item)));
    if (arch.widths.empty())
        throw InvalidArgument("classifier_widths is empty");
    return arch;
}

ExpertTrainConfig RunConfig::expert_config() const
{
    ExpertTrainConfig cfg;
    cfg.schedule = schedule_from(*this, get_int("expert_batch_size"));
    cfg.crop_size = get_int("crop_size");
    cfg.crops_per_image = get_int("crops_per_image");
    cfg.validation_fraction = get_double("expert_validation_fraction");
    cfg.loss_alpha = get_double("loss_alpha");
    cfg.degradations = degradations();
    cfg.profile = UNetProfile::by_name(get("profile"));
    return cfg;
}

} // namespace darnet
