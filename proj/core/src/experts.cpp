#include "darnet/experts.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include "json.hpp"

#include "darnet/checkpoint.hpp"
#include "darnet/error.hpp"
#include "darnet/training.hpp"

namespace fs = std::filesystem;

namespace darnet {

Image Expert::restore(const Image& img) const
{
    ++calls_;
    Image out = restore_impl(img);
    if (out.height() != img.height() || out.width() != img.width())
        throw ShapeError("expert " + name() + " changed image dimensions");
    return out;
}

std::shared_ptr<const Expert> identity_expert()
{
    return std::make_shared<IdentityExpert>();
}

Image unet_forward(const UNet& net, const Image& img)
{
    const Image padded = pad_to_multiple(img, net.size_multiple());
    NoGradGuard no_grad;
    const Var<float> out = net.forward(Var<float>::constant(image_to_tensor(padded)));
    const Image full = tensor_to_image(out.value());
    if (full.height() == img.height() && full.width() == img.width())
        return full;
    return crop(full, 0, 0, img.height(), img.width());
}

UNetExpert::UNetExpert(std::string label, UNet net, std::string profile)
    : label_(canonical_label(label)), net_(std::move(net)), profile_(std::move(profile))
{
}

namespace {

std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

// Real DFT of the circularly placed symmetric kernel on a period of n samples.
std::vector<double> kernel_spectrum(const std::vector<double>& taps, int n)
{
    std::vector<double> circular(static_cast<std::size_t>(n), 0.0);
    const int radius = static_cast<int>(taps.size() / 2);
    for (int d = -radius; d <= radius; ++d) {
        const int idx = ((d % n) + n) % n;
        circular[static_cast<std::size_t>(idx)] += taps[static_cast<std::size_t>(d + radius)];
    }
    std::vector<double> spectrum(static_cast<std::size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += circular[static_cast<std::size_t>(i)] * std::cos(2.0 * std::numbers::pi * k * i / n);
        spectrum[static_cast<std::size_t>(k)] = acc;
    }
    return spectrum;
}

} // namespace

Image wiener_deblur(const Image& img, double sigma_blur, double noise_to_signal)
{
    if (!(sigma_blur > 0.0))
        throw InvalidArgument("Wiener blur sigma must be positive");
    if (!(noise_to_signal >= 0.0))
        throw InvalidArgument("Wiener noise-to-signal ratio must be non-negative");

    const int h = img.height(), w = img.width();
    const int eh = 2 * h, ew = 2 * w;
    const int cw = ew / 2 + 1;
    const auto taps = gaussian_kernel(sigma_blur);
    const auto hy = kernel_spectrum(taps, eh);
    const auto hx = kernel_spectrum(taps, ew);

    // Full spectrum along y (length eh), half along x.
    std::vector<double> hy_full(static_cast<std::size_t>(eh));
    for (int k = 0; k < eh; ++k)
        hy_full[static_cast<std::size_t>(k)] = hy[static_cast<std::size_t>(std::min(k, eh - k))];

    double* spatial = fftw_alloc_real(static_cast<std::size_t>(eh) * ew);
    fftw_complex* freq = fftw_alloc_complex(static_cast<std::size_t>(eh) * cw);
    fftw_plan forward, inverse;
    {
        std::lock_guard lock(fftw_planner_mutex());
        forward = fftw_plan_dft_r2c_2d(eh, ew, spatial, freq, FFTW_ESTIMATE);
        inverse = fftw_plan_dft_c2r_2d(eh, ew, freq, spatial, FFTW_ESTIMATE);
    }

    std::vector<double> out(img.size());
    const double norm = 1.0 / (static_cast<double>(eh) * ew);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < eh; ++y)
            for (int x = 0; x < ew; ++x)
                spatial[static_cast<std::size_t>(y) * ew + x] = img.at(reflect_index(y, h), reflect_index(x, w), c);
        fftw_execute(forward);
        for (int ky = 0; ky < eh; ++ky)
            for (int kx = 0; kx < cw; ++kx) {
                const double otf = hy_full[static_cast<std::size_t>(ky)] * hx[static_cast<std::size_t>(kx)];
                const double gain = otf / (otf * otf + noise_to_signal);
                fftw_complex& v = freq[static_cast<std::size_t>(ky) * cw + kx];
                v[0] *= gain;
                v[1] *= gain;
            }
        fftw_execute(inverse);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                out[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
                    std::clamp(spatial[static_cast<std::size_t>(y) * ew + x] * norm, 0.0, 1.0);
    }

    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(inverse);
    }
    fftw_free(spatial);
    fftw_free(freq);
    return Image(h, w, std::move(out));
}

Image inverse_gamma_expert(const Image& img, double gamma_estimate)
{
    if (!(gamma_estimate >= 1.0))
        throw InvalidArgument("gamma estimate must be >= 1");
    std::vector<double> out(img.values().begin(), img.values().end());
    for (double& v : out)
        v = std::pow(v, gamma_estimate);
    return Image(img.height(), img.width(), std::move(out));
}

Image inverse_gain_expert(const Image& img, double gain_estimate)
{
    if (!(gain_estimate >= 1.0))
        throw InvalidArgument("gain estimate must be >= 1");
    std::vector<double> out(img.values().begin(), img.values().end());
    for (double& v : out)
        v /= gain_estimate;
    return Image(img.height(), img.width(), std::move(out));
}

Image median3(const Image& img)
{
    const int h = img.height(), w = img.width();
    std::vector<double> out(img.size());
    std::array<double, 9> window{};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                std::size_t k = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        window[k++] = img.at(reflect_index(y + dy, h), reflect_index(x + dx, w), c);
                std::nth_element(window.begin(), window.begin() + 4, window.end());
                out[(static_cast<std::size_t>(y) * w + x) * 3 + c] = window[4];
            }
    return Image(h, w, std::move(out));
}

WienerExpert::WienerExpert(double sigma_blur, double noise_to_signal, std::string label)
    : sigma_(sigma_blur), nsr_(noise_to_signal), label_(canonical_label(label))
{
    if (!(sigma_blur > 0.0))
        throw InvalidArgument("Wiener blur sigma must be positive");
}

InverseExposureExpert::InverseExposureExpert(double gamma, OverexposureMode mode, std::string label)
    : gamma_(gamma), mode_(mode), label_(canonical_label(label))
{
    if (!(gamma >= 1.0))
        throw InvalidArgument("gamma estimate must be >= 1");
}

Image InverseExposureExpert::restore_impl(const Image& img) const
{
    return mode_ == OverexposureMode::Power ? inverse_gamma_expert(img, gamma_) : inverse_gain_expert(img, gamma_);
}

std::shared_ptr<const Expert> classical_expert(std::string_view label, const DegradationConfig& cfg)
{
    const std::string canon = canonical_label(label);
    if (canon == labels::kClean)
        return identity_expert();
    if (canon == labels::kBlur)
        return std::make_shared<WienerExpert>(cfg.blur.mid(), 1e-2, canon);
    if (canon == labels::kOverexposure)
        return std::make_shared<InverseExposureExpert>(cfg.overexposure.mid(), cfg.overexposure_mode, canon);
    if (canon == labels::kNoise || canon == labels::kSaltPepper)
        return std::make_shared<MedianExpert>(canon);
    throw InvalidArgument("no classical expert for label " + std::string(label));
}

ExpertRegistry::ExpertRegistry()
{
    experts_[std::string(labels::kClean)] = identity_expert();
}

void ExpertRegistry::set(std::string_view label, std::shared_ptr<const Expert> expert)
{
    if (!expert)
        throw InvalidArgument("null expert");
    const std::string canon = canonical_label(label);
    if (canonical_label(expert->handles()) != canon)
        throw InvalidArgument("expert " + expert->name() + " handles " + expert->handles() + ", not " + canon);
    experts_[canon] = std::move(expert);
}

bool ExpertRegistry::contains(std::string_view label) const
{
    return experts_.contains(canonical_label(label));
}

const Expert& ExpertRegistry::at(std::string_view label) const
{
    return *shared(label);
}

std::shared_ptr<const Expert> ExpertRegistry::shared(std::string_view label) const
{
    const auto it = experts_.find(canonical_label(label));
    if (it == experts_.end())
        throw InvalidArgument("no expert registered for label " + std::string(label));
    return it->second;
}

std::vector<std::string> ExpertRegistry::labels() const
{
    std::vector<std::string> out;
    for (const auto& [label, e] : experts_)
        out.push_back(label);
    return out;
}

bool ExpertRegistry::is_total_over(const LabelRegistry& labels) const
{
    return std::all_of(labels.names().begin(), labels.names().end(),
                       [this](const std::string& l) { return contains(l); });
}

std::size_t ExpertRegistry::total_calls() const
{
    std::size_t n = 0;
    for (const auto& [label, e] : experts_)
        n += e->call_count();
    return n;
}

void ExpertRegistry::reset_call_counts() const
{
    for (const auto& [label, e] : experts_)
        e->reset_call_count();
}

ExpertRegistry register_expert(ExpertRegistry registry, std::string_view label, std::shared_ptr<const Expert> expert)
{
    registry.set(label, std::move(expert));
    return registry;
}

std::string expert_dir_name(std::string_view label)
{
    std::string s = canonical_label(label);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kWeightsFile = "expert.darn";
constexpr int kManifestVersion = 1;

} // namespace

std::filesystem::path save_expert(const Expert& expert, const fs::path& root, const std::string& config_hash)
{
    const fs::path dir = root / expert_dir_name(expert.handles());
    fs::create_directories(dir);

    nlohmann::json j;
    j["format"] = "darnet-expert";
    j["version"] = kManifestVersion;
    j["name"] = expert.name();
    j["label"] = canonical_label(expert.handles());
    j["config_hash"] = config_hash;
    nlohmann::json params = nlohmann::json::object();
    if (const auto* u = dynamic_cast<const UNetExpert*>(&expert)) {
        j["kind"] = "unet";
        j["profile"] = u->profile();
        j["widths"] = u->network().widths();
        j["weights"] = kWeightsFile;
        save_checkpoint(dir / kWeightsFile, u->network().state());
    } else if (const auto* wi = dynamic_cast<const WienerExpert*>(&expert)) {
        j["kind"] = "wiener";
        params["sigma"] = wi->sigma();
        params["noise_to_signal"] = wi->noise_to_signal();
    } else if (const auto* ie = dynamic_cast<const InverseExposureExpert*>(&expert)) {
        j["kind"] = "inverse_exposure";
        params["gamma"] = ie->gamma();
        j["mode"] = to_string(ie->mode());
    } else if (dynamic_cast<const MedianExpert*>(&expert)) {
        j["kind"] = "median";
    } else if (dynamic_cast<const IdentityExpert*>(&expert)) {
        j["kind"] = "identity";
    } else {
        throw InvalidArgument("cannot serialize expert " + expert.name());
    }
    j["params"] = params;

    std::ofstream out(dir / kManifestFile);
    if (!out)
        throw DataError("cannot write " + (dir / kManifestFile).string());
    out << j.dump(2) << '\n';
    return dir;
}

ExpertManifest read_manifest(const fs::path& dir)
{
    std::ifstream in(dir / kManifestFile);
    if (!in)
        throw FormatError("missing expert manifest in " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed expert manifest " + (dir / kManifestFile).string() + ": " + e.what());
    }
    if (j.value("format", "") != "darnet-expert" || j.value("version", 0) != kManifestVersion)
        throw FormatError("unsupported expert manifest in " + dir.string());
    ExpertManifest m;
    m.name = j.value("name", "");
    m.label = canonical_label(j.value("label", ""));
    m.kind = j.value("kind", "");
    m.profile = j.value("profile", "");
    m.config_hash = j.value("config_hash", "");
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    for (const auto& [k, v] : params.items())
        m.params[k] = v.get<double>();
    if (j.contains("mode"))
        m.params["mode_power"] = j["mode"] == "power" ? 1.0 : 0.0;
    return m;
}

std::shared_ptr<const Expert> load_expert(const fs::path& dir)
{
    const ExpertManifest m = read_manifest(dir);
    if (m.kind == "unet") {
        const auto tensors = load_checkpoint(dir / kWeightsFile);
        UNet net(UNet::widths_from_state(tensors), 0);
        net.load_state(tensors);
        return std::make_shared<UNetExpert>(m.label, std::move(net), m.profile);
    }
    if (m.kind == "wiener")
        return std::make_shared<WienerExpert>(m.params.at("sigma"), m.params.at("noise_to_signal"), m.label);
    if (m.kind == "inverse_exposure")
        return std::make_shared<InverseExposureExpert>(
            m.params.at("gamma"), m.params.count("mode_power") && m.params.at("mode_power") > 0.5 ? OverexposureMode::Power
                                                                                                : OverexposureMode::Gain,
            m.label);
    if (m.kind == "median")
        return std::make_shared<MedianExpert>(m.label);
    if (m.kind == "identity")
        return std::make_shared<IdentityExpert>(m.label);
    throw FormatError("unknown expert kind '" + m.kind + "' in " + dir.string());
}

ExpertRegistry load_expert_registry(const fs::path& root)
{
    if (!fs::is_directory(root))
        throw DataError("expert directory not found: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / kManifestFile))
            dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    ExpertRegistry registry;
    for (const auto& d : dirs) {
        auto expert = load_expert(d);
        const std::string label = expert->handles();
        registry.set(label, std::move(expert));
    }
    return registry;
}

} // namespace darnet
