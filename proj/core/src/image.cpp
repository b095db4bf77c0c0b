#include "darnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <png.h>

#include "darnet/error.hpp"

namespace fs = std::filesystem;

namespace darnet {

namespace {

double clamp_unit(double v)
{
    if (std::isnan(v))
        throw NumericError("image value is NaN");
    return std::clamp(v, 0.0, 1.0);
}

void check_dims(int height, int width)
{
    if (height < 1 || width < 1)
        throw ShapeError("image dimensions must be positive, got " + std::to_string(height) + "x" +
                         std::to_string(width));
}

} // namespace

Image::Image(int height, int width, double fill) : height_(height), width_(width)
{
    check_dims(height, width);
    data_.assign(static_cast<std::size_t>(height) * width * kChannels, clamp_unit(fill));
}

Image::Image(int height, int width, std::vector<double> values)
    : height_(height), width_(width), data_(std::move(values))
{
    check_dims(height, width);
    if (data_.size() != static_cast<std::size_t>(height) * width * kChannels)
        throw ShapeError("image data length does not match " + std::to_string(height) + "x" +
                         std::to_string(width) + "x3");
    for (double& v : data_)
        v = clamp_unit(v);
}

void Image::set(int y, int x, int c, double v)
{
    data_[index(y, x, c)] = clamp_unit(v);
}

std::uint8_t quantize(double v) noexcept
{
    const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(scaled);
}

Image load_image(const fs::path& path)
{
    if (!fs::exists(path))
        throw DataError("image file not found: " + path.string());

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw DataError("cannot decode " + path.string() + ": " + png.message);

    png.format = PNG_FORMAT_RGB;
    if (png.width == 0 || png.height == 0) {
        png_image_free(&png);
        throw DataError("zero-dimension image: " + path.string());
    }
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
        const std::string message = png.message;
        png_image_free(&png);
        throw DataError("cannot decode " + path.string() + ": " + message);
    }

    std::vector<double> values(bytes.size());
    std::transform(bytes.begin(), bytes.end(), values.begin(),
                   [](std::uint8_t b) { return static_cast<double>(b) / 255.0; });
    return Image(static_cast<int>(png.height), static_cast<int>(png.width), std::move(values));
}

void save_image(const Image& img, const fs::path& path)
{
    if (img.empty())
        throw InvalidArgument("cannot save an empty image");
    std::vector<std::uint8_t> bytes(img.size());
    std::transform(img.values().begin(), img.values().end(), bytes.begin(), quantize);

    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width());
    png.height = static_cast<png_uint_32>(img.height());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr))
        throw DataError("cannot write " + path.string() + ": " + png.message);
}

Image crop(const Image& img, int top, int left, int height, int width)
{
    if (top < 0 || left < 0 || height < 1 || width < 1 || top + height > img.height() ||
        left + width > img.width())
        throw ShapeError("crop window outside image");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(height) * width * Image::kChannels);
    const auto src = img.values();
    for (int y = 0; y < height; ++y) {
        const std::size_t row = (static_cast<std::size_t>(top + y) * img.width() + left) * 3;
        out.insert(out.end(), src.begin() + row, src.begin() + row + std::size_t(width) * 3);
    }
    return Image(height, width, std::move(out));
}

Image random_crop(const Image& img, int size, Rng& rng)
{
    if (size < 1 || size > std::min(img.height(), img.width()))
        throw ShapeError("crop size " + std::to_string(size) + " exceeds image " +
                         std::to_string(img.height()) + "x" + std::to_string(img.width()));
    const auto top = static_cast<int>(rng.uniform_int(0, img.height() - size));
    const auto left = static_cast<int>(rng.uniform_int(0, img.width() - size));
    return crop(img, top, left, size, size);
}

Image center_crop(const Image& img, int height, int width)
{
    return crop(img, (img.height() - height) / 2, (img.width() - width) / 2, height, width);
}

Image resize_bilinear(const Image& img, int height, int width)
{
    check_dims(height, width);
    std::vector<double> out(static_cast<std::size_t>(height) * width * 3);
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                const double bottom = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out[(static_cast<std::size_t>(y) * width + x) * 3 + c] =
                    static_cast<double>((1 - wy) * top + wy * bottom);
            }
        }
    }
    return Image(height, width, std::move(out));
}

Image fit_square(const Image& img, int size)
{
    const int side = std::min(img.height(), img.width());
    Image square = center_crop(img, side, side);
    if (side == size)
        return square;
    if (side > size)
        return center_crop(square, size, size);
    return resize_bilinear(square, size, size);
}

Image hconcat(std::span<const Image> images)
{
    if (images.empty())
        throw InvalidArgument("hconcat of no images");
    const int height = images.front().height();
    int width = 0;
    for (const Image& im : images) {
        if (im.height() != height)
            throw ShapeError("hconcat height mismatch");
        width += im.width();
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(height) * width * 3);
    for (int y = 0; y < height; ++y)
        for (const Image& im : images) {
            const auto row = im.values().subspan(static_cast<std::size_t>(y) * im.width() * 3,
                                                 static_cast<std::size_t>(im.width()) * 3);
            out.insert(out.end(), row.begin(), row.end());
        }
    return Image(height, width, std::move(out));
}

namespace {

std::vector<fs::path> png_files(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file())
            continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

} // namespace

std::vector<NamedImage> load_image_folder(const fs::path& dir)
{
    std::vector<NamedImage> out;
    for (const auto& file : png_files(dir))
        out.push_back({file.stem().string(), load_image(file)});
    return out;
}

LabeledFolder load_class_folders(const fs::path& root)
{
    if (!fs::is_directory(root))
        throw DataError("not a directory: " + root.string());
    LabeledFolder result;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory())
            result.class_names.push_back(entry.path().filename().string());
    std::sort(result.class_names.begin(), result.class_names.end());
    for (std::size_t i = 0; i < result.class_names.size(); ++i)
        for (const auto& file : png_files(root / result.class_names[i])) {
            result.images.push_back(load_image(file));
            result.labels.push_back(static_cast<int>(i));
        }
    return result;
}

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

Stl10Data load_stl10_bin(const fs::path& data_path, const std::optional<fs::path>& label_path)
{
    const auto bytes = read_bytes(data_path);
    if (bytes.empty() || bytes.size() % kStl10RecordBytes != 0)
        throw FormatError("STL-10 data length " + std::to_string(bytes.size()) +
                        " is not a positive multiple of " + std::to_string(kStl10RecordBytes));
    const std::size_t count = bytes.size() / kStl10RecordBytes;
    constexpr std::size_t plane = kStl10Side * kStl10Side;

    Stl10Data data;
    data.images.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        const std::uint8_t* record = bytes.data() + n * kStl10RecordBytes;
        std::vector<double> values(kStl10RecordBytes);
        for (int c = 0; c < 3; ++c)
            for (int x = 0; x < kStl10Side; ++x)
                for (int y = 0; y < kStl10Side; ++y) {
                    const std::uint8_t b = record[c * plane + static_cast<std::size_t>(x) * kStl10Side + y];
                    values[(static_cast<std::size_t>(y) * kStl10Side + x) * 3 + c] = b / 255.0;
                }
        data.images.emplace_back(kStl10Side, kStl10Side, std::move(values));
    }

    if (label_path) {
        const auto labels = read_bytes(*label_path);
        if (labels.size() != count)
            throw DataError("STL-10 label count " + std::to_string(labels.size()) +
                            " does not match image count " + std::to_string(count));
        data.labels.assign(labels.begin(), labels.end());
    }
    return data;
}

DatasetSplit split_dataset(std::size_t count, double train_fraction, double validation_fraction,
                           std::uint64_t seed)
{
    if (train_fraction < 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1.0 + 1e-12)
        throw InvalidArgument("split fractions must be non-negative and sum to at most 1");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = count; i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * count));
    const auto n_val = std::min(count - n_train, static_cast<std::size_t>(std::llround(validation_fraction * count)));
    DatasetSplit split;
    split.seed = seed;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
    split.test.assign(order.begin() + n_train + n_val, order.end());
    return split;
}

} // namespace darnet
