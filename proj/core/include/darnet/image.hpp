#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "darnet/rng.hpp"

namespace darnet {

// H x W x 3 raster, interleaved RGB, values clamped to [0,1].
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int height, int width, double fill = 0.0f);
    // Takes ownership of interleaved values; clamps to [0,1], rejects NaN.
    Image(int height, int width, std::vector<double> values);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return kChannels; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }
    // Writes are clamped so the range invariant cannot be broken.
    void set(int y, int x, int c, double v);

    std::span<const double> values() const noexcept { return data_; }

    bool operator==(const Image& other) const = default;

private:
    std::size_t index(int y, int x, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

// PNG decode; grayscale and palette inputs expand to RGB, alpha is dropped.
Image load_image(const std::filesystem::path& path);

// 8-bit RGB PNG, byte = floor(v * 255 + 0.5).
void save_image(const Image& img, const std::filesystem::path& path);

std::uint8_t quantize(double v) noexcept;

Image crop(const Image& img, int top, int left, int height, int width);
Image random_crop(const Image& img, int size, Rng& rng);
Image center_crop(const Image& img, int height, int width);
Image resize_bilinear(const Image& img, int height, int width);
// Center-crops to the target aspect, then resizes when the source is too small.
Image fit_square(const Image& img, int size);
// Side-by-side concatenation; heights must agree.
Image hconcat(std::span<const Image> images);

struct NamedImage {
    std::string name; // file stem
    Image image;
};

// All *.png files directly inside dir, sorted by file name.
std::vector<NamedImage> load_image_folder(const std::filesystem::path& dir);

struct LabeledFolder {
    std::vector<std::string> class_names; // sorted sub-directory names
    std::vector<Image> images;
    std::vector<int> labels; // index into class_names
};

// Layout root/<class-name>/*.png.
LabeledFolder load_class_folders(const std::filesystem::path& root);

struct Stl10Data {
    std::vector<Image> images;
    std::vector<int> labels; // empty when no label file was given
};

constexpr int kStl10Side = 96;
constexpr std::size_t kStl10RecordBytes = kStl10Side * kStl10Side * 3;

// STL-10 binary container: records of three 96x96 column-major byte planes;
// label file holds one byte per image.
Stl10Data load_stl10_bin(const std::filesystem::path& data_path,
                         const std::optional<std::filesystem::path>& label_path = std::nullopt);

// Train/validation/test partition of item indices.
struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

// Shuffles 0..count-1 with the seed and cuts by the fractions (test gets the rest).
DatasetSplit split_dataset(std::size_t count, double train_fraction, double validation_fraction,
                           std::uint64_t seed);

} // namespace darnet
