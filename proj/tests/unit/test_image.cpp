#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "darnet/error.hpp"
#include "darnet/image.hpp"
#include "darnet/rng.hpp"
#include "temp_dir.hpp"

using namespace darnet;

TEST_CASE("rng is reproducible and uniform_int stays in range")
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());
    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.uniform_int(-3, 5);
        CHECK(v >= -3);
        CHECK(v <= 5);
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("normal variates have unit variance")
{
    Rng r(3);
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("image values are clamped and NaN is rejected")
{
    Image img(2, 2, std::vector<double>{-1, 0.5, 2, 0, 0, 0, 1, 1, 1, 0.25, 0.25, 0.25});
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(0, 0, 2) == 1.0);
    img.set(1, 1, 0, 7.0);
    CHECK(img.at(1, 1, 0) == 1.0);
    CHECK_THROWS_AS(Image(1, 1, std::vector<double>{std::nan(""), 0, 0}), NumericError);
    CHECK_THROWS(Image(1, 2, std::vector<double>{0, 0, 0}));
}

TEST_CASE("PNG round trip is exact on 8-bit values")
{
    TempDir dir;
    Rng rng(1);
    std::vector<double> v(5 * 7 * 3);
    for (auto& x : v)
        x = static_cast<double>(rng.uniform_int(0, 255)) / 255.0;
    const Image img(5, 7, v);
    save_image(img, dir.path() / "a.png");
    const Image back = load_image(dir.path() / "a.png");
    REQUIRE(back.height() == 5);
    REQUIRE(back.width() == 7);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(back.values()[i] == doctest::Approx(v[i]).epsilon(1e-12));
    CHECK(quantize(0.5) == 128);
    CHECK(quantize(1.0) == 255);
    CHECK_THROWS_AS(load_image(dir.path() / "missing.png"), DataError);
}

TEST_CASE("crop, resize and fit_square")
{
    Image img(10, 20, 0.0);
    img.set(3, 4, 1, 0.75);
    const Image c = crop(img, 3, 4, 2, 2);
    CHECK(c.at(0, 0, 1) == 0.75);
    CHECK_THROWS(crop(img, 9, 0, 2, 2));
    CHECK(center_crop(img, 10, 10).width() == 10);
    const Image r = resize_bilinear(Image(4, 4, 0.3), 9, 5);
    CHECK(r.height() == 9);
    CHECK(r.at(8, 4, 2) == doctest::Approx(0.3));
    const Image s = fit_square(img, 8);
    CHECK(s.height() == 8);
    CHECK(s.width() == 8);
    Rng rng(2);
    const Image rc = random_crop(img, 6, rng);
    CHECK(rc.height() == 6);
    const Image both[] = {Image(3, 2, 0.1), Image(3, 4, 0.9)};
    const Image h = hconcat(both);
    CHECK(h.width() == 6);
    CHECK(h.at(2, 5, 0) == doctest::Approx(0.9));
}

TEST_CASE("image folder loading is sorted by name")
{
    TempDir dir;
    save_image(Image(2, 2, 0.1), dir.path() / "b.png");
    save_image(Image(2, 2, 0.9), dir.path() / "a.png");
    std::ofstream(dir.path() / "notes.txt") << "x";
    const auto images = load_image_folder(dir.path());
    REQUIRE(images.size() == 2);
    CHECK(images[0].name == "a");
    CHECK(images[1].name == "b");

    std::filesystem::create_directories(dir.path() / "classes" / "cats");
    std::filesystem::create_directories(dir.path() / "classes" / "ants");
    save_image(Image(2, 2, 0.5), dir.path() / "classes" / "cats" / "x.png");
    save_image(Image(2, 2, 0.5), dir.path() / "classes" / "ants" / "y.png");
    const auto folders = load_class_folders(dir.path() / "classes");
    CHECK(folders.class_names == std::vector<std::string>{"ants", "cats"});
    CHECK(folders.labels == std::vector<int>{0, 1});
}

TEST_CASE("STL-10 binary records are column-major planes")
{
    TempDir dir;
    std::string bytes(2 * kStl10RecordBytes, '\0');
    // image 1, channel 2 (blue), row 3, column 5 -> plane offset col * 96 + row
    bytes[kStl10RecordBytes + 2 * 96 * 96 + 5 * 96 + 3] = static_cast<char>(255);
    std::ofstream(dir.path() / "x.bin", std::ios::binary) << bytes;
    std::ofstream(dir.path() / "y.bin", std::ios::binary) << std::string("\x01\x02", 2);
    const auto data = load_stl10_bin(dir.path() / "x.bin", dir.path() / "y.bin");
    REQUIRE(data.images.size() == 2);
    CHECK(data.images[1].at(3, 5, 2) == 1.0);
    CHECK(data.images[1].at(5, 3, 2) == 0.0);
    CHECK(data.labels == std::vector<int>{1, 2});
    std::ofstream(dir.path() / "bad.bin", std::ios::binary) << std::string(10, 'x');
    CHECK_THROWS_AS(load_stl10_bin(dir.path() / "bad.bin"), FormatError);
}

TEST_CASE("dataset split partitions every index once")
{
    const DatasetSplit s = split_dataset(100, 0.7, 0.1, 5);
    CHECK(s.train.size() == 70);
    CHECK(s.validation.size() == 10);
    CHECK(s.test.size() == 20);
    std::vector<int> seen(100, 0);
    for (auto* part : {&s.train, &s.validation, &s.test})
        for (auto i : *part)
            ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(split_dataset(100, 0.7, 0.1, 5).train == s.train);
}
