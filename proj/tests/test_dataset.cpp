#include "doctest.h"

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pf/dataset.hpp"
#include "pf/errors.hpp"

namespace fs = std::filesystem;

namespace {

fs::path fixture_dir() {
    auto dir = fs::temp_directory_path() / "pf_dataset_fixtures";
    fs::create_directories(dir);
    return dir;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    REQUIRE(out.good());
}

void write_gz(const fs::path& path, const std::vector<unsigned char>& bytes) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    REQUIRE(f != nullptr);
    REQUIRE(gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size())) == static_cast<int>(bytes.size()));
    gzclose(f);
}

void push_be32(std::vector<unsigned char>& b, std::uint32_t v) {
    b.push_back(static_cast<unsigned char>(v >> 24));
    b.push_back(static_cast<unsigned char>(v >> 16));
    b.push_back(static_cast<unsigned char>(v >> 8));
    b.push_back(static_cast<unsigned char>(v));
}

// Two 2x2 images with distinct byte values, labels 3 and 7.
std::vector<unsigned char> idx_images_fixture() {
    std::vector<unsigned char> b;
    push_be32(b, 0x00000803);
    push_be32(b, 2);
    push_be32(b, 2);
    push_be32(b, 2);
    for (unsigned char v : {0, 51, 102, 153, 204, 255, 10, 20}) b.push_back(v);
    return b;
}

std::vector<unsigned char> idx_labels_fixture() {
    std::vector<unsigned char> b;
    push_be32(b, 0x00000801);
    push_be32(b, 2);
    b.push_back(3);
    b.push_back(7);
    return b;
}

template <typename T>
T px(unsigned char byte) {
    return static_cast<T>(byte) * (T(1) / T(255));
}

}  // namespace

TEST_CASE("idx pair parses, normalizes, and labels correctly") {
    auto dir = fixture_dir();
    write_bytes(dir / "imgs.idx", idx_images_fixture());
    write_bytes(dir / "labels.idx", idx_labels_fixture());

    auto data = pf::load_idx<double>((dir / "imgs.idx").string(), (dir / "labels.idx").string(), "train");
    REQUIRE(data.size() == 2);
    CHECK(data.split == "train");
    CHECK(data.labels[0] == 3);
    CHECK(data.labels[1] == 7);
    REQUIRE(data.images[0].shape() == std::vector<std::size_t>{2, 2, 1});
    CHECK(data.images[0].at(0, 0, 0) == px<double>(0));
    CHECK(data.images[0].at(0, 1, 0) == px<double>(51));
    CHECK(data.images[0].at(1, 0, 0) == px<double>(102));
    CHECK(data.images[0].at(1, 1, 0) == px<double>(153));
    CHECK(data.images[1].at(0, 0, 0) == px<double>(204));
    CHECK(data.images[1].at(1, 1, 0) == px<double>(20));
}

TEST_CASE("gzip-compressed idx files load identically") {
    auto dir = fixture_dir();
    write_bytes(dir / "p_imgs.idx", idx_images_fixture());
    write_bytes(dir / "p_labels.idx", idx_labels_fixture());
    write_gz(dir / "imgs.idx.gz", idx_images_fixture());
    write_gz(dir / "labels.idx.gz", idx_labels_fixture());

    auto plain = pf::load_idx<float>((dir / "p_imgs.idx").string(), (dir / "p_labels.idx").string());
    auto gz = pf::load_idx<float>((dir / "imgs.idx.gz").string(), (dir / "labels.idx.gz").string());
    REQUIRE(gz.size() == plain.size());
    for (std::size_t i = 0; i < gz.size(); ++i) {
        CHECK(pf::bitwise_equal(gz.images[i], plain.images[i]));
        CHECK(gz.labels[i] == plain.labels[i]);
    }
}

TEST_CASE("idx error paths: missing, empty, bad magic, mismatched counts, truncation") {
    auto dir = fixture_dir();
    write_bytes(dir / "ok_imgs.idx", idx_images_fixture());
    write_bytes(dir / "ok_labels.idx", idx_labels_fixture());

    CHECK_THROWS_AS(pf::load_idx<float>((dir / "absent.idx").string(), (dir / "ok_labels.idx").string()),
                    pf::IoError);

    write_bytes(dir / "empty.idx", {});
    CHECK_THROWS_AS(pf::load_idx<float>((dir / "empty.idx").string(), (dir / "ok_labels.idx").string()),
                    pf::FormatError);

    auto bad_magic = idx_images_fixture();
    bad_magic[3] = 0x99;
    write_bytes(dir / "badmagic.idx", bad_magic);
    CHECK_THROWS_AS(pf::load_idx<float>((dir / "badmagic.idx").string(), (dir / "ok_labels.idx").string()),
                    pf::FormatError);

    auto labels3 = idx_labels_fixture();
    labels3[7] = 3;  // count says 3, data still has 2
    labels3.push_back(1);
    write_bytes(dir / "labels3.idx", labels3);
    CHECK_THROWS_AS(pf::load_idx<float>((dir / "ok_imgs.idx").string(), (dir / "labels3.idx").string()),
                    pf::DataError);

    auto truncated = idx_images_fixture();
    truncated.resize(truncated.size() - 3);
    write_bytes(dir / "trunc.idx", truncated);
    CHECK_THROWS_AS(pf::load_idx<float>((dir / "trunc.idx").string(), (dir / "ok_labels.idx").string()),
                    pf::FormatError);
}

TEST_CASE("cifar binary records interleave planar channels") {
    auto dir = fixture_dir();
    std::vector<unsigned char> rec(1 + 3 * 1024);
    rec[0] = 7;  // label
    for (std::size_t p = 0; p < 1024; ++p) {
        rec[1 + p] = static_cast<unsigned char>(p % 256);  // red plane
        rec[1 + 1024 + p] = 100;                           // green plane
        rec[1 + 2048 + p] = 200;                           // blue plane
    }
    write_bytes(dir / "batch.bin", rec);

    auto data = pf::load_cifar_binary<double>((dir / "batch.bin").string(), "test");
    REQUIRE(data.size() == 1);
    CHECK(data.labels[0] == 7);
    CHECK(data.split == "test");
    const auto& img = data.images[0];
    REQUIRE(img.shape() == std::vector<std::size_t>{32, 32, 3});
    CHECK(img.at(0, 0, 0) == px<double>(0));
    CHECK(img.at(0, 1, 0) == px<double>(1));
    CHECK(img.at(1, 0, 0) == px<double>(32));  // pixel index 32 lives at row 1, column 0
    CHECK(img.at(0, 0, 1) == px<double>(100));
    CHECK(img.at(0, 0, 2) == px<double>(200));

    // Directory mode finds the batch file.
    auto sub = dir / "cifar_dir";
    fs::create_directories(sub);
    write_bytes(sub / "data_batch_1.bin", rec);
    auto from_dir = pf::load_cifar_binary<double>(sub.string());
    REQUIRE(from_dir.size() == 1);
    CHECK(pf::bitwise_equal(from_dir.images[0], img));
}

TEST_CASE("cifar error paths: truncation and out-of-range labels") {
    auto dir = fixture_dir();
    std::vector<unsigned char> rec(1 + 3 * 1024, 0);
    rec.resize(3000);  // not a multiple of the record size
    write_bytes(dir / "short.bin", rec);
    CHECK_THROWS_AS(pf::load_cifar_binary<float>((dir / "short.bin").string()), pf::FormatError);

    std::vector<unsigned char> bad(1 + 3 * 1024, 0);
    bad[0] = 12;
    write_bytes(dir / "badlabel.bin", bad);
    CHECK_THROWS_AS(pf::load_cifar_binary<float>((dir / "badlabel.bin").string()), pf::DataError);

    write_bytes(dir / "empty.bin", {});
    CHECK_THROWS_AS(pf::load_cifar_binary<float>((dir / "empty.bin").string()), pf::FormatError);
}

TEST_CASE("synthetic clusters: determinism, balance, range, and separability") {
    auto a = pf::synth_clusters<float>(42, 4, 64, 8, 8, 1, 0.05);
    auto b = pf::synth_clusters<float>(42, 4, 64, 8, 8, 1, 0.05);
    REQUIRE(a.size() == 64);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(pf::bitwise_equal(a.images[i], b.images[i]));
        CHECK(a.labels[i] == i % 4);  // round-robin labels keep prefixes balanced
    }
    auto c = pf::synth_clusters<float>(43, 4, 64, 8, 8, 1, 0.05);
    CHECK_FALSE(pf::bitwise_equal(a.images[0], c.images[0]));
    for (const auto& img : a.images)
        for (std::size_t p = 0; p < img.size(); ++p) {
            CHECK(img[p] >= 0.0f);
            CHECK(img[p] <= 1.0f);
        }

    // Noise 0: within-class identical, across-class different.
    auto clean = pf::synth_clusters<double>(1, 3, 12, 8, 8, 1, 0.0);
    CHECK(pf::bitwise_equal(clean.images[0], clean.images[3]));
    CHECK(pf::bitwise_equal(clean.images[1], clean.images[4]));
    CHECK_FALSE(pf::bitwise_equal(clean.images[0], clean.images[1]));

    // Nearest-centroid linear probe is perfect at noise 0.
    std::vector<pf::Tensor<double>> centroid(3, pf::Tensor<double>({8, 8, 1}));
    std::vector<double> count(3, 0.0);
    for (std::size_t i = 0; i < clean.size(); ++i) {
        for (std::size_t p = 0; p < clean.images[i].size(); ++p) centroid[clean.labels[i]][p] += clean.images[i][p];
        count[clean.labels[i]] += 1.0;
    }
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t p = 0; p < centroid[k].size(); ++p) centroid[k][p] /= count[k];
    std::size_t correct = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        double best = -1.0;
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            double dot = 0.0, norm2 = 0.0;
            for (std::size_t p = 0; p < centroid[k].size(); ++p) {
                dot += centroid[k][p] * clean.images[i][p];
                norm2 += centroid[k][p] * centroid[k][p];
            }
            const double score = dot - 0.5 * norm2;  // linear in the pixels
            if (best < 0.0 || score > best) {
                best = score;
                best_k = k;
            }
        }
        if (best_k == clean.labels[i]) ++correct;
    }
    CHECK(correct == clean.size());
}

TEST_CASE("subset keeps a prefix and the split tag") {
    auto data = pf::synth_clusters<float>(5, 2, 10, 4, 4, 1, 0.1, "train");
    auto head = pf::subset(data, 4);
    REQUIRE(head.size() == 4);
    CHECK(head.split == "train");
    CHECK(head.n_classes == 2);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(pf::bitwise_equal(head.images[i], data.images[i]));
        CHECK(head.labels[i] == data.labels[i]);
    }
    CHECK(pf::subset(data, 100).size() == 10);  // clamped
}

TEST_CASE("per-channel standardization zeroes means and unitizes spread") {
    auto data = pf::synth_clusters<double>(9, 3, 30, 6, 6, 2, 0.2);
    pf::standardize_channels(data);
    const std::size_t channels = 2, per_image = 36;
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0, var = 0.0;
        const double n = static_cast<double>(per_image * data.size());
        for (const auto& img : data.images)
            for (std::size_t p = 0; p < per_image; ++p) mean += img[p * channels + c];
        mean /= n;
        for (const auto& img : data.images)
            for (std::size_t p = 0; p < per_image; ++p) {
                const double d = img[p * channels + c] - mean;
                var += d * d;
            }
        var /= n;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var - 1.0) < 1e-9);
    }
}

TEST_CASE("dataset validation rejects inconsistent contents") {
    auto data = pf::synth_clusters<float>(3, 2, 6, 4, 4, 1, 0.0);
    CHECK_NOTHROW(data.validate());
    auto broken = data;
    broken.labels[2] = 9;
    CHECK_THROWS_AS(broken.validate(), pf::DataError);
    broken = data;
    broken.labels.pop_back();
    CHECK_THROWS_AS(broken.validate(), pf::DataError);
    broken = data;
    broken.images[1] = pf::Tensor<float>({3, 4, 1});
    CHECK_THROWS_AS(broken.validate(), pf::DataError);
}
