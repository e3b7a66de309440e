#include "pf/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "pf/errors.hpp"

namespace pf {

template <typename T>
void Dataset<T>::validate() const {
    if (images.size() != labels.size())
        throw DataError("dataset: " + std::to_string(images.size()) + " images but " + std::to_string(labels.size()) +
                        " labels");
    if (n_classes < 2) throw DataError("dataset: need at least two classes");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= n_classes)
            throw DataError("dataset: label " + std::to_string(labels[i]) + " at index " + std::to_string(i) +
                            " outside [0, " + std::to_string(n_classes) + ")");
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].rank() != 3)
            throw DataError("dataset: image " + std::to_string(i) + " has shape " + images[i].shape_string());
        if (i > 0 && images[i].shape() != images[0].shape())
            throw DataError("dataset: image " + std::to_string(i) + " shape " + images[i].shape_string() +
                            " differs from " + images[0].shape_string());
    }
}

namespace {

// Reads a whole file through zlib's gz layer, which hands back plain files
// unchanged and inflates .gz transparently.
std::vector<unsigned char> read_file_bytes(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("cannot open " + path);
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes;
    unsigned char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0) bytes.insert(bytes.end(), buf, buf + n);
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw FormatError(path + ": corrupt compressed stream");
    return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
    if (off + 4 > b.size()) throw FormatError(path + ": truncated header");
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) | (std::uint32_t(b[off + 2]) << 8) |
           std::uint32_t(b[off + 3]);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPlane = kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + 3 * kCifarPlane;
constexpr std::size_t kCifarClasses = 10;

}  // namespace

template <typename T>
Dataset<T> load_idx(const std::string& images_path, const std::string& labels_path, std::string split) {
    const auto ib = read_file_bytes(images_path);
    const auto lb = read_file_bytes(labels_path);

    if (read_be32(ib, 0, images_path) != kIdxImagesMagic)
        throw FormatError(images_path + ": bad magic, expected an IDX image file");
    if (read_be32(lb, 0, labels_path) != kIdxLabelsMagic)
        throw FormatError(labels_path + ": bad magic, expected an IDX label file");

    const std::size_t count = read_be32(ib, 4, images_path);
    const std::size_t rows = read_be32(ib, 8, images_path);
    const std::size_t cols = read_be32(ib, 12, images_path);
    const std::size_t label_count = read_be32(lb, 4, labels_path);
    if (count != label_count)
        throw DataError(images_path + ": " + std::to_string(count) + " images but " + std::to_string(label_count) +
                        " labels in " + labels_path);
    if (rows == 0 || cols == 0) throw FormatError(images_path + ": zero image extent");
    if (ib.size() != 16 + count * rows * cols)
        throw FormatError(images_path + ": expected " + std::to_string(16 + count * rows * cols) + " bytes, found " +
                          std::to_string(ib.size()));
    if (lb.size() != 8 + count) throw FormatError(labels_path + ": expected " + std::to_string(8 + count) +
                                                  " bytes, found " + std::to_string(lb.size()));

    Dataset<T> data;
    data.split = std::move(split);
    data.n_classes = kCifarClasses;  // ten classes in every IDX set this tool consumes
    data.images.reserve(count);
    data.labels.reserve(count);
    const T inv = T(1) / T(255);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor<T> img({rows, cols, std::size_t(1)});
        const unsigned char* src = ib.data() + 16 + i * rows * cols;
        for (std::size_t k = 0; k < rows * cols; ++k) img[k] = static_cast<T>(src[k]) * inv;
        data.images.push_back(std::move(img));
        data.labels.push_back(lb[8 + i]);
    }
    data.validate();
    return data;
}

template <typename T>
Dataset<T> load_cifar_binary(const std::string& path, std::string split) {
    std::vector<std::string> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& e : std::filesystem::directory_iterator(path))
            if (e.path().extension() == ".bin") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw IoError(path + ": no .bin batch files found");
    } else {
        files.push_back(path);
    }

    Dataset<T> data;
    data.split = std::move(split);
    data.n_classes = kCifarClasses;
    const T inv = T(1) / T(255);
    for (const auto& file : files) {
        const auto bytes = read_file_bytes(file);
        if (bytes.empty() || bytes.size() % kCifarRecord != 0)
            throw FormatError(file + ": size " + std::to_string(bytes.size()) + " is not a positive multiple of " +
                              std::to_string(kCifarRecord) + "-byte records");
        const std::size_t records = bytes.size() / kCifarRecord;
        for (std::size_t r = 0; r < records; ++r) {
            const unsigned char* rec = bytes.data() + r * kCifarRecord;
            if (rec[0] >= kCifarClasses)
                throw DataError(file + ": record " + std::to_string(r) + " has label " + std::to_string(rec[0]));
            Tensor<T> img({kCifarSide, kCifarSide, std::size_t(3)});
            for (std::size_t p = 0; p < kCifarPlane; ++p)
                for (std::size_t c = 0; c < 3; ++c) img[p * 3 + c] = static_cast<T>(rec[1 + c * kCifarPlane + p]) * inv;
            data.images.push_back(std::move(img));
            data.labels.push_back(rec[0]);
        }
    }
    data.validate();
    return data;
}

template <typename T>
Dataset<T> synth_clusters(std::uint64_t seed, std::size_t n_classes, std::size_t samples, std::size_t image_h,
                          std::size_t image_w, std::size_t image_c, double noise, std::string split) {
    if (n_classes < 2) throw DataError("synth: need at least two classes");
    if (samples == 0) throw DataError("synth: need at least one sample");
    if (image_h == 0 || image_w == 0 || image_c == 0) throw DataError("synth: image extents must be positive");

    // One template per class: a Gaussian bump centered on a circle so
    // classes never collide regardless of seed.
    const double cy0 = 0.5 * static_cast<double>(image_h - 1);
    const double cx0 = 0.5 * static_cast<double>(image_w - 1);
    const double radius = 0.3 * static_cast<double>(std::min(image_h, image_w));
    const double sigma = std::max(1.0, 0.12 * static_cast<double>(std::min(image_h, image_w)));
    std::vector<Tensor<T>> templates;
    templates.reserve(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(n_classes);
        const double cy = cy0 + radius * std::sin(angle);
        const double cx = cx0 + radius * std::cos(angle);
        Tensor<T> tpl({image_h, image_w, image_c});
        for (std::size_t y = 0; y < image_h; ++y)
            for (std::size_t x = 0; x < image_w; ++x) {
                const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                const double bump = std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
                for (std::size_t c = 0; c < image_c; ++c) {
                    // Channels fade with index so multi-channel classes stay distinct.
                    const double v = bump * (1.0 - 0.25 * static_cast<double>(c) / static_cast<double>(image_c));
                    tpl[(y * image_w + x) * image_c + c] = static_cast<T>(v);
                }
            }
        templates.push_back(std::move(tpl));
    }

    Rng rng(seed);
    Dataset<T> data;
    data.split = std::move(split);
    data.n_classes = n_classes;
    data.images.reserve(samples);
    data.labels.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t k = i % n_classes;
        Tensor<T> img = templates[k];
        if (noise > 0.0) {
            for (std::size_t p = 0; p < img.size(); ++p) {
                const double v = static_cast<double>(img[p]) + noise * rng.normal();
                img[p] = static_cast<T>(std::clamp(v, 0.0, 1.0));
            }
        }
        data.images.push_back(std::move(img));
        data.labels.push_back(k);
    }
    data.validate();
    return data;
}

template <typename T>
Dataset<T> subset(const Dataset<T>& data, std::size_t n) {
    const std::size_t keep = std::min(n, data.size());
    Dataset<T> out;
    out.split = data.split;
    out.n_classes = data.n_classes;
    out.images.assign(data.images.begin(), data.images.begin() + keep);
    out.labels.assign(data.labels.begin(), data.labels.begin() + keep);
    return out;
}

template <typename T>
void standardize_channels(Dataset<T>& data) {
    if (data.images.empty()) return;
    const std::size_t channels = data.images[0].extent(2);
    const std::size_t per_image = data.images[0].size() / channels;
    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    const double n = static_cast<double>(per_image * data.images.size());
    for (const auto& img : data.images)
        for (std::size_t p = 0; p < per_image; ++p)
            for (std::size_t c = 0; c < channels; ++c) mean[c] += img[p * channels + c];
    for (auto& m : mean) m /= n;
    for (const auto& img : data.images)
        for (std::size_t p = 0; p < per_image; ++p)
            for (std::size_t c = 0; c < channels; ++c) {
                const double d = img[p * channels + c] - mean[c];
                var[c] += d * d;
            }
    for (auto& v : var) v /= n;
    for (auto& img : data.images)
        for (std::size_t p = 0; p < per_image; ++p)
            for (std::size_t c = 0; c < channels; ++c) {
                const double sd = std::sqrt(var[c]);
                const double centered = img[p * channels + c] - mean[c];
                img[p * channels + c] = static_cast<T>(sd > 0.0 ? centered / sd : centered);
            }
}

#define PF_INSTANTIATE_DATASET(T)                                                                                \
    template struct Dataset<T>;                                                                                  \
    template Dataset<T> load_idx<T>(const std::string&, const std::string&, std::string);                        \
    template Dataset<T> load_cifar_binary<T>(const std::string&, std::string);                                   \
    template Dataset<T> synth_clusters<T>(std::uint64_t, std::size_t, std::size_t, std::size_t, std::size_t,     \
                                          std::size_t, double, std::string);                                     \
    template Dataset<T> subset<T>(const Dataset<T>&, std::size_t);                                               \
    template void standardize_channels<T>(Dataset<T>&);

PF_INSTANTIATE_DATASET(float)
PF_INSTANTIATE_DATASET(double)

#undef PF_INSTANTIATE_DATASET

}  // namespace pf
