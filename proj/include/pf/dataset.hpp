#pragma once

// Dataset ingestion and generation: IDX image/label files (optionally
// gzip-compressed), CIFAR-10 binary batches, and a deterministic synthetic
// cluster benchmark.  Pixel bytes are normalized to [0, 1]; every parser
// either returns a fully validated Dataset or throws a typed error.

#include <cstdint>
#include <string>
#include <vector>

#include "pf/rng.hpp"
#include "pf/tensor.hpp"

namespace pf {

template <typename T>
struct Dataset {
    std::vector<Tensor<T>> images;    // each [H x W x C]
    std::vector<std::size_t> labels;  // one per image, in [0, n_classes)
    std::size_t n_classes = 0;
    std::string split;  // free-form tag ("train", "test", ...)

    std::size_t size() const { return images.size(); }
    void validate() const;
};

// Big-endian IDX pair (magic 0x00000803 for images, 0x00000801 for labels).
// Files may be gzip-compressed; both members are read through the same
// transparent decompressor.  Bytes are scaled by 1/255.
template <typename T>
Dataset<T> load_idx(const std::string& images_path, const std::string& labels_path, std::string split = "train");

// CIFAR-10 binary batches: each record is one label byte followed by 3072
// pixel bytes in channel-planar order (1024 R, 1024 G, 1024 B), which are
// interleaved here to 32x32x3.  `path` may be a single .bin file or a
// directory, in which case every *.bin inside is read in name order.
template <typename T>
Dataset<T> load_cifar_binary(const std::string& path, std::string split = "train");

// Synthetic benchmark: class k renders a Gaussian bump at a fixed position
// on a circle (positions depend only on k and the image size), plus
// i.i.d. pixel noise drawn from the seed.  Labels cycle 0,1,...,K-1 so any
// prefix subset stays class-balanced.  Linearly separable at noise 0.
template <typename T>
Dataset<T> synth_clusters(std::uint64_t seed, std::size_t n_classes, std::size_t samples, std::size_t image_h,
                          std::size_t image_w, std::size_t image_c = 1, double noise = 0.05,
                          std::string split = "train");

// First min(n, size) samples, keeping the split tag.
template <typename T>
Dataset<T> subset(const Dataset<T>& data, std::size_t n);

// Optional preprocessing: shift/scale each channel to mean 0, stddev 1
// over the whole dataset (constant channels are left centered only).
template <typename T>
void standardize_channels(Dataset<T>& data);

}  // namespace pf
