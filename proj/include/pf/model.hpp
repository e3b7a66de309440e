#pragma once

// The branch-parallel model: a patch embedding shared by all branches, N
// independent branches of L layers, and a linear aggregator that sums one
// [D x classes] block per branch over mean-pooled branch features.
//
// Stage i uses branches 1..i only.  Logit terms are reduced in ascending
// branch order, left-associated, so sequential and parallel evaluation can
// agree bitwise and stage i extends stage i-1 by exactly one term.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pf/layer.hpp"

namespace pf {

struct ModelConfig {
    std::size_t branches = 4;     // N
    std::size_t layers = 2;       // L per branch
    std::size_t width = 192;      // D
    std::size_t heads = 3;        // h; head dim is width / heads
    std::size_t ffn_width = 768;  // FFN hidden size
    std::size_t patch = 7;        // square patch side
    std::size_t image_h = 28;
    std::size_t image_w = 28;
    std::size_t image_c = 1;
    std::size_t classes = 10;
    Activation activation = Activation::gelu;
    bool pre_norm = false;
    std::uint64_t init_seed = 1;

    std::size_t tokens() const { return (image_h / patch) * (image_w / patch); }
    std::size_t patch_dim() const { return patch * patch * image_c; }
    void validate() const;
};

template <typename T>
struct EmbeddingWeights {
    Tensor<T> proj;  // [patch_dim x D]
    Tensor<T> pos;   // [tokens x D], learned additive table
};

// Counts branch evaluations; lives behind a pointer so models stay copyable
// while each copy gets a fresh counter.
struct EvalCounter {
    std::atomic<std::uint64_t> branch_forwards{0};
};

template <typename T>
struct ParaFormerModel {
    ModelConfig config;
    EmbeddingWeights<T> embed;
    std::vector<BranchWeights<T>> branches;
    std::vector<Tensor<T>> agg_blocks;  // per branch, [D x classes]
    Tensor<T> agg_bias;                 // [classes]
    // Branches 1..frozen_branches (and their aggregator blocks, the
    // embedding, and the bias) are excluded from training updates.
    std::size_t frozen_branches = 0;

    std::unique_ptr<EvalCounter> counter = std::make_unique<EvalCounter>();

    ParaFormerModel() = default;
    ParaFormerModel(ParaFormerModel&&) noexcept = default;
    ParaFormerModel& operator=(ParaFormerModel&&) noexcept = default;
    ParaFormerModel(const ParaFormerModel& o)
        : config(o.config),
          embed(o.embed),
          branches(o.branches),
          agg_blocks(o.agg_blocks),
          agg_bias(o.agg_bias),
          frozen_branches(o.frozen_branches),
          counter(std::make_unique<EvalCounter>()) {}
    ParaFormerModel& operator=(const ParaFormerModel& o) {
        if (this != &o) {
            config = o.config;
            embed = o.embed;
            branches = o.branches;
            agg_blocks = o.agg_blocks;
            agg_bias = o.agg_bias;
            frozen_branches = o.frozen_branches;
            counter = std::make_unique<EvalCounter>();
        }
        return *this;
    }

    void validate() const;
};

// Deterministic initialization from config.init_seed: truncated normal
// (stddev 0.02, cut at 2 sigma) for projections, zero biases, and an
// all-zero aggregator so every stage starts at the bias logits.
template <typename T>
ParaFormerModel<T> init_model(const ModelConfig& config);

// [tokens x patch_dim] patch matrix from an [H x W x C] image; patches scan
// the image in raster order, each flattened row-major with channel last.
template <typename T>
Tensor<T> extract_patches(const Tensor<T>& image, const ModelConfig& config);

// Patch embedding: extract_patches(image) @ proj + pos  ->  [tokens x D].
template <typename T>
Tensor<T> embed_image(const Tensor<T>& image, const ParaFormerModel<T>& model);

// Features of one branch (1-based) on an embedded input: [tokens x D].
template <typename T>
Tensor<T> branch_features(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t branch);

// One branch's logit contribution: mean-pooled features times its
// aggregator block, [1 x classes].
template <typename T>
Tensor<T> branch_term(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t branch);

// Stage logits (stage in 1..N): bias + sum of the first `stage` terms.
template <typename T>
Tensor<T> forward_stage(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t stage);

// Full-width prediction, forward_stage at stage N.
template <typename T>
Tensor<T> predict(const Tensor<T>& x0, const ParaFormerModel<T>& model);

enum class ParamGroup { embedding, branch, aggregator, aggregator_bias };

template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* tensor;
    ParamGroup group;
    std::size_t branch;  // 1-based; 0 when not branch-scoped
};

// Every trainable tensor in a fixed canonical order (embedding, branches in
// order with their layers/heads, aggregator blocks, bias).  The trainer, the
// checkpoint format, and the freeze logic all walk this one enumeration.
template <typename T>
std::vector<ParamRef<T>> param_refs(ParaFormerModel<T>& model);

template <typename T>
std::size_t param_count(const ParaFormerModel<T>& model);

}  // namespace pf
