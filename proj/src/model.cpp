#include "pf/model.hpp"

namespace pf {

void ModelConfig::validate() const {
    if (branches == 0) throw ConfigError("config: need at least one branch");
    if (layers == 0) throw ConfigError("config: need at least one layer per branch");
    if (classes < 2) throw ConfigError("config: need at least two classes");
    if (width == 0 || heads == 0) throw ConfigError("config: width and heads must be positive");
    if (width % heads != 0)
        throw ConfigError("config: heads (" + std::to_string(heads) + ") must divide width (" +
                          std::to_string(width) + ")");
    if (ffn_width == 0) throw ConfigError("config: ffn_width must be positive");
    if (patch == 0 || image_h == 0 || image_w == 0 || image_c == 0)
        throw ConfigError("config: image and patch extents must be positive");
    if (image_h % patch != 0 || image_w % patch != 0)
        throw ConfigError("config: patch " + std::to_string(patch) + " must tile the " + std::to_string(image_h) +
                          "x" + std::to_string(image_w) + " image exactly");
}

template <typename T>
void ParaFormerModel<T>::validate() const {
    config.validate();
    if (branches.size() != config.branches)
        throw ShapeError("model: " + std::to_string(branches.size()) + " branches, config says " +
                         std::to_string(config.branches));
    for (std::size_t j = 0; j < branches.size(); ++j) {
        if (branches[j].layers.size() != config.layers)
            throw ShapeError("model: branch " + std::to_string(j + 1) + " has " +
                             std::to_string(branches[j].layers.size()) + " layers, config says " +
                             std::to_string(config.layers));
        branches[j].validate(config.width);
    }
    if (embed.proj.rank() != 2 || embed.proj.rows() != config.patch_dim() || embed.proj.cols() != config.width)
        throw ShapeError("model: patch projection is " + embed.proj.shape_string());
    if (embed.pos.rank() != 2 || embed.pos.rows() != config.tokens() || embed.pos.cols() != config.width)
        throw ShapeError("model: positional table is " + embed.pos.shape_string());
    if (agg_blocks.size() != config.branches)
        throw ShapeError("model: " + std::to_string(agg_blocks.size()) + " aggregator blocks for " +
                         std::to_string(config.branches) + " branches");
    for (std::size_t j = 0; j < agg_blocks.size(); ++j)
        if (agg_blocks[j].rank() != 2 || agg_blocks[j].rows() != config.width ||
            agg_blocks[j].cols() != config.classes)
            throw ShapeError("model: aggregator block " + std::to_string(j + 1) + " is " +
                             agg_blocks[j].shape_string());
    if (agg_bias.rank() != 1 || agg_bias.size() != config.classes)
        throw ShapeError("model: aggregator bias is " + agg_bias.shape_string());
    if (frozen_branches > config.branches)
        throw ShapeError("model: " + std::to_string(frozen_branches) + " frozen branches out of " +
                         std::to_string(config.branches));
}

namespace {

template <typename T>
Tensor<T> truncated_normal_tensor(Rng& rng, std::vector<std::size_t> shape, double stddev = 0.02) {
    Tensor<T> t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.truncated_normal(stddev));
    return t;
}

}  // namespace

template <typename T>
ParaFormerModel<T> init_model(const ModelConfig& config) {
    config.validate();
    Rng rng(config.init_seed);
    ParaFormerModel<T> m;
    m.config = config;
    m.embed.proj = truncated_normal_tensor<T>(rng, {config.patch_dim(), config.width});
    m.embed.pos = truncated_normal_tensor<T>(rng, {config.tokens(), config.width});
    const std::size_t d = config.width / config.heads;
    for (std::size_t b = 0; b < config.branches; ++b) {
        BranchWeights<T> branch;
        for (std::size_t l = 0; l < config.layers; ++l) {
            LayerWeights<T> layer;
            for (std::size_t h = 0; h < config.heads; ++h)
                layer.attn.heads.push_back({truncated_normal_tensor<T>(rng, {config.width, d}),
                                            truncated_normal_tensor<T>(rng, {config.width, d}),
                                            truncated_normal_tensor<T>(rng, {config.width, d})});
            layer.attn.w_o = truncated_normal_tensor<T>(rng, {config.heads * d, config.width});
            layer.ffn.w1 = truncated_normal_tensor<T>(rng, {config.width, config.ffn_width});
            layer.ffn.b1 = Tensor<T>({config.ffn_width});
            layer.ffn.w2 = truncated_normal_tensor<T>(rng, {config.ffn_width, config.width});
            layer.ffn.b2 = Tensor<T>({config.width});
            branch.layers.push_back(std::move(layer));
        }
        m.branches.push_back(std::move(branch));
        // Zero aggregator: a new branch starts as an exact no-op on logits.
        m.agg_blocks.push_back(Tensor<T>({config.width, config.classes}));
    }
    m.agg_bias = Tensor<T>({config.classes});
    m.validate();
    return m;
}

template <typename T>
Tensor<T> extract_patches(const Tensor<T>& image, const ModelConfig& config) {
    if (image.rank() != 3 || image.extent(0) != config.image_h || image.extent(1) != config.image_w ||
        image.extent(2) != config.image_c)
        throw ShapeError("embed: image is " + image.shape_string() + ", expected [" + std::to_string(config.image_h) +
                         "x" + std::to_string(config.image_w) + "x" + std::to_string(config.image_c) + "]");
    const std::size_t p = config.patch;
    const std::size_t grid_w = config.image_w / p;
    Tensor<T> patches({config.tokens(), config.patch_dim()});
    for (std::size_t t = 0; t < config.tokens(); ++t) {
        const std::size_t by = t / grid_w, bx = t % grid_w;
        T* row = patches.data() + t * config.patch_dim();
        std::size_t k = 0;
        for (std::size_t dy = 0; dy < p; ++dy)
            for (std::size_t dx = 0; dx < p; ++dx)
                for (std::size_t c = 0; c < config.image_c; ++c)
                    row[k++] = image[((by * p + dy) * config.image_w + (bx * p + dx)) * config.image_c + c];
    }
    return patches;
}

template <typename T>
Tensor<T> embed_image(const Tensor<T>& image, const ParaFormerModel<T>& model) {
    return add(matmul(extract_patches(image, model.config), model.embed.proj), model.embed.pos);
}

namespace {

template <typename T>
void check_branch_index(const ParaFormerModel<T>& model, std::size_t branch, const char* op) {
    if (branch == 0 || branch > model.branches.size())
        throw IndexError(std::string(op) + ": branch " + std::to_string(branch) + " out of range 1.." +
                         std::to_string(model.branches.size()));
}

}  // namespace

template <typename T>
Tensor<T> branch_features(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t branch) {
    check_branch_index(model, branch, "branch_features");
    if (model.counter) model.counter->branch_forwards.fetch_add(1, std::memory_order_relaxed);
    return branch_forward(x0, model.branches[branch - 1], model.config.activation, model.config.pre_norm);
}

template <typename T>
Tensor<T> branch_term(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t branch) {
    return matmul(mean_rows(branch_features(x0, model, branch)), model.agg_blocks[branch - 1]);
}

template <typename T>
Tensor<T> forward_stage(const Tensor<T>& x0, const ParaFormerModel<T>& model, std::size_t stage) {
    if (stage == 0 || stage > model.branches.size())
        throw IndexError("forward_stage: stage " + std::to_string(stage) + " out of range 1.." +
                         std::to_string(model.branches.size()));
    // bias + term_1 + ... + term_stage, strictly in that association.
    Tensor<T> logits = model.agg_bias.reshaped({std::size_t(1), model.config.classes});
    for (std::size_t j = 1; j <= stage; ++j) logits = add(logits, branch_term(x0, model, j));
    return logits.reshaped({model.config.classes});
}

template <typename T>
Tensor<T> predict(const Tensor<T>& x0, const ParaFormerModel<T>& model) {
    return forward_stage(x0, model, model.branches.size());
}

template <typename T>
std::vector<ParamRef<T>> param_refs(ParaFormerModel<T>& model) {
    std::vector<ParamRef<T>> out;
    out.push_back({"embed.proj", &model.embed.proj, ParamGroup::embedding, 0});
    out.push_back({"embed.pos", &model.embed.pos, ParamGroup::embedding, 0});
    for (std::size_t b = 0; b < model.branches.size(); ++b) {
        const std::string bp = "branch" + std::to_string(b + 1) + ".";
        for (std::size_t l = 0; l < model.branches[b].layers.size(); ++l) {
            LayerWeights<T>& layer = model.branches[b].layers[l];
            const std::string lp = bp + "layer" + std::to_string(l + 1) + ".";
            for (std::size_t h = 0; h < layer.attn.heads.size(); ++h) {
                const std::string hp = lp + "attn.head" + std::to_string(h + 1) + ".";
                out.push_back({hp + "wq", &layer.attn.heads[h].w_q, ParamGroup::branch, b + 1});
                out.push_back({hp + "wk", &layer.attn.heads[h].w_k, ParamGroup::branch, b + 1});
                out.push_back({hp + "wv", &layer.attn.heads[h].w_v, ParamGroup::branch, b + 1});
            }
            out.push_back({lp + "attn.wo", &layer.attn.w_o, ParamGroup::branch, b + 1});
            out.push_back({lp + "ffn.w1", &layer.ffn.w1, ParamGroup::branch, b + 1});
            out.push_back({lp + "ffn.b1", &layer.ffn.b1, ParamGroup::branch, b + 1});
            out.push_back({lp + "ffn.w2", &layer.ffn.w2, ParamGroup::branch, b + 1});
            out.push_back({lp + "ffn.b2", &layer.ffn.b2, ParamGroup::branch, b + 1});
        }
    }
    for (std::size_t b = 0; b < model.agg_blocks.size(); ++b)
        out.push_back({"agg.block" + std::to_string(b + 1), &model.agg_blocks[b], ParamGroup::aggregator, b + 1});
    out.push_back({"agg.bias", &model.agg_bias, ParamGroup::aggregator_bias, 0});
    return out;
}

template <typename T>
std::size_t param_count(const ParaFormerModel<T>& model) {
    auto refs = param_refs(const_cast<ParaFormerModel<T>&>(model));
    std::size_t n = 0;
    for (const auto& r : refs) n += r.tensor->size();
    return n;
}

#define PF_INSTANTIATE_MODEL(T)                                                                      \
    template struct ParaFormerModel<T>;                                                              \
    template ParaFormerModel<T> init_model<T>(const ModelConfig&);                                   \
    template Tensor<T> extract_patches<T>(const Tensor<T>&, const ModelConfig&);                     \
    template Tensor<T> embed_image<T>(const Tensor<T>&, const ParaFormerModel<T>&);                  \
    template Tensor<T> branch_features<T>(const Tensor<T>&, const ParaFormerModel<T>&, std::size_t); \
    template Tensor<T> branch_term<T>(const Tensor<T>&, const ParaFormerModel<T>&, std::size_t);     \
    template Tensor<T> forward_stage<T>(const Tensor<T>&, const ParaFormerModel<T>&, std::size_t);   \
    template Tensor<T> predict<T>(const Tensor<T>&, const ParaFormerModel<T>&);                      \
    template std::vector<ParamRef<T>> param_refs<T>(ParaFormerModel<T>&);                            \
    template std::size_t param_count<T>(const ParaFormerModel<T>&);

PF_INSTANTIATE_MODEL(float)
PF_INSTANTIATE_MODEL(double)

#undef PF_INSTANTIATE_MODEL

}  // namespace pf
