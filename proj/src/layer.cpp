#include "pf/layer.hpp"

namespace pf {

template <typename T>
void FfnWeights<T>::validate(std::size_t width) const {
    if (w1.rank() != 2 || w1.rows() != width)
        throw ShapeError("ffn: w1 is " + w1.shape_string() + ", expected [" + std::to_string(width) + " x hidden]");
    const std::size_t hidden = w1.cols();
    if (b1.rank() != 1 || b1.size() != hidden)
        throw ShapeError("ffn: b1 is " + b1.shape_string() + ", expected [" + std::to_string(hidden) + "]");
    if (w2.rank() != 2 || w2.rows() != hidden || w2.cols() != width)
        throw ShapeError("ffn: w2 is " + w2.shape_string() + ", expected [" + std::to_string(hidden) + "x" +
                         std::to_string(width) + "]");
    if (b2.rank() != 1 || b2.size() != width)
        throw ShapeError("ffn: b2 is " + b2.shape_string() + ", expected [" + std::to_string(width) + "]");
}

template <typename T>
void LayerWeights<T>::validate(std::size_t width) const {
    attn.validate();
    if (attn.width() != width)
        throw ShapeError("layer: attention width " + std::to_string(attn.width()) + " does not match model width " +
                         std::to_string(width));
    ffn.validate(width);
}

template <typename T>
void BranchWeights<T>::validate(std::size_t width) const {
    if (layers.empty()) throw ShapeError("branch: no layers");
    for (const auto& l : layers) l.validate(width);
}

template <typename T>
Tensor<T> ffn_core(const Tensor<T>& x, const FfnWeights<T>& w, Activation act) {
    auto hidden = apply_activation(bias_add_rows(matmul(x, w.w1), w.b1), act);
    return bias_add_rows(matmul(hidden, w.w2), w.b2);
}

template <typename T>
Tensor<T> ffn_forward(const Tensor<T>& x, const FfnWeights<T>& w, Activation act) {
    return add(ffn_core(x, w, act), x);
}

template <typename T>
Tensor<T> layer_forward(const Tensor<T>& x, const LayerWeights<T>& w, Activation act, bool pre_norm) {
    if (!pre_norm) return ffn_forward(mha_forward(x, w.attn), w.ffn, act);
    auto s = add(mha_core(layernorm_rows(x), w.attn), x);
    return add(ffn_core(layernorm_rows(s), w.ffn, act), s);
}

template <typename T>
Tensor<T> ghat_forward(const Tensor<T>& x, const LayerWeights<T>& w, Activation act, bool pre_norm) {
    auto s_core = mha_core(pre_norm ? layernorm_rows(x) : x, w.attn);
    auto s = add(s_core, x);
    return add(ffn_core(pre_norm ? layernorm_rows(s) : s, w.ffn, act), s_core);
}

template <typename T>
Tensor<T> branch_forward(const Tensor<T>& x0, const BranchWeights<T>& b, Activation act, bool pre_norm) {
    if (b.layers.empty()) throw ShapeError("branch: no layers");
    Tensor<T> x = x0;
    for (const auto& l : b.layers) x = layer_forward(x, l, act, pre_norm);
    return x;
}

template <typename T>
Tensor<T> combined_first_weight(const Tensor<T>& x, const LayerWeights<T>& w, std::size_t cap) {
    w.ffn.validate(x.cols());
    const std::size_t m = x.rows(), d_model = x.cols(), hidden = w.ffn.w1.cols();
    const std::size_t out_rows = m * hidden, in_cols = m * d_model;
    if (out_rows > cap || in_cols > cap)
        throw SizeError("combined weight: operator would be " + std::to_string(out_rows) + "x" +
                        std::to_string(in_cols) + ", above the cap of " + std::to_string(cap));
    auto ws = closedform_operator(x, w.attn, cap);
    // (W^S + I) first, then lift W1 over it.
    auto with_residual = add(ws, identity<T>(in_cols));
    auto lifted_w1 = kron(transpose(w.ffn.w1), identity<T>(m));
    return matmul(lifted_w1, with_residual);
}

template <typename T>
LayerWeights<T> random_layer_weights(Rng& rng, std::size_t width, std::size_t ffn_width, std::size_t heads,
                                     double spread) {
    auto draw = [&](std::vector<std::size_t> shape) {
        Tensor<T> t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>((rng.uniform() * 2.0 - 1.0) * spread);
        return t;
    };
    LayerWeights<T> w;
    w.attn = random_attn_weights<T>(rng, width, heads, spread);
    w.ffn.w1 = draw({width, ffn_width});
    w.ffn.b1 = draw({ffn_width});
    w.ffn.w2 = draw({ffn_width, width});
    w.ffn.b2 = draw({width});
    return w;
}

template <typename T>
BranchWeights<T> random_branch_weights(Rng& rng, std::size_t layers, std::size_t width, std::size_t ffn_width,
                                       std::size_t heads, double spread) {
    BranchWeights<T> b;
    for (std::size_t l = 0; l < layers; ++l)
        b.layers.push_back(random_layer_weights<T>(rng, width, ffn_width, heads, spread));
    return b;
}

#define PF_INSTANTIATE_LAYER(T)                                                                              \
    template struct FfnWeights<T>;                                                                           \
    template struct LayerWeights<T>;                                                                         \
    template struct BranchWeights<T>;                                                                        \
    template Tensor<T> ffn_core<T>(const Tensor<T>&, const FfnWeights<T>&, Activation);                      \
    template Tensor<T> ffn_forward<T>(const Tensor<T>&, const FfnWeights<T>&, Activation);                   \
    template Tensor<T> layer_forward<T>(const Tensor<T>&, const LayerWeights<T>&, Activation, bool);         \
    template Tensor<T> ghat_forward<T>(const Tensor<T>&, const LayerWeights<T>&, Activation, bool);          \
    template Tensor<T> branch_forward<T>(const Tensor<T>&, const BranchWeights<T>&, Activation, bool);       \
    template Tensor<T> combined_first_weight<T>(const Tensor<T>&, const LayerWeights<T>&, std::size_t);      \
    template LayerWeights<T> random_layer_weights<T>(Rng&, std::size_t, std::size_t, std::size_t, double);   \
    template BranchWeights<T> random_branch_weights<T>(Rng&, std::size_t, std::size_t, std::size_t,          \
                                                       std::size_t, double);

PF_INSTANTIATE_LAYER(float)
PF_INSTANTIATE_LAYER(double)

#undef PF_INSTANTIATE_LAYER

}  // namespace pf
