#include "pf/attention.hpp"

#include <cmath>

#include "pf/ops.hpp"

namespace pf {

template <typename T>
std::size_t AttnWeights<T>::width() const {
    if (heads.empty()) throw ShapeError("attention: no heads");
    return heads[0].w_q.rows();
}

template <typename T>
std::size_t AttnWeights<T>::head_dim() const {
    if (heads.empty()) throw ShapeError("attention: no heads");
    return heads[0].w_q.cols();
}

template <typename T>
void AttnWeights<T>::validate() const {
    if (heads.empty()) throw ShapeError("attention: no heads");
    const std::size_t d_model = heads[0].w_q.rows();
    const std::size_t d = heads[0].w_q.cols();
    for (std::size_t j = 0; j < heads.size(); ++j) {
        for (const Tensor<T>* w : {&heads[j].w_q, &heads[j].w_k, &heads[j].w_v}) {
            if (w->rank() != 2 || w->rows() != d_model || w->cols() != d)
                throw ShapeError("attention: head " + std::to_string(j + 1) + " projection is " + w->shape_string() +
                                 ", expected [" + std::to_string(d_model) + "x" + std::to_string(d) + "]");
        }
    }
    if (w_o.rank() != 2 || w_o.rows() != heads.size() * d || w_o.cols() != d_model)
        throw ShapeError("attention: output projection is " + w_o.shape_string() + ", expected [" +
                         std::to_string(heads.size() * d) + "x" + std::to_string(d_model) + "]");
}

template <typename T>
Tensor<T> head_attention_matrix(const Tensor<T>& x, const HeadWeights<T>& head) {
    if (x.rank() != 2 || x.cols() != head.w_q.rows())
        throw ShapeError("attention: input " + x.shape_string() + " does not match projection " +
                         head.w_q.shape_string());
    const T inv = T(1) / std::sqrt(static_cast<T>(head.w_q.cols()));
    auto q = matmul(x, head.w_q);
    auto k = matmul(x, head.w_k);
    auto scores = scale(matmul(q, transpose(k)), inv);
    return softmax_rows(scores);
}

template <typename T>
Tensor<T> mha_core_given_h(const Tensor<T>& x, const std::vector<Tensor<T>>& h, const AttnWeights<T>& w) {
    w.validate();
    if (h.size() != w.heads.size())
        throw ShapeError("attention: " + std::to_string(h.size()) + " attention matrices for " +
                         std::to_string(w.heads.size()) + " heads");
    std::vector<Tensor<T>> parts;
    parts.reserve(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        if (h[j].rank() != 2 || h[j].rows() != x.rows() || h[j].cols() != x.rows())
            throw ShapeError("attention: head " + std::to_string(j + 1) + " matrix is " + h[j].shape_string() +
                             ", expected [" + std::to_string(x.rows()) + "x" + std::to_string(x.rows()) + "]");
        parts.push_back(matmul(h[j], matmul(x, w.heads[j].w_v)));
    }
    return matmul(concat_cols(std::span<const Tensor<T>>(parts)), w.w_o);
}

template <typename T>
Tensor<T> mha_core(const Tensor<T>& x, const AttnWeights<T>& w) {
    w.validate();
    std::vector<Tensor<T>> h;
    h.reserve(w.heads.size());
    for (const auto& head : w.heads) h.push_back(head_attention_matrix(x, head));
    return mha_core_given_h(x, h, w);
}

template <typename T>
Tensor<T> mha_forward(const Tensor<T>& x, const AttnWeights<T>& w) {
    return add(mha_core(x, w), x);
}

template <typename T>
Tensor<T> closedform_operator_given_h(const std::vector<Tensor<T>>& h, const AttnWeights<T>& w, std::size_t cap) {
    w.validate();
    if (h.size() != w.heads.size())
        throw ShapeError("attention: " + std::to_string(h.size()) + " attention matrices for " +
                         std::to_string(w.heads.size()) + " heads");
    const std::size_t m = h.empty() ? 0 : h[0].rows();
    const std::size_t d_model = w.width();
    const std::size_t d = w.head_dim();
    const std::size_t n = m * d_model;
    if (n > cap)
        throw SizeError("closedform: operator would be " + std::to_string(n) + "x" + std::to_string(n) +
                        ", above the cap of " + std::to_string(cap));

    // stacked [(m h d) x (m D)]: one ((W^V_j)^T (x) H_j) block per head.
    Tensor<T> stacked({m * h.size() * d, n});
    for (std::size_t j = 0; j < h.size(); ++j) {
        auto block = kron(transpose(w.heads[j].w_v), h[j]);  // [(d m) x (D m)]
        const std::size_t row0 = j * m * d;
        for (std::size_t r = 0; r < block.rows(); ++r)
            std::copy(block.data() + r * block.cols(), block.data() + (r + 1) * block.cols(),
                      stacked.data() + (row0 + r) * n);
    }

    // Left factor (W^O)^T (x) I_m applied as a kron product, then collapse.
    auto lifted_o = kron(transpose(w.w_o), identity<T>(m));
    return matmul(lifted_o, stacked);
}

template <typename T>
Tensor<T> closedform_operator(const Tensor<T>& x, const AttnWeights<T>& w, std::size_t cap) {
    w.validate();
    std::vector<Tensor<T>> h;
    h.reserve(w.heads.size());
    for (const auto& head : w.heads) h.push_back(head_attention_matrix(x, head));
    return closedform_operator_given_h(h, w, cap);
}

template <typename T>
AttnWeights<T> random_attn_weights(Rng& rng, std::size_t width, std::size_t heads, double spread) {
    if (heads == 0) throw ConfigError("attention: need at least one head");
    if (width % heads != 0)
        throw ConfigError("attention: head count " + std::to_string(heads) + " must divide width " +
                          std::to_string(width));
    const std::size_t d = width / heads;
    auto draw = [&](std::size_t r, std::size_t c) {
        Tensor<T> t({r, c});
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>((rng.uniform() * 2.0 - 1.0) * spread);
        return t;
    };
    AttnWeights<T> w;
    for (std::size_t j = 0; j < heads; ++j) w.heads.push_back({draw(width, d), draw(width, d), draw(width, d)});
    w.w_o = draw(heads * d, width);
    return w;
}

EquivalenceReport verify_closedform(std::uint64_t seed, std::size_t tokens, std::size_t width, std::size_t heads,
                                    double tolerance) {
    Rng rng(seed);
    auto w = random_attn_weights<double>(rng, width, heads);
    Tensor<double> x({tokens, width});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform() * 2.0 - 1.0;

    auto direct = mha_core(x, w);
    auto ws = closedform_operator(x, w);
    auto vx = vec_cols(x).reshaped({tokens * width, std::size_t(1)});
    auto via_ws = unvec_cols(matmul(ws, vx).reshaped({tokens * width}), tokens, width);

    EquivalenceReport rep;
    rep.tokens = tokens;
    rep.width = width;
    rep.heads = heads;
    rep.max_abs_err = max_abs_diff(direct, via_ws);
    rep.pass = rep.max_abs_err <= tolerance;
    return rep;
}

#define PF_INSTANTIATE_ATTN(T)                                                                            \
    template struct AttnWeights<T>;                                                                       \
    template Tensor<T> head_attention_matrix<T>(const Tensor<T>&, const HeadWeights<T>&);                 \
    template Tensor<T> mha_core<T>(const Tensor<T>&, const AttnWeights<T>&);                              \
    template Tensor<T> mha_forward<T>(const Tensor<T>&, const AttnWeights<T>&);                           \
    template Tensor<T> mha_core_given_h<T>(const Tensor<T>&, const std::vector<Tensor<T>>&,               \
                                           const AttnWeights<T>&);                                        \
    template Tensor<T> closedform_operator<T>(const Tensor<T>&, const AttnWeights<T>&, std::size_t);      \
    template Tensor<T> closedform_operator_given_h<T>(const std::vector<Tensor<T>>&, const AttnWeights<T>&, \
                                                      std::size_t);                                       \
    template AttnWeights<T> random_attn_weights<T>(Rng&, std::size_t, std::size_t, double);

PF_INSTANTIATE_ATTN(float)
PF_INSTANTIATE_ATTN(double)

#undef PF_INSTANTIATE_ATTN

}  // namespace pf
