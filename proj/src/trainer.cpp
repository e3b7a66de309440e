#include "pf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace pf {

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Schedule parse_schedule(const std::string& s) {
    if (s == "progressive") return Schedule::progressive;
    if (s == "milestone") return Schedule::milestone;
    if (s == "joint") return Schedule::joint;
    throw ConfigError("unknown schedule '" + s + "' (expected progressive, milestone, or joint)");
}

const char* schedule_name(Schedule s) {
    switch (s) {
        case Schedule::progressive: return "progressive";
        case Schedule::milestone: return "milestone";
        case Schedule::joint: return "joint";
    }
    return "?";
}

void TrainConfig::validate(std::size_t branches) const {
    if (epochs == 0) throw ConfigError("train: epochs must be at least 1");
    if (batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
    if (!(adamw.lr > 0.0)) throw ConfigError("train: learning rate must be positive");
    if (adamw.beta1 < 0.0 || adamw.beta1 >= 1.0 || adamw.beta2 < 0.0 || adamw.beta2 >= 1.0)
        throw ConfigError("train: betas must lie in [0, 1)");
    if (!(adamw.eps > 0.0)) throw ConfigError("train: eps must be positive");
    if (adamw.weight_decay < 0.0) throw ConfigError("train: weight decay must be non-negative");
    if (schedule == Schedule::milestone) {
        if (milestones.size() != branches)
            throw ConfigError("train: " + std::to_string(milestones.size()) + " milestones for " +
                              std::to_string(branches) + " branches");
        if (milestones.front() != 1) throw ConfigError("train: the first branch must activate at epoch 1");
        for (std::size_t i = 0; i < milestones.size(); ++i) {
            if (milestones[i] < 1 || milestones[i] > epochs)
                throw ConfigError("train: milestone " + std::to_string(milestones[i]) + " outside [1, " +
                                  std::to_string(epochs) + "]");
            if (i > 0 && milestones[i] < milestones[i - 1])
                throw ConfigError("train: milestones must be non-decreasing");
        }
    } else if (!milestones.empty()) {
        throw ConfigError("train: milestones are only meaningful with the milestone schedule");
    }
}

template <typename T>
void AdamW<T>::apply(const std::vector<ParamRef<T>>& params, const std::vector<Tensor<T>>& grads,
                     const std::vector<char>& touched) {
    if (grads.size() != params.size() || touched.size() != params.size())
        throw ShapeError("optimizer: " + std::to_string(params.size()) + " params, " + std::to_string(grads.size()) +
                         " grads, " + std::to_string(touched.size()) + " flags");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!touched[k]) continue;
        Tensor<T>& p = *params[k].tensor;
        const Tensor<T>& g = grads[k];
        if (g.shape() != p.shape())
            throw ShapeError("optimizer: gradient for " + params[k].name + " is " + g.shape_string() +
                             ", param is " + p.shape_string());
        auto& st = state_[params[k].name];
        if (st.m.size() == 0) {
            st.m = Tensor<T>(p.shape());
            st.v = Tensor<T>(p.shape());
        } else if (st.m.shape() != p.shape()) {
            throw ShapeError("optimizer: stale state for " + params[k].name);
        }
        st.step += 1;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(st.step));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(st.step));
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = cfg_.beta1 * static_cast<double>(st.m[i]) + (1.0 - cfg_.beta1) * gi;
            const double vi = cfg_.beta2 * static_cast<double>(st.v[i]) + (1.0 - cfg_.beta2) * gi * gi;
            st.m[i] = static_cast<T>(mi);
            st.v[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) -
                                  cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                                             cfg_.weight_decay * static_cast<double>(p[i])));
        }
    }
}

template <typename T>
const AdamTensorState<T>* AdamW<T>::state_for(const std::string& name) const {
    auto it = state_.find(name);
    return it == state_.end() ? nullptr : &it->second;
}

template <typename T>
typename Tape<T>::Var stage_logits_graph(Tape<T>& tape, ParaFormerModel<T>& model, const Tensor<T>& image,
                                         std::size_t stage, const BindFn<T>& bind) {
    using Var = typename Tape<T>::Var;
    const ModelConfig& cfg = model.config;
    if (stage == 0 || stage > model.branches.size())
        throw IndexError("train: stage " + std::to_string(stage) + " out of range 1.." +
                         std::to_string(model.branches.size()));

    Var patches = tape.input(extract_patches(image, cfg));
    Var proj = bind("embed.proj", model.embed.proj);
    Var pos = bind("embed.pos", model.embed.pos);
    Var x0 = tape.add(tape.matmul(patches, proj), pos);

    Var bias = bind("agg.bias", model.agg_bias);
    Var logits = tape.reshape(bias, {std::size_t(1), cfg.classes});

    for (std::size_t b = 1; b <= stage; ++b) {
        if (model.counter) model.counter->branch_forwards.fetch_add(1, std::memory_order_relaxed);
        const std::string bp = "branch" + std::to_string(b) + ".";
        Var x = x0;
        BranchWeights<T>& branch = model.branches[b - 1];
        for (std::size_t l = 0; l < branch.layers.size(); ++l) {
            LayerWeights<T>& layer = branch.layers[l];
            const std::string lp = bp + "layer" + std::to_string(l + 1) + ".";

            auto mha_core_of = [&](Var xin) {
                std::vector<Var> parts;
                parts.reserve(layer.attn.heads.size());
                for (std::size_t h = 0; h < layer.attn.heads.size(); ++h) {
                    const std::string hp = lp + "attn.head" + std::to_string(h + 1) + ".";
                    Var wq = bind(hp + "wq", layer.attn.heads[h].w_q);
                    Var wk = bind(hp + "wk", layer.attn.heads[h].w_k);
                    Var wv = bind(hp + "wv", layer.attn.heads[h].w_v);
                    const T inv = T(1) / std::sqrt(static_cast<T>(layer.attn.heads[h].w_q.cols()));
                    Var q = tape.matmul(xin, wq);
                    Var k = tape.matmul(xin, wk);
                    Var a = tape.softmax_rows(tape.scale(tape.matmul(q, tape.transpose(k)), inv));
                    parts.push_back(tape.matmul(a, tape.matmul(xin, wv)));
                }
                Var wo = bind(lp + "attn.wo", layer.attn.w_o);
                return tape.matmul(tape.concat_cols(parts), wo);
            };
            auto ffn_core_of = [&](Var xin) {
                Var w1 = bind(lp + "ffn.w1", layer.ffn.w1);
                Var b1 = bind(lp + "ffn.b1", layer.ffn.b1);
                Var w2 = bind(lp + "ffn.w2", layer.ffn.w2);
                Var b2 = bind(lp + "ffn.b2", layer.ffn.b2);
                Var hidden = tape.activation(tape.bias_add_rows(tape.matmul(xin, w1), b1), cfg.activation);
                return tape.bias_add_rows(tape.matmul(hidden, w2), b2);
            };

            if (!cfg.pre_norm) {
                Var s = tape.add(mha_core_of(x), x);
                x = tape.add(ffn_core_of(s), s);
            } else {
                Var s = tape.add(mha_core_of(tape.layernorm_rows(x)), x);
                x = tape.add(ffn_core_of(tape.layernorm_rows(s)), s);
            }
        }
        Var pooled = tape.mean_rows(x);
        Var block = bind("agg.block" + std::to_string(b), model.agg_blocks[b - 1]);
        logits = tape.add(logits, tape.matmul(pooled, block));
    }
    return logits;
}

template <typename T>
std::vector<StageMetrics> evaluate_stages(const ParaFormerModel<T>& model, const Dataset<T>& data) {
    if (data.size() == 0) throw DataError("evaluate: empty dataset");
    const std::size_t n_stages = model.branches.size();
    const std::size_t classes = model.config.classes;
    std::vector<double> loss_sum(n_stages, 0.0), wall(n_stages, 0.0);
    std::vector<std::size_t> correct(n_stages, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto x0 = embed_image(data.images[i], model);
        Tensor<T> logits = model.agg_bias.reshaped({std::size_t(1), classes});
        for (std::size_t s = 1; s <= n_stages; ++s) {
            const auto t0 = std::chrono::steady_clock::now();
            logits = add(logits, branch_term(x0, model, s));
            wall[s - 1] += elapsed_ms(t0);
            auto flat = logits.reshaped({classes});
            loss_sum[s - 1] += static_cast<double>(cross_entropy_logits(flat, data.labels[i]));
            correct[s - 1] += argmax(flat) == data.labels[i] ? 1 : 0;
        }
    }
    std::vector<StageMetrics> out;
    out.reserve(n_stages);
    const double n = static_cast<double>(data.size());
    for (std::size_t s = 1; s <= n_stages; ++s)
        out.push_back({0, s, data.split, loss_sum[s - 1] / n, static_cast<double>(correct[s - 1]) / n, wall[s - 1]});
    return out;
}

template <typename T>
Trainer<T>::Trainer(ParaFormerModel<T>& model, TrainConfig cfg)
    : model_(&model), cfg_(std::move(cfg)), adamw_(cfg_.adamw), rng_(cfg_.seed) {
    model.validate();
    cfg_.validate(model.config.branches);
    rebind();
}

template <typename T>
void Trainer<T>::rebind() {
    params_ = param_refs(*model_);
    grads_.clear();
    grads_.reserve(params_.size());
    for (const auto& p : params_) grads_.push_back(Tensor<T>(p.tensor->shape()));
    touched_.assign(params_.size(), 0);
    slot_.clear();
    slot_.reserve(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k) slot_.emplace(params_[k].name, k);
}

namespace {

template <typename T>
bool param_in_training_scope(const ParamRef<T>& r, std::size_t stage, std::size_t frozen) {
    switch (r.group) {
        case ParamGroup::embedding:
        case ParamGroup::aggregator_bias:
            return frozen == 0;
        case ParamGroup::branch:
        case ParamGroup::aggregator:
            return r.branch > frozen && r.branch <= stage;
    }
    return false;
}

}  // namespace

template <typename T>
double Trainer<T>::step_batch(const Dataset<T>& data, const std::vector<std::size_t>& batch, std::size_t stage) {
    if (data.size() == 0) throw DataError("train: empty dataset");
    if (batch.empty()) throw DataError("train: empty batch");
    for (std::size_t k = 0; k < grads_.size(); ++k) {
        grads_[k].fill(T(0));
        touched_[k] = 0;
    }
    const T seed = T(1) / static_cast<T>(batch.size());
    const std::size_t frozen = model_->frozen_branches;
    double loss_sum = 0.0;
    last_batch_correct_ = 0;
    for (std::size_t idx : batch) {
        if (idx >= data.size()) throw IndexError("train: sample index out of range");
        tape_.clear();
        BindFn<T> bind = [&](const std::string& name, Tensor<T>& t) {
            auto it = slot_.find(name);
            if (it == slot_.end()) throw ConfigError("train: unknown parameter '" + name + "'");
            const std::size_t k = it->second;
            if (param_in_training_scope(params_[k], stage, frozen)) {
                touched_[k] = 1;
                return tape_.param(t, &grads_[k]);
            }
            return tape_.input(t);
        };
        auto logits = stage_logits_graph(tape_, *model_, data.images[idx], stage, bind);
        auto loss = tape_.cross_entropy(logits, data.labels[idx]);
        tape_.backward(loss, seed);
        loss_sum += static_cast<double>(tape_.value(loss)[0]);
        if (argmax(tape_.value(logits)) == data.labels[idx]) last_batch_correct_ += 1;
    }
    adamw_.apply(params_, grads_, touched_);
    return loss_sum / static_cast<double>(batch.size());
}

template <typename T>
std::vector<std::size_t> Trainer<T>::shuffled_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    rng_.shuffle(idx);
    return idx;
}

template <typename T>
std::vector<std::vector<std::size_t>> Trainer<T>::batches(std::size_t n) {
    auto idx = shuffled_indices(n);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += cfg_.batch_size) {
        const std::size_t end = std::min(n, start + cfg_.batch_size);
        out.emplace_back(idx.begin() + start, idx.begin() + end);
    }
    return out;
}

template <typename T>
std::vector<StageMetrics> Trainer<T>::progressive_epoch(const Dataset<T>& data, std::size_t epoch) {
    if (data.size() == 0) throw DataError("train: empty dataset");
    const std::size_t n_stages = model_->config.branches;
    std::vector<double> loss_sum(n_stages, 0.0), wall(n_stages, 0.0);
    std::vector<std::size_t> batch_count(n_stages, 0), correct(n_stages, 0), seen(n_stages, 0);

    // Staged pass: every batch drives stages 1..N in order, one update each.
    for (const auto& batch : batches(data.size())) {
        for (std::size_t i = 1; i <= n_stages; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            loss_sum[i - 1] += step_batch(data, batch, i);
            wall[i - 1] += elapsed_ms(t0);
            batch_count[i - 1] += 1;
            correct[i - 1] += last_batch_correct_;
            seen[i - 1] += batch.size();
        }
    }
    // Second pass at full width.
    for (const auto& batch : batches(data.size())) {
        const auto t0 = std::chrono::steady_clock::now();
        loss_sum[n_stages - 1] += step_batch(data, batch, n_stages);
        wall[n_stages - 1] += elapsed_ms(t0);
        batch_count[n_stages - 1] += 1;
        correct[n_stages - 1] += last_batch_correct_;
        seen[n_stages - 1] += batch.size();
    }

    std::vector<StageMetrics> out;
    for (std::size_t i = 1; i <= n_stages; ++i)
        out.push_back({epoch, i, "train", loss_sum[i - 1] / static_cast<double>(batch_count[i - 1]),
                       static_cast<double>(correct[i - 1]) / static_cast<double>(seen[i - 1]), wall[i - 1]});
    return out;
}

template <typename T>
std::vector<StageMetrics> Trainer<T>::milestone_epoch(const Dataset<T>& data, std::size_t epoch) {
    if (data.size() == 0) throw DataError("train: empty dataset");
    if (cfg_.schedule != Schedule::milestone || cfg_.milestones.empty())
        throw ConfigError("train: milestone_epoch needs a milestone schedule");
    std::size_t active = 0;
    for (std::size_t i = 0; i < cfg_.milestones.size(); ++i)
        if (cfg_.milestones[i] <= epoch) active = i + 1;
    if (active == 0) throw ConfigError("train: no branch active at epoch " + std::to_string(epoch));

    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t batch_count = 0, correct = 0;
    for (const auto& batch : batches(data.size())) {
        loss_sum += step_batch(data, batch, active);
        batch_count += 1;
        correct += last_batch_correct_;
    }
    return {{epoch, active, "train", loss_sum / static_cast<double>(batch_count),
             static_cast<double>(correct) / static_cast<double>(data.size()), elapsed_ms(t0)}};
}

template <typename T>
std::vector<StageMetrics> Trainer<T>::joint_epoch(const Dataset<T>& data, std::size_t epoch) {
    if (data.size() == 0) throw DataError("train: empty dataset");
    const std::size_t n_stages = model_->config.branches;
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    std::size_t batch_count = 0, correct = 0;
    for (const auto& batch : batches(data.size())) {
        loss_sum += step_batch(data, batch, n_stages);
        batch_count += 1;
        correct += last_batch_correct_;
    }
    return {{epoch, n_stages, "train", loss_sum / static_cast<double>(batch_count),
             static_cast<double>(correct) / static_cast<double>(data.size()), elapsed_ms(t0)}};
}

template <typename T>
std::vector<StageMetrics> Trainer<T>::train(const Dataset<T>& train_data, const Dataset<T>* test_data) {
    if (train_data.size() == 0) throw DataError("train: empty dataset");
    std::vector<StageMetrics> out;
    for (std::size_t e = 1; e <= cfg_.epochs; ++e) {
        switch (cfg_.schedule) {
            case Schedule::progressive: progressive_epoch(train_data, e); break;
            case Schedule::milestone: milestone_epoch(train_data, e); break;
            case Schedule::joint: joint_epoch(train_data, e); break;
        }
        for (auto row : evaluate_stages(*model_, train_data)) {
            row.epoch = e;
            row.split = "train";
            out.push_back(std::move(row));
        }
        if (test_data) {
            for (auto row : evaluate_stages(*model_, *test_data)) {
                row.epoch = e;
                row.split = "test";
                out.push_back(std::move(row));
            }
        }
    }
    return out;
}

#define PF_INSTANTIATE_TRAINER(T)                                                                               \
    template class AdamW<T>;                                                                                    \
    template class Trainer<T>;                                                                                  \
    template typename Tape<T>::Var stage_logits_graph<T>(Tape<T>&, ParaFormerModel<T>&, const Tensor<T>&,       \
                                                         std::size_t, const BindFn<T>&);                        \
    template std::vector<StageMetrics> evaluate_stages<T>(const ParaFormerModel<T>&, const Dataset<T>&);

PF_INSTANTIATE_TRAINER(float)
PF_INSTANTIATE_TRAINER(double)

#undef PF_INSTANTIATE_TRAINER

}  // namespace pf
