#pragma once

// Training: the staged schedule (per batch, every stage 1..i gets its own
// loss, backward pass, and optimizer step, followed by a second full-width
// pass over the data), a milestone schedule that activates branch i at a
// configured epoch, and a joint baseline that always trains the full model.
//
// One thread mutates weights; batch order is drawn from the trainer's own
// seeded generator (one permutation per pass over the data), so runs are
// bitwise reproducible on a fixed machine configuration.

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pf/autodiff.hpp"
#include "pf/dataset.hpp"
#include "pf/model.hpp"

namespace pf {

enum class Schedule { progressive, milestone, joint };

Schedule parse_schedule(const std::string& s);
const char* schedule_name(Schedule s);

struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  // decoupled: p -= lr * (mhat/(sqrt(vhat)+eps) + wd * p)
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    AdamWConfig adamw;
    Schedule schedule = Schedule::progressive;
    // Milestone schedule only: 1-based epoch at which branch i activates,
    // one entry per branch, non-decreasing, first entry 1 (some branch must
    // train from the start), all within [1, epochs].
    std::vector<std::size_t> milestones;
    std::uint64_t seed = 0;

    void validate(std::size_t branches) const;
};

struct StageMetrics {
    std::size_t epoch = 0;  // 1-based; 0 when produced outside a training run
    std::size_t stage = 0;  // 1-based
    std::string split;
    double loss = 0.0;
    double accuracy = 0.0;
    double wall_ms = 0.0;
};

template <typename T>
struct AdamTensorState {
    Tensor<T> m, v;
    std::uint64_t step = 0;
};

// Decoupled-weight-decay adaptive moments, with per-tensor state keyed by
// parameter name.  Tensors whose `touched` flag is clear are skipped
// entirely: no moment update, no step advance, no decay.
template <typename T>
class AdamW {
  public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    void apply(const std::vector<ParamRef<T>>& params, const std::vector<Tensor<T>>& grads,
               const std::vector<char>& touched);

    // Read-only view for tests and diagnostics; null when never touched.
    const AdamTensorState<T>* state_for(const std::string& name) const;

  private:
    AdamWConfig cfg_;
    std::unordered_map<std::string, AdamTensorState<T>> state_;
};

// Builds tape logits for stage `stage` on one image, mirroring the plain
// forward path operation for operation (same kernels, same order), so tape
// and plain logits agree bitwise.  `bind` maps each participating weight
// tensor to a tape leaf — Tape::param for trainable tensors, Tape::input
// for frozen ones.  Returns a [1 x classes] variable.
template <typename T>
using BindFn = std::function<typename Tape<T>::Var(const std::string& name, Tensor<T>& tensor)>;

template <typename T>
typename Tape<T>::Var stage_logits_graph(Tape<T>& tape, ParaFormerModel<T>& model, const Tensor<T>& image,
                                         std::size_t stage, const BindFn<T>& bind);

// Loss/accuracy of every stage on a split, computed incrementally (stage i
// reuses stage i-1's logits plus one branch term, the same reduction the
// forward pass uses, so results match forward_stage bitwise).  Does not
// mutate weights.  epoch fields are 0; wall_ms is the time attributable to
// each stage's increment.
template <typename T>
std::vector<StageMetrics> evaluate_stages(const ParaFormerModel<T>& model, const Dataset<T>& data);

template <typename T>
class Trainer {
  public:
    Trainer(ParaFormerModel<T>& model, TrainConfig cfg);

    // One optimizer step on one batch at one stage: builds per-sample stage
    // graphs, accumulates batch-mean gradients, applies the update.
    // Returns the batch's mean loss.
    double step_batch(const Dataset<T>& data, const std::vector<std::size_t>& batch, std::size_t stage);

    // Correct predictions (pre-update logits) in the last step_batch call.
    std::size_t last_batch_correct() const { return last_batch_correct_; }

    // One epoch of the staged schedule: per batch, losses and updates for
    // stages 1..N in order, then a second full pass at stage N.  Returns
    // per-stage training averages for the epoch.
    std::vector<StageMetrics> progressive_epoch(const Dataset<T>& data, std::size_t epoch = 0);

    // One epoch at the highest branch whose milestone has arrived.
    std::vector<StageMetrics> milestone_epoch(const Dataset<T>& data, std::size_t epoch);

    // One epoch of full-width training.
    std::vector<StageMetrics> joint_epoch(const Dataset<T>& data, std::size_t epoch = 0);

    // Full run per the configured schedule.  Returns one StageMetrics row
    // per (epoch, stage, split): a post-epoch evaluation of every stage on
    // the training split and, when given, the test split.
    std::vector<StageMetrics> train(const Dataset<T>& train_data, const Dataset<T>* test_data = nullptr);

    // Re-enumerate parameters after the model gained or lost branches.
    // Optimizer state is keyed by name, so surviving tensors keep theirs.
    void rebind();

    AdamW<T>& optimizer() { return adamw_; }
    const TrainConfig& config() const { return cfg_; }

  private:
    std::vector<std::size_t> shuffled_indices(std::size_t n);
    std::vector<std::vector<std::size_t>> batches(std::size_t n);

    ParaFormerModel<T>* model_;
    TrainConfig cfg_;
    AdamW<T> adamw_;
    Rng rng_;
    std::vector<ParamRef<T>> params_;
    std::unordered_map<std::string, std::size_t> slot_;  // param name -> index in params_
    std::vector<Tensor<T>> grads_;
    std::vector<char> touched_;
    std::size_t last_batch_correct_ = 0;
    Tape<T> tape_;
};

}  // namespace pf
