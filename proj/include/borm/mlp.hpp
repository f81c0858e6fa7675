// This file is part of the borm scene-recognition toolkit.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace borm {

enum class Activation : std::uint8_t { kNone = 0, kRelu = 1 };

struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight; // out x in, row-major
    std::vector<double> bias;   // out
    Activation activation = Activation::kNone;
};

/// Fully connected feedforward network. Hidden layers use relu; the last
/// layer of a classifier head emits raw logits.
struct MlpModel {
    std::vector<Layer> layers;
    std::uint64_t seed = 0;

    std::size_t in_dim() const { return layers.front().in; }
    std::size_t out_dim() const { return layers.back().out; }
    std::vector<std::size_t> dims() const;
    std::size_t parameter_count() const;
};

/// Buffers shaped like a model's parameters (gradients, velocities).
struct LayerParams {
    std::vector<double> weight;
    std::vector<double> bias;
};
using ParamSet = std::vector<LayerParams>;

ParamSet zeros_like(const MlpModel& model);

/// Glorot-uniform weights drawn from SplitMix64(seed) layer by layer in
/// row-major order, zero biases, relu on hidden layers.
MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed,
                    Activation output_activation = Activation::kNone);

void check_model(const MlpModel& model);

std::vector<double> forward(const MlpModel& model, std::span<const double> x);

struct Example {
    std::span<const double> x;
    std::size_t label = 0;
};

struct LossAndGrad {
    double loss = 0.0;
    ParamSet grad;
};

/// Mean softmax cross-entropy over the batch and its gradient. Weight decay
/// is not included; sgd_step adds it.
LossAndGrad loss_and_grad(const MlpModel& model, std::span<const Example> batch);

struct TrainConfig {
    double lr0 = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 40;
    std::size_t lr_step = 10;
    double lr_factor = 0.1;
    std::size_t batch_size = 128;
    std::uint64_t seed = 0;
    /// Restore the best-so-far parameters at every schedule boundary.
    bool best_reload = true;
    unsigned threads = 1;

    void validate() const;
};

/// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v
void sgd_step(MlpModel& model, const ParamSet& grad, ParamSet& velocity, double lr, const TrainConfig& config);

/// lr0 scaled by lr_factor once per completed lr_step epochs.
double lr_at_epoch(const TrainConfig& config, std::size_t epoch);

/// Plain sequential head, or a branch network whose output is concatenated
/// with a side input before a fusion head.
enum class Topology : std::uint8_t { kSingle = 0, kTwoStream = 1 };

struct Network {
    Topology topology = Topology::kSingle;
    std::vector<MlpModel> stages;

    static Network single(MlpModel head);
    static Network two_stream(MlpModel branch, MlpModel fusion);

    std::size_t primary_dim() const { return stages.front().in_dim(); }
    std::size_t side_dim() const;
    std::size_t n_classes() const { return stages.back().out_dim(); }
    void check() const;
};

std::vector<double> network_logits(const Network& net, std::span<const double> primary,
                                   std::span<const double> side = {});

/// Softmax with max-subtraction.
std::vector<double> softmax(std::span<const double> logits);

/// Index of the largest value, lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// Supplies training examples on demand so large feature vectors never have
/// to be materialized for a whole corpus.
class ExampleSource {
public:
    virtual ~ExampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual std::size_t label(std::size_t index) const = 0;
    virtual std::size_t primary_dim() const = 0;
    virtual std::size_t side_dim() const { return 0; }
    virtual void fill(std::size_t index, std::span<double> primary, std::span<double> side) const = 0;
};

/// In-memory examples; handy for tests and small problems.
class DenseSource final : public ExampleSource {
public:
    DenseSource(std::vector<std::vector<double>> inputs, std::vector<std::size_t> labels,
                std::vector<std::vector<double>> side = {});

    std::size_t size() const override { return labels_.size(); }
    std::size_t label(std::size_t index) const override { return labels_[index]; }
    std::size_t primary_dim() const override { return inputs_.empty() ? 0 : inputs_.front().size(); }
    std::size_t side_dim() const override { return side_.empty() ? 0 : side_.front().size(); }
    void fill(std::size_t index, std::span<double> primary, std::span<double> side) const override;

private:
    std::vector<std::vector<double>> inputs_;
    std::vector<std::size_t> labels_;
    std::vector<std::vector<double>> side_;
};

/// Mean cross-entropy and its gradient for a network over the given example
/// indices. Examples are processed in fixed chunks whose partial sums are
/// reduced in order, so the result does not depend on `threads`.
double network_loss_and_grad(const Network& net, const ExampleSource& data, std::span<const std::size_t> indices,
                             std::vector<ParamSet>& grads, unsigned threads = 1);

/// Top-1 accuracy of the network over every example of `data`.
double network_accuracy(const Network& net, const ExampleSource& data);

/// Parameters and optimizer state of a network at an epoch boundary.
struct TrainState {
    Network net;
    std::vector<ParamSet> velocity;
    /// Completed epochs.
    std::int64_t epoch = 0;
    /// Best selection accuracy seen so far; negative until the first epoch is scored.
    double best_accuracy = -1.0;
};

TrainState initial_state(Network net);

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    TrainState best;
    TrainState last;
    std::vector<EpochRecord> history;
};

struct TrainControl {
    /// Continue from a previous run's last/best states instead of `net`.
    std::optional<TrainState> resume_last;
    std::optional<TrainState> resume_best;
    /// Stop once this many epochs have completed (interrupt simulation).
    std::optional<std::size_t> stop_after;
};

/// SGD training with momentum, weight decay, a step schedule and
/// best-checkpoint reload at schedule boundaries. The selection set is `val`
/// when nonempty; with best_reload disabled an empty `val` falls back to
/// scoring on `train`. Ties in selection accuracy keep the earlier epoch.
TrainResult train_network(Network net, const ExampleSource& train, const ExampleSource& val,
                          const TrainConfig& config, const TrainControl& control = {});

/// One sub-network's checkpoint: parameters, optimizer velocity, epoch and
/// best accuracy.
struct Checkpoint {
    MlpModel model;
    ParamSet velocity;
    std::int64_t epoch = 0;
    double best_accuracy = -1.0;
};

struct TrainOutcome {
    Checkpoint best;
    std::vector<EpochRecord> history;
};

TrainOutcome train(const MlpModel& model, const ExampleSource& train_set, const ExampleSource& val_set,
                   const TrainConfig& config);

Checkpoint stage_checkpoint(const TrainState& state, std::size_t stage);
TrainState state_from_checkpoints(Topology topology, std::vector<Checkpoint> stages);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace borm
