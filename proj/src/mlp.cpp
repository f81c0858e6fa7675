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

#include "borm/mlp.hpp"

#include "borm/binio.hpp"
#include "borm/error.hpp"
#include "borm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace borm {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::string_view kCheckpointMagic = "BMLP";
constexpr std::size_t kChunk = 16;

// Outputs of every layer for one example; acts[0] is the input.
struct StageCache {
    std::vector<std::vector<double>> acts;
};

void forward_stage(const MlpModel& model, std::span<const double> x, StageCache& cache) {
    cache.acts.resize(model.layers.size() + 1);
    cache.acts[0].assign(x.begin(), x.end());
    for(std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        const std::vector<double>& in = cache.acts[l];
        std::vector<double>& out = cache.acts[l + 1];
        out.resize(layer.out);
        for(std::size_t o = 0; o < layer.out; ++o) {
            const double* w = layer.weight.data() + o * layer.in;
            double z = layer.bias[o];
            for(std::size_t k = 0; k < layer.in; ++k)
                z += w[k] * in[k];
            out[o] = (layer.activation == Activation::kRelu && z < 0.0) ? 0.0 : z;
        }
    }
}

// `grad_out` is dL/d(output of the last layer) and is consumed. When
// `grad_in` is non-null it receives dL/d(input).
void backward_stage(const MlpModel& model, const StageCache& cache, std::vector<double>& grad_out, ParamSet& grad,
                    std::vector<double>* grad_in) {
    std::vector<double> delta;
    for(std::size_t l = model.layers.size(); l-- > 0;) {
        const Layer& layer = model.layers[l];
        const std::vector<double>& in = cache.acts[l];
        const std::vector<double>& out = cache.acts[l + 1];
        if(layer.activation == Activation::kRelu)
            for(std::size_t o = 0; o < layer.out; ++o)
                if(out[o] <= 0.0)
                    grad_out[o] = 0.0;
        LayerParams& g = grad[l];
        const bool need_input_grad = l > 0 || grad_in != nullptr;
        if(need_input_grad)
            delta.assign(layer.in, 0.0);
        for(std::size_t o = 0; o < layer.out; ++o) {
            const double d = grad_out[o];
            if(d == 0.0)
                continue;
            g.bias[o] += d;
            double* gw = g.weight.data() + o * layer.in;
            for(std::size_t k = 0; k < layer.in; ++k)
                gw[k] += d * in[k];
            if(need_input_grad) {
                const double* w = layer.weight.data() + o * layer.in;
                for(std::size_t k = 0; k < layer.in; ++k)
                    delta[k] += d * w[k];
            }
        }
        if(l > 0)
            grad_out.swap(delta);
        else if(grad_in)
            grad_in->swap(delta);
    }
}

// Cross-entropy of one example; turns `logits` into dL/dlogits in place.
double cross_entropy_grad(std::vector<double>& logits, std::size_t label) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for(double z : logits)
        sum += std::exp(z - m);
    const double log_z = m + std::log(sum);
    const double loss = log_z - logits[label];
    for(double& z : logits)
        z = std::exp(z - log_z);
    logits[label] -= 1.0;
    return loss;
}

std::vector<ParamSet> zeros_like(const Network& net) {
    std::vector<ParamSet> out;
    for(const auto& s : net.stages)
        out.push_back(zeros_like(s));
    return out;
}

void clear(std::vector<ParamSet>& sets) {
    for(auto& set : sets)
        for(auto& lp : set) {
            std::fill(lp.weight.begin(), lp.weight.end(), 0.0);
            std::fill(lp.bias.begin(), lp.bias.end(), 0.0);
        }
}

void accumulate(std::vector<ParamSet>& into, const std::vector<ParamSet>& from) {
    for(std::size_t s = 0; s < into.size(); ++s)
        for(std::size_t l = 0; l < into[s].size(); ++l) {
            auto& a = into[s][l];
            const auto& b = from[s][l];
            for(std::size_t k = 0; k < a.weight.size(); ++k)
                a.weight[k] += b.weight[k];
            for(std::size_t k = 0; k < a.bias.size(); ++k)
                a.bias[k] += b.bias[k];
        }
}

struct ExampleWork {
    std::vector<double> primary;
    std::vector<double> side;
    std::vector<double> joined;
    StageCache branch;
    StageCache head;
    std::vector<double> grad;
    std::vector<double> grad_in;
};

void prepare(ExampleWork& w, const Network& net) {
    w.primary.resize(net.primary_dim());
    w.side.resize(net.side_dim());
}

// Logits of the example currently held in `w`.
const std::vector<double>& run_forward(const Network& net, ExampleWork& w) {
    if(net.topology == Topology::kSingle) {
        forward_stage(net.stages[0], w.primary, w.head);
        return w.head.acts.back();
    }
    forward_stage(net.stages[0], w.primary, w.branch);
    const auto& f = w.branch.acts.back();
    w.joined.assign(f.begin(), f.end());
    w.joined.insert(w.joined.end(), w.side.begin(), w.side.end());
    forward_stage(net.stages[1], w.joined, w.head);
    return w.head.acts.back();
}

double run_example(const Network& net, ExampleWork& w, std::size_t label, std::vector<ParamSet>& grads) {
    w.grad = run_forward(net, w);
    const double loss = cross_entropy_grad(w.grad, label);
    if(net.topology == Topology::kSingle) {
        backward_stage(net.stages[0], w.head, w.grad, grads[0], nullptr);
    } else {
        backward_stage(net.stages[1], w.head, w.grad, grads[1], &w.grad_in);
        w.grad_in.resize(net.stages[0].out_dim());
        backward_stage(net.stages[0], w.branch, w.grad_in, grads[0], nullptr);
    }
    return loss;
}

void require_finite(std::span<const double> x) {
    for(double v : x)
        if(!std::isfinite(v))
            throw Error(ErrorCode::kNonFinite, "non-finite network input");
}

void check_label(std::size_t label, std::size_t n_classes) {
    if(label >= n_classes)
        throw Error(ErrorCode::kDimMismatch,
                    "class index " + std::to_string(label) + " >= " + std::to_string(n_classes) + " outputs");
}

} // namespace

std::vector<std::size_t> MlpModel::dims() const {
    std::vector<std::size_t> d;
    if(layers.empty())
        return d;
    d.push_back(layers.front().in);
    for(const auto& l : layers)
        d.push_back(l.out);
    return d;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for(const auto& l : layers)
        n += l.weight.size() + l.bias.size();
    return n;
}

ParamSet zeros_like(const MlpModel& model) {
    ParamSet p(model.layers.size());
    for(std::size_t l = 0; l < model.layers.size(); ++l) {
        p[l].weight.assign(model.layers[l].weight.size(), 0.0);
        p[l].bias.assign(model.layers[l].bias.size(), 0.0);
    }
    return p;
}

MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed, Activation output_activation) {
    if(layer_dims.size() < 2)
        throw Error(ErrorCode::kConfig, "a model needs at least an input and an output dimension");
    for(std::size_t d : layer_dims)
        if(d == 0)
            throw Error(ErrorCode::kConfig, "layer dimensions must be positive");
    MlpModel m;
    m.seed = seed;
    SplitMix64 g(seed);
    for(std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        Layer layer;
        layer.in = layer_dims[l];
        layer.out = layer_dims[l + 1];
        layer.activation = (l + 2 == layer_dims.size()) ? output_activation : Activation::kRelu;
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
        layer.weight.resize(layer.in * layer.out);
        for(double& w : layer.weight)
            w = (2.0 * g.uniform() - 1.0) * limit;
        layer.bias.assign(layer.out, 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

void check_model(const MlpModel& model) {
    if(model.layers.empty())
        throw Error(ErrorCode::kConfig, "model has no layers");
    for(std::size_t l = 0; l < model.layers.size(); ++l) {
        const Layer& layer = model.layers[l];
        if(layer.in == 0 || layer.out == 0 || layer.weight.size() != layer.in * layer.out ||
           layer.bias.size() != layer.out)
            throw Error(ErrorCode::kDimMismatch, "layer " + std::to_string(l) + " has inconsistent shapes");
        if(l > 0 && model.layers[l - 1].out != layer.in)
            throw Error(ErrorCode::kDimMismatch, "layer " + std::to_string(l) + " does not chain");
    }
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
    check_model(model);
    if(x.size() != model.in_dim())
        throw Error(ErrorCode::kDimMismatch,
                    "input length " + std::to_string(x.size()) + ", model expects " + std::to_string(model.in_dim()));
    require_finite(x);
    StageCache cache;
    forward_stage(model, x, cache);
    return std::move(cache.acts.back());
}

LossAndGrad loss_and_grad(const MlpModel& model, std::span<const Example> batch) {
    check_model(model);
    if(batch.empty())
        throw Error(ErrorCode::kInvalidArgument, "empty batch");
    LossAndGrad out{0.0, zeros_like(model)};
    StageCache cache;
    std::vector<double> grad;
    for(const Example& ex : batch) {
        if(ex.x.size() != model.in_dim())
            throw Error(ErrorCode::kDimMismatch, "example length " + std::to_string(ex.x.size()));
        check_label(ex.label, model.out_dim());
        forward_stage(model, ex.x, cache);
        grad = cache.acts.back();
        out.loss += cross_entropy_grad(grad, ex.label);
        backward_stage(model, cache, grad, out.grad, nullptr);
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    out.loss *= scale;
    for(auto& lp : out.grad) {
        for(double& v : lp.weight)
            v *= scale;
        for(double& v : lp.bias)
            v *= scale;
    }
    return out;
}

void TrainConfig::validate() const {
    if(!(lr0 > 0.0) || !std::isfinite(lr0))
        throw Error(ErrorCode::kConfig, "lr0 must be > 0");
    if(!(momentum >= 0.0 && momentum < 1.0))
        throw Error(ErrorCode::kConfig, "momentum must lie in [0, 1)");
    if(!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
        throw Error(ErrorCode::kConfig, "weight_decay must be >= 0");
    if(!(lr_factor > 0.0 && lr_factor <= 1.0))
        throw Error(ErrorCode::kConfig, "lr_factor must lie in (0, 1]");
    if(lr_step == 0)
        throw Error(ErrorCode::kConfig, "lr_step must be >= 1");
    if(batch_size == 0)
        throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
}

void sgd_step(MlpModel& model, const ParamSet& grad, ParamSet& velocity, double lr, const TrainConfig& config) {
    if(grad.size() != model.layers.size() || velocity.size() != model.layers.size())
        throw Error(ErrorCode::kDimMismatch, "gradient/velocity layer count does not match model");
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& v) {
        if(g.size() != p.size() || v.size() != p.size())
            throw Error(ErrorCode::kDimMismatch, "gradient/velocity shape does not match model");
        for(std::size_t k = 0; k < p.size(); ++k) {
            v[k] = config.momentum * v[k] + g[k] + config.weight_decay * p[k];
            p[k] -= lr * v[k];
        }
    };
    for(std::size_t l = 0; l < model.layers.size(); ++l) {
        update(model.layers[l].weight, grad[l].weight, velocity[l].weight);
        update(model.layers[l].bias, grad[l].bias, velocity[l].bias);
    }
}

double lr_at_epoch(const TrainConfig& config, std::size_t epoch) {
    // Repeated multiplication lands on the exact decimal values (.001, .0001,
    // 1e-5) for the default schedule, unlike pow().
    double lr = config.lr0;
    for(std::size_t k = 0; k < epoch / config.lr_step; ++k)
        lr *= config.lr_factor;
    return lr;
}

Network Network::single(MlpModel head) {
    Network n;
    n.topology = Topology::kSingle;
    n.stages.push_back(std::move(head));
    n.check();
    return n;
}

Network Network::two_stream(MlpModel branch, MlpModel fusion) {
    Network n;
    n.topology = Topology::kTwoStream;
    n.stages.push_back(std::move(branch));
    n.stages.push_back(std::move(fusion));
    n.check();
    return n;
}

std::size_t Network::side_dim() const {
    if(topology == Topology::kSingle)
        return 0;
    return stages[1].in_dim() - stages[0].out_dim();
}

void Network::check() const {
    const std::size_t expected = topology == Topology::kSingle ? 1 : 2;
    if(stages.size() != expected)
        throw Error(ErrorCode::kConfig, "network has " + std::to_string(stages.size()) + " stages");
    for(const auto& s : stages)
        check_model(s);
    if(topology == Topology::kTwoStream && stages[1].in_dim() < stages[0].out_dim())
        throw Error(ErrorCode::kDimMismatch, "fusion head narrower than the branch output");
}

std::vector<double> network_logits(const Network& net, std::span<const double> primary, std::span<const double> side) {
    if(primary.size() != net.primary_dim())
        throw Error(ErrorCode::kDimMismatch, "primary input length " + std::to_string(primary.size()) +
                                                 ", network expects " + std::to_string(net.primary_dim()));
    if(side.size() != net.side_dim())
        throw Error(ErrorCode::kDimMismatch, "side input length " + std::to_string(side.size()) +
                                                 ", network expects " + std::to_string(net.side_dim()));
    require_finite(primary);
    require_finite(side);
    ExampleWork w;
    w.primary.assign(primary.begin(), primary.end());
    w.side.assign(side.begin(), side.end());
    return run_forward(net, w);
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if(p.empty())
        return p;
    const double m = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for(double& v : p) {
        v = std::exp(v - m);
        sum += v;
    }
    for(double& v : p)
        v /= sum;
    return p;
}

std::size_t argmax(std::span<const double> values) {
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

DenseSource::DenseSource(std::vector<std::vector<double>> inputs, std::vector<std::size_t> labels,
                         std::vector<std::vector<double>> side)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), side_(std::move(side)) {
    if(inputs_.size() != labels_.size() || (!side_.empty() && side_.size() != labels_.size()))
        throw Error(ErrorCode::kDimMismatch, "inputs, labels and side rows differ in count");
    for(const auto& x : inputs_)
        if(x.size() != primary_dim())
            throw Error(ErrorCode::kDimMismatch, "ragged inputs");
    for(const auto& x : side_)
        if(x.size() != side_dim())
            throw Error(ErrorCode::kDimMismatch, "ragged side inputs");
}

void DenseSource::fill(std::size_t index, std::span<double> primary, std::span<double> side) const {
    std::copy(inputs_[index].begin(), inputs_[index].end(), primary.begin());
    if(!side_.empty())
        std::copy(side_[index].begin(), side_[index].end(), side.begin());
}

double network_loss_and_grad(const Network& net, const ExampleSource& data, std::span<const std::size_t> indices,
                             std::vector<ParamSet>& grads, unsigned threads) {
    if(indices.empty())
        throw Error(ErrorCode::kInvalidArgument, "empty batch");
    if(data.primary_dim() != net.primary_dim() || data.side_dim() != net.side_dim())
        throw Error(ErrorCode::kDimMismatch, "example source does not match network input widths");
    const std::size_t n_chunks = (indices.size() + kChunk - 1) / kChunk;
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n_chunks));

    grads = zeros_like(net);
    std::vector<std::vector<ParamSet>> partial(workers, zeros_like(net));
    std::vector<ExampleWork> work(workers);
    std::vector<double> chunk_loss(workers, 0.0);
    for(auto& w : work)
        prepare(w, net);

    auto run_chunk = [&](std::size_t slot, std::size_t chunk) {
        clear(partial[slot]);
        chunk_loss[slot] = 0.0;
        ExampleWork& w = work[slot];
        const std::size_t end = std::min(indices.size(), (chunk + 1) * kChunk);
        for(std::size_t k = chunk * kChunk; k < end; ++k) {
            const std::size_t idx = indices[k];
            const std::size_t label = data.label(idx);
            check_label(label, net.n_classes());
            data.fill(idx, w.primary, w.side);
            chunk_loss[slot] += run_example(net, w, label, partial[slot]);
        }
    };

    double loss = 0.0;
    for(std::size_t first = 0; first < n_chunks; first += workers) {
        const std::size_t wave = std::min(workers, n_chunks - first);
        if(wave == 1) {
            run_chunk(0, first);
        } else {
            std::vector<std::thread> pool;
            for(std::size_t s = 0; s < wave; ++s)
                pool.emplace_back(run_chunk, s, first + s);
            for(auto& t : pool)
                t.join();
        }
        for(std::size_t s = 0; s < wave; ++s) {
            accumulate(grads, partial[s]);
            loss += chunk_loss[s];
        }
    }
    const double scale = 1.0 / static_cast<double>(indices.size());
    for(auto& set : grads)
        for(auto& lp : set) {
            for(double& v : lp.weight)
                v *= scale;
            for(double& v : lp.bias)
                v *= scale;
        }
    return loss * scale;
}

double network_accuracy(const Network& net, const ExampleSource& data) {
    if(data.size() == 0)
        return 0.0;
    ExampleWork w;
    prepare(w, net);
    std::size_t correct = 0;
    for(std::size_t k = 0; k < data.size(); ++k) {
        data.fill(k, w.primary, w.side);
        if(argmax(run_forward(net, w)) == data.label(k))
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainState initial_state(Network net) {
    net.check();
    TrainState s;
    s.velocity = zeros_like(net);
    s.net = std::move(net);
    return s;
}

TrainResult train_network(Network net, const ExampleSource& train, const ExampleSource& val,
                          const TrainConfig& config, const TrainControl& control) {
    config.validate();
    if(train.size() == 0)
        throw Error(ErrorCode::kEmptyTrainSet, "no training examples");
    if(config.best_reload && val.size() == 0)
        throw Error(ErrorCode::kEmptyValSet, "best-checkpoint reload needs a validation set");
    const ExampleSource& selection = val.size() > 0 ? val : train;

    TrainResult result;
    result.last = control.resume_last ? *control.resume_last : initial_state(std::move(net));
    result.best = control.resume_best ? *control.resume_best : result.last;
    result.last.net.check();
    if(static_cast<std::size_t>(result.last.epoch) > config.epochs)
        throw Error(ErrorCode::kConfig, "resume state is past the configured epoch count");

    std::vector<std::size_t> order(train.size());
    std::vector<ParamSet> grads;
    for(std::size_t epoch = static_cast<std::size_t>(result.last.epoch); epoch < config.epochs; ++epoch) {
        if(control.stop_after && epoch >= *control.stop_after)
            break;
        TrainState& cur = result.last;
        if(config.best_reload && epoch > 0 && epoch % config.lr_step == 0 && result.best.best_accuracy >= 0.0) {
            cur.net = result.best.net;
            cur.velocity = result.best.velocity;
        }
        const double lr = lr_at_epoch(config, epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 g(derive_seed(config.seed, epoch));
        deterministic_shuffle(order, g);

        double loss_sum = 0.0;
        for(std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::span<const std::size_t> batch(order.data() + begin, end - begin);
            const double loss = network_loss_and_grad(cur.net, train, batch, grads, config.threads);
            loss_sum += loss * static_cast<double>(batch.size());
            for(std::size_t s = 0; s < cur.net.stages.size(); ++s)
                sgd_step(cur.net.stages[s], grads[s], cur.velocity[s], lr, config);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        if(!std::isfinite(train_loss))
            throw Error(ErrorCode::kNonFinite, "training loss diverged at epoch " + std::to_string(epoch));
        const double acc = network_accuracy(cur.net, selection);
        cur.epoch = static_cast<std::int64_t>(epoch + 1);
        if(acc > result.best.best_accuracy) {
            result.best = cur;
            result.best.best_accuracy = acc;
        }
        cur.best_accuracy = result.best.best_accuracy;
        result.history.push_back({epoch, lr, train_loss, acc});
    }
    return result;
}

TrainOutcome train(const MlpModel& model, const ExampleSource& train_set, const ExampleSource& val_set,
                   const TrainConfig& config) {
    TrainResult r = train_network(Network::single(model), train_set, val_set, config);
    return {stage_checkpoint(r.best, 0), std::move(r.history)};
}

Checkpoint stage_checkpoint(const TrainState& state, std::size_t stage) {
    return {state.net.stages.at(stage), state.velocity.at(stage), state.epoch, state.best_accuracy};
}

TrainState state_from_checkpoints(Topology topology, std::vector<Checkpoint> stages) {
    if(stages.empty())
        throw Error(ErrorCode::kConfig, "no checkpoints");
    TrainState s;
    s.net.topology = topology;
    s.epoch = stages.front().epoch;
    s.best_accuracy = stages.front().best_accuracy;
    for(auto& c : stages) {
        if(c.epoch != s.epoch)
            throw Error(ErrorCode::kCorruptFile, "sub-network checkpoints come from different epochs");
        s.net.stages.push_back(std::move(c.model));
        s.velocity.push_back(std::move(c.velocity));
    }
    s.net.check();
    return s;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    check_model(ckpt.model);
    binio::Writer w;
    w.put_magic(kCheckpointMagic);
    w.put_u32(kCheckpointVersion);
    w.put_u64(ckpt.model.seed);
    w.put_u64(ckpt.model.layers.size());
    for(const auto& l : ckpt.model.layers) {
        w.put_u64(l.in);
        w.put_u64(l.out);
        w.put_u8(static_cast<std::uint8_t>(l.activation));
    }
    for(const auto& l : ckpt.model.layers) {
        w.put_f64s(l.weight);
        w.put_f64s(l.bias);
    }
    if(ckpt.velocity.size() != ckpt.model.layers.size())
        throw Error(ErrorCode::kDimMismatch, "velocity does not match model");
    for(std::size_t l = 0; l < ckpt.velocity.size(); ++l) {
        if(ckpt.velocity[l].weight.size() != ckpt.model.layers[l].weight.size() ||
           ckpt.velocity[l].bias.size() != ckpt.model.layers[l].bias.size())
            throw Error(ErrorCode::kDimMismatch, "velocity does not match model");
        w.put_f64s(ckpt.velocity[l].weight);
        w.put_f64s(ckpt.velocity[l].bias);
    }
    w.put_i64(ckpt.epoch);
    w.put_f64(ckpt.best_accuracy);
    w.seal();
    return w.bytes();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
    binio::Reader r = binio::open_container(bytes, kCheckpointMagic, kCheckpointVersion, "checkpoint");
    Checkpoint c;
    c.model.seed = r.get_u64();
    const std::size_t n_layers = r.get_count(17);
    if(n_layers == 0)
        throw Error(ErrorCode::kCorruptFile, "checkpoint: no layers");
    c.model.layers.resize(n_layers);
    std::size_t total = 0;
    for(auto& l : c.model.layers) {
        l.in = r.get_u64();
        l.out = r.get_u64();
        const std::uint8_t act = r.get_u8();
        if(act > 1)
            throw Error(ErrorCode::kCorruptFile, "checkpoint: unknown activation");
        l.activation = static_cast<Activation>(act);
        if(l.in == 0 || l.out == 0 || l.in > r.remaining() || l.out > r.remaining() / 8 ||
           l.in * l.out > r.remaining() / 8)
            throw Error(ErrorCode::kCorruptFile, "checkpoint: implausible layer shape");
        total += l.in * l.out + l.out;
    }
    if(total > r.remaining() / 16)
        throw Error(ErrorCode::kCorruptFile, "checkpoint: truncated");
    for(auto& l : c.model.layers) {
        l.weight.resize(l.in * l.out);
        l.bias.resize(l.out);
        r.get_f64s(l.weight);
        r.get_f64s(l.bias);
    }
    c.velocity = zeros_like(c.model);
    for(auto& v : c.velocity) {
        r.get_f64s(v.weight);
        r.get_f64s(v.bias);
    }
    c.epoch = r.get_i64();
    c.best_accuracy = r.get_f64();
    if(r.remaining() != 0)
        throw Error(ErrorCode::kCorruptFile, "checkpoint: trailing bytes");
    try {
        check_model(c.model);
    } catch(const Error& e) {
        throw Error(ErrorCode::kCorruptFile, std::string("checkpoint: ") + e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    binio::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(binio::read_file(path)); }

} // namespace borm
