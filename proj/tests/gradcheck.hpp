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

// Finite-difference gradient check shared by the unit tests and the
// acceptance binary.

#include "borm/mlp.hpp"
#include "borm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace borm_test {

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

struct GradCase {
    borm::MlpModel model;
    std::vector<std::vector<double>> inputs;
    std::vector<std::size_t> labels;
};

// Random model with 2-4 layers, widths <= max_dim, and a random batch.
inline GradCase random_grad_case(std::uint64_t seed, std::size_t max_dim, std::size_t max_batch) {
    borm::SplitMix64 g(seed);
    std::vector<std::size_t> dims(2 + g.below(3));
    for(auto& d : dims)
        d = 1 + g.below(max_dim);
    dims.back() = std::max<std::size_t>(dims.back(), 2);
    GradCase c{borm::init_model(dims, borm::derive_seed(seed, 1)), {}, {}};
    for(auto& layer : c.model.layers)
        for(double& b : layer.bias)
            b = 0.2 * (2.0 * g.uniform() - 1.0);
    const std::size_t batch = 1 + g.below(max_batch);
    for(std::size_t k = 0; k < batch; ++k) {
        std::vector<double> x(dims.front());
        for(double& v : x)
            v = 2.0 * g.uniform() - 1.0;
        c.inputs.push_back(std::move(x));
        c.labels.push_back(g.below(dims.back()));
    }
    return c;
}

inline double batch_loss(const borm::MlpModel& m, const GradCase& c) {
    std::vector<borm::Example> batch;
    for(std::size_t k = 0; k < c.inputs.size(); ++k)
        batch.push_back({c.inputs[k], c.labels[k]});
    return borm::loss_and_grad(m, batch).loss;
}

// Max relative error between backprop and central differences over every
// parameter of the model.
inline double max_gradient_error(const GradCase& c, double h = 1e-5) {
    std::vector<borm::Example> batch;
    for(std::size_t k = 0; k < c.inputs.size(); ++k)
        batch.push_back({c.inputs[k], c.labels[k]});
    const auto analytic = borm::loss_and_grad(c.model, batch).grad;
    borm::MlpModel m = c.model;
    double worst = 0.0;
    auto probe = [&](double& p, double a) {
        const double saved = p;
        p = saved + h;
        const double up = batch_loss(m, c);
        p = saved - h;
        const double down = batch_loss(m, c);
        p = saved;
        worst = std::max(worst, relative_error(a, (up - down) / (2.0 * h)));
    };
    for(std::size_t l = 0; l < m.layers.size(); ++l) {
        for(std::size_t k = 0; k < m.layers[l].weight.size(); ++k)
            probe(m.layers[l].weight[k], analytic[l].weight[k]);
        for(std::size_t k = 0; k < m.layers[l].bias.size(); ++k)
            probe(m.layers[l].bias[k], analytic[l].bias[k]);
    }
    return worst;
}

} // namespace borm_test
