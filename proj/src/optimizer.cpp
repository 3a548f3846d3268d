/*
 * Copyright (C) 2026 The rtsplat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rtsplat/optimizer.hpp"

#include "rtsplat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rtsplat {

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 double lr, std::int64_t step, const AdamHyper& hyper) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
        throw DimensionMismatch("adam_update: parameter, gradient and moment sizes differ");
    if (step < 1) throw InvalidParameter("adam_update: step count starts at 1");
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * grads[i];
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        params[i] -= lr * mh / (std::sqrt(vh) + hyper.epsilon);
    }
}

double LearningRates::for_group(ParamGroup g) const {
    switch (g) {
    case ParamGroup::Position: return position;
    case ParamGroup::Rotation: return rotation;
    case ParamGroup::Scale: return scale;
    case ParamGroup::Occupancy:
    case ParamGroup::Opacity: return opacity;
    case ParamGroup::ShColor: return sh_color;
    case ParamGroup::Surface: return surface;
    }
    return 0.0;
}

double LearningRates::position_at(std::int64_t iteration, std::int64_t max_iterations) const {
    if (max_iterations <= 0 || position <= 0 || position_final <= 0) return position;
    const double t = std::clamp(static_cast<double>(iteration) / static_cast<double>(max_iterations), 0.0, 1.0);
    return std::exp((1.0 - t) * std::log(position) + t * std::log(position_final));
}

SceneOptimizer::SceneOptimizer(const Scene& scene, AdamHyper hyper)
    : hyper_(hyper), width_(surfel_param_count(scene.sh_degree)) {
    m_.assign(scene.surfels.size(), std::vector<double>(width_, 0.0));
    v_ = m_;
    shading_m_.assign(ShadingParams::size(), 0.0);
    shading_v_ = shading_m_;
}

void SceneOptimizer::step(Scene& scene, const GradientBundle& grads, const LearningRates& rates,
                          double position_lr) {
    if (scene.surfels.size() != m_.size() || grads.surfels.size() != scene.surfels.size())
        throw DimensionMismatch("optimizer: surfel count changed without remap");
    if (surfel_param_count(scene.sh_degree) != width_) throw DimensionMismatch("optimizer: color degree changed");
    ++step_;
    std::vector<double> p(width_), g(width_);
    // Contiguous runs of equal group share one learning rate.
    std::vector<std::pair<std::size_t, double>> runs;
    for (std::size_t j = 0; j < width_; ++j) {
        const ParamGroup grp = surfel_param_group(j, scene.sh_degree);
        const double lr = grp == ParamGroup::Position ? position_lr : rates.for_group(grp);
        if (runs.empty() || runs.back().second != lr || surfel_param_group(j - 1, scene.sh_degree) != grp)
            runs.emplace_back(j, lr);
    }
    runs.emplace_back(width_, 0.0);
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        pack_surfel(scene.surfels[i], p);
        pack_surfel(grads.surfels[i], g);
        for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
            const std::size_t b = runs[r].first, e = runs[r + 1].first;
            adam_update(std::span(p).subspan(b, e - b), std::span<const double>(g).subspan(b, e - b),
                        std::span(m_[i]).subspan(b, e - b), std::span(v_[i]).subspan(b, e - b), runs[r].second,
                        step_, hyper_);
        }
        unpack_surfel(p, scene.surfels[i]);
    }
    std::vector<double> sp(ShadingParams::size()), sg(ShadingParams::size());
    scene.shading.pack(sp);
    grads.shading.pack(sg);
    adam_update(sp, sg, shading_m_, shading_v_, rates.shading, step_, hyper_);
    scene.shading.unpack(sp);
}

void SceneOptimizer::remap(const std::vector<std::int64_t>& source) {
    std::vector<std::vector<double>> m(source.size()), v(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (source[i] >= 0) {
            if (static_cast<std::size_t>(source[i]) >= m_.size())
                throw DimensionMismatch("optimizer remap: source index out of range");
            m[i] = m_[source[i]];
            v[i] = v_[source[i]];
        } else {
            m[i].assign(width_, 0.0);
            v[i].assign(width_, 0.0);
        }
    }
    m_ = std::move(m);
    v_ = std::move(v);
}

} // namespace rtsplat
