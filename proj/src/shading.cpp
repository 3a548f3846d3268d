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

#include "rtsplat/shading.hpp"

#include "rtsplat/errors.hpp"

#include <cmath>
#include <string>

namespace rtsplat {

void ShadingParams::pack(std::span<double> out) const {
    if (out.size() != size()) throw DimensionMismatch("ShadingParams::pack: wrong span size");
    std::size_t i = 0;
    for (int k = 0; k < kEnvCoeffs; ++k)
        for (int c = 0; c < 3; ++c) out[i++] = env(k, c);
    auto put = [&](const auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out[i++] = m(r, c);
    };
    put(w1);
    put(b1);
    put(w2);
    put(b2);
    put(w3);
    put(b3);
}

void ShadingParams::unpack(std::span<const double> in) {
    if (in.size() != size()) throw DimensionMismatch("ShadingParams::unpack: wrong span size");
    std::size_t i = 0;
    for (int k = 0; k < kEnvCoeffs; ++k)
        for (int c = 0; c < 3; ++c) env(k, c) = in[i++];
    auto get = [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in[i++];
    };
    get(w1);
    get(b1);
    get(w2);
    get(b2);
    get(w3);
    get(b3);
}

ShadingParams ShadingParams::initialized(std::mt19937_64& rng) {
    ShadingParams p;
    auto glorot = [&](Eigen::MatrixXd& m) {
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    };
    glorot(p.w1);
    glorot(p.w2);
    glorot(p.w3);
    return p;
}

Vec3 reflect_dir(const Vec3& n, const Vec3& v) {
    if (std::abs(n.norm() - 1.0) > 1e-6 || std::abs(v.norm() - 1.0) > 1e-6)
        throw InvalidParameter("reflect_dir: normal and view direction must be unit vectors");
    return 2.0 * n.dot(v) * n - v;
}

double env_band_attenuation(int band, double roughness) {
    return std::exp(-band * (band + 1) * roughness * roughness);
}

Vec3 env_eval(const Eigen::Matrix<double, ShadingParams::kEnvCoeffs, 3>& env, const Vec3& r, double roughness) {
    std::array<double, ShadingParams::kEnvCoeffs> y;
    sh_basis(ShadingParams::kEnvDegree, r, y);
    Vec3 out = Vec3::Zero();
    for (int l = 0; l <= ShadingParams::kEnvDegree; ++l) {
        const double a = env_band_attenuation(l, roughness);
        for (int k = l * l; k < (l + 1) * (l + 1); ++k) out += a * y[k] * env.row(k).transpose();
    }
    return out.cwiseMax(0.0);
}

HeadInput head_input(const Vec3& env_rgb, std::span<const double> feature, double n_dot_v) {
    if (feature.size() != ShadingParams::kFeatureDim) throw DimensionMismatch("head_input: feature size");
    HeadInput x;
    x.head<3>() = env_rgb;
    for (int i = 0; i < ShadingParams::kFeatureDim; ++i) x[3 + i] = feature[i];
    x[ShadingParams::kInput - 1] = n_dot_v;
    return x;
}

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

SpecularOutput spec_head(const ShadingParams& params, const Vec3& env_rgb, std::span<const double> feature,
                         double n_dot_v, long pixel) {
    const HeadInput x = head_input(env_rgb, feature, n_dot_v);
    if (!x.allFinite())
        throw InvalidParameter("spec_head: non-finite input at pixel " + std::to_string(pixel));
    const Eigen::VectorXd h1 = (params.w1 * x + params.b1).cwiseMax(0.0);
    const Eigen::VectorXd h2 = (params.w2 * h1 + params.b2).cwiseMax(0.0);
    const Eigen::VectorXd z = params.w3 * h2 + params.b3;
    SpecularOutput out;
    out.specular = Vec3(logistic(z[0]), logistic(z[1]), logistic(z[2]));
    out.attenuation = logistic(z[3]);
    return out;
}

void HeadBatch::forward(const ShadingParams& params) {
    hidden1 = ((params.w1 * inputs).colwise() + params.b1).cwiseMax(0.0);
    hidden2 = ((params.w2 * hidden1).colwise() + params.b2).cwiseMax(0.0);
    outputs = ((params.w3 * hidden2).colwise() + params.b3).unaryExpr([](double v) { return logistic(v); });
}

Eigen::MatrixXd HeadBatch::backward(const ShadingParams& params, const Eigen::MatrixXd& grad_outputs,
                                    ShadingParams& grad) const {
    const Eigen::MatrixXd dz3 = grad_outputs.cwiseProduct(outputs.cwiseProduct((1.0 - outputs.array()).matrix()));
    grad.w3 += dz3 * hidden2.transpose();
    grad.b3 += dz3.rowwise().sum();
    Eigen::MatrixXd dz2 = params.w3.transpose() * dz3;
    dz2 = dz2.cwiseProduct((hidden2.array() > 0.0).cast<double>().matrix());
    grad.w2 += dz2 * hidden1.transpose();
    grad.b2 += dz2.rowwise().sum();
    Eigen::MatrixXd dz1 = params.w2.transpose() * dz2;
    dz1 = dz1.cwiseProduct((hidden1.array() > 0.0).cast<double>().matrix());
    grad.w1 += dz1 * inputs.transpose();
    grad.b1 += dz1.rowwise().sum();
    return params.w1.transpose() * dz1;
}

} // namespace rtsplat
