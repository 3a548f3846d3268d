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

#pragma once

#include "rtsplat/math.hpp"
#include "rtsplat/sh.hpp"

#include <Eigen/Dense>

#include <array>
#include <random>
#include <span>
#include <vector>

namespace rtsplat {

/// Environment SH lighting plus a small feed-forward head mapping
/// (environment radiance, material feature, n.v) to (C_spec, beta).
struct ShadingParams {
    static constexpr int kEnvDegree = 4;
    static constexpr int kEnvCoeffs = sh_count(kEnvDegree);
    static constexpr int kFeatureDim = 8;
    static constexpr int kInput = 3 + kFeatureDim + 1;
    static constexpr int kHidden = 64;
    static constexpr int kOutput = 4;

    Eigen::Matrix<double, kEnvCoeffs, 3> env = Eigen::Matrix<double, kEnvCoeffs, 3>::Zero();
    Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(kHidden, kInput);
    Eigen::VectorXd b1 = Eigen::VectorXd::Zero(kHidden);
    Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(kHidden, kHidden);
    Eigen::VectorXd b2 = Eigen::VectorXd::Zero(kHidden);
    Eigen::MatrixXd w3 = Eigen::MatrixXd::Zero(kOutput, kHidden);
    Eigen::VectorXd b3 = Eigen::VectorXd::Zero(kOutput);

    static constexpr std::size_t size() {
        return kEnvCoeffs * 3 + kHidden * kInput + kHidden + kHidden * kHidden + kHidden + kOutput * kHidden + kOutput;
    }
    /// Flat layout: env (coefficient-major), w1, b1, w2, b2, w3, b3 (matrices row-major).
    void pack(std::span<double> out) const;
    void unpack(std::span<const double> in);
    /// Index of the first head weight in the flat layout.
    static constexpr std::size_t head_offset() { return kEnvCoeffs * 3; }

    /// Glorot-uniform weights, zero biases, zero environment.
    static ShadingParams initialized(std::mt19937_64& rng);
};

/// Mirror of v (unit, toward the camera) about the unit normal n.
/// Throws InvalidParameter if either input is not unit length within 1e-6.
Vec3 reflect_dir(const Vec3& n, const Vec3& v);

/// Per-band roughness prefilter a_l(rho) = exp(-l(l+1) rho^2).
double env_band_attenuation(int band, double roughness);

/// Prefiltered environment radiance along r, clamped below at 0.
Vec3 env_eval(const Eigen::Matrix<double, ShadingParams::kEnvCoeffs, 3>& env, const Vec3& r, double roughness);

struct SpecularOutput {
    Vec3 specular = Vec3::Zero(); ///< C_spec
    double attenuation = 1;       ///< beta
};

using HeadInput = Eigen::Matrix<double, ShadingParams::kInput, 1>;

/// Packs (env radiance, feature, n.v) into the head input vector.
HeadInput head_input(const Vec3& env_rgb, std::span<const double> feature, double n_dot_v);

/// Single-pixel evaluation of the head. `pixel` is only used in error messages.
SpecularOutput spec_head(const ShadingParams& params, const Vec3& env_rgb, std::span<const double> feature,
                         double n_dot_v, long pixel = -1);

/// Batched head over the columns of `inputs`, keeping the activations needed for
/// the backward pass.
struct HeadBatch {
    Eigen::MatrixXd inputs;  ///< kInput x M
    Eigen::MatrixXd hidden1; ///< post-ReLU
    Eigen::MatrixXd hidden2;
    Eigen::MatrixXd outputs; ///< post-logistic, kOutput x M

    void forward(const ShadingParams& params);
    /// Given dL/d(outputs), accumulates weight gradients into `grad` and returns dL/d(inputs).
    Eigen::MatrixXd backward(const ShadingParams& params, const Eigen::MatrixXd& grad_outputs,
                             ShadingParams& grad) const;
};

} // namespace rtsplat
