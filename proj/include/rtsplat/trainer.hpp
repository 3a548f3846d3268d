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

#include "rtsplat/config.hpp"
#include "rtsplat/dataset.hpp"
#include "rtsplat/density.hpp"
#include "rtsplat/losses.hpp"
#include "rtsplat/optimizer.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rtsplat {

struct Ablations {
    bool no_occupancy = false;
    bool no_scattering = false;
    bool no_attenuation = false;
    bool no_gating = false;
    bool no_mask_loss = false;
};

struct TrainConfig {
    std::int64_t iterations = 7000;
    std::uint64_t seed = 0;
    int sh_degree = 2;
    int workers = 0;
    LearningRates rates;
    DensityConfig density;
    LossWeights loss;
    Ablations ablations;
    std::int64_t checkpoint_interval = 0; ///< 0 writes only the final checkpoint
    std::int64_t progress_interval = 0;   ///< 0 is silent

    void validate() const;
    /// Reads every known key from `cfg`; unknown keys are an error.
    static TrainConfig from_config(const Config& cfg);
    /// Settings actually used for rendering and losses once ablations are applied.
    LossWeights effective_loss() const;
    double effective_gating() const;
};

struct LogRow {
    std::int64_t iteration = 0;
    LossComponents components;
    double total = 0;
};

/// CSV header and row format of the loss log.
std::string log_header();
std::string format_log_row(const LogRow& row);

struct TrainResult {
    Scene scene;
    std::vector<LogRow> log;
};

/// Called after each iteration with the current scene; may be empty.
using TrainObserver = std::function<void(std::int64_t iteration, const Scene& scene, const LogRow& row)>;

/// Runs the optimization on the training views of `data`. If `out_dir` is not
/// empty, writes loss.csv, periodic checkpoints, and checkpoint.rtsp there.
/// Validates the dataset against its cameras before the first iteration.
TrainResult train(const Dataset& data, const TrainConfig& config, const std::string& out_dir = {},
                  const TrainObserver& observer = {});

/// Same as train, starting from an existing scene.
TrainResult train_from(const Dataset& data, Scene scene, const TrainConfig& config, const std::string& out_dir = {},
                       const TrainObserver& observer = {});

/// Builds the initial scene, with the ablation variant applied.
Scene initial_scene(const Dataset& data, const TrainConfig& config);

} // namespace rtsplat
