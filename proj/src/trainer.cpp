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

#include "rtsplat/trainer.hpp"

#include "rtsplat/checkpoint.hpp"
#include "rtsplat/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

namespace fs = std::filesystem;

namespace rtsplat {

void TrainConfig::validate() const {
    if (iterations < 0) throw InvalidParameter("iterations must be non-negative");
    if (checkpoint_interval < 0 || progress_interval < 0) throw InvalidParameter("intervals must be non-negative");
    if (sh_degree < 0 || sh_degree > kMaxShDegree) throw InvalidParameter("sh_degree must be in [0, 4]");
    density.validate();
    loss.validate();
}

TrainConfig TrainConfig::from_config(const Config& cfg) {
    cfg.require_known({"iterations", "seed", "sh_degree", "workers", "checkpoint_interval", "progress_interval",
                       "lr_position", "lr_position_final", "lr_rotation", "lr_scale", "lr_opacity", "lr_sh_color",
                       "lr_surface", "lr_shading", "densify_interval", "densify_start", "densify_until_fraction",
                       "densify_grad_threshold", "split_fraction", "prune_occupancy", "reset_interval",
                       "reset_ceiling", "max_surfels", "lambda_dssim", "lambda_perc", "lambda_normal", "lambda_mask",
                       "gating_k", "bce_epsilon", "no_occupancy", "no_scattering", "no_attenuation", "no_gating",
                       "no_mask_loss"});
    TrainConfig c;
    c.iterations = cfg.get_int("iterations", c.iterations);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long>(c.seed)));
    c.sh_degree = static_cast<int>(cfg.get_int("sh_degree", c.sh_degree));
    c.workers = static_cast<int>(cfg.get_int("workers", c.workers));
    c.checkpoint_interval = cfg.get_int("checkpoint_interval", c.checkpoint_interval);
    c.progress_interval = cfg.get_int("progress_interval", c.progress_interval);
    auto& r = c.rates;
    r.position = cfg.get_double("lr_position", r.position);
    r.position_final = cfg.get_double("lr_position_final", r.position_final);
    r.rotation = cfg.get_double("lr_rotation", r.rotation);
    r.scale = cfg.get_double("lr_scale", r.scale);
    r.opacity = cfg.get_double("lr_opacity", r.opacity);
    r.sh_color = cfg.get_double("lr_sh_color", r.sh_color);
    r.surface = cfg.get_double("lr_surface", r.surface);
    r.shading = cfg.get_double("lr_shading", r.shading);
    auto& d = c.density;
    d.interval = cfg.get_int("densify_interval", d.interval);
    d.start = cfg.get_int("densify_start", d.start);
    d.until_fraction = cfg.get_double("densify_until_fraction", d.until_fraction);
    d.grad_threshold = cfg.get_double("densify_grad_threshold", d.grad_threshold);
    d.split_fraction = cfg.get_double("split_fraction", d.split_fraction);
    d.prune_occupancy = cfg.get_double("prune_occupancy", d.prune_occupancy);
    d.reset_interval = cfg.get_int("reset_interval", d.reset_interval);
    d.reset_ceiling = cfg.get_double("reset_ceiling", d.reset_ceiling);
    d.max_surfels = static_cast<std::size_t>(cfg.get_int("max_surfels", static_cast<long>(d.max_surfels)));
    auto& l = c.loss;
    l.lambda_dssim = cfg.get_double("lambda_dssim", l.lambda_dssim);
    l.lambda_perc = cfg.get_double("lambda_perc", l.lambda_perc);
    l.lambda_normal = cfg.get_double("lambda_normal", l.lambda_normal);
    l.lambda_mask = cfg.get_double("lambda_mask", l.lambda_mask);
    l.gating_k = cfg.get_double("gating_k", l.gating_k);
    l.bce_epsilon = cfg.get_double("bce_epsilon", l.bce_epsilon);
    auto& a = c.ablations;
    a.no_occupancy = cfg.get_bool("no_occupancy", a.no_occupancy);
    a.no_scattering = cfg.get_bool("no_scattering", a.no_scattering);
    a.no_attenuation = cfg.get_bool("no_attenuation", a.no_attenuation);
    a.no_gating = cfg.get_bool("no_gating", a.no_gating);
    a.no_mask_loss = cfg.get_bool("no_mask_loss", a.no_mask_loss);
    c.validate();
    return c;
}

LossWeights TrainConfig::effective_loss() const {
    LossWeights w = loss;
    if (ablations.no_mask_loss) w.lambda_mask = 0.0;
    w.gating_k = effective_gating();
    return w;
}

double TrainConfig::effective_gating() const { return ablations.no_gating ? 0.0 : loss.gating_k; }

std::string log_header() { return "iteration,image,normal,mask,total"; }

std::string format_log_row(const LogRow& row) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g", static_cast<long long>(row.iteration),
                  row.components.image, row.components.normal, row.components.mask, row.total);
    return buf;
}

Scene initial_scene(const Dataset& data, const TrainConfig& config) {
    Scene scene = init_scene(data, config.sh_degree, config.seed);
    scene.variant.shared_opacity = config.ablations.no_occupancy;
    scene.variant.scattering = !config.ablations.no_scattering;
    scene.variant.attenuation = !config.ablations.no_attenuation;
    return scene;
}

TrainResult train(const Dataset& data, const TrainConfig& config, const std::string& out_dir,
                  const TrainObserver& observer) {
    config.validate();
    data.validate();
    return train_from(data, initial_scene(data, config), config, out_dir, observer);
}

TrainResult train_from(const Dataset& data, Scene scene, const TrainConfig& config, const std::string& out_dir,
                       const TrainObserver& observer) {
    config.validate();
    data.validate();
    scene.validate();
    const auto train_views = data.train_indices();
    if (train_views.empty() && config.iterations > 0) throw InvalidParameter("dataset has no training views");

    std::ofstream log_file;
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
        log_file.open(fs::path(out_dir) / "loss.csv");
        if (!log_file) throw IoError("cannot write " + (fs::path(out_dir) / "loss.csv").string());
        log_file << log_header() << '\n';
    }

    const LossWeights weights = config.effective_loss();
    RenderSettings settings;
    settings.gating_k = config.effective_gating();
    settings.workers = config.workers;
    const double extent = data.extent();

    SceneOptimizer optimizer(scene);
    DensityStats stats;
    stats.resize(scene.surfels.size());
    std::mt19937_64 view_rng(config.seed * 0x9E3779B97F4A7C15ull + 1);
    std::mt19937_64 density_rng(config.seed * 0x9E3779B97F4A7C15ull + 2);
    std::vector<std::size_t> queue;

    TrainResult result;
    const std::int64_t start = scene.iteration;
    for (std::int64_t it = start + 1; it <= start + config.iterations; ++it) {
        if (queue.empty()) {
            queue = train_views;
            std::shuffle(queue.begin(), queue.end(), view_rng);
            std::reverse(queue.begin(), queue.end());
        }
        const std::size_t view = queue.back();
        queue.pop_back();

        ObjectiveResult obj = evaluate_objective(scene, data.cameras[view], data.views[view], weights, settings, true);
        const GradientBundle& grads = *obj.grads;
        if (!grads.all_finite())
            throw Error("non-finite gradient at iteration " + std::to_string(it) + " (view " + std::to_string(view) + ")");
        LogRow row{it, obj.components, obj.total};
        result.log.push_back(row);
        if (log_file) log_file << format_log_row(row) << '\n';

        const std::int64_t local = it - start;
        if (local <= config.density.until(config.iterations)) stats.accumulate(grads);
        optimizer.step(scene, grads, config.rates,
                       config.rates.position_at(local, config.iterations) * extent);
        const DensityEvent ev =
            density_control(scene, stats, local, config.iterations, config.density, extent, density_rng);
        if (!ev.source.empty()) optimizer.remap(ev.source);
        scene.iteration = it;

        if (config.progress_interval > 0 && local % config.progress_interval == 0)
            std::fprintf(stderr, "iter %lld  loss %.5f  surfels %zu\n", static_cast<long long>(it), obj.total,
                         scene.surfels.size());
        if (!out_dir.empty() && config.checkpoint_interval > 0 && local % config.checkpoint_interval == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_%06lld.rtsp", static_cast<long long>(it));
            save_checkpoint(scene, (fs::path(out_dir) / name).string());
        }
        if (observer) observer(it, scene, row);
    }
    if (!out_dir.empty()) save_checkpoint(scene, (fs::path(out_dir) / "checkpoint.rtsp").string());
    result.scene = std::move(scene);
    return result;
}

} // namespace rtsplat
