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

#include "rtsplat/cli.hpp"

#include "rtsplat/checkpoint.hpp"
#include "rtsplat/editing.hpp"
#include "rtsplat/errors.hpp"
#include "rtsplat/gradcheck.hpp"
#include "rtsplat/metrics.hpp"
#include "rtsplat/synth.hpp"
#include "rtsplat/trainer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace fs = std::filesystem;

namespace rtsplat {
namespace {

struct SynthArgs {
    std::string spec, out, preset = "default";
    std::optional<std::uint64_t> seed;
};

struct TrainArgs {
    std::string data, config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> iters;
    std::optional<int> workers;
    std::optional<double> gating_k;
    std::optional<std::int64_t> checkpoint_interval, progress;
    bool no_occupancy = false, no_scattering = false, no_attenuation = false, no_gating = false,
         no_mask_loss = false;
};

struct ViewArgs {
    std::string checkpoint, data, cameras, out;
    std::optional<std::size_t> camera;
    double gating_k = 4.0;
    int workers = 0;
};

struct EvalArgs {
    std::string checkpoint, data, split = "test", csv;
    double gating_k = 4.0;
    int workers = 0;
    bool gradcheck = false;
    std::uint64_t seed = 0;
    int surfels = 10, size = 16;
    double step = 1e-5, tolerance = 1e-4;
};

struct EditArgs {
    std::string checkpoint, spec, out, mask, data, cameras;
    std::size_t mask_view = 0;
    std::optional<double> roughness_scale, set_tau, set_opacity;
    std::vector<double> tint, box;
    bool remove_reflection = false, all = false, undo = false;
};

std::vector<Camera> cameras_from(const std::string& data, const std::string& cameras) {
    if (!cameras.empty()) return read_cameras(cameras);
    if (!data.empty()) return read_cameras((fs::path(data) / "cameras.txt").string());
    throw UsageError("one of --data or --cameras is required");
}

const Camera& pick(const std::vector<Camera>& cams, std::size_t index) {
    if (index >= cams.size())
        throw UsageError("camera " + std::to_string(index) + " out of range (" + std::to_string(cams.size()) +
                         " cameras)");
    return cams[index];
}

Image depth_preview(const Image& depth) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double d : depth.data)
        if (d > 0 && std::isfinite(d)) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    Image out(depth.width, depth.height, 1);
    for (std::size_t i = 0; i < depth.data.size(); ++i) {
        const double d = depth.data[i];
        out.data[i] = (d > 0 && std::isfinite(d) && hi > lo) ? 1.0 - (d - lo) / (hi - lo) : 0.0;
    }
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SceneSpec spec;
    if (!a.spec.empty()) {
        Config cfg = Config::load(a.spec);
        if (a.preset != "default" && !cfg.has("preset")) cfg.set("preset", a.preset);
        spec = SceneSpec::from_config(cfg);
    } else if (a.preset == "high_specular") {
        spec = SceneSpec::high_specular();
    } else if (a.preset != "default") {
        throw UsageError("unknown preset '" + a.preset + "'");
    }
    if (a.seed) spec.seed = *a.seed;
    emit_dataset(spec, a.out);
    out << "wrote " << spec.views << " views to " << a.out << "\n";
    return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    TrainConfig cfg = a.config.empty() ? TrainConfig{} : TrainConfig::from_config(Config::load(a.config));
    if (a.seed) cfg.seed = *a.seed;
    if (a.iters) cfg.iterations = *a.iters;
    if (a.workers) cfg.workers = *a.workers;
    if (a.gating_k) cfg.loss.gating_k = *a.gating_k;
    if (a.checkpoint_interval) cfg.checkpoint_interval = *a.checkpoint_interval;
    if (a.progress) cfg.progress_interval = *a.progress;
    cfg.ablations.no_occupancy = cfg.ablations.no_occupancy || a.no_occupancy;
    cfg.ablations.no_scattering = cfg.ablations.no_scattering || a.no_scattering;
    cfg.ablations.no_attenuation = cfg.ablations.no_attenuation || a.no_attenuation;
    cfg.ablations.no_gating = cfg.ablations.no_gating || a.no_gating;
    cfg.ablations.no_mask_loss = cfg.ablations.no_mask_loss || a.no_mask_loss;
    cfg.validate();
    const Dataset data = load_dataset(a.data);
    const TrainResult res = train(data, cfg, a.out);
    out << "trained " << cfg.iterations << " iterations, " << res.scene.surfels.size() << " surfels; wrote "
        << (fs::path(a.out) / "checkpoint.rtsp").string() << "\n";
    return kExitOk;
}

int cmd_render(const ViewArgs& a, std::ostream& out) {
    const Scene scene = load_checkpoint(a.checkpoint);
    const auto cams = cameras_from(a.data, a.cameras);
    RenderSettings settings;
    settings.gating_k = a.gating_k;
    settings.workers = a.workers;
    const RenderOutputs r = render(scene, pick(cams, a.camera.value_or(0)), settings);
    write_png(a.out, r.color);
    out << "wrote " << a.out << "\n";
    return kExitOk;
}

int cmd_decompose(const ViewArgs& a, std::ostream& out) {
    const Scene scene = load_checkpoint(a.checkpoint);
    const auto cams = cameras_from(a.data, a.cameras);
    RenderSettings settings;
    settings.gating_k = a.gating_k;
    settings.workers = a.workers;
    ensure_dir(a.out);
    std::vector<std::size_t> views;
    if (a.camera) views.push_back(*a.camera);
    else
        for (std::size_t i = 0; i < cams.size(); ++i) views.push_back(i);
    for (std::size_t v : views) {
        const RenderOutputs r = render(scene, pick(cams, v), settings);
        const std::string stem = (fs::path(a.out) / view_name(v)).string();
        Image modulated(r.width, r.height, 3);
        for (std::size_t p = 0; p < modulated.pixels(); ++p)
            modulated.set_rgb(p, r.attenuation.at(p, 0) * r.subsurface.rgb(p));
        Image normal(r.width, r.height, 3);
        for (std::size_t p = 0; p < normal.pixels(); ++p) normal.set_rgb(p, 0.5 * (r.normal.rgb(p) + Vec3::Ones()));
        write_png(stem + "_color.png", r.color);
        write_png(stem + "_specular.png", r.specular);
        write_png(stem + "_attenuated_subsurface.png", modulated);
        write_png(stem + "_transmission.png", r.transmission);
        write_png(stem + "_gate.png", r.gate);
        write_png(stem + "_normal.png", normal);
        write_png(stem + "_surface_depth.png", depth_preview(r.surface_depth));
        write_png(stem + "_volumetric_depth.png", depth_preview(r.volumetric_depth));
        write_raw_f32(stem + "_surface_depth.f32", r.surface_depth);
        write_raw_f32(stem + "_volumetric_depth.f32", r.volumetric_depth);
    }
    out << "decomposed " << views.size() << " view(s) into " << a.out << "\n";
    return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.gradcheck) {
        const GradCheckCase c = make_gradcheck_case(a.seed, a.surfels, a.size, a.workers);
        GradCheckOptions opt;
        opt.step = a.step;
        opt.tolerance = a.tolerance;
        bool ok = true;
        for (double k : {a.gating_k, 0.0}) {
            RenderSettings settings;
            settings.gating_k = k;
            settings.workers = a.workers;
            LossWeights w;
            w.gating_k = k;
            const GradCheckReport rep = finite_diff_check(c.scene, c.camera, c.target, w, settings, opt);
            out << "gradient check, seed " << a.seed << ", gating k = " << k << " (" << rep.seconds << " s)\n"
                << rep.table();
            ok = ok && rep.pass();
            if (k == 0.0) break;
        }
        return ok ? kExitOk : kExitRuntime;
    }
    if (a.checkpoint.empty() || a.data.empty()) throw UsageError("eval needs --checkpoint and --data (or --gradcheck)");
    const Scene scene = load_checkpoint(a.checkpoint);
    const Dataset data = load_dataset(a.data);
    std::vector<std::size_t> views;
    if (a.split == "test") views = data.test_indices();
    else if (a.split == "train") views = data.train_indices();
    else if (a.split == "all")
        for (std::size_t i = 0; i < data.cameras.size(); ++i) views.push_back(i);
    else throw UsageError("--split must be test, train or all");
    RenderSettings settings;
    settings.gating_k = a.gating_k;
    settings.workers = a.workers;
    const EvalReport rep = evaluate(scene, data, views, settings);
    out << rep.table();
    if (!a.csv.empty()) {
        std::ofstream f(a.csv);
        if (!f) throw IoError("cannot write " + a.csv);
        f << rep.csv();
    }
    return kExitOk;
}

int cmd_edit(const EditArgs& a, std::ostream& out, std::ostream& err) {
    const std::string undo_path = a.checkpoint + ".undo";
    if (a.undo) {
        if (fs::exists(undo_path)) {
            save_checkpoint(load_checkpoint(undo_path), a.out);
            out << "restored " << undo_path << " to " << a.out << "\n";
        } else {
            Scene scene = load_checkpoint(a.checkpoint);
            clear_reflection_removal(scene);
            save_checkpoint(scene, a.out);
            out << "no undo record; cleared reflection removal flags into " << a.out << "\n";
        }
        return kExitOk;
    }
    Scene scene = load_checkpoint(a.checkpoint);
    EditSpec spec = a.spec.empty() ? EditSpec{} : edit_spec_from_config(Config::load(a.spec));
    if (a.roughness_scale) spec.roughness_scale = a.roughness_scale;
    if (a.set_tau) spec.set_tau = a.set_tau;
    if (a.set_opacity) spec.set_opacity = a.set_opacity;
    if (a.remove_reflection) spec.remove_reflection = true;
    if (!a.tint.empty()) spec.tint = Vec3(a.tint[0], a.tint[1], a.tint[2]);
    if (a.all) spec.selection.kind = SelectionKind::All;
    if (!a.box.empty()) {
        spec.selection.kind = SelectionKind::Box;
        spec.selection.box_min = Vec3(a.box[0], a.box[1], a.box[2]);
        spec.selection.box_max = Vec3(a.box[3], a.box[4], a.box[5]);
    }
    if (!a.mask.empty()) spec.selection.kind = SelectionKind::Mask;
    if (spec.selection.kind == SelectionKind::Mask) {
        if (a.mask.empty()) throw UsageError("mask selection needs --mask");
        const auto cams = cameras_from(a.data, a.cameras);
        spec.selection.camera = pick(cams, a.mask_view);
        Image m = read_png(a.mask);
        if (m.channels != 1) throw UsageError("--mask must be a grayscale PNG");
        spec.selection.mask = std::move(m);
    }
    if (spec.empty()) throw UsageError("edit: no operation given");
    Scene before = scene;
    const EditResult res = apply_edit(scene, spec);
    for (const auto& w : res.warnings) err << "warning: " << w << "\n";
    save_checkpoint(scene, a.out);
    save_checkpoint(before, a.out + ".undo");
    out << "edited " << res.selected.size() << " surfel(s); wrote " << a.out << "\n";
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hybrid surface/volume Gaussian surfel renderer and trainer", "rtsplat"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth-gen", "Ray-trace a synthetic glass dataset");
    synth->add_option("--spec", sa.spec, "Scene spec file (key = value)")->check(CLI::ExistingFile);
    synth->add_option("--out", sa.out, "Output dataset directory")->required();
    synth->add_option("--seed", sa.seed, "Seed for the initialization point cloud");
    synth->add_option("--preset", sa.preset, "default or high_specular")->check(CLI::IsMember({"default", "high_specular"}));

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Optimize a scene against a dataset");
    tr->add_option("--data", ta.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    tr->add_option("--config", ta.config, "Training config file (key = value); flags override it")
        ->check(CLI::ExistingFile);
    tr->add_option("--out", ta.out, "Output directory for loss.csv and checkpoints")->required();
    tr->add_option("--seed", ta.seed, "Random seed");
    tr->add_option("--iters", ta.iters, "Iteration count");
    tr->add_option("--workers", ta.workers, "Worker threads (0 = hardware concurrency)");
    tr->add_option("--gating-k", ta.gating_k, "Gating strength k");
    tr->add_option("--checkpoint-interval", ta.checkpoint_interval, "Write a checkpoint every N iterations");
    tr->add_option("--progress", ta.progress, "Print progress every N iterations");
    tr->add_flag("--no-occupancy", ta.no_occupancy, "Ablation: one shared opacity instead of sigma and alpha");
    tr->add_flag("--no-scattering", ta.no_scattering, "Ablation: drop scatter color and transmissivity");
    tr->add_flag("--no-attenuation", ta.no_attenuation, "Ablation: fix the attenuation factor to 1");
    tr->add_flag("--no-gating", ta.no_gating, "Ablation: disable specular-aware gradient gating");
    tr->add_flag("--no-mask-loss", ta.no_mask_loss, "Ablation: drop the transparent mask loss");

    ViewArgs ra;
    auto* rd = app.add_subcommand("render", "Render one view of a checkpoint to PNG");
    rd->add_option("--checkpoint", ra.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    rd->add_option("--data", ra.data, "Dataset directory providing cameras.txt");
    rd->add_option("--cameras", ra.cameras, "Camera file");
    rd->add_option("--camera", ra.camera, "Camera index")->required();
    rd->add_option("--out", ra.out, "Output PNG")->required();
    rd->add_option("--workers", ra.workers, "Worker threads");

    ViewArgs da;
    auto* dc = app.add_subcommand("decompose", "Write every render layer of one or all views");
    dc->add_option("--checkpoint", da.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    dc->add_option("--data", da.data, "Dataset directory providing cameras.txt");
    dc->add_option("--cameras", da.cameras, "Camera file");
    dc->add_option("--camera", da.camera, "Camera index (default: all)");
    dc->add_option("--out", da.out, "Output directory")->required();
    dc->add_option("--gating-k", da.gating_k, "Gating strength used for the gate layer");
    dc->add_option("--workers", da.workers, "Worker threads");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Score a checkpoint, or run the gradient check");
    ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
    ev->add_option("--data", ea.data, "Dataset directory")->check(CLI::ExistingDirectory);
    ev->add_option("--split", ea.split, "test, train or all");
    ev->add_option("--csv", ea.csv, "Write the report as CSV");
    ev->add_option("--gating-k", ea.gating_k, "Gating strength");
    ev->add_option("--workers", ea.workers, "Worker threads");
    ev->add_flag("--gradcheck", ea.gradcheck, "Finite-difference check of the full objective on a random scene");
    ev->add_option("--seed", ea.seed, "Gradient check scene seed");
    ev->add_option("--surfels", ea.surfels, "Gradient check surfel count")->check(CLI::Range(1, 50));
    ev->add_option("--size", ea.size, "Gradient check image size")->check(CLI::Range(1, 16));
    ev->add_option("--step", ea.step, "Finite-difference step");
    ev->add_option("--tolerance", ea.tolerance, "Relative error tolerance");

    EditArgs xa;
    auto* ed = app.add_subcommand("edit", "Edit surface attributes of selected surfels");
    ed->add_option("--checkpoint", xa.checkpoint, "Input checkpoint")->required()->check(CLI::ExistingFile);
    ed->add_option("--out", xa.out, "Output checkpoint")->required();
    ed->add_option("--spec", xa.spec, "Edit spec file (key = value)")->check(CLI::ExistingFile);
    ed->add_option("--mask", xa.mask, "Select by a grayscale PNG mask drawn in --mask-view");
    ed->add_option("--mask-view", xa.mask_view, "Camera index of the mask");
    ed->add_option("--data", xa.data, "Dataset directory providing cameras.txt");
    ed->add_option("--cameras", xa.cameras, "Camera file");
    ed->add_option("--box", xa.box, "Select by world box: xmin ymin zmin xmax ymax zmax")->expected(6);
    ed->add_flag("--all", xa.all, "Select every surfel");
    ed->add_option("--roughness-scale", xa.roughness_scale, "Multiply roughness");
    ed->add_option("--set-tau", xa.set_tau, "Set transmissivity");
    ed->add_option("--set-opacity", xa.set_opacity, "Set optical opacity");
    ed->add_option("--tint", xa.tint, "Multiply scatter color: r g b")->expected(3);
    ed->add_flag("--remove-reflection", xa.remove_reflection, "Suppress specular reflection at composition");
    ed->add_flag("--undo", xa.undo, "Restore the checkpoint saved before the edit that produced --checkpoint");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    if (!argv.empty()) argv.pop_back();
    if (argv.empty()) {
        err << app.help();
        return kExitUsage;
    }
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kExitOk;
        }
        err << "error: " << e.what() << "\nrun with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(sa, out);
        if (*tr) return cmd_train(ta, out);
        if (*rd) return cmd_render(ra, out);
        if (*dc) return cmd_decompose(da, out);
        if (*ev) return cmd_eval(ea, out);
        if (*ed) return cmd_edit(xa, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace rtsplat
