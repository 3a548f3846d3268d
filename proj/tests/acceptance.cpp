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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any selected criterion fails. Criteria to run may be given as arguments
// (default: all).

#include "helpers.hpp"
#include "reference.hpp"
#include "rtsplat/checkpoint.hpp"
#include "rtsplat/density.hpp"
#include "rtsplat/editing.hpp"
#include "rtsplat/gradcheck.hpp"
#include "rtsplat/metrics.hpp"
#include "rtsplat/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace rtsplat;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    double worst = 0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const GradCheckCase c = make_gradcheck_case(1000 + seed, 50, 16);
        for (double k : {4.0, 0.0}) {
            RenderSettings settings;
            settings.gating_k = k;
            LossWeights w;
            w.gating_k = k;
            const GradCheckReport r = finite_diff_check(c.scene, c.camera, c.target, w, settings);
            for (const GroupReport& g : r.groups) {
                worst = std::max(worst, g.max_rel_error);
                checked += g.checked;
                if (!g.pass || g.checked == 0) {
                    pass = false;
                    std::printf("  seed %llu k %.0f group %s failed\n%s", static_cast<unsigned long long>(seed), k,
                                g.name.c_str(), r.table().c_str());
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    pass = pass && worst < 1e-4 && secs < 300;
    return {pass, fmt("%zu scalars over 5 scenes x 2 gating settings, worst relative error %.2e, %.1f s", checked,
                      worst, secs)};
}

Outcome blending_oracle() {
    double err = 0, lo = 0, hi = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Scene scene = test::random_scene(5000 + seed, 10 + static_cast<int>(seed % 41));
        const Camera cam = test::test_camera(16);
        const PreparedView view = prepare_view(scene, cam);
        const FragmentList frags = build_fragments(view, cam);
        const VolumetricImage vol = volumetric_forward(frags, view);
        const GBuffer gbuf = deferred_aggregate(frags, view, cam);
        const auto ref = test::reference_render(scene, cam);
        for (std::size_t px = 0; px < ref.size(); ++px) {
            err = std::max(err, (vol.color(px) - ref[px].transmission).cwiseAbs().maxCoeff());
            err = std::max(err, std::abs(vol.weight(px) - ref[px].weight));
            err = std::max(err, std::abs(gbuf.probability(px) - ref[px].probability));
            err = std::max(err, std::abs(gbuf.opacity(px) - ref[px].opacity));
            for (double s : {vol.weight(px), gbuf.probability(px), ref[px].weight, ref[px].probability}) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
    }
    return {err <= 1e-6 && lo >= 0 && hi <= 1,
            fmt("100 scenes, max abs difference %.2e, weight sums in [%.3g, %.6f]", err, lo, hi)};
}

Outcome reduction_identity() {
    double err = 0;
    bool same_used = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Scene scene = test::random_scene(7000 + seed, 30);
        const Camera cam = test::test_camera(16);
        PreparedView view = prepare_view(scene, cam);
        for (ViewSurfel& v : view.surfels) {
            v.act.opacity = 1.0;
            v.effective_opacity = v.act.occupancy;
        }
        const FragmentList frags = build_fragments(view, cam);
        const VolumetricImage vol = volumetric_forward(frags, view);
        const GBuffer gbuf = deferred_aggregate(frags, view, cam);
        for (std::size_t px = 0; px < vol.sums.size(); ++px) {
            err = std::max(err, std::abs(vol.weight(px) - gbuf.probability(px)));
            err = std::max(err, std::abs(vol.sums[px][vattr::kDepth] - gbuf.sums[px][gattr::kDepth]));
            same_used = same_used && vol.used[px] == gbuf.used[px];
        }
    }
    return {err <= 1e-12 && same_used, fmt("20 scenes with unit opacity, max weight/probability gap %.2e", err)};
}

Outcome gating_invariance() {
    bool identical = true;
    double err = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Scene scene = test::random_scene(9000 + seed, 40);
        const Camera cam = test::test_camera(16);
        RenderSettings gated, plain;
        gated.gating_k = 4;
        plain.gating_k = 0;
        const RenderOutputs a = render(scene, cam, gated), b = render(scene, cam, plain);
        identical = identical && a.color.data == b.color.data;
        PixelGrads up = PixelGrads::zeros(16, 16);
        for (std::size_t i = 0; i < up.color.data.size(); ++i) up.color.data[i] = std::sin(0.37 * i + seed);
        const GradientBundle g = backward(scene, cam, a, up, gated);
        for (std::size_t p = 0; p < a.gate.pixels(); ++p)
            for (int c = 0; c < 3; ++c)
                err = std::max(err, std::abs(g.transmission_grad.at(p, c) -
                                             a.gate.at(p, 0) * g.transmission_grad_ungated.at(p, c)));
    }
    return {identical && err <= 1e-10,
            fmt("10 scenes, images %s, max |dC_trans - g * ungated| %.2e", identical ? "bit-identical" : "differ", err)};
}

struct TrainedRun {
    Dataset data;
    Scene scene;
    EvalReport report;
    double seconds = 0;
    double settings_k = 4;
};

const TrainedRun& trained(const std::string& variant) {
    static std::map<std::string, TrainedRun> cache;
    if (auto it = cache.find(variant); it != cache.end()) return it->second;
    const bool hs = variant.ends_with("_hs");
    TrainedRun run;
    run.data = synthesize(hs ? SceneSpec::high_specular() : SceneSpec{});
    TrainConfig cfg;
    cfg.iterations = 5000;
    if (variant.starts_with("noocc")) cfg.ablations.no_occupancy = true;
    if (variant.starts_with("k0")) cfg.ablations.no_gating = true;
    const auto t0 = std::chrono::steady_clock::now();
    run.scene = train(run.data, cfg).scene;
    run.seconds = seconds_since(t0);
    run.settings_k = cfg.effective_gating();
    RenderSettings st;
    st.gating_k = run.settings_k;
    run.report = evaluate(run.scene, run.data, run.data.test_indices(), st);
    std::printf("  trained %s in %.1f s: masked PSNR %.3f dB, floater %.4f\n", variant.c_str(), run.seconds,
                run.report.mean.psnr_masked, run.report.mean.floater);
    std::fflush(stdout);
    return cache.emplace(variant, std::move(run)).first->second;
}

Outcome factorization_ablation() {
    const TrainedRun& full = trained("full");
    const TrainedRun& noocc = trained("noocc");
    std::size_t in = 0, surf_ok = 0, vol_ok = 0;
    RenderSettings st;
    st.gating_k = full.settings_k;
    for (std::size_t v = 0; v < full.data.cameras.size(); ++v) {
        const RenderOutputs out = render(full.scene, full.data.cameras[v], st);
        const ViewLayers& L = full.data.layers[v];
        const Image& M = full.data.views[v].mask;
        for (std::size_t p = 0; p < M.pixels(); ++p) {
            if (M.at(p, 0) < 0.5) continue;
            const double gd = L.glass_depth.at(p, 0), bd = L.background_depth.at(p, 0);
            const double tol = 0.02 * (bd - gd);
            ++in;
            surf_ok += std::abs(out.surface_depth.at(p, 0) - gd) <= tol;
            vol_ok += std::abs(out.volumetric_depth.at(p, 0) - bd) <= tol;
        }
    }
    const double gain = full.report.mean.psnr_masked - noocc.report.mean.psnr_masked;
    const double fs = double(surf_ok) / in, fv = double(vol_ok) / in;
    const bool pass = gain > 0.5 && fs > 0.9 && fv > 0.9 && full.seconds < 1800 && noocc.seconds < 1800;
    return {pass, fmt("masked PSNR full %.3f vs no_occupancy %.3f (gain %+.3f dB); surface depth ok %.3f, "
                      "volumetric depth ok %.3f; train %.0f s / %.0f s",
                      full.report.mean.psnr_masked, noocc.report.mean.psnr_masked, gain, fs, fv, full.seconds,
                      noocc.seconds)};
}

Outcome gating_ablation() {
    const TrainedRun& gated = trained("full_hs");
    const TrainedRun& plain = trained("k0_hs");
    const double ratio = gated.report.mean.floater / plain.report.mean.floater;
    const double diff = gated.report.mean.psnr_masked - plain.report.mean.psnr_masked;
    return {ratio <= 0.7 && diff >= -0.1,
            fmt("floater k=4 %.4f vs k=0 %.4f (ratio %.3f); masked PSNR difference %+.3f dB",
                gated.report.mean.floater, plain.report.mean.floater, ratio, diff)};
}

Outcome mask_regularization() {
    const TrainedRun& full = trained("full");
    double in = 0, out = 0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t v : full.data.train_indices()) {
        const RenderOutputs r = render(full.scene, full.data.cameras[v]);
        const Image& M = full.data.views[v].mask;
        for (std::size_t p = 0; p < M.pixels(); ++p) {
            if (M.at(p, 0) > 0.5) {
                in += r.gbuffer.opacity(p);
                ++nin;
            } else {
                out += r.gbuffer.opacity(p);
                ++nout;
            }
        }
    }
    in /= nin;
    out /= nout;
    return {in < 0.1 && out > 0.9, fmt("mean A_alpha inside mask %.4f, outside %.4f", in, out)};
}

GaussianSurfel surfel_with(double sigma, double alpha) {
    GaussianSurfel s;
    s.rotation = Vec4(1, 0, 0, 0);
    s.occupancy_raw = inverse_activation(sigma);
    s.opacity_raw = inverse_activation(alpha);
    return s;
}

Outcome density_schedule() {
    std::vector<std::string> failures;
    const DensityConfig cfg;
    std::mt19937_64 rng(0);

    Scene scene;
    scene.sh_degree = 0;
    scene.surfels = {surfel_with(0.9, 0.8), surfel_with(0.6, 0.5)};
    DensityStats stats;
    stats.resize(2);
    for (std::int64_t it = 1; it <= 3000; ++it) {
        const DensityEvent ev = density_control(scene, stats, it, 7000, cfg, 1.0, rng);
        const double s0 = activate(scene.surfels[0]).occupancy, a0 = activate(scene.surfels[0]).opacity;
        if (it < 1500 && ev.reset != ResetKind::None) failures.push_back(fmt("reset at %lld", (long long)it));
        if (it == 1500 && (ev.reset != ResetKind::Opacity || a0 > 0.01 + 1e-12 || std::abs(s0 - 0.9) > 1e-9))
            failures.push_back("opacity clamp at 1500");
        if (it > 1500 && it < 3000 && ev.reset != ResetKind::None) failures.push_back(fmt("reset at %lld", (long long)it));
        if (it == 3000 && (ev.reset != ResetKind::Occupancy || s0 > 0.01 + 1e-12))
            failures.push_back("occupancy clamp at 3000");
    }

    Scene mixed = test::random_scene(3, 200, 0);
    std::uniform_real_distribution<double> uni(-9.0, 3.0);
    for (auto& s : mixed.surfels) s.occupancy_raw = uni(rng);
    std::vector<double> before;
    for (const auto& s : mixed.surfels) before.push_back(activate(s).occupancy);
    const auto kept = prune(mixed, cfg.prune_occupancy);
    std::size_t removed = 0;
    for (std::size_t i = 0, k = 0; i < before.size(); ++i) {
        const bool survives = k < kept.size() && kept[k] == static_cast<std::int64_t>(i);
        if (survives) ++k;
        else ++removed;
        if (survives != (before[i] >= cfg.prune_occupancy)) failures.push_back(fmt("prune decision for surfel %zu", i));
    }
    if (removed == 0) failures.push_back("prune removed nothing");

    Scene glass;
    glass.sh_degree = 0;
    glass.surfels = {surfel_with(0.9, 0.001)};
    DensityStats gstats;
    gstats.resize(1);
    for (std::int64_t it = 1; it <= 7000; ++it) {
        density_control(glass, gstats, it, 7000, cfg, 1.0, rng);
        if (glass.surfels.empty()) {
            failures.push_back(fmt("sigma 0.9 / alpha 0.001 surfel pruned at %lld", (long long)it));
            break;
        }
    }
    std::string detail = failures.empty() ? fmt("resets at 1500 (alpha) and 3000 (sigma), %zu of 200 pruned by sigma "
                                                 "alone, low-alpha glass surfel kept for 7000 iterations",
                                                 removed)
                                          : failures.front();
    return {failures.empty(), detail};
}

Outcome editing_locality() {
    test::GlassScene g = test::glass_scene();
    Scene glass_only = g.scene;
    glass_only.surfels.resize(g.glass_count);
    const RenderOutputs bare = render(glass_only, g.camera);
    const RenderOutputs before = render(g.scene, g.camera);

    EditSpec spec;
    spec.selection.kind = SelectionKind::Box;
    spec.selection.box_min = Vec3(-1, -1, 1.9);
    spec.selection.box_max = Vec3(1, 1, 2.1);
    spec.remove_reflection = true;
    spec.set_tau = 1.0;
    const EditResult res = apply_edit(g.scene, spec);
    const RenderOutputs after = render(g.scene, g.camera);

    std::vector<bool> chosen(g.scene.surfels.size(), false);
    for (auto i : res.selected) chosen[i] = true;
    const PreparedView view = prepare_view(g.scene, g.camera);
    const FragmentList frags = build_fragments(view, g.camera);

    double inside = 0, outside = 0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t p = 0; p < after.color.pixels(); ++p) {
        const bool masked = bare.gbuffer.probability(p) > 0.999;
        bool touched = false;
        for (const Fragment& f : frags.at(p)) touched = touched || chosen[f.surfel];
        nin += masked;
        nout += !touched;
        for (int c = 0; c < 3; ++c) {
            if (masked) inside = std::max(inside, std::abs(after.color.at(p, c) - after.transmission.at(p, c)));
            if (!touched) outside = std::max(outside, std::abs(after.color.at(p, c) - before.color.at(p, c)));
        }
    }
    const bool pass = nin > 0 && nout > 0 && inside <= 1.0 / 255 && outside <= 1.0 / 255;
    return {pass, fmt("%zu selected surfels; masked |C - C_trans| %.2e over %zu px, unselected change %.2e over %zu px",
                      res.selected.size(), inside, nin, outside, nout)};
}

Outcome determinism() {
    const Dataset data = synthesize(test::small_spec());
    TrainConfig cfg;
    cfg.iterations = 400;
    cfg.seed = 11;
    auto run = [&](int workers, const std::string& name) {
        cfg.workers = workers;
        const auto dir = test::temp_dir(name);
        train(data, cfg, dir.string());
        return std::make_pair(test::read_file(dir / "loss.csv"), test::read_file(dir / "checkpoint.rtsp"));
    };
    const auto a = run(1, "acceptance_det_a"), b = run(1, "acceptance_det_b"), c = run(3, "acceptance_det_c");
    const bool runs = a == b, workers = a == c;
    return {runs && workers && !a.first.empty() && !a.second.empty(),
            fmt("400 iterations: repeated run %s, 1 vs 3 workers %s (log %zu bytes, checkpoint %zu bytes)",
                runs ? "identical" : "differs", workers ? "identical" : "differs", a.first.size(), a.second.size())};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, gradient_correctness}, {2, blending_oracle},        {3, reduction_identity}, {4, gating_invariance},
        {5, factorization_ablation}, {6, gating_ablation},      {7, mask_regularization}, {8, density_schedule},
        {9, editing_locality},       {10, determinism},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
