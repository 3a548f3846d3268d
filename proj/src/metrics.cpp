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

#include "rtsplat/metrics.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/losses.hpp"
#include "rtsplat/parallel.hpp"
#include "rtsplat/rasterizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rtsplat {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Image clamped(const Image& img) {
    Image out = img;
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

void check_mask(const Image& a, const Image* mask) {
    if (mask && (mask->width != a.width || mask->height != a.height || mask->channels != 1))
        throw DimensionMismatch("metric mask does not match the image");
}

} // namespace

double psnr(const Image& a, const Image& b, const Image* mask) {
    if (!a.same_shape(b)) throw DimensionMismatch("psnr: image dimensions differ");
    check_mask(a, mask);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < a.pixels(); ++p) {
        if (mask && mask->at(p, 0) < 0.5) continue;
        for (int c = 0; c < a.channels; ++c) {
            const double d = std::clamp(a.at(p, c), 0.0, 1.0) - std::clamp(b.at(p, c), 0.0, 1.0);
            sum += d * d;
        }
        count += a.channels;
    }
    if (count == 0) throw UndefinedRegion("psnr: region selects no pixels");
    const double mse = sum / static_cast<double>(count);
    if (mse <= 0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim_metric(const Image& a, const Image& b, const Image* mask) {
    if (!a.same_shape(b)) throw DimensionMismatch("ssim: image dimensions differ");
    check_mask(a, mask);
    const Image map = ssim_map(clamped(a), clamped(b));
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < map.pixels(); ++p) {
        if (mask && mask->at(p, 0) < 0.5) continue;
        sum += map.at(p, 0);
        ++count;
    }
    if (count == 0) throw UndefinedRegion("ssim: region selects no pixels");
    return sum / static_cast<double>(count);
}

double floater_energy(const Scene& scene, const Camera& camera, const Image& glass_depth,
                      const Image& background_depth, const Image& mask, int workers) {
    camera.validate();
    for (const Image* img : {&glass_depth, &background_depth, &mask})
        if (img->width != camera.width || img->height != camera.height || img->channels != 1)
            throw DimensionMismatch("floater_energy: oracle maps do not match the camera");
    const PreparedView view = prepare_view(scene, camera);
    const FragmentList frags = build_fragments(view, camera, workers);
    const std::size_t n = static_cast<std::size_t>(camera.width) * camera.height;
    std::vector<double> energy(n, 0.0);
    std::vector<std::uint8_t> counted(n, 0);
    parallel_for(n, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            if (mask.at(p, 0) < 0.5) continue;
            const double gd = glass_depth.at(p, 0), bd = background_depth.at(p, 0);
            if (!std::isfinite(gd) || !std::isfinite(bd) || bd <= gd) continue;
            counted[p] = 1;
            const double delta = 0.01 * (bd - gd);
            double t = 1.0, sum = 0.0;
            for (const Fragment& f : frags.at(p)) {
                const double a = view.surfels[f.surfel].effective_opacity * f.kernel;
                const double w = a * t;
                if (f.depth > gd + delta && f.depth < bd - delta) sum += w;
                t *= 1.0 - a;
                if (t < kTerminationTransmittance) break;
            }
            energy[p] = sum;
        }
    });
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < n; ++p)
        if (counted[p]) {
            total += energy[p];
            ++count;
        }
    return count ? total / static_cast<double>(count) : 0.0;
}

std::string EvalReport::csv() const {
    std::string s = "view,psnr,ssim,psnr_masked,ssim_masked,floater_energy,render_ms\n";
    char line[256];
    auto row = [&](const std::string& id, const ViewMetrics& m) {
        std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.3f\n", id.c_str(), m.psnr, m.ssim,
                      m.psnr_masked, m.ssim_masked, m.floater, m.render_ms);
        s += line;
    };
    for (const auto& v : views) row(std::to_string(v.view), v);
    row("mean", mean);
    return s;
}

std::string EvalReport::table() const {
    std::string s = "view   PSNR    SSIM   PSNR(T)  SSIM(T)  floater   ms\n";
    char line[256];
    auto row = [&](const std::string& id, const ViewMetrics& m) {
        std::snprintf(line, sizeof line, "%-5s %6.2f  %6.4f  %6.2f   %6.4f   %6.4f  %6.1f\n", id.c_str(), m.psnr,
                      m.ssim, m.psnr_masked, m.ssim_masked, m.floater, m.render_ms);
        s += line;
    };
    for (const auto& v : views) row(std::to_string(v.view), v);
    row("mean", mean);
    return s;
}

EvalReport evaluate(const Scene& scene, const Dataset& data, const std::vector<std::size_t>& views,
                    const RenderSettings& settings) {
    data.validate();
    EvalReport report;
    for (std::size_t v : views) {
        if (v >= data.cameras.size()) throw InvalidParameter("evaluate: view " + std::to_string(v) + " out of range");
        const auto t0 = std::chrono::steady_clock::now();
        const RenderOutputs out = render(scene, data.cameras[v], settings);
        ViewMetrics m;
        m.view = v;
        m.render_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const ViewTarget& target = data.views[v];
        m.psnr = psnr(out.color, target.image);
        m.ssim = ssim_metric(out.color, target.image);
        m.psnr_masked = m.ssim_masked = m.floater = kNaN;
        if (!target.mask.data.empty()) {
            bool any = false;
            for (double x : target.mask.data) any = any || x >= 0.5;
            if (any) {
                m.psnr_masked = psnr(out.color, target.image, &target.mask);
                m.ssim_masked = ssim_metric(out.color, target.image, &target.mask);
            }
            if (v < data.layers.size() && !data.layers[v].glass_depth.data.empty() &&
                !data.layers[v].background_depth.data.empty())
                m.floater = floater_energy(scene, data.cameras[v], data.layers[v].glass_depth,
                                           data.layers[v].background_depth, target.mask, settings.workers);
        }
        report.views.push_back(m);
    }
    auto mean_of = [&](double ViewMetrics::*field) {
        double sum = 0.0;
        int count = 0;
        for (const auto& v : report.views)
            if (std::isfinite(v.*field)) {
                sum += v.*field;
                ++count;
            }
        return count ? sum / count : kNaN;
    };
    report.mean.psnr = mean_of(&ViewMetrics::psnr);
    report.mean.ssim = mean_of(&ViewMetrics::ssim);
    report.mean.psnr_masked = mean_of(&ViewMetrics::psnr_masked);
    report.mean.ssim_masked = mean_of(&ViewMetrics::ssim_masked);
    report.mean.floater = mean_of(&ViewMetrics::floater);
    report.mean.render_ms = mean_of(&ViewMetrics::render_ms);
    return report;
}

} // namespace rtsplat
