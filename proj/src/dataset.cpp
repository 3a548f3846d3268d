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

#include "rtsplat/dataset.hpp"

#include "rtsplat/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace rtsplat {
namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    return out;
}

// Non-comment, non-blank lines with their 1-based line numbers.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    auto in = open_in(path);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        fn(ls, number);
    }
}

void write_depth(const std::string& stem, const Image& depth) {
    write_raw_f32(stem + ".f32", depth);
    // Preview normalized over finite values.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double d : depth.data)
        if (std::isfinite(d)) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    Image preview(depth.width, depth.height, 1);
    for (std::size_t i = 0; i < depth.data.size(); ++i) {
        const double d = depth.data[i];
        preview.data[i] = std::isfinite(d) && hi > lo ? (d - lo) / (hi - lo) : (std::isfinite(d) ? 0.5 : 0.0);
    }
    write_png(stem + ".png", preview);
}

} // namespace

std::vector<std::size_t> Dataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cameras.size(); ++i)
        if (!is_test[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cameras.size(); ++i)
        if (is_test[i]) out.push_back(i);
    return out;
}

double Dataset::extent() const {
    if (cameras.empty()) return 1.0;
    Vec3 mean = Vec3::Zero();
    for (const auto& c : cameras) mean += c.center();
    mean /= static_cast<double>(cameras.size());
    double r = 0.0;
    for (const auto& c : cameras) r = std::max(r, (c.center() - mean).norm());
    return r > 0 ? 1.1 * r : 1.0;
}

void Dataset::validate() const {
    if (views.size() != cameras.size())
        throw DimensionMismatch("dataset: " + std::to_string(views.size()) + " images for " +
                                std::to_string(cameras.size()) + " cameras");
    if (is_test.size() != cameras.size()) throw DimensionMismatch("dataset: split does not cover every view");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const Camera& c = cameras[i];
        c.validate();
        auto check = [&](const Image& img, int channels, const char* what) {
            if (img.data.empty()) return;
            if (img.width != c.width || img.height != c.height || img.channels != channels)
                throw DimensionMismatch("dataset view " + std::to_string(i) + ": " + what + " is " +
                                        std::to_string(img.width) + "x" + std::to_string(img.height) + "x" +
                                        std::to_string(img.channels) + ", camera expects " +
                                        std::to_string(c.width) + "x" + std::to_string(c.height) + "x" +
                                        std::to_string(channels));
        };
        if (views[i].image.data.empty()) throw DimensionMismatch("dataset view " + std::to_string(i) + ": no image");
        check(views[i].image, 3, "image");
        check(views[i].mask, 1, "mask");
        if (i < layers.size()) {
            check(layers[i].reflection, 3, "reflection layer");
            check(layers[i].transmission, 3, "transmission layer");
            check(layers[i].glass_depth, 1, "glass depth");
            check(layers[i].background_depth, 1, "background depth");
        }
    }
}

std::vector<Camera> read_cameras(const std::string& path) {
    std::vector<Camera> cams;
    for_each_line(path, [&](std::istringstream& ls, int number) {
        long id;
        Camera c;
        double r[9], t[3];
        ls >> id >> c.width >> c.height >> c.fx >> c.fy >> c.cx >> c.cy;
        for (double& v : r) ls >> v;
        for (double& v : t) ls >> v;
        if (!ls) throw IoError(path + ":" + std::to_string(number) + ": expected 19 camera fields");
        if (id != static_cast<long>(cams.size()))
            throw IoError(path + ":" + std::to_string(number) + ": camera ids must be consecutive from 0");
        c.rotation << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
        c.translation = Vec3(t[0], t[1], t[2]);
        try {
            c.validate();
        } catch (const InvalidParameter& e) {
            throw IoError(path + ":" + std::to_string(number) + ": " + e.what());
        }
        cams.push_back(c);
    });
    return cams;
}

void write_cameras(const std::string& path, const std::vector<Camera>& cameras) {
    auto out = open_out(path);
    out << "# id width height fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 t0 t1 t2 (world to camera)\n";
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const Camera& c = cameras[i];
        out << i << ' ' << c.width << ' ' << c.height << ' ' << c.fx << ' ' << c.fy << ' ' << c.cx << ' ' << c.cy;
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) out << ' ' << c.rotation(r, k);
        for (int k = 0; k < 3; ++k) out << ' ' << c.translation[k];
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<bool> read_split(const std::string& path, std::size_t views) {
    std::vector<int> state(views, -1);
    for_each_line(path, [&](std::istringstream& ls, int number) {
        long id;
        std::string kind;
        if (!(ls >> id >> kind) || (kind != "train" && kind != "test"))
            throw IoError(path + ":" + std::to_string(number) + ": expected '<id> train|test'");
        if (id < 0 || static_cast<std::size_t>(id) >= views)
            throw IoError(path + ":" + std::to_string(number) + ": view id out of range");
        state[id] = kind == "test";
    });
    std::vector<bool> out(views);
    for (std::size_t i = 0; i < views; ++i) {
        if (state[i] < 0) throw IoError(path + ": view " + std::to_string(i) + " missing from split");
        out[i] = state[i] == 1;
    }
    return out;
}

void write_split(const std::string& path, const std::vector<bool>& is_test) {
    auto out = open_out(path);
    for (std::size_t i = 0; i < is_test.size(); ++i) out << i << (is_test[i] ? " test\n" : " train\n");
    if (!out) throw IoError("write failed: " + path);
}

std::vector<SeedPoint> read_points(const std::string& path) {
    std::vector<SeedPoint> pts;
    for_each_line(path, [&](std::istringstream& ls, int number) {
        SeedPoint p;
        ls >> p.position[0] >> p.position[1] >> p.position[2] >> p.normal[0] >> p.normal[1] >> p.normal[2] >>
            p.color[0] >> p.color[1] >> p.color[2] >> p.scale;
        if (!ls || !(p.scale > 0) || p.normal.norm() < 1e-12)
            throw IoError(path + ":" + std::to_string(number) + ": expected 'x y z nx ny nz r g b scale'");
        pts.push_back(p);
    });
    return pts;
}

void write_points(const std::string& path, const std::vector<SeedPoint>& points) {
    auto out = open_out(path);
    out << "# x y z nx ny nz r g b scale\n";
    for (const auto& p : points) {
        out << p.position[0] << ' ' << p.position[1] << ' ' << p.position[2] << ' ' << p.normal[0] << ' '
            << p.normal[1] << ' ' << p.normal[2] << ' ' << p.color[0] << ' ' << p.color[1] << ' ' << p.color[2]
            << ' ' << p.scale << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::string view_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", index);
    return buf;
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
    Dataset d;
    d.cameras = read_cameras((root / "cameras.txt").string());
    d.is_test = read_split((root / "split.txt").string(), d.cameras.size());
    d.views.resize(d.cameras.size());
    d.layers.resize(d.cameras.size());
    for (std::size_t i = 0; i < d.cameras.size(); ++i) {
        const std::string name = view_name(i);
        const int w = d.cameras[i].width, h = d.cameras[i].height;
        d.views[i].image = read_png((root / "images" / (name + ".png")).string());
        if (const auto m = root / "masks" / (name + ".png"); fs::exists(m)) {
            Image mask = read_png(m.string());
            for (double& v : mask.data) v = v >= 0.5 ? 1.0 : 0.0;
            d.views[i].mask = std::move(mask);
        }
        ViewLayers& l = d.layers[i];
        if (const auto p = root / "layers" / ("reflection_" + name + ".png"); fs::exists(p)) l.reflection = read_png(p.string());
        if (const auto p = root / "layers" / ("transmission_" + name + ".png"); fs::exists(p))
            l.transmission = read_png(p.string());
        if (const auto p = root / "depths" / ("glass_" + name + ".f32"); fs::exists(p))
            l.glass_depth = read_raw_f32(p.string(), w, h, 1);
        if (const auto p = root / "depths" / ("background_" + name + ".f32"); fs::exists(p))
            l.background_depth = read_raw_f32(p.string(), w, h, 1);
    }
    if (const auto p = root / "points.txt"; fs::exists(p)) d.points = read_points(p.string());
    d.validate();
    return d;
}

void save_dataset(const Dataset& data, const std::string& dir) {
    data.validate();
    const fs::path root(dir);
    std::error_code ec;
    for (const char* sub : {"images", "masks", "layers", "depths"}) {
        fs::create_directories(root / sub, ec);
        if (ec) throw IoError("cannot create " + (root / sub).string() + ": " + ec.message());
    }
    write_cameras((root / "cameras.txt").string(), data.cameras);
    write_split((root / "split.txt").string(), data.is_test);
    for (std::size_t i = 0; i < data.cameras.size(); ++i) {
        const std::string name = view_name(i);
        write_png((root / "images" / (name + ".png")).string(), data.views[i].image);
        if (!data.views[i].mask.data.empty()) write_png((root / "masks" / (name + ".png")).string(), data.views[i].mask);
        if (i >= data.layers.size()) continue;
        const ViewLayers& l = data.layers[i];
        if (!l.reflection.data.empty())
            write_png((root / "layers" / ("reflection_" + name + ".png")).string(), l.reflection);
        if (!l.transmission.data.empty())
            write_png((root / "layers" / ("transmission_" + name + ".png")).string(), l.transmission);
        if (!l.glass_depth.data.empty()) write_depth((root / "depths" / ("glass_" + name)).string(), l.glass_depth);
        if (!l.background_depth.data.empty())
            write_depth((root / "depths" / ("background_" + name)).string(), l.background_depth);
    }
    if (!data.points.empty()) write_points((root / "points.txt").string(), data.points);
}

Scene init_scene(const Dataset& data, int sh_degree, std::uint64_t seed) {
    if (sh_degree < 0 || sh_degree > kMaxShDegree) throw InvalidParameter("color degree must be in [0, 4]");
    std::mt19937_64 rng(seed);
    Scene scene;
    scene.sh_degree = sh_degree;
    scene.shading = ShadingParams::initialized(rng);
    scene.surfels.reserve(data.points.size());
    for (const auto& p : data.points)
        scene.surfels.push_back(init_surfel(p.position, p.normal, p.scale, p.color, sh_degree, rng));
    return scene;
}

} // namespace rtsplat
