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

#include "rtsplat/scene.hpp"

#include <iosfwd>
#include <string>

namespace rtsplat {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary scene checkpoint; the byte layout is described in docs/checkpoint.md.
/// Values are stored as float32, so save(load(save(s))) reproduces the first file exactly.
void save_checkpoint(const Scene& scene, std::ostream& out);
void save_checkpoint(const Scene& scene, const std::string& path);

/// Throws IoError on a truncated file, bad magic, or unsupported version.
Scene load_checkpoint(std::istream& in);
Scene load_checkpoint(const std::string& path);

} // namespace rtsplat
