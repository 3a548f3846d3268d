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

#include <cstddef>
#include <functional>

namespace rtsplat {

/// Number of workers used when a caller passes 0.
int default_workers();

/// Splits [0, count) into contiguous chunks and runs fn(begin, end) on up to
/// `workers` threads. Callers write results into disjoint slots, so output never
/// depends on the worker count.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace rtsplat
