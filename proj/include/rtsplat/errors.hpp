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

#include <stdexcept>
#include <string>

namespace rtsplat {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A parameter or input value is outside its domain (non-finite, non-unit, negative, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// A caller broke a documented precondition, e.g. backward without a recorded forward.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A metric was asked for over an empty pixel region.
class UndefinedRegion : public Error {
public:
    using Error::Error;
};

// Command line misuse; maps to exit status 2.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace rtsplat
