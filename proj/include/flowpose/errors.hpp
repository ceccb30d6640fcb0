// Copyright 2026 The flowpose Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace flowpose {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (non-finite values, mismatched shapes).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of a map, e.g. log of a rotation near pi.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A point lands behind or on the camera plane.
class CheiralityError : public Error {
 public:
  using Error::Error;
};

/// Too few valid pixels or matched poses to produce an estimate.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Singular or badly conditioned normal equations.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowpose
