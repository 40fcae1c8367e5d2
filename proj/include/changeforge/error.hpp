/* Copyright 2026 The ChangeForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <stdexcept>
#include <string>

namespace changeforge {

// Root of every error thrown by the library. The CLI maps these to exit
// status 2 (data error).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rect or paste region outside its host image.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Out-of-range numeric parameter (negative sigma, gain outside [0.5, 1.5], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Pasted support does not fit, or composite produced no change.
class PlacementError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class RasterError : public Error {
 public:
  using Error::Error;
};

// A pair could not be produced within its retry budget.
class GenerationError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch between maps handed to the losses.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Manifest or tensor file failed validation.
class LoadError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace changeforge
