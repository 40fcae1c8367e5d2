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

#include "changeforge/box.hpp"
#include "changeforge/codec.hpp"
#include "changeforge/error.hpp"
#include "changeforge/image.hpp"
#include "changeforge/imageops.hpp"
#include "changeforge/losses.hpp"
#include "changeforge/metrics.hpp"
#include "changeforge/png_io.hpp"
#include "changeforge/rng.hpp"
#include "changeforge/shapes.hpp"
#include "changeforge/synthgen.hpp"
#include "changeforge/tensor_io.hpp"
