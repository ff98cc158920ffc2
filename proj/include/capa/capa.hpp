// SPDX-License-Identifier: Apache-2.0
//
// capa-select: aperture selection for continuous aperture arrays
// Copyright (C) 2026 The capa-select authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "capa/config.hpp"
#include "capa/error.hpp"
#include "capa/experiments.hpp"
#include "capa/geometry.hpp"
#include "capa/linalg.hpp"
#include "capa/los.hpp"
#include "capa/nlos.hpp"
#include "capa/parallel.hpp"
#include "capa/quadrature.hpp"
#include "capa/random.hpp"
#include "capa/selection.hpp"
#include "capa/stochastic.hpp"
