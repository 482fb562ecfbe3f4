/*
 * Copyright 2026 The oatgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "oatgp/common.hpp"
#include "oatgp/config.hpp"
#include "oatgp/dataset.hpp"
#include "oatgp/experiment.hpp"
#include "oatgp/fic.hpp"
#include "oatgp/full_gp.hpp"
#include "oatgp/io.hpp"
#include "oatgp/kernel.hpp"
#include "oatgp/laplace.hpp"
#include "oatgp/likelihoods.hpp"
#include "oatgp/linalg.hpp"
#include "oatgp/metrics.hpp"
#include "oatgp/model.hpp"
#include "oatgp/oat.hpp"
#include "oatgp/optimize.hpp"
#include "oatgp/rng.hpp"
#include "oatgp/synth.hpp"
