// Copyright 2026 The qdetect Authors
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

#include "qdetect/action_kernel.hpp"
#include "qdetect/belief_grid.hpp"
#include "qdetect/config.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/decision_model.hpp"
#include "qdetect/detection.hpp"
#include "qdetect/dominance.hpp"
#include "qdetect/episode.hpp"
#include "qdetect/error.hpp"
#include "qdetect/experiments.hpp"
#include "qdetect/lp.hpp"
#include "qdetect/parallel.hpp"
#include "qdetect/region_scan.hpp"
#include "qdetect/sensitivity.hpp"
#include "qdetect/stopping_solver.hpp"
