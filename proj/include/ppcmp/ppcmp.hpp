//
// Copyright 2026 The PPCMP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef PPCMP_PPCMP_HPP_
#define PPCMP_PPCMP_HPP_

#include "ppcmp/attacks.hpp"
#include "ppcmp/core.hpp"
#include "ppcmp/harness/config.hpp"
#include "ppcmp/harness/csv.hpp"
#include "ppcmp/harness/dataset.hpp"
#include "ppcmp/harness/experiment.hpp"
#include "ppcmp/harness/generate.hpp"
#include "ppcmp/harness/report.hpp"
#include "ppcmp/metrics.hpp"
#include "ppcmp/perturb.hpp"
#include "ppcmp/platform.hpp"
#include "ppcmp/regress.hpp"
#include "ppcmp/rng.hpp"

#endif  // PPCMP_PPCMP_HPP_
