// SPDX-License-Identifier: Apache-2.0
//
// rsmimo: spectral-efficiency simulation of rate-splitting in TDD massive MIMO
// Copyright (C) 2026 the rsmimo authors
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

#include "rsmimo/common.hpp"
#include "rsmimo/geometry.hpp"
#include "rsmimo/chanstat.hpp"
#include "rsmimo/convex/program.hpp"
#include "rsmimo/convex/solver.hpp"
#include "rsmimo/convex/gp.hpp"
#include "rsmimo/precoding.hpp"
#include "rsmimo/se_eval.hpp"
#include "rsmimo/powalloc.hpp"
#include "rsmimo/harness/config.hpp"
#include "rsmimo/harness/campaign.hpp"
#include "rsmimo/harness/outputs.hpp"
