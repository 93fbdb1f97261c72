// Copyright 2026 The convsched Authors
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

#include "convsched/algorithm.hpp"
#include "convsched/census.hpp"
#include "convsched/colocation.hpp"
#include "convsched/device_model.hpp"
#include "convsched/error.hpp"
#include "convsched/netgraph.hpp"
#include "convsched/profile.hpp"
#include "convsched/profile_store.hpp"
#include "convsched/report.hpp"
#include "convsched/run_report.hpp"
#include "convsched/schedule.hpp"
#include "convsched/scheduler.hpp"
