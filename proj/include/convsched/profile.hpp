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

#include <cstdint>
#include <string>

#include "convsched/algorithm.hpp"

namespace convsched {

/// One algorithm's measured footprint on one network operation.
///
/// Static fractions (registers, shared memory, threads, resident blocks) are
/// relative to the theoretical per-SM capacity at the kernel's solo
/// occupancy. Dynamic fractions (ALU utilization, memory stalls, DRAM
/// bandwidth) describe how the kernel behaves while it runs.
struct KernelProfile {
    std::string op_id;
    Algorithm algorithm = Algorithm::GEMM;
    std::string kernel_name;

    double reg_frac = 0.0;
    double shm_frac = 0.0;
    double thread_frac = 0.0;
    double block_frac = 0.0;

    double alu_util = 0.0;
    double mem_stall_frac = 0.0;
    double dram_util = 0.0;

    std::uint64_t workspace_bytes = 0;
    double solo_runtime_ms = 1.0;

    friend bool operator==(const KernelProfile&, const KernelProfile&) = default;
};

}  // namespace convsched
