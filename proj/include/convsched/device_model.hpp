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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "convsched/error.hpp"
#include "convsched/profile.hpp"

namespace convsched {

/// A GPU reduced to what the model consumes. Per-SM register file,
/// shared memory and thread capacity are normalized to 1.0, so profile
/// fractions are directly comparable against them.
struct DeviceSpec {
    std::string id = "device";
    int num_sms = 1;
    int max_blocks_per_sm = 1;
    std::uint64_t global_mem_bytes = 1;

    static constexpr double reg_capacity = 1.0;
    static constexpr double shm_capacity = 1.0;
    static constexpr double thread_capacity = 1.0;

    void validate() const {
        if (num_sms < 1) throw ValidationError("device: num_sms must be >= 1");
        if (max_blocks_per_sm < 1) throw ValidationError("device: max_blocks_per_sm must be >= 1");
        if (global_mem_bytes == 0) throw ValidationError("device: global_mem_bytes must be > 0");
    }
};

struct BlockFootprint {
    std::string op_id;
    Algorithm algorithm = Algorithm::GEMM;
    double reg_pb = 0.0;
    double shm_pb = 0.0;
    double thr_pb = 0.0;
    int solo_blocks_per_sm = 1;
};

// Resident blocks per SM when the kernel runs alone: nearest integer to
// block_frac * max_blocks_per_sm, never below one.
inline int solo_blocks(const KernelProfile& profile, const DeviceSpec& device) {
    const double exact = profile.block_frac * device.max_blocks_per_sm;
    const int rounded = static_cast<int>(std::lround(exact));
    return std::clamp(rounded, 1, device.max_blocks_per_sm);
}

inline BlockFootprint per_block_footprint(const KernelProfile& profile, const DeviceSpec& device) {
    BlockFootprint fp;
    fp.op_id = profile.op_id;
    fp.algorithm = profile.algorithm;
    fp.solo_blocks_per_sm = solo_blocks(profile, device);
    const double n = fp.solo_blocks_per_sm;
    fp.reg_pb = profile.reg_frac / n;
    fp.shm_pb = profile.shm_frac / n;
    fp.thr_pb = profile.thread_frac / n;
    return fp;
}

}  // namespace convsched
