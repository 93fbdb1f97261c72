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
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsched/device_model.hpp"
#include "convsched/error.hpp"
#include "convsched/profile.hpp"

namespace convsched {

enum class CoRunMode { intra, inter };
enum class Granularity { continuous, quantized };
enum class Binding { occupancy, compute, memory };

inline std::string_view to_string(CoRunMode m) { return m == CoRunMode::intra ? "intra" : "inter"; }
inline std::string_view to_string(Granularity g) {
    return g == Granularity::continuous ? "continuous" : "quantized";
}
inline std::string_view to_string(Binding b) {
    switch (b) {
        case Binding::occupancy: return "occupancy";
        case Binding::compute: return "compute";
        case Binding::memory: return "memory";
    }
    return "occupancy";
}

inline CoRunMode co_run_mode_from_string(std::string_view s) {
    if (s == "intra") return CoRunMode::intra;
    if (s == "inter") return CoRunMode::inter;
    throw ValidationError("unknown co-run mode '" + std::string(s) + "'");
}

inline Granularity granularity_from_string(std::string_view s) {
    if (s == "continuous") return Granularity::continuous;
    if (s == "quantized") return Granularity::quantized;
    throw ValidationError("unknown granularity '" + std::string(s) + "'");
}

/// How two kernels share the device. Index 0 is the first-declared kernel;
/// under intra-SM sharing it keeps its solo occupancy.
///
/// `share` is the occupancy fraction relative to solo residency (intra) or
/// the fraction of SMs owned (inter). `blocks_per_sm` is set only for
/// quantized intra plans, `sms` only for inter plans.
struct CoRunPlan {
    CoRunMode mode = CoRunMode::intra;
    Granularity granularity = Granularity::continuous;
    std::array<double, 2> share{1.0, 1.0};
    std::array<int, 2> blocks_per_sm{0, 0};
    std::array<int, 2> sms{0, 0};
};

struct RateSegment {
    double start_ms = 0.0;
    double end_ms = 0.0;
    // Solo-work units per millisecond; zero for kernels not active.
    std::vector<double> rate;
    double contention = 1.0;
    Binding binding = Binding::occupancy;
};

struct CoRunOutcome {
    std::vector<double> finish_time_ms;
    double makespan_ms = 0.0;
    std::vector<RateSegment> segments;
};

namespace detail {

inline constexpr double kFitTolerance = 1e-12;

struct StaticDemand {
    std::array<double, 4> r;  // reg, shm, thr, blk
};

inline StaticDemand static_demand(const KernelProfile& p) {
    return {{p.reg_frac, p.shm_frac, p.thread_frac, p.block_frac}};
}

}  // namespace detail

/// Largest occupancy fraction of `second` that fits beside `first` at solo
/// occupancy: min over static resources of (1 - r_first) / r_second.
/// Infinite when `second` demands nothing.
inline double continuous_headroom(const KernelProfile& first, const KernelProfile& second) {
    const auto a = detail::static_demand(first);
    const auto b = detail::static_demand(second);
    double beta = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < a.r.size(); ++r) {
        if (b.r[r] > 0.0) beta = std::min(beta, std::max(0.0, 1.0 - a.r[r]) / b.r[r]);
    }
    return beta;
}

// Blocks of `second` resident per SM beside `first` at its solo block count,
// capped at second's own solo residency.
inline int quantized_corunner_blocks(const KernelProfile& first, const KernelProfile& second,
                                     const DeviceSpec& device) {
    const auto fa = per_block_footprint(first, device);
    const auto fb = per_block_footprint(second, device);
    const int na = fa.solo_blocks_per_sm;
    int k = 0;
    for (int cand = 1; cand <= fb.solo_blocks_per_sm; ++cand) {
        const bool fits = na + cand <= device.max_blocks_per_sm &&
                          na * fa.reg_pb + cand * fb.reg_pb <= 1.0 + detail::kFitTolerance &&
                          na * fa.shm_pb + cand * fb.shm_pb <= 1.0 + detail::kFitTolerance &&
                          na * fa.thr_pb + cand * fb.thr_pb <= 1.0 + detail::kFitTolerance;
        if (!fits) break;
        k = cand;
    }
    return k;
}

/// Intra-SM co-location of `a` (kept at solo occupancy) and `b`.
///
/// The block scheduler does not know which stream launched first, so a pair
/// is feasible only when either kernel at solo occupancy leaves room for at
/// least part of the other. This also makes feasibility order-independent.
inline std::optional<CoRunPlan> intra_sm_allocate(const KernelProfile& a, const KernelProfile& b,
                                                  const DeviceSpec& device, Granularity granularity) {
    CoRunPlan plan;
    plan.mode = CoRunMode::intra;
    plan.granularity = granularity;
    if (granularity == Granularity::continuous) {
        const double beta_ab = continuous_headroom(a, b);
        const double beta_ba = continuous_headroom(b, a);
        if (!(beta_ab > 0.0) || !(beta_ba > 0.0)) return std::nullopt;
        plan.share = {1.0, std::min(beta_ab, 1.0)};
        return plan;
    }
    const int k_ab = quantized_corunner_blocks(a, b, device);
    const int k_ba = quantized_corunner_blocks(b, a, device);
    if (k_ab < 1 || k_ba < 1) return std::nullopt;
    const int solo_a = solo_blocks(a, device);
    const int solo_b = solo_blocks(b, device);
    plan.blocks_per_sm = {solo_a, k_ab};
    plan.share = {1.0, static_cast<double>(k_ab) / solo_b};
    return plan;
}

struct CoRunKernel {
    const KernelProfile* profile = nullptr;
    double share = 1.0;
};

/// Event-driven piecewise-constant co-run simulation.
///
/// In each segment a kernel's base rate is its occupancy share (intra) or
/// its SM share raised to `gamma` (inter). One contention factor
/// f = min(1, 1 / max(compute load, memory load)) scales every active
/// kernel. Rates are in solo-work units per solo runtime; every kernel
/// closes at exactly one unit. When a kernel finishes under intra-SM
/// sharing the survivor re-expands to solo occupancy. Inter-SM partitions
/// are static for the co-run's lifetime.
inline CoRunOutcome corun_simulate(std::span<const CoRunKernel> kernels, CoRunMode mode, const DeviceSpec& device,
                                   double gamma = 1.0, Granularity granularity = Granularity::continuous) {
    if (kernels.empty()) throw ValidationError("corun_simulate: no kernels");
    if (kernels.size() > 2) throw ValidationError("corun_simulate: co-run groups are capped at 2 kernels");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("corun_simulate: gamma must be > 0");

    const std::size_t n = kernels.size();
    for (const auto& k : kernels) {
        if (!k.profile) throw ValidationError("corun_simulate: null profile");
        if (!(k.share > 0.0 && k.share <= 1.0 + detail::kFitTolerance)) {
            throw ValidationError("corun_simulate: share of " + k.profile->op_id + " outside (0,1]");
        }
    }

    // Reject infeasible allocations.
    if (mode == CoRunMode::inter) {
        double total = 0.0;
        for (const auto& k : kernels) total += k.share;
        if (total > 1.0 + 1e-9) throw ValidationError("corun_simulate: SM shares exceed the device");
    } else if (granularity == Granularity::continuous) {
        std::array<double, 4> sum{};
        for (const auto& k : kernels) {
            const auto d = detail::static_demand(*k.profile);
            for (std::size_t r = 0; r < sum.size(); ++r) sum[r] += k.share * d.r[r];
        }
        for (double s : sum) {
            if (s > 1.0 + 1e-9) throw ValidationError("corun_simulate: intra-SM allocation exceeds SM resources");
        }
    } else {
        int blocks = 0;
        std::array<double, 3> sum{};
        for (const auto& k : kernels) {
            const auto fp = per_block_footprint(*k.profile, device);
            const double b = k.share * fp.solo_blocks_per_sm;
            const double br = std::round(b);
            if (std::abs(b - br) > 1e-9 || br < 1) {
                throw ValidationError("corun_simulate: quantized share of " + k.profile->op_id +
                                      " is not a whole number of blocks");
            }
            blocks += static_cast<int>(br);
            sum[0] += br * fp.reg_pb;
            sum[1] += br * fp.shm_pb;
            sum[2] += br * fp.thr_pb;
        }
        if (blocks > device.max_blocks_per_sm) {
            throw ValidationError("corun_simulate: resident blocks exceed max_blocks_per_sm");
        }
        for (double s : sum) {
            if (s > 1.0 + 1e-9) throw ValidationError("corun_simulate: intra-SM allocation exceeds SM resources");
        }
    }

    CoRunOutcome out;
    out.finish_time_ms.assign(n, 0.0);
    std::vector<double> remaining(n, 1.0);
    std::vector<double> share(n);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) share[i] = kernels[i].share;

    double t = 0.0;
    std::size_t left = n;
    while (left > 0) {
        std::vector<double> base(n, 0.0);
        double compute = 0.0;
        double memory = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const auto& p = *kernels[i].profile;
            base[i] = mode == CoRunMode::intra ? share[i] : std::pow(share[i], gamma);
            memory += base[i] * p.dram_util;
            if (mode == CoRunMode::intra) {
                compute += base[i] * p.alu_util;
            } else {
                compute = std::max(compute, p.alu_util);
            }
        }
        const double load = std::max(compute, memory);
        const double f = load > 1.0 ? 1.0 / load : 1.0;

        RateSegment seg;
        seg.start_ms = t;
        seg.rate.assign(n, 0.0);
        seg.contention = f;
        seg.binding = f < 1.0 ? (compute >= memory ? Binding::compute : Binding::memory) : Binding::occupancy;

        // Time to finish is remaining * t / (base * f) so that a kernel at
        // full rate closes at exactly its solo runtime.
        std::vector<double> need(n, 0.0);
        double dt = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const double t_solo = kernels[i].profile->solo_runtime_ms;
            seg.rate[i] = base[i] * f / t_solo;
            need[i] = remaining[i] * t_solo / (base[i] * f);
            dt = std::min(dt, need[i]);
        }
        const double end = t + dt;
        bool someone_finished = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            if (need[i] <= dt * (1.0 + 1e-12)) {
                remaining[i] = 0.0;
                active[i] = false;
                out.finish_time_ms[i] = end;
                --left;
                someone_finished = true;
            } else {
                remaining[i] -= seg.rate[i] * dt;
            }
        }
        seg.end_ms = end;
        out.segments.push_back(std::move(seg));
        t = end;
        if (mode == CoRunMode::intra && someone_finished) {
            for (std::size_t i = 0; i < n; ++i) {
                if (active[i]) share[i] = 1.0;
            }
        }
    }
    out.makespan_ms = t;
    return out;
}

inline CoRunOutcome simulate_plan(const KernelProfile& a, const KernelProfile& b, const CoRunPlan& plan,
                                  const DeviceSpec& device, double gamma = 1.0) {
    const std::array<CoRunKernel, 2> ks{CoRunKernel{&a, plan.share[0]}, CoRunKernel{&b, plan.share[1]}};
    return corun_simulate(ks, plan.mode, device, gamma, plan.granularity);
}

struct PlannedCoRun {
    CoRunPlan plan;
    CoRunOutcome outcome;
};

/// Best static SM split (n_a, n_b), n_a + n_b = num_sms. Ties go to the
/// split giving more SMs to the longer kernel.
inline PlannedCoRun inter_sm_partition(const KernelProfile& a, const KernelProfile& b, const DeviceSpec& device,
                                       double gamma = 1.0) {
    if (device.num_sms < 2) throw ValidationError("inter_sm_partition: needs at least 2 SMs");
    const int total = device.num_sms;
    const bool a_longer = a.solo_runtime_ms >= b.solo_runtime_ms;
    std::optional<PlannedCoRun> best;
    int best_na = 0;
    for (int na = 1; na < total; ++na) {
        CoRunPlan plan;
        plan.mode = CoRunMode::inter;
        plan.sms = {na, total - na};
        plan.share = {static_cast<double>(na) / total, static_cast<double>(total - na) / total};
        auto outcome = simulate_plan(a, b, plan, device, gamma);
        bool take = !best;
        if (best) {
            const double cur = best->outcome.makespan_ms;
            const double m = outcome.makespan_ms;
            const double tol = 1e-12 * std::max(cur, m);
            if (m < cur - tol) {
                take = true;
            } else if (std::abs(m - cur) <= tol) {
                take = a_longer ? na > best_na : na < best_na;
            }
        }
        if (take) {
            best = PlannedCoRun{plan, std::move(outcome)};
            best_na = na;
        }
    }
    return *best;
}

/// Co-run arrangements for (`first`, `second`): the intra-SM plan with
/// `first` at solo occupancy when feasible, and the best inter-SM split
/// when the device has at least two SMs.
inline std::vector<PlannedCoRun> pair_options(const KernelProfile& first, const KernelProfile& second,
                                              const DeviceSpec& device, Granularity granularity,
                                              double gamma = 1.0) {
    std::vector<PlannedCoRun> out;
    if (auto plan = intra_sm_allocate(first, second, device, granularity)) {
        out.push_back({*plan, simulate_plan(first, second, *plan, device, gamma)});
    }
    if (device.num_sms >= 2) out.push_back(inter_sm_partition(first, second, device, gamma));
    return out;
}

}  // namespace convsched
