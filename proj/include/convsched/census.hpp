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
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "convsched/colocation.hpp"
#include "convsched/netgraph.hpp"
#include "convsched/profile_store.hpp"

namespace convsched {

struct CensusOptions {
    Granularity granularity = Granularity::continuous;
    double gamma = 1.0;
    // Defaults to the device's global memory.
    std::optional<std::uint64_t> mem_budget_bytes;
};

struct CensusCandidate {
    Algorithm algorithm_a = Algorithm::GEMM;
    Algorithm algorithm_b = Algorithm::GEMM;
    // Whether op_a is index 0 of the plan (holds solo occupancy intra-SM).
    bool a_primary = true;
    PlannedCoRun run;
    double makespan_ms = 0.0;
    double speedup = 1.0;
};

struct CensusEntry {
    std::string op_a;
    std::string op_b;
    // Serial-fastest time of the two ops: the baseline a co-run must beat.
    double serial_ms = 0.0;
    // Qualifying co-runs, best first.
    std::vector<CensusCandidate> candidates;

    const CensusCandidate& best() const { return candidates.front(); }
};

/// Every independent pair of convolutions with at least one co-run
/// arrangement predicted to beat running both ops alone with their fastest
/// algorithms. Entries are ordered by best speedup, then op ids.
inline std::vector<CensusEntry> pair_census(const ProfileDb& db, const NetworkGraph& g, const DeviceSpec& device,
                                            const CensusOptions& options = {}) {
    const std::uint64_t budget = options.mem_budget_bytes.value_or(device.global_mem_bytes);

    std::vector<std::size_t> convs;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& op = g.op(i);
        if (op.kind != OpKind::conv) continue;
        if (db.for_op(op.menu_ref).empty()) {
            throw ValidationError("census: op '" + op.op_id + "' has no profiles (menu '" + op.menu_ref + "')");
        }
        convs.push_back(i);
    }

    auto fits = [&](const Op& op, const KernelProfile& p) { return op.fixed_bytes + p.workspace_bytes <= budget; };
    auto fastest = [&](const Op& op) -> std::optional<double> {
        std::optional<double> best;
        for (const auto* p : db.for_op(op.menu_ref)) {
            if (fits(op, *p) && (!best || p->solo_runtime_ms < *best)) best = p->solo_runtime_ms;
        }
        return best;
    };

    std::vector<CensusEntry> out;
    for (std::size_t x = 0; x < convs.size(); ++x) {
        for (std::size_t y = x + 1; y < convs.size(); ++y) {
            const auto i = convs[x];
            const auto j = convs[y];
            if (g.reaches(i, j) || g.reaches(j, i)) continue;
            const auto& oa = g.op(i);
            const auto& ob = g.op(j);
            const auto ta = fastest(oa);
            const auto tb = fastest(ob);
            if (!ta || !tb) continue;

            CensusEntry entry;
            entry.op_a = oa.op_id;
            entry.op_b = ob.op_id;
            entry.serial_ms = *ta + *tb;
            for (const auto* pa : db.for_op(oa.menu_ref)) {
                for (const auto* pb : db.for_op(ob.menu_ref)) {
                    const auto bytes = oa.fixed_bytes + pa->workspace_bytes + ob.fixed_bytes + pb->workspace_bytes;
                    if (bytes > budget) continue;
                    auto consider = [&](PlannedCoRun run, bool a_primary) {
                        const double m = run.outcome.makespan_ms;
                        if (!(m < entry.serial_ms)) return;
                        entry.candidates.push_back(
                            {pa->algorithm, pb->algorithm, a_primary, std::move(run), m, entry.serial_ms / m});
                    };
                    for (auto& run : pair_options(*pa, *pb, device, options.granularity, options.gamma)) {
                        consider(std::move(run), true);
                    }
                    if (auto plan = intra_sm_allocate(*pb, *pa, device, options.granularity)) {
                        consider({*plan, simulate_plan(*pb, *pa, *plan, device, options.gamma)}, false);
                    }
                }
            }
            if (entry.candidates.empty()) continue;
            std::stable_sort(entry.candidates.begin(), entry.candidates.end(),
                             [](const CensusCandidate& l, const CensusCandidate& r) { return l.speedup > r.speedup; });
            out.push_back(std::move(entry));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CensusEntry& l, const CensusEntry& r) {
        if (l.best().speedup != r.best().speedup) return l.best().speedup > r.best().speedup;
        return std::tie(l.op_a, l.op_b) < std::tie(r.op_a, r.op_b);
    });
    return out;
}

}  // namespace convsched
