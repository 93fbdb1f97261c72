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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "convsched/colocation.hpp"
#include "convsched/error.hpp"
#include "convsched/netgraph.hpp"
#include "convsched/profile_store.hpp"
#include "convsched/schedule.hpp"

namespace convsched {

class LimitError : public InfeasibleError {
  public:
    using InfeasibleError::InfeasibleError;
};

struct ScheduleConfig {
    std::uint64_t mem_budget_bytes = 0;
    Granularity granularity = Granularity::continuous;
    double gamma = 1.0;
};

struct ExhaustiveLimits {
    std::size_t max_ops = 4;
    std::size_t max_algs = 3;
};

namespace detail {

// Memory-feasible algorithms of one op, ordered by name. Empty for non-conv
// ops, which have no choice to make.
struct OpChoices {
    std::vector<const KernelProfile*> feasible;
    const KernelProfile* fastest = nullptr;
};

inline std::vector<OpChoices> gather_choices(const NetworkGraph& g, const ProfileDb& db, std::uint64_t budget) {
    std::vector<OpChoices> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& op = g.op(i);
        if (op.kind == OpKind::other) {
            if (op.fixed_bytes > budget) {
                throw InfeasibleError("op '" + op.op_id + "': fixed_bytes " + std::to_string(op.fixed_bytes) +
                                      " exceed memory budget " + std::to_string(budget));
            }
            continue;
        }
        const auto menu = db.for_op(op.menu_ref);
        if (menu.empty()) {
            throw ValidationError("op '" + op.op_id + "' has no profiles (menu '" + op.menu_ref + "')");
        }
        std::uint64_t tightest = std::numeric_limits<std::uint64_t>::max();
        for (const auto* p : menu) {
            const auto need = op.fixed_bytes + p->workspace_bytes;
            tightest = std::min(tightest, need);
            if (need > budget) continue;
            out[i].feasible.push_back(p);
            if (!out[i].fastest || p->solo_runtime_ms < out[i].fastest->solo_runtime_ms) out[i].fastest = p;
        }
        if (out[i].feasible.empty()) {
            throw InfeasibleError("op '" + op.op_id + "': no algorithm fits memory budget " + std::to_string(budget) +
                                  " bytes (tightest needs " + std::to_string(tightest) + " bytes)");
        }
    }
    return out;
}

inline double solo_time(const Op& op, const KernelProfile* p) {
    return op.kind == OpKind::other ? op.runtime_ms : p->solo_runtime_ms;
}

inline std::uint64_t op_bytes(const Op& op, const KernelProfile* p) {
    return op.fixed_bytes + (p ? p->workspace_bytes : 0);
}

// One barrier-delimited execution step: a solo op, or a pair of convs
// started together (`primary` is plan index 0).
struct Step {
    std::size_t primary = 0;
    const KernelProfile* primary_profile = nullptr;
    std::optional<std::size_t> partner;
    const KernelProfile* partner_profile = nullptr;
    PlannedCoRun run;
    double duration = 0.0;
};

inline Step solo_step(const NetworkGraph& g, std::size_t i, const KernelProfile* p) {
    Step s;
    s.primary = i;
    s.primary_profile = p;
    s.duration = solo_time(g.op(i), p);
    return s;
}

inline Step pair_step(std::size_t i, const KernelProfile* pi, std::size_t j, const KernelProfile* pj, PlannedCoRun run) {
    Step s;
    s.primary = i;
    s.primary_profile = pi;
    s.partner = j;
    s.partner_profile = pj;
    s.duration = run.outcome.makespan_ms;
    s.run = std::move(run);
    return s;
}

inline Interval make_interval(const Op& op, const KernelProfile* p, double start, double end) {
    Interval iv;
    iv.op_id = op.op_id;
    if (p) iv.algorithm = p->algorithm;
    iv.start_ms = start;
    iv.end_ms = end;
    iv.fixed_bytes = op.fixed_bytes;
    iv.workspace_bytes = p ? p->workspace_bytes : 0;
    return iv;
}

inline Schedule build_schedule(const NetworkGraph& g, const std::vector<Step>& steps, std::string scheduler,
                               std::uint64_t budget, double gamma) {
    Schedule s;
    s.graph_id = g.id();
    s.scheduler = std::move(scheduler);
    s.mem_budget_bytes = budget;
    double t = 0.0;
    for (const auto& step : steps) {
        const auto& op = g.op(step.primary);
        if (!step.partner) {
            const double end = t + step.duration;
            s.intervals.push_back(make_interval(op, step.primary_profile, t, end));
            t = end;
            continue;
        }
        const auto& other = g.op(*step.partner);
        auto a = make_interval(op, step.primary_profile, t, t + step.run.outcome.finish_time_ms[0]);
        auto b = make_interval(other, step.partner_profile, t, t + step.run.outcome.finish_time_ms[1]);
        a.assignment = {true, other.op_id, true, step.run.plan, gamma};
        b.assignment = {true, op.op_id, false, step.run.plan, gamma};
        t = std::max(a.end_ms, b.end_ms);
        s.intervals.push_back(std::move(a));
        s.intervals.push_back(std::move(b));
    }
    s.makespan_ms = t;
    s.memory_timeline = memory_timeline(s.intervals);
    return s;
}

inline std::vector<std::size_t> ready_ops(const NetworkGraph& g, const std::vector<bool>& done) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (done[i]) continue;
        bool ok = true;
        for (auto p : g.preds(i)) ok = ok && done[p];
        if (ok) out.push_back(i);
    }
    return out;
}

// Serial sequencing rule: ready non-conv ops first (they may unlock more
// convolutions), then ready convolutions, each in graph order.
inline std::size_t next_serial_op(const NetworkGraph& g, const std::vector<std::size_t>& ready) {
    for (auto i : ready) {
        if (g.op(i).kind == OpKind::other) return i;
    }
    return ready.front();
}

}  // namespace detail

/// One op at a time in dependency order, each convolution using its
/// fastest algorithm among those whose memory fits the budget.
inline Schedule schedule_serial_fastest(const NetworkGraph& g, const ProfileDb& db, const DeviceSpec& device,
                                        std::uint64_t mem_budget) {
    (void)device;
    const auto choices = detail::gather_choices(g, db, mem_budget);
    std::vector<bool> done(g.size(), false);
    std::vector<detail::Step> steps;
    for (std::size_t n = 0; n < g.size(); ++n) {
        const auto i = detail::next_serial_op(g, detail::ready_ops(g, done));
        steps.push_back(detail::solo_step(g, i, choices[i].fastest));
        done[i] = true;
    }
    return detail::build_schedule(g, steps, "serial", mem_budget, 1.0);
}

/// Event-driven list scheduling with pairwise co-location.
///
/// At each decision instant the longest ready convolution (by fastest solo
/// time) is tried against every other ready convolution over all
/// memory-feasible algorithm pairs, intra-SM with the seed at solo
/// occupancy and inter-SM. The pairing with the smallest predicted
/// makespan runs if it beats running both ops alone; otherwise the next op
/// runs solo as in the serial schedule.
inline Schedule schedule_concurrent_greedy(const NetworkGraph& g, const ProfileDb& db, const DeviceSpec& device,
                                           const ScheduleConfig& cfg) {
    const auto budget = cfg.mem_budget_bytes;
    const auto choices = detail::gather_choices(g, db, budget);
    std::vector<bool> done(g.size(), false);
    std::vector<detail::Step> steps;
    std::size_t left = g.size();
    while (left > 0) {
        const auto ready = detail::ready_ops(g, done);
        std::vector<std::size_t> convs;
        for (auto i : ready) {
            if (g.op(i).kind == OpKind::conv) convs.push_back(i);
        }
        if (convs.size() >= 2) {
            std::size_t seed = convs.front();
            for (auto c : convs) {
                if (choices[c].fastest->solo_runtime_ms > choices[seed].fastest->solo_runtime_ms) seed = c;
            }
            std::optional<detail::Step> best;
            for (auto c : convs) {
                if (c == seed) continue;
                for (const auto* ps : choices[seed].feasible) {
                    for (const auto* pc : choices[c].feasible) {
                        if (detail::op_bytes(g.op(seed), ps) + detail::op_bytes(g.op(c), pc) > budget) continue;
                        for (auto& run : pair_options(*ps, *pc, device, cfg.granularity, cfg.gamma)) {
                            if (!best || run.outcome.makespan_ms < best->duration) {
                                best = detail::pair_step(seed, ps, c, pc, std::move(run));
                            }
                        }
                    }
                }
            }
            if (best) {
                const double serial =
                    choices[seed].fastest->solo_runtime_ms + choices[*best->partner].fastest->solo_runtime_ms;
                if (best->duration < serial) {
                    done[best->primary] = done[*best->partner] = true;
                    left -= 2;
                    steps.push_back(std::move(*best));
                    continue;
                }
            }
        }
        const auto i = detail::next_serial_op(g, ready);
        steps.push_back(detail::solo_step(g, i, choices[i].fastest));
        done[i] = true;
        --left;
    }
    auto greedy = detail::build_schedule(g, steps, "greedy", budget, cfg.gamma);
    auto serial = schedule_serial_fastest(g, db, device, budget);
    if (serial.makespan_ms < greedy.makespan_ms) {
        serial.scheduler = "greedy";
        return serial;
    }
    return greedy;
}

/// Minimum-makespan schedule over every algorithm assignment and every
/// sequence of solo and paired steps consistent with precedence. Pairings
/// try both kernels as the intra-SM primary plus the best inter-SM split.
/// Ties keep the first assignment in lexicographic order (ops in graph
/// order, algorithms by name).
inline Schedule schedule_exhaustive(const NetworkGraph& g, const ProfileDb& db, const DeviceSpec& device,
                                    const ScheduleConfig& cfg, const ExhaustiveLimits& limits = {}) {
    if (g.size() > limits.max_ops) {
        throw LimitError("exhaustive: graph has " + std::to_string(g.size()) + " ops, limit is " +
                         std::to_string(limits.max_ops));
    }
    if (g.size() > 20) throw LimitError("exhaustive: more than 20 ops is not supported");
    for (const auto& op : g.ops()) {
        if (op.kind != OpKind::conv) continue;
        const auto n = db.for_op(op.menu_ref).size();
        if (n > limits.max_algs) {
            throw LimitError("exhaustive: op '" + op.op_id + "' has " + std::to_string(n) + " algorithms, limit is " +
                             std::to_string(limits.max_algs));
        }
    }
    const auto budget = cfg.mem_budget_bytes;
    const auto choices = detail::gather_choices(g, db, budget);
    const std::size_t n = g.size();
    const std::size_t full = (std::size_t{1} << n) - 1;

    std::vector<std::size_t> pred_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto p : g.preds(i)) pred_mask[i] |= std::size_t{1} << p;
    }

    std::vector<const KernelProfile*> assign(n, nullptr);
    std::vector<std::size_t> digit(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!choices[i].feasible.empty()) assign[i] = choices[i].feasible[0];
    }

    std::optional<std::vector<detail::Step>> best_steps;
    double best_time = std::numeric_limits<double>::infinity();

    // Next assignment in lexicographic order, last op varying fastest.
    auto advance = [&] {
        for (std::size_t k = n; k-- > 0;) {
            const auto& f = choices[k].feasible;
            if (f.size() <= 1) continue;
            if (++digit[k] < f.size()) {
                assign[k] = f[digit[k]];
                return true;
            }
            digit[k] = 0;
            assign[k] = f[0];
        }
        return false;
    };

    while (true) {
        // Dynamic program over completed sets for this assignment.
        std::vector<double> cost(full + 1, std::numeric_limits<double>::infinity());
        std::vector<std::optional<detail::Step>> choice(full + 1);
        cost[full] = 0.0;
        for (std::size_t m = full; m-- > 0;) {
            std::vector<std::size_t> ready;
            for (std::size_t i = 0; i < n; ++i) {
                if (!(m >> i & 1) && (pred_mask[i] & m) == pred_mask[i]) ready.push_back(i);
            }
            auto offer = [&](detail::Step step, std::size_t next) {
                const double c = step.duration + cost[next];
                if (c < cost[m]) {
                    cost[m] = c;
                    choice[m] = std::move(step);
                }
            };
            for (auto i : ready) {
                offer(detail::solo_step(g, i, assign[i]), m | std::size_t{1} << i);
            }
            for (std::size_t x = 0; x < ready.size(); ++x) {
                for (std::size_t y = x + 1; y < ready.size(); ++y) {
                    const auto i = ready[x];
                    const auto j = ready[y];
                    if (g.op(i).kind != OpKind::conv || g.op(j).kind != OpKind::conv) continue;
                    if (detail::op_bytes(g.op(i), assign[i]) + detail::op_bytes(g.op(j), assign[j]) > budget) continue;
                    const auto next = m | std::size_t{1} << i | std::size_t{1} << j;
                    const auto& pi = *assign[i];
                    const auto& pj = *assign[j];
                    if (auto plan = intra_sm_allocate(pi, pj, device, cfg.granularity)) {
                        offer(detail::pair_step(i, &pi, j, &pj, {*plan, simulate_plan(pi, pj, *plan, device, cfg.gamma)}),
                              next);
                    }
                    if (auto plan = intra_sm_allocate(pj, pi, device, cfg.granularity)) {
                        offer(detail::pair_step(j, &pj, i, &pi, {*plan, simulate_plan(pj, pi, *plan, device, cfg.gamma)}),
                              next);
                    }
                    if (device.num_sms >= 2) {
                        offer(detail::pair_step(i, &pi, j, &pj, inter_sm_partition(pi, pj, device, cfg.gamma)), next);
                    }
                }
            }
        }
        if (cost[0] < best_time) {
            best_time = cost[0];
            std::vector<detail::Step> steps;
            for (std::size_t m = 0; m != full;) {
                const auto& st = *choice[m];
                m |= std::size_t{1} << st.primary;
                if (st.partner) m |= std::size_t{1} << *st.partner;
                steps.push_back(st);
            }
            best_steps = std::move(steps);
        }

        if (!advance()) break;
    }

    return detail::build_schedule(g, best_steps.value_or(std::vector<detail::Step>{}), "exhaustive", budget, cfg.gamma);
}

}  // namespace convsched
