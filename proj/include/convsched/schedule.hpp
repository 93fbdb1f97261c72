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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "convsched/colocation.hpp"
#include "convsched/netgraph.hpp"
#include "convsched/profile_store.hpp"

namespace convsched {

/// Resource assignment of one interval. Co-run partners carry the same
/// plan, expressed from the primary's side (plan index 0 is the primary).
struct Assignment {
    bool corun = false;
    std::string partner;
    bool primary = false;
    CoRunPlan plan;
    double gamma = 1.0;
};

struct Interval {
    std::string op_id;
    std::optional<Algorithm> algorithm;  // empty for non-conv ops
    double start_ms = 0.0;
    double end_ms = 0.0;
    std::uint64_t fixed_bytes = 0;
    std::uint64_t workspace_bytes = 0;
    Assignment assignment;

    std::uint64_t resident_bytes() const { return fixed_bytes + workspace_bytes; }
};

struct MemoryPoint {
    double time_ms = 0.0;
    std::uint64_t resident_bytes = 0;
};

struct Schedule {
    std::string graph_id;
    std::string scheduler;
    std::uint64_t mem_budget_bytes = 0;
    std::vector<Interval> intervals;
    double makespan_ms = 0.0;
    std::vector<MemoryPoint> memory_timeline;

    std::uint64_t peak_memory_bytes() const {
        std::uint64_t peak = 0;
        for (const auto& p : memory_timeline) peak = std::max(peak, p.resident_bytes);
        return peak;
    }
};

// An interval holds memory over [start, end); a zero-length interval holds
// it at its single instant.
inline bool holds_memory_at(const Interval& iv, double t) {
    if (iv.start_ms == iv.end_ms) return t == iv.start_ms;
    return iv.start_ms <= t && t < iv.end_ms;
}

/// Resident bytes right after each distinct interval start/end.
inline std::vector<MemoryPoint> memory_timeline(const std::vector<Interval>& intervals) {
    std::set<double> times;
    for (const auto& iv : intervals) {
        times.insert(iv.start_ms);
        times.insert(iv.end_ms);
    }
    std::vector<MemoryPoint> out;
    for (double t : times) {
        std::uint64_t bytes = 0;
        for (const auto& iv : intervals) {
            if (holds_memory_at(iv, t)) bytes += iv.resident_bytes();
        }
        out.push_back({t, bytes});
    }
    return out;
}

inline nlohmann::json to_json(const CoRunPlan& p) {
    return {
        {"mode", to_string(p.mode)},
        {"granularity", to_string(p.granularity)},
        {"share", p.share},
        {"blocks_per_sm", p.blocks_per_sm},
        {"sms", p.sms},
    };
}

inline CoRunPlan plan_from_json(const nlohmann::json& j) {
    CoRunPlan p;
    p.mode = co_run_mode_from_string(j.at("mode").get<std::string>());
    p.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    p.share = j.at("share").get<std::array<double, 2>>();
    p.blocks_per_sm = j.at("blocks_per_sm").get<std::array<int, 2>>();
    p.sms = j.at("sms").get<std::array<int, 2>>();
    return p;
}

inline nlohmann::json to_json(const Schedule& s) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& iv : s.intervals) {
        nlohmann::json a;
        if (iv.assignment.corun) {
            a = {{"type", "corun"},
                 {"partner", iv.assignment.partner},
                 {"primary", iv.assignment.primary},
                 {"plan", to_json(iv.assignment.plan)},
                 {"gamma", iv.assignment.gamma}};
        } else {
            a = {{"type", "solo"}};
        }
        intervals.push_back({
            {"op_id", iv.op_id},
            {"algorithm", iv.algorithm ? nlohmann::json(std::string(to_string(*iv.algorithm))) : nlohmann::json()},
            {"start_ms", iv.start_ms},
            {"end_ms", iv.end_ms},
            {"fixed_bytes", iv.fixed_bytes},
            {"workspace_bytes", iv.workspace_bytes},
            {"assignment", a},
        });
    }
    nlohmann::json timeline = nlohmann::json::array();
    for (const auto& p : s.memory_timeline) timeline.push_back({{"time_ms", p.time_ms}, {"resident_bytes", p.resident_bytes}});
    return {
        {"graph", s.graph_id},
        {"scheduler", s.scheduler},
        {"mem_budget_bytes", s.mem_budget_bytes},
        {"makespan_ms", s.makespan_ms},
        {"peak_memory_bytes", s.peak_memory_bytes()},
        {"intervals", intervals},
        {"memory_timeline", timeline},
    };
}

inline Schedule schedule_from_json(const nlohmann::json& j, const std::string& source = "schedule") {
    try {
        Schedule s;
        s.graph_id = j.at("graph").get<std::string>();
        s.scheduler = j.at("scheduler").get<std::string>();
        s.mem_budget_bytes = j.at("mem_budget_bytes").get<std::uint64_t>();
        s.makespan_ms = j.at("makespan_ms").get<double>();
        for (const auto& iv : j.at("intervals")) {
            Interval out;
            out.op_id = iv.at("op_id").get<std::string>();
            if (!iv.at("algorithm").is_null()) out.algorithm = algorithm_from_string(iv.at("algorithm").get<std::string>());
            out.start_ms = iv.at("start_ms").get<double>();
            out.end_ms = iv.at("end_ms").get<double>();
            out.fixed_bytes = iv.at("fixed_bytes").get<std::uint64_t>();
            out.workspace_bytes = iv.at("workspace_bytes").get<std::uint64_t>();
            const auto& a = iv.at("assignment");
            const auto type = a.at("type").get<std::string>();
            if (type == "corun") {
                out.assignment.corun = true;
                out.assignment.partner = a.at("partner").get<std::string>();
                out.assignment.primary = a.at("primary").get<bool>();
                out.assignment.plan = plan_from_json(a.at("plan"));
                out.assignment.gamma = a.at("gamma").get<double>();
            } else if (type != "solo") {
                throw ValidationError(source + ": unknown assignment type '" + type + "'");
            }
            s.intervals.push_back(std::move(out));
        }
        for (const auto& p : j.at("memory_timeline")) {
            s.memory_timeline.push_back({p.at("time_ms").get<double>(), p.at("resident_bytes").get<std::uint64_t>()});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(source + ": malformed schedule: " + e.what());
    }
}

enum class ViolationKind { coverage, precedence, memory, overlap, duration, profile, makespan };

inline std::string_view to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::coverage: return "coverage";
        case ViolationKind::precedence: return "precedence";
        case ViolationKind::memory: return "memory";
        case ViolationKind::overlap: return "overlap";
        case ViolationKind::duration: return "duration";
        case ViolationKind::profile: return "profile";
        case ViolationKind::makespan: return "makespan";
    }
    return "coverage";
}

struct Violation {
    ViolationKind kind;
    std::string message;
};

namespace detail {

inline bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

inline std::string ms(double v) { return format_double(v); }

}  // namespace detail

/// Checks a schedule against the graph, profiles, device and budget.
/// An empty result means the schedule is valid.
inline std::vector<Violation> validate_schedule(const Schedule& s, const NetworkGraph& g, const ProfileDb& db,
                                                const DeviceSpec& device, std::uint64_t mem_budget) {
    std::vector<Violation> out;
    auto add = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

    std::map<std::string, std::size_t> by_op;
    for (std::size_t i = 0; i < s.intervals.size(); ++i) {
        const auto& iv = s.intervals[i];
        if (!g.contains(iv.op_id)) {
            add(ViolationKind::coverage, "interval for unknown op '" + iv.op_id + "'");
            continue;
        }
        if (!by_op.emplace(iv.op_id, i).second) add(ViolationKind::coverage, "op '" + iv.op_id + "' scheduled more than once");
        if (!(iv.start_ms >= 0.0) || !(iv.end_ms >= iv.start_ms)) {
            add(ViolationKind::duration, "op '" + iv.op_id + "' has a malformed interval");
        }
    }
    for (const auto& op : g.ops()) {
        if (!by_op.count(op.op_id)) add(ViolationKind::coverage, "op '" + op.op_id + "' not scheduled");
    }

    // Profiles and byte accounting.
    std::map<std::string, const KernelProfile*> profile_of;
    for (const auto& iv : s.intervals) {
        if (!g.contains(iv.op_id)) continue;
        const auto& op = g.op(iv.op_id);
        if (iv.fixed_bytes != op.fixed_bytes) {
            add(ViolationKind::profile, "op '" + iv.op_id + "' fixed_bytes differs from the graph");
        }
        if (op.kind == OpKind::other) {
            if (iv.algorithm) add(ViolationKind::profile, "non-conv op '" + iv.op_id + "' carries an algorithm");
            if (iv.workspace_bytes != 0) add(ViolationKind::profile, "non-conv op '" + iv.op_id + "' carries workspace");
            if (iv.assignment.corun) add(ViolationKind::overlap, "non-conv op '" + iv.op_id + "' is co-located");
            continue;
        }
        if (!iv.algorithm) {
            add(ViolationKind::profile, "conv op '" + iv.op_id + "' has no algorithm");
            continue;
        }
        const auto* p = db.find(op.menu_ref, *iv.algorithm);
        if (!p) {
            add(ViolationKind::profile, "op '" + iv.op_id + "' uses " + std::string(to_string(*iv.algorithm)) +
                                            ", absent from menu '" + op.menu_ref + "'");
            continue;
        }
        if (iv.workspace_bytes != p->workspace_bytes) {
            add(ViolationKind::profile, "op '" + iv.op_id + "' workspace_bytes differs from its profile");
        }
        profile_of[iv.op_id] = p;
    }

    // Precedence.
    for (const auto& e : g.edges()) {
        auto src = by_op.find(e.src);
        auto dst = by_op.find(e.dst);
        if (src == by_op.end() || dst == by_op.end()) continue;
        const auto& a = s.intervals[src->second];
        const auto& b = s.intervals[dst->second];
        if (b.start_ms < a.end_ms - 1e-9 * std::max(1.0, a.end_ms)) {
            add(ViolationKind::precedence, "op '" + e.dst + "' starts at " + detail::ms(b.start_ms) +
                                               " ms before predecessor '" + e.src + "' ends at " +
                                               detail::ms(a.end_ms) + " ms");
        }
    }

    // Memory, recomputed from the intervals rather than trusting the export.
    std::uint64_t peak = 0;
    double peak_at = 0.0;
    for (const auto& p : memory_timeline(s.intervals)) {
        if (p.resident_bytes > peak) {
            peak = p.resident_bytes;
            peak_at = p.time_ms;
        }
    }
    if (peak > mem_budget) {
        add(ViolationKind::memory, "peak resident memory " + std::to_string(peak) + " bytes at " + detail::ms(peak_at) +
                                       " ms exceeds budget " + std::to_string(mem_budget) + " bytes");
    }

    // Overlap: only co-run partners, at most two at a time, under a feasible plan.
    std::map<std::string, std::vector<std::size_t>> overlaps;
    for (std::size_t i = 0; i < s.intervals.size(); ++i) {
        for (std::size_t j = i + 1; j < s.intervals.size(); ++j) {
            const auto& a = s.intervals[i];
            const auto& b = s.intervals[j];
            const double ov = std::min(a.end_ms, b.end_ms) - std::max(a.start_ms, b.start_ms);
            if (ov > 1e-9 * std::max(1.0, std::max(a.end_ms, b.end_ms))) {
                overlaps[a.op_id].push_back(j);
                overlaps[b.op_id].push_back(i);
                const bool partners = a.assignment.corun && b.assignment.corun && a.assignment.partner == b.op_id &&
                                      b.assignment.partner == a.op_id;
                if (!partners) {
                    add(ViolationKind::overlap, "ops '" + a.op_id + "' and '" + b.op_id + "' overlap without a co-run plan");
                }
            }
        }
    }
    for (const auto& [op, list] : overlaps) {
        if (list.size() > 1) add(ViolationKind::overlap, "op '" + op + "' overlaps more than one other op");
    }

    // Durations: solo intervals match the profile, co-run pairs re-simulate.
    std::set<std::string> checked_pairs;
    for (const auto& iv : s.intervals) {
        if (!g.contains(iv.op_id)) continue;
        const auto& op = g.op(iv.op_id);
        const double dur = iv.end_ms - iv.start_ms;
        if (!iv.assignment.corun) {
            const double expect = op.kind == OpKind::other ? op.runtime_ms
                                  : profile_of.count(iv.op_id) ? profile_of[iv.op_id]->solo_runtime_ms
                                                               : dur;
            if (!detail::close(dur, expect)) {
                add(ViolationKind::duration, "op '" + iv.op_id + "' runs " + detail::ms(dur) + " ms, expected " +
                                                 detail::ms(expect) + " ms");
            }
            continue;
        }
        auto pit = by_op.find(iv.assignment.partner);
        if (pit == by_op.end()) {
            add(ViolationKind::overlap, "op '" + iv.op_id + "' names missing co-run partner '" + iv.assignment.partner + "'");
            continue;
        }
        const auto& other = s.intervals[pit->second];
        const std::string key = std::min(iv.op_id, other.op_id) + "|" + std::max(iv.op_id, other.op_id);
        if (!checked_pairs.insert(key).second) continue;
        if (!other.assignment.corun || other.assignment.partner != iv.op_id ||
            other.assignment.primary == iv.assignment.primary) {
            add(ViolationKind::overlap, "co-run pair '" + iv.op_id + "'/'" + other.op_id + "' is not mutually declared");
            continue;
        }
        if (!detail::close(iv.start_ms, other.start_ms)) {
            add(ViolationKind::overlap, "co-run pair '" + iv.op_id + "'/'" + other.op_id + "' does not start together");
            continue;
        }
        const auto& prim = iv.assignment.primary ? iv : other;
        const auto& sec = iv.assignment.primary ? other : iv;
        if (!profile_of.count(prim.op_id) || !profile_of.count(sec.op_id)) continue;
        const auto* pp = profile_of[prim.op_id];
        const auto* ps = profile_of[sec.op_id];
        const auto& plan = prim.assignment.plan;
        if (plan.mode == CoRunMode::intra) {
            auto allowed = intra_sm_allocate(*pp, *ps, device, plan.granularity);
            if (!allowed) {
                add(ViolationKind::overlap, "co-run pair '" + prim.op_id + "'/'" + sec.op_id + "' is not co-locatable");
                continue;
            }
            if (plan.share[0] > 1.0 + 1e-12 || plan.share[1] > allowed->share[1] + 1e-9) {
                add(ViolationKind::overlap, "co-run pair '" + prim.op_id + "'/'" + sec.op_id +
                                                "' allocates more than the SM can hold");
                continue;
            }
        } else if (plan.sms[0] < 1 || plan.sms[1] < 1 || plan.sms[0] + plan.sms[1] > device.num_sms) {
            add(ViolationKind::overlap, "co-run pair '" + prim.op_id + "'/'" + sec.op_id + "' has an invalid SM split");
            continue;
        }
        try {
            auto outcome = simulate_plan(*pp, *ps, plan, device, prim.assignment.gamma);
            const double dp = prim.end_ms - prim.start_ms;
            const double ds = sec.end_ms - sec.start_ms;
            if (!detail::close(dp, outcome.finish_time_ms[0]) || !detail::close(ds, outcome.finish_time_ms[1])) {
                add(ViolationKind::duration, "co-run pair '" + prim.op_id + "'/'" + sec.op_id +
                                                 "' durations disagree with simulation (" + detail::ms(dp) + ", " +
                                                 detail::ms(ds) + " vs " + detail::ms(outcome.finish_time_ms[0]) +
                                                 ", " + detail::ms(outcome.finish_time_ms[1]) + ")");
            }
        } catch (const ValidationError& e) {
            add(ViolationKind::overlap, "co-run pair '" + prim.op_id + "'/'" + sec.op_id + "': " + e.what());
        }
    }

    double max_end = 0.0;
    for (const auto& iv : s.intervals) max_end = std::max(max_end, iv.end_ms);
    if (!detail::close(max_end, s.makespan_ms)) {
        add(ViolationKind::makespan, "makespan " + detail::ms(s.makespan_ms) + " ms differs from last end " +
                                         detail::ms(max_end) + " ms");
    }
    return out;
}

}  // namespace convsched
