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

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "convsched/census.hpp"
#include "convsched/report.hpp"
#include "convsched/scheduler.hpp"

namespace convsched {

struct SchedulerResult {
    std::string name;
    Schedule schedule;
    std::vector<Violation> violations;
};

/// Serial baseline vs greedy (and the exhaustive oracle when the instance
/// is within its limits) on one graph and device.
struct RunReport {
    std::string graph_id;
    std::string device_id;
    ScheduleConfig config;
    std::vector<SchedulerResult> results;
    std::optional<std::string> exhaustive_skipped;
    double speedup = 1.0;  // serial / greedy
    std::vector<CensusEntry> census;

    const SchedulerResult* find(std::string_view name) const {
        for (const auto& r : results) {
            if (r.name == name) return &r;
        }
        return nullptr;
    }
};

inline RunReport build_run_report(const NetworkGraph& g, const ProfileDb& db, const DeviceSpec& device,
                                  const ScheduleConfig& cfg, const ExhaustiveLimits& limits = {}) {
    RunReport r;
    r.graph_id = g.id();
    r.device_id = device.id;
    r.config = cfg;
    auto record = [&](std::string name, Schedule s) {
        auto v = validate_schedule(s, g, db, device, cfg.mem_budget_bytes);
        r.results.push_back({std::move(name), std::move(s), std::move(v)});
    };
    record("serial", schedule_serial_fastest(g, db, device, cfg.mem_budget_bytes));
    record("greedy", schedule_concurrent_greedy(g, db, device, cfg));
    try {
        record("exhaustive", schedule_exhaustive(g, db, device, cfg, limits));
    } catch (const LimitError& e) {
        r.exhaustive_skipped = e.what();
    }
    const double serial = r.find("serial")->schedule.makespan_ms;
    const double greedy = r.find("greedy")->schedule.makespan_ms;
    r.speedup = greedy > 0.0 ? serial / greedy : 1.0;
    r.census = pair_census(db, g, device, {cfg.granularity, cfg.gamma, cfg.mem_budget_bytes});
    return r;
}

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json makespans = nlohmann::json::object();
    nlohmann::json peaks = nlohmann::json::object();
    nlohmann::json valid = nlohmann::json::object();
    for (const auto& res : r.results) {
        makespans[res.name] = res.schedule.makespan_ms;
        peaks[res.name] = res.schedule.peak_memory_bytes();
        nlohmann::json v = nlohmann::json::array();
        for (const auto& x : res.violations) v.push_back({{"kind", to_string(x.kind)}, {"message", x.message}});
        valid[res.name] = v;
    }
    if (!makespans.contains("exhaustive")) makespans["exhaustive"] = nullptr;
    nlohmann::json census = {{"qualifying_pairs", r.census.size()}};
    if (!r.census.empty()) {
        const auto& e = r.census.front();
        census["best_pair"] = {e.op_a, e.op_b};
        census["best_algorithms"] = {to_string(e.best().algorithm_a), to_string(e.best().algorithm_b)};
        census["best_speedup"] = e.best().speedup;
    }
    return {
        {"graph", r.graph_id},
        {"device", r.device_id},
        {"granularity", to_string(r.config.granularity)},
        {"gamma", r.config.gamma},
        {"mem_budget_bytes", r.config.mem_budget_bytes},
        {"makespan_ms", makespans},
        {"peak_memory_bytes", peaks},
        {"violations", valid},
        {"exhaustive_skipped", r.exhaustive_skipped ? nlohmann::json(*r.exhaustive_skipped) : nlohmann::json()},
        {"speedup", r.speedup},
        {"census", census},
    };
}

inline std::string format_run_report(const RunReport& r) {
    std::ostringstream os;
    os << "graph " << r.graph_id << " on " << r.device_id << " (" << to_string(r.config.granularity)
       << ", gamma " << detail::format_double(r.config.gamma) << ", budget " << human_bytes(r.config.mem_budget_bytes)
       << ")\n";
    for (const auto& res : r.results) {
        os << "  " << res.name << ": makespan " << fixed(res.schedule.makespan_ms) << " ms, peak memory "
           << human_bytes(res.schedule.peak_memory_bytes()) << ", "
           << (res.violations.empty() ? std::string("valid") : std::to_string(res.violations.size()) + " violations")
           << '\n';
    }
    if (r.exhaustive_skipped) os << "  exhaustive: skipped (" << *r.exhaustive_skipped << ")\n";
    os << "  speedup (serial / greedy): " << fixed(r.speedup, 2) << "x\n";
    os << "  census: " << r.census.size() << " qualifying pair(s)";
    if (!r.census.empty()) {
        const auto& e = r.census.front();
        os << ", best " << e.op_a << "/" << e.op_b << " with " << to_string(e.best().algorithm_a) << "/"
           << to_string(e.best().algorithm_b) << " at " << fixed(e.best().speedup, 2) << "x";
    }
    os << '\n';
    return os.str();
}

}  // namespace convsched
