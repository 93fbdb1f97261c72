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
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "convsched/census.hpp"
#include "convsched/netgraph.hpp"
#include "convsched/profile_store.hpp"
#include "convsched/report.hpp"
#include "convsched/run_report.hpp"
#include "convsched/schedule.hpp"
#include "convsched/scheduler.hpp"

namespace convsched::cli {

inline std::ifstream open_input(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError("missing --" + what + " path");
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + what + " file '" + path + "'");
    return in;
}

inline std::vector<KernelProfile> read_profiles(const std::string& path) {
    auto in = open_input(path, "profiles");
    return load_profiles(in, path);
}

inline DeviceSpec read_device(const std::string& path) {
    auto in = open_input(path, "device");
    return load_device(in, path);
}

inline NetworkGraph read_graph(const std::string& path) {
    auto in = open_input(path, "graph");
    return load_graph(in, path);
}

inline Schedule read_schedule(const std::string& path) {
    auto in = open_input(path, "schedule");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": malformed JSON: " + e.what());
    }
    return schedule_from_json(j, path);
}

// Writes to `path`, or to `out` when no path is given.
inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty()) {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write output file '" + path + "'");
    f << content;
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct Flags {
    std::string graph;
    std::string profiles;
    std::string device;
    std::string mode = "greedy";
    std::string granularity = "continuous";
    std::uint64_t mem_budget = 0;
    double gamma = 1.0;
    std::string out;
    std::string schedule;
    std::string op;
    std::string alg_a;
    std::string alg_b;
};

inline ScheduleConfig config_from(const Flags& f, const DeviceSpec& device) {
    ScheduleConfig cfg;
    cfg.mem_budget_bytes = f.mem_budget > 0 ? f.mem_budget : device.global_mem_bytes;
    cfg.granularity = granularity_from_string(f.granularity);
    cfg.gamma = f.gamma;
    if (!(cfg.gamma > 0.0)) throw ValidationError("--gamma must be > 0");
    return cfg;
}

inline int cmd_simulate(const Flags& f, std::ostream& out) {
    const ProfileDb db(read_profiles(f.profiles));
    const auto device = read_device(f.device);
    const auto g = read_graph(f.graph);
    const auto cfg = config_from(f, device);
    Schedule s;
    if (f.mode == "serial") s = schedule_serial_fastest(g, db, device, cfg.mem_budget_bytes);
    else if (f.mode == "greedy") s = schedule_concurrent_greedy(g, db, device, cfg);
    else if (f.mode == "exhaustive") s = schedule_exhaustive(g, db, device, cfg);
    else throw ValidationError("--mode must be serial, greedy or exhaustive");
    const auto violations = validate_schedule(s, g, db, device, cfg.mem_budget_bytes);
    emit(f.out, dump(to_json(s)), out);
    if (!f.out.empty()) {
        out << s.scheduler << " schedule for " << s.graph_id << ": makespan " << fixed(s.makespan_ms)
            << " ms, peak memory " << human_bytes(s.peak_memory_bytes()) << '\n';
        for (const auto& iv : s.intervals) {
            out << "  " << fixed(iv.start_ms) << " - " << fixed(iv.end_ms) << " ms  " << iv.op_id;
            if (iv.algorithm) out << " [" << to_string(*iv.algorithm) << "]";
            if (iv.assignment.corun) {
                out << " co-run with " << iv.assignment.partner << " (" << to_string(iv.assignment.plan.mode) << ")";
            }
            out << '\n';
        }
    }
    if (!violations.empty()) {
        for (const auto& v : violations) out << "violation (" << to_string(v.kind) << "): " << v.message << '\n';
        return 1;
    }
    return 0;
}

inline int cmd_compare(const Flags& f, std::ostream& out) {
    const ProfileDb db(read_profiles(f.profiles));
    const auto device = read_device(f.device);
    const auto g = read_graph(f.graph);
    const auto report = build_run_report(g, db, device, config_from(f, device));
    if (!f.out.empty()) emit(f.out, dump(to_json(report)), out);
    out << format_run_report(report);
    for (const auto& r : report.results) {
        if (!r.violations.empty()) return 1;
    }
    return 0;
}

inline int cmd_census(const Flags& f, std::ostream& out) {
    const ProfileDb db(read_profiles(f.profiles));
    const auto device = read_device(f.device);
    const auto g = read_graph(f.graph);
    const auto cfg = config_from(f, device);
    const auto entries = pair_census(db, g, device, {cfg.granularity, cfg.gamma, cfg.mem_budget_bytes});
    emit(f.out, dump(census_to_json(entries)), out);
    if (!f.out.empty()) {
        out << entries.size() << " qualifying pair(s)\n";
        for (const auto& e : entries) {
            out << "  " << e.op_a << " / " << e.op_b << ": best " << to_string(e.best().algorithm_a) << " + "
                << to_string(e.best().algorithm_b) << " (" << to_string(e.best().run.plan.mode) << "), "
                << fixed(e.best().makespan_ms) << " ms vs serial " << fixed(e.serial_ms) << " ms, speedup "
                << fixed(e.best().speedup, 2) << "x\n";
        }
    }
    return 0;
}

inline int cmd_algcompare(const Flags& f, std::ostream& out) {
    const ProfileDb db(read_profiles(f.profiles));
    if (f.op.empty()) throw ValidationError("algcompare needs --op");
    const auto menu = db.menu(f.op);
    const auto c = compare_algorithms(menu, algorithm_from_string(f.alg_a), algorithm_from_string(f.alg_b));
    if (!f.out.empty()) emit(f.out, dump(to_json(c)), out);
    out << format_comparison(c);
    return 0;
}

inline int cmd_render(const Flags& f, std::ostream& out) {
    const auto s = read_schedule(f.schedule);
    emit(f.out, render_gantt(s), out);
    return 0;
}

/// Entry point shared by the executable and tests. `args` excludes the
/// program name. Exit codes: 0 success, 1 invalid input, 2 infeasible
/// instance.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Concurrent convolution scheduling model"};
    app.require_subcommand(1);
    Flags f;

    auto model_flags = [&](CLI::App* sub) {
        sub->add_option("--graph", f.graph, "Network graph (JSON)")->required();
        sub->add_option("--profiles", f.profiles, "Kernel profile database (CSV)")->required();
        sub->add_option("--device", f.device, "Device spec (JSON)")->required();
        sub->add_option("--granularity", f.granularity, "continuous | quantized")
            ->check(CLI::IsMember({"continuous", "quantized"}));
        sub->add_option("--mem-budget", f.mem_budget, "Memory budget in bytes (default: device memory)");
        sub->add_option("--gamma", f.gamma, "Inter-SM scaling exponent");
        sub->add_option("--out", f.out, "Output path");
    };

    auto* simulate = app.add_subcommand("simulate", "Schedule one graph and export the schedule");
    model_flags(simulate);
    simulate->add_option("--mode", f.mode, "serial | greedy | exhaustive")
        ->check(CLI::IsMember({"serial", "greedy", "exhaustive"}));

    auto* compare = app.add_subcommand("compare", "Compare schedulers on one graph");
    model_flags(compare);

    auto* census = app.add_subcommand("census", "List independent conv pairs that benefit from co-running");
    model_flags(census);

    auto* algcompare = app.add_subcommand("algcompare", "Runtime/workspace tradeoff between two algorithms");
    algcompare->add_option("--profiles", f.profiles, "Kernel profile database (CSV)")->required();
    algcompare->add_option("--op", f.op, "Op id")->required();
    algcompare->add_option("--a", f.alg_a, "First algorithm")->required();
    algcompare->add_option("--b", f.alg_b, "Second algorithm")->required();
    algcompare->add_option("--out", f.out, "Machine-readable output path");

    auto* render = app.add_subcommand("render", "Render a schedule file as an SVG Gantt chart");
    render->add_option("--schedule", f.schedule, "Schedule file (JSON)")->required();
    render->add_option("--out", f.out, "SVG output path");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(f, out);
        if (compare->parsed()) return cmd_compare(f, out);
        if (census->parsed()) return cmd_census(f, out);
        if (algcompare->parsed()) return cmd_algcompare(f, out);
        if (render->parsed()) return cmd_render(f, out);
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace convsched::cli
