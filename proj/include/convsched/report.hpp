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
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "convsched/census.hpp"
#include "convsched/profile_store.hpp"
#include "convsched/schedule.hpp"

namespace convsched {

// Nearest integer percent, e.g. 0.686 -> "69%".
inline std::string percent(double frac) {
    return std::to_string(static_cast<long long>(std::lround(frac * 100.0))) + "%";
}

// Decimal units, two decimals above one kilobyte.
inline std::string human_bytes(std::uint64_t bytes) {
    static constexpr const char* units[] = {"KB", "MB", "GB", "TB"};
    if (bytes < 1000) return std::to_string(bytes) + " B";
    double v = static_cast<double>(bytes);
    int u = -1;
    while (v >= 1000.0 && u < 3) {
        v /= 1000.0;
        ++u;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f %s", v, units[u]);
    return buf;
}

inline std::string fixed(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string xml_escape(std::string_view in) {
    std::string out;
    for (char c : in) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline nlohmann::json to_json(const AlgorithmComparison& c) {
    return {
        {"op_id", c.op_id},
        {"a", to_string(c.a)},
        {"b", to_string(c.b)},
        {"runtime_a_ms", c.runtime_a_ms},
        {"runtime_b_ms", c.runtime_b_ms},
        {"workspace_a_bytes", c.workspace_a_bytes},
        {"workspace_b_bytes", c.workspace_b_bytes},
        {"faster", to_string(c.faster)},
        {"runtime_delta_frac", c.runtime_delta_frac},
        {"larger_workspace", to_string(c.larger_workspace)},
        {"workspace_delta_bytes", c.workspace_delta_bytes},
        {"workspace_delta_frac", c.workspace_delta_frac},
    };
}

inline std::string format_comparison(const AlgorithmComparison& c) {
    const std::string a(to_string(c.a));
    const std::string b(to_string(c.b));
    std::ostringstream os;
    os << "op " << c.op_id << ": " << a << " vs " << b << '\n';
    os << "  " << a << ": " << detail::format_double(c.runtime_a_ms) << " ms, workspace "
       << human_bytes(c.workspace_a_bytes) << '\n';
    os << "  " << b << ": " << detail::format_double(c.runtime_b_ms) << " ms, workspace "
       << human_bytes(c.workspace_b_bytes) << '\n';
    if (c.faster == Side::tie) {
        os << "  runtime: equal\n";
    } else {
        const auto& fast = c.faster == Side::first ? a : b;
        os << "  runtime: " << fast << " is " << percent(c.runtime_delta_frac) << " faster\n";
    }
    if (c.larger_workspace == Side::tie) {
        os << "  workspace: equal\n";
    } else {
        const auto& big = c.larger_workspace == Side::first ? a : b;
        os << "  workspace: " << big << " needs " << human_bytes(c.workspace_delta_bytes) << " ("
           << percent(c.workspace_delta_frac) << ") extra\n";
    }
    return os.str();
}

inline nlohmann::json to_json(const CensusEntry& e) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : e.candidates) {
        cands.push_back({
            {"algorithm_a", to_string(c.algorithm_a)},
            {"algorithm_b", to_string(c.algorithm_b)},
            {"a_primary", c.a_primary},
            {"plan", to_json(c.run.plan)},
            {"finish_time_ms", c.run.outcome.finish_time_ms},
            {"makespan_ms", c.makespan_ms},
            {"speedup", c.speedup},
        });
    }
    return {{"op_a", e.op_a}, {"op_b", e.op_b}, {"serial_ms", e.serial_ms}, {"candidates", cands}};
}

inline nlohmann::json census_to_json(const std::vector<CensusEntry>& entries) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : entries) out.push_back(to_json(e));
    return out;
}

/// Gantt chart of a schedule. Solo intervals and co-run primaries occupy
/// lane 0; co-run partners are stacked in lane 1 under their primary.
inline std::string render_gantt(const Schedule& s) {
    constexpr double left = 120.0;
    constexpr double plot_w = 640.0;
    constexpr double top = 40.0;
    constexpr double lane_h = 36.0;
    constexpr int ticks = 5;

    bool two_lanes = false;
    for (const auto& iv : s.intervals) two_lanes = two_lanes || iv.assignment.corun;
    const int lanes = two_lanes ? 2 : 1;
    const double span = s.makespan_ms > 0.0 ? s.makespan_ms : 1.0;
    const double scale = plot_w / span;
    const double axis_y = top + lanes * lane_h + 8.0;
    const double width = left + plot_w + 40.0;
    const double height = axis_y + 40.0;

    static constexpr const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                              "#59a14f", "#edc948", "#b07aa1", "#9c755f"};
    auto color = [&](const Interval& iv) -> std::string {
        if (!iv.algorithm) return "#bab0ac";
        return palette[static_cast<int>(*iv.algorithm) % 8];
    };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
       << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n";
    os << "<title>" << xml_escape(s.graph_id) << " (" << xml_escape(s.scheduler) << "), makespan " << fixed(s.makespan_ms) << " ms</title>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed(left, 0) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(s.graph_id)
       << " / " << xml_escape(s.scheduler) << " / makespan " << fixed(s.makespan_ms) << " ms</text>\n";
    for (int l = 0; l < lanes; ++l) {
        os << "<text class=\"lane\" x=\"8\" y=\"" << fixed(top + l * lane_h + lane_h / 2 + 4, 1)
           << "\" font-family=\"sans-serif\" font-size=\"12\">stream " << l << "</text>\n";
    }
    for (const auto& iv : s.intervals) {
        const int lane = iv.assignment.corun && !iv.assignment.primary ? 1 : 0;
        const double x = left + iv.start_ms * scale;
        const double w = (iv.end_ms - iv.start_ms) * scale;
        const double y = top + lane * lane_h + 4.0;
        os << "<rect class=\"bar\" data-op=\"" << xml_escape(iv.op_id) << "\" data-lane=\"" << lane << "\" x=\"" << fixed(x)
           << "\" y=\"" << fixed(y, 1) << "\" width=\"" << fixed(w) << "\" height=\"" << fixed(lane_h - 8.0, 1)
           << "\" fill=\"" << color(iv) << "\" stroke=\"black\" stroke-width=\"0.5\"><title>" << xml_escape(iv.op_id)
           << (iv.algorithm ? " " + std::string(to_string(*iv.algorithm)) : std::string()) << " ["
           << fixed(iv.start_ms) << ", " << fixed(iv.end_ms) << "] ms</title></rect>\n";
        if (w > 40.0) {
            os << "<text x=\"" << fixed(x + 3.0) << "\" y=\"" << fixed(y + lane_h / 2, 1)
               << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"white\">" << xml_escape(iv.op_id) << "</text>\n";
        }
    }
    os << "<line class=\"axis\" x1=\"" << fixed(left, 0) << "\" y1=\"" << fixed(axis_y, 1) << "\" x2=\""
       << fixed(left + plot_w, 0) << "\" y2=\"" << fixed(axis_y, 1) << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= ticks; ++k) {
        const double tv = (s.makespan_ms > 0.0 ? s.makespan_ms : 0.0) * k / ticks;
        const double x = left + plot_w * k / ticks;
        os << "<line class=\"tick\" x1=\"" << fixed(x) << "\" y1=\"" << fixed(axis_y, 1) << "\" x2=\"" << fixed(x)
           << "\" y2=\"" << fixed(axis_y + 5.0, 1) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fixed(x) << "\" y=\"" << fixed(axis_y + 18.0, 1)
           << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << fixed(tv, 2) << "</text>\n";
    }
    os << "<text x=\"" << fixed(left + plot_w / 2, 0) << "\" y=\"" << fixed(axis_y + 34.0, 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">time (ms)</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace convsched
