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
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "convsched/algorithm.hpp"
#include "convsched/device_model.hpp"
#include "convsched/error.hpp"
#include "convsched/profile.hpp"

namespace convsched {

enum class PercentUnit { fraction, percent };

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Comma split with optional double-quoted fields ("" escapes a quote).
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(was_quoted ? cur : trim(cur));
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string csv_quote(std::string_view s) {
    if (s.find_first_of(",\"") == std::string_view::npos && trim(s) == s) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

inline constexpr std::array<std::string_view, 12> kProfileColumns{
    "op_id",      "algorithm", "kernel_name",     "reg_frac",  "shm_frac",        "thread_frac",
    "block_frac", "alu_util",  "mem_stall_frac", "dram_util", "workspace_bytes", "solo_runtime_ms",
};

// Throws ValidationError naming `where` and the offending field.
inline void validate_profile(const KernelProfile& p, const std::string& where) {
    auto check_frac = [&](std::string_view field, double v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError(where + ": field '" + std::string(field) + "' = " +
                                  detail::format_double(v) + " outside [0,1]");
        }
    };
    if (p.op_id.empty()) throw ValidationError(where + ": field 'op_id' is empty");
    check_frac("reg_frac", p.reg_frac);
    check_frac("shm_frac", p.shm_frac);
    check_frac("thread_frac", p.thread_frac);
    check_frac("block_frac", p.block_frac);
    check_frac("alu_util", p.alu_util);
    check_frac("mem_stall_frac", p.mem_stall_frac);
    check_frac("dram_util", p.dram_util);
    if (!(p.solo_runtime_ms > 0.0) || !std::isfinite(p.solo_runtime_ms)) {
        throw ValidationError(where + ": field 'solo_runtime_ms' = " +
                              detail::format_double(p.solo_runtime_ms) + " must be > 0");
    }
}

/// Projection of a database onto one op: the interchangeable algorithms
/// and what each costs in runtime and workspace.
struct AlgorithmMenu {
    struct Entry {
        Algorithm algorithm;
        std::uint64_t workspace_bytes;
        double solo_runtime_ms;
    };

    std::string op_id;
    std::vector<Entry> entries;

    const Entry* find(Algorithm a) const {
        for (const auto& e : entries) {
            if (e.algorithm == a) return &e;
        }
        return nullptr;
    }
};

/// Immutable, validated collection of kernel profiles.
class ProfileDb {
  public:
    ProfileDb() = default;

    explicit ProfileDb(std::vector<KernelProfile> profiles) : profiles_(std::move(profiles)) {
        for (std::size_t i = 0; i < profiles_.size(); ++i) {
            const auto& p = profiles_[i];
            validate_profile(p, "profile " + std::to_string(i + 1));
            auto key = std::make_pair(p.op_id, p.algorithm);
            if (!index_.emplace(key, i).second) {
                throw ValidationError("profile " + std::to_string(i + 1) + ": duplicate (op_id, algorithm) = (" +
                                      p.op_id + ", " + std::string(to_string(p.algorithm)) + ")");
            }
        }
    }

    const std::vector<KernelProfile>& profiles() const { return profiles_; }
    bool empty() const { return profiles_.empty(); }

    const KernelProfile* find(std::string_view op_id, Algorithm a) const {
        auto it = index_.find(std::make_pair(std::string(op_id), a));
        return it == index_.end() ? nullptr : &profiles_[it->second];
    }

    // Profiles of one op, ordered by algorithm name.
    std::vector<const KernelProfile*> for_op(std::string_view op_id) const {
        std::vector<const KernelProfile*> out;
        for (const auto& p : profiles_) {
            if (p.op_id == op_id) out.push_back(&p);
        }
        std::sort(out.begin(), out.end(), [](const KernelProfile* x, const KernelProfile* y) {
            return algorithm_name_less(x->algorithm, y->algorithm);
        });
        return out;
    }

    AlgorithmMenu menu(std::string_view op_id) const {
        AlgorithmMenu m;
        m.op_id = std::string(op_id);
        for (const auto* p : for_op(op_id)) {
            m.entries.push_back({p->algorithm, p->workspace_bytes, p->solo_runtime_ms});
        }
        if (m.entries.empty()) throw ValidationError("no profiles for op '" + std::string(op_id) + "'");
        return m;
    }

  private:
    std::vector<KernelProfile> profiles_;
    std::map<std::pair<std::string, Algorithm>, std::size_t> index_;
};

/// Reads a comma-separated profile table.
///
/// An optional leading `# units=percent` (or `# units=fraction`) line sets
/// how fraction columns are written; the default is 0-1 fractions. Other
/// lines starting with `#` and blank lines are ignored. The `dram_util`
/// column may be omitted or left empty per row, in which case it takes the
/// row's `mem_stall_frac`.
inline std::vector<KernelProfile> load_profiles(std::istream& in, const std::string& source = "profiles",
                                                PercentUnit unit = PercentUnit::fraction) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::vector<std::string>> header;
    std::map<std::string, std::size_t> col;
    std::vector<KernelProfile> out;
    std::set<std::pair<std::string, Algorithm>> seen;

    auto at = [&](std::size_t n) { return source + " row " + std::to_string(n); };

    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            if (!header) {
                std::string directive = t.substr(1);
                directive.erase(std::remove_if(directive.begin(), directive.end(),
                                               [](unsigned char c) { return std::isspace(c); }),
                                directive.end());
                if (directive == "units=percent") unit = PercentUnit::percent;
                else if (directive == "units=fraction") unit = PercentUnit::fraction;
            }
            continue;
        }
        auto fields = detail::split_csv_line(t);
        if (!header) {
            header = fields;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (!col.emplace(fields[i], i).second) {
                    throw ValidationError(source + ": duplicate column '" + fields[i] + "'");
                }
            }
            for (auto name : kProfileColumns) {
                if (name == "dram_util") continue;
                if (!col.count(std::string(name))) {
                    throw ValidationError(source + ": missing required column '" + std::string(name) + "'");
                }
            }
            continue;
        }
        if (fields.size() != header->size()) {
            throw ValidationError(at(line_no) + ": expected " + std::to_string(header->size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        auto cell = [&](std::string_view name) -> const std::string& { return fields[col.at(std::string(name))]; };
        auto number = [&](std::string_view name) {
            auto v = detail::parse_double(cell(name));
            if (!v) {
                throw ValidationError(at(line_no) + ": field '" + std::string(name) + "' = '" + cell(name) +
                                      "' is not a number");
            }
            return *v;
        };
        const double scale = unit == PercentUnit::percent ? 0.01 : 1.0;
        auto frac = [&](std::string_view name) { return number(name) * scale; };

        KernelProfile p;
        p.op_id = cell("op_id");
        auto alg = parse_algorithm(cell("algorithm"));
        if (!alg) {
            throw ValidationError(at(line_no) + ": field 'algorithm' = '" + cell("algorithm") +
                                  "' is not a known algorithm");
        }
        p.algorithm = *alg;
        p.kernel_name = cell("kernel_name");
        p.reg_frac = frac("reg_frac");
        p.shm_frac = frac("shm_frac");
        p.thread_frac = frac("thread_frac");
        p.block_frac = frac("block_frac");
        p.alu_util = frac("alu_util");
        p.mem_stall_frac = frac("mem_stall_frac");
        if (col.count("dram_util") && !cell("dram_util").empty()) {
            p.dram_util = frac("dram_util");
        } else {
            p.dram_util = p.mem_stall_frac;
        }
        auto ws = detail::parse_u64(cell("workspace_bytes"));
        if (!ws) {
            throw ValidationError(at(line_no) + ": field 'workspace_bytes' = '" + cell("workspace_bytes") +
                                  "' is not a non-negative integer byte count");
        }
        p.workspace_bytes = *ws;
        p.solo_runtime_ms = number("solo_runtime_ms");
        validate_profile(p, at(line_no));
        if (!seen.emplace(p.op_id, p.algorithm).second) {
            throw ValidationError(at(line_no) + ": duplicate (op_id, algorithm) = (" + p.op_id + ", " +
                                  std::string(to_string(p.algorithm)) + ")");
        }
        out.push_back(std::move(p));
    }
    if (!header) throw ValidationError(source + ": missing header row");
    return out;
}

// Writes fractions in 0-1 units with every column present.
inline void serialize_profiles(std::ostream& out, const std::vector<KernelProfile>& profiles) {
    for (std::size_t i = 0; i < kProfileColumns.size(); ++i) {
        out << (i ? "," : "") << kProfileColumns[i];
    }
    out << '\n';
    using detail::format_double;
    for (const auto& p : profiles) {
        out << detail::csv_quote(p.op_id) << ',' << to_string(p.algorithm) << ',' << detail::csv_quote(p.kernel_name)
            << ',' << format_double(p.reg_frac) << ',' << format_double(p.shm_frac) << ','
            << format_double(p.thread_frac) << ',' << format_double(p.block_frac) << ','
            << format_double(p.alu_util) << ',' << format_double(p.mem_stall_frac) << ','
            << format_double(p.dram_util) << ',' << p.workspace_bytes << ',' << format_double(p.solo_runtime_ms)
            << '\n';
    }
}

/// Reads `{"num_sms": .., "max_blocks_per_sm": .., "global_mem_bytes": ..}`
/// with an optional "id".
inline DeviceSpec load_device(std::istream& in, const std::string& source = "device") {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(source + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError(source + ": expected a JSON object");

    auto integral = [&](const char* key) -> std::int64_t {
        if (!j.contains(key)) throw ValidationError(source + ": missing field '" + key + "'");
        const auto& v = j.at(key);
        if (!v.is_number()) throw ValidationError(source + ": field '" + key + "' must be a number");
        const double d = v.get<double>();
        if (v.is_number_float() && d != std::floor(d)) {
            throw ValidationError(source + ": field '" + key + "' must be an integer");
        }
        if (!(d > 0)) throw ValidationError(source + ": field '" + key + "' must be positive");
        return v.is_number_integer() ? v.get<std::int64_t>() : static_cast<std::int64_t>(d);
    };

    DeviceSpec d;
    d.num_sms = static_cast<int>(integral("num_sms"));
    d.max_blocks_per_sm = static_cast<int>(integral("max_blocks_per_sm"));
    d.global_mem_bytes = static_cast<std::uint64_t>(integral("global_mem_bytes"));
    if (j.contains("id") && j.at("id").is_string()) d.id = j.at("id").get<std::string>();
    d.validate();
    return d;
}

enum class Side { first, second, tie };

inline std::string_view to_string(Side s) {
    switch (s) {
        case Side::first: return "first";
        case Side::second: return "second";
        case Side::tie: return "tie";
    }
    return "tie";
}

/// Pairwise algorithm tradeoff. Magnitudes are unsigned; `faster` and
/// `larger_workspace` say which side each delta favours. The runtime delta
/// is relative to the slower entry, the workspace delta to the larger one.
struct AlgorithmComparison {
    std::string op_id;
    Algorithm a = Algorithm::GEMM;
    Algorithm b = Algorithm::GEMM;
    double runtime_a_ms = 0.0;
    double runtime_b_ms = 0.0;
    std::uint64_t workspace_a_bytes = 0;
    std::uint64_t workspace_b_bytes = 0;

    Side faster = Side::tie;
    double runtime_delta_frac = 0.0;
    Side larger_workspace = Side::tie;
    std::uint64_t workspace_delta_bytes = 0;
    double workspace_delta_frac = 0.0;
};

inline AlgorithmComparison compare_algorithms(const AlgorithmMenu& menu, Algorithm a, Algorithm b) {
    const auto* ea = menu.find(a);
    const auto* eb = menu.find(b);
    for (auto [entry, alg] : {std::pair{ea, a}, std::pair{eb, b}}) {
        if (!entry) {
            throw ValidationError("algorithm " + std::string(to_string(alg)) + " not in menu of op '" +
                                  menu.op_id + "'");
        }
    }
    AlgorithmComparison c;
    c.op_id = menu.op_id;
    c.a = a;
    c.b = b;
    c.runtime_a_ms = ea->solo_runtime_ms;
    c.runtime_b_ms = eb->solo_runtime_ms;
    c.workspace_a_bytes = ea->workspace_bytes;
    c.workspace_b_bytes = eb->workspace_bytes;

    const double ta = ea->solo_runtime_ms;
    const double tb = eb->solo_runtime_ms;
    if (ta < tb) {
        c.faster = Side::first;
        c.runtime_delta_frac = (tb - ta) / tb;
    } else if (tb < ta) {
        c.faster = Side::second;
        c.runtime_delta_frac = (ta - tb) / ta;
    }

    const auto wa = ea->workspace_bytes;
    const auto wb = eb->workspace_bytes;
    if (wa > wb) {
        c.larger_workspace = Side::first;
        c.workspace_delta_bytes = wa - wb;
        c.workspace_delta_frac = static_cast<double>(wa - wb) / static_cast<double>(wa);
    } else if (wb > wa) {
        c.larger_workspace = Side::second;
        c.workspace_delta_bytes = wb - wa;
        c.workspace_delta_frac = static_cast<double>(wb - wa) / static_cast<double>(wb);
    }
    return c;
}

}  // namespace convsched
