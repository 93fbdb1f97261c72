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

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "convsched/error.hpp"

namespace convsched {

enum class OpKind { conv, other };

inline std::string_view to_string(OpKind k) { return k == OpKind::conv ? "conv" : "other"; }

/// One node of a computation graph. Convolutions draw runtime and workspace
/// from the profile menu named by `menu_ref`; other ops run for a fixed
/// `runtime_ms` with no workspace and are never co-located.
struct Op {
    std::string op_id;
    OpKind kind = OpKind::conv;
    std::uint64_t fixed_bytes = 0;
    std::string menu_ref;
    double runtime_ms = 0.0;
};

struct Edge {
    std::string src;
    std::string dst;
};

class NetworkGraph {
  public:
    NetworkGraph() = default;

    NetworkGraph(std::string id, std::vector<Op> ops, std::vector<Edge> edges)
        : id_(std::move(id)), ops_(std::move(ops)), edges_(std::move(edges)) {
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            auto& op = ops_[i];
            if (op.op_id.empty()) throw ValidationError("graph '" + id_ + "': node " + std::to_string(i) + " has empty op_id");
            if (!index_.emplace(op.op_id, i).second) {
                throw ValidationError("graph '" + id_ + "': duplicate op_id '" + op.op_id + "'");
            }
            if (op.kind == OpKind::conv && op.menu_ref.empty()) op.menu_ref = op.op_id;
            if (!(op.runtime_ms >= 0.0) || !std::isfinite(op.runtime_ms)) {
                throw ValidationError("graph '" + id_ + "': op '" + op.op_id + "' has invalid runtime_ms");
            }
        }
        preds_.resize(ops_.size());
        succs_.resize(ops_.size());
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (const auto& e : edges_) {
            auto s = index_.find(e.src);
            auto d = index_.find(e.dst);
            if (s == index_.end() || d == index_.end()) {
                throw ValidationError("graph '" + id_ + "': dangling edge " + e.src + " -> " + e.dst);
            }
            if (!seen.emplace(s->second, d->second).second) continue;
            succs_[s->second].push_back(d->second);
            preds_[d->second].push_back(s->second);
        }
        compute_order();
        compute_reachability();
    }

    const std::string& id() const { return id_; }
    const std::vector<Op>& ops() const { return ops_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t size() const { return ops_.size(); }

    bool contains(std::string_view op_id) const { return index_.count(std::string(op_id)) != 0; }

    std::size_t index_of(std::string_view op_id) const {
        auto it = index_.find(std::string(op_id));
        if (it == index_.end()) throw ValidationError("graph '" + id_ + "': unknown op_id '" + std::string(op_id) + "'");
        return it->second;
    }

    const Op& op(std::size_t i) const { return ops_.at(i); }
    const Op& op(std::string_view op_id) const { return ops_[index_of(op_id)]; }

    const std::vector<std::size_t>& preds(std::size_t i) const { return preds_.at(i); }
    const std::vector<std::size_t>& succs(std::size_t i) const { return succs_.at(i); }

    // Kahn order, lowest node index first among ready nodes.
    const std::vector<std::size_t>& topological_order() const { return order_; }

    // True iff a directed path of length >= 1 leads from i to j.
    bool reaches(std::size_t i, std::size_t j) const { return reach_.at(i).at(j); }

  private:
    void compute_order() {
        std::vector<std::size_t> indeg(ops_.size());
        std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            indeg[i] = preds_[i].size();
            if (indeg[i] == 0) ready.push(i);
        }
        while (!ready.empty()) {
            const auto i = ready.top();
            ready.pop();
            order_.push_back(i);
            for (auto s : succs_[i]) {
                if (--indeg[s] == 0) ready.push(s);
            }
        }
        if (order_.size() != ops_.size()) {
            std::string members;
            for (std::size_t i = 0; i < ops_.size(); ++i) {
                if (indeg[i] > 0) members += (members.empty() ? "" : ", ") + ops_[i].op_id;
            }
            throw ValidationError("graph '" + id_ + "': cycle detected among {" + members + "}");
        }
    }

    void compute_reachability() {
        const auto n = ops_.size();
        reach_.assign(n, std::vector<bool>(n, false));
        for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
            auto& row = reach_[*it];
            for (auto s : succs_[*it]) {
                row[s] = true;
                const auto& sub = reach_[s];
                for (std::size_t k = 0; k < n; ++k) {
                    if (sub[k]) row[k] = true;
                }
            }
        }
    }

    std::string id_;
    std::vector<Op> ops_;
    std::vector<Edge> edges_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> preds_;
    std::vector<std::vector<std::size_t>> succs_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<bool>> reach_;
};

inline bool independent(const NetworkGraph& g, std::string_view a, std::string_view b) {
    const auto i = g.index_of(a);
    const auto j = g.index_of(b);
    if (i == j) return false;
    return !g.reaches(i, j) && !g.reaches(j, i);
}

/// Ops not yet completed whose predecessors have all completed.
inline std::set<std::string> ready_set(const NetworkGraph& g, const std::set<std::string>& completed) {
    std::vector<bool> done(g.size(), false);
    for (const auto& id : completed) done[g.index_of(id)] = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!done[i]) continue;
        for (auto p : g.preds(i)) {
            if (!done[p]) {
                throw ValidationError("ready_set: completed set is not downward-closed ('" + g.op(i).op_id +
                                      "' completed before predecessor '" + g.op(p).op_id + "')");
            }
        }
    }
    std::set<std::string> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (done[i]) continue;
        bool ok = true;
        for (auto p : g.preds(i)) ok = ok && done[p];
        if (ok) out.insert(g.op(i).op_id);
    }
    return out;
}

/// True for a single chain: every node has at most one predecessor and one
/// successor, and the graph is connected.
inline bool is_linear(const NetworkGraph& g) {
    std::size_t links = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.preds(i).size() > 1 || g.succs(i).size() > 1) return false;
        links += g.preds(i).size();
    }
    return links + 1 == g.size();
}

/// Parses `{"id": .., "nodes": [..], "edges": [{"src": .., "dst": ..}]}`.
/// Node fields: op_id, kind ("conv" | "other"), fixed_bytes, menu
/// (conv only, defaults to op_id), runtime_ms (other only).
inline NetworkGraph load_graph(std::istream& in, const std::string& source = "graph") {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(source + ": malformed JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("nodes") || !j.at("nodes").is_array() || !j.contains("edges") ||
        !j.at("edges").is_array()) {
        throw ValidationError(source + ": expected an object with 'nodes' and 'edges' arrays");
    }
    std::vector<Op> ops;
    std::size_t idx = 0;
    for (const auto& n : j.at("nodes")) {
        const std::string where = source + ": nodes[" + std::to_string(idx++) + "]";
        if (!n.is_object() || !n.contains("op_id") || !n.at("op_id").is_string()) {
            throw ValidationError(where + ": missing string field 'op_id'");
        }
        Op op;
        op.op_id = n.at("op_id").get<std::string>();
        const std::string kind = n.value("kind", std::string("conv"));
        if (kind == "conv") op.kind = OpKind::conv;
        else if (kind == "other") op.kind = OpKind::other;
        else throw ValidationError(where + ": field 'kind' must be 'conv' or 'other'");
        if (n.contains("fixed_bytes")) {
            const auto& fb = n.at("fixed_bytes");
            if (!fb.is_number_unsigned() && !(fb.is_number_integer() && fb.get<std::int64_t>() >= 0)) {
                throw ValidationError(where + ": field 'fixed_bytes' must be a non-negative integer");
            }
            op.fixed_bytes = fb.get<std::uint64_t>();
        }
        if (op.kind == OpKind::conv) {
            op.menu_ref = n.value("menu", op.op_id);
        } else {
            if (!n.contains("runtime_ms") || !n.at("runtime_ms").is_number()) {
                throw ValidationError(where + ": 'other' op needs numeric 'runtime_ms'");
            }
            op.runtime_ms = n.at("runtime_ms").get<double>();
            if (!(op.runtime_ms >= 0.0)) throw ValidationError(where + ": field 'runtime_ms' must be >= 0");
        }
        ops.push_back(std::move(op));
    }
    std::vector<Edge> edges;
    idx = 0;
    for (const auto& e : j.at("edges")) {
        const std::string where = source + ": edges[" + std::to_string(idx++) + "]";
        if (e.is_object() && e.contains("src") && e.contains("dst") && e.at("src").is_string() &&
            e.at("dst").is_string()) {
            edges.push_back({e.at("src").get<std::string>(), e.at("dst").get<std::string>()});
        } else {
            throw ValidationError(where + ": expected {\"src\": .., \"dst\": ..}");
        }
    }
    return NetworkGraph(j.value("id", std::string("graph")), std::move(ops), std::move(edges));
}

}  // namespace convsched
