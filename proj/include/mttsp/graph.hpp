#pragma once

#include <vector>

#include "mttsp/instance.hpp"

namespace mttsp {

struct Edge {
    int id = 0;
    int tail = 0;
    int head = 0;
};

/// Directed graph over nodes 0 (s), 1..n (targets), n+1 (s'): s to every
/// target, every ordered pair of distinct targets, every target to s'.
/// Edges are sorted by (tail, head) and numbered densely in that order.
class Graph {
public:
    static Graph build(const Instance& instance);

    int num_nodes() const { return num_nodes_; }
    int num_targets() const { return num_nodes_ - 2; }
    int source() const { return kDepotStart; }
    int sink() const { return num_nodes_ - 1; }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int id) const { return edges_[id]; }
    const std::vector<int>& in_edges(int node) const { return in_[node]; }
    const std::vector<int>& out_edges(int node) const { return out_[node]; }
    /// Edge id of tail -> head, or -1.
    int find(int tail, int head) const;

private:
    int num_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> in_, out_;
};

/// The space-time segment X_i swept by a node over its window.
struct SegmentSet {
    SpaceTimePoint start;
    SpaceTimePoint end;

    bool degenerate() const { return start == end; }
    /// Whether (p, t) lies on the segment within `tol`.
    bool contains(const SpaceTimePoint& point, double tol) const;
};

SegmentSet node_set(const Instance& instance, int node);

}  // namespace mttsp
