#include "mttsp/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mttsp {

Graph Graph::build(const Instance& instance)
{
    Graph g;
    const int n = static_cast<int>(instance.size());
    g.num_nodes_ = n + 2;
    g.in_.assign(g.num_nodes_, {});
    g.out_.assign(g.num_nodes_, {});
    g.edges_.reserve(static_cast<std::size_t>(n) * (n + 1));

    const auto add = [&](int tail, int head) {
        const int id = static_cast<int>(g.edges_.size());
        g.edges_.push_back({id, tail, head});
        g.out_[tail].push_back(id);
        g.in_[head].push_back(id);
    };
    // Tails in increasing order; within a tail, heads increase and s' = n+1 comes last.
    for (int j = 1; j <= n; ++j)
        add(kDepotStart, j);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j)
            if (i != j)
                add(i, j);
        add(i, n + 1);
    }
    return g;
}

int Graph::find(int tail, int head) const
{
    if (tail < 0 || tail >= num_nodes_)
        return -1;
    for (int id : out_[tail])
        if (edges_[id].head == head)
            return id;
    return -1;
}

bool SegmentSet::contains(const SpaceTimePoint& point, double tol) const
{
    const double t0 = start.t;
    const double t1 = end.t;
    if (point.t < t0 - tol || point.t > t1 + tol)
        return false;
    const double span = t1 - t0;
    const double s = span > 0.0 ? std::clamp((point.t - t0) / span, 0.0, 1.0) : 0.0;
    const double x = start.x + s * (end.x - start.x);
    const double y = start.y + s * (end.y - start.y);
    return std::hypot(point.x - x, point.y - y) <= tol;
}

SegmentSet node_set(const Instance& instance, int node)
{
    const Target motion = node_motion(instance, node);
    const Vec2 a = motion.window_start();
    const Vec2 b = motion.window_end();
    return {{a.x(), a.y(), motion.window.lo}, {b.x(), b.y(), motion.window.hi}};
}

}  // namespace mttsp
