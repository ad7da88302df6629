#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mttsp/instance.hpp"

namespace mttsp::testing {

inline Target stationary(int id, double x, double y, double lo, double hi)
{
    return Target{id, Vec2(x, y), Vec2::Zero(), {lo, hi}};
}

inline Instance single_target_instance(double x, double lo = 0.0, double hi = 150.0,
                                       double v_max = 4.0)
{
    Instance instance;
    instance.v_max = v_max;
    instance.targets = {stationary(1, x, 0.0, lo, hi)};
    return instance;
}

/// Shortest closed walk depot -> every point -> depot, by plain enumeration
/// of all orders over Euclidean distances.
inline double shortest_closed_walk(const Vec2& depot, const std::vector<Vec2>& points)
{
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double length = 0.0;
        Vec2 at = depot;
        for (int k : order) {
            length += (points[k] - at).norm();
            at = points[k];
        }
        length += (depot - at).norm();
        best = std::min(best, length);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

/// Earliest completion of a fixed order on a time grid of step `h`: keeps
/// every reachable grid time per stop and relaxes all pairs, so it makes no
/// assumption that arriving early is best. Returns +inf when unreachable.
inline double grid_completion(const Instance& instance, const std::vector<int>& order, double v_max,
                              double h)
{
    const int steps = static_cast<int>(std::floor(instance.horizon / h));
    std::vector<double> grid(steps + 1);
    for (int k = 0; k <= steps; ++k)
        grid[k] = k * h;

    // (position, time) of every reachable state at the previous stop.
    std::vector<std::pair<Vec2, double>> reach{{instance.depot, 0.0}};
    for (int node : order) {
        const Target& target = instance.targets[node - 1];
        std::vector<std::pair<Vec2, double>> next;
        for (double t : grid) {
            if (!target.window.contains(t))
                continue;
            const Vec2 p = target.position(t);
            const bool ok = std::any_of(reach.begin(), reach.end(), [&](const auto& state) {
                return state.second <= t && (p - state.first).norm() <= v_max * (t - state.second);
            });
            if (ok)
                next.emplace_back(p, t);
        }
        if (next.empty())
            return std::numeric_limits<double>::infinity();
        reach = std::move(next);
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [p, t] : reach)
        best = std::min(best, t + (instance.depot - p).norm() / v_max);
    return best;
}

inline bool near_rel(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace mttsp::testing
