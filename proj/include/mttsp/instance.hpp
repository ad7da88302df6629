#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mttsp {

using Vec2 = Eigen::Vector2d;

/// Raised when an instance violates its structural invariants.
class InstanceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when window assignment exhausts its sequence attempts.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TimeWindow {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    bool contains(double t, double tol = 0.0) const { return t >= lo - tol && t <= hi + tol; }
    bool contains(const TimeWindow& other) const { return lo <= other.lo && other.hi <= hi; }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// A target moving on a straight line: position(t) = ref_pos + t * velocity.
/// `ref_pos` is the position at absolute time 0, not at the window start.
struct Target {
    int id = 0;
    Vec2 ref_pos = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    TimeWindow window;

    double speed() const { return velocity.norm(); }
    Vec2 position(double t) const { return ref_pos + t * velocity; }
    /// Positions at the window bounds.
    Vec2 window_start() const { return position(window.lo); }
    Vec2 window_end() const { return position(window.hi); }

    friend bool operator==(const Target& a, const Target& b)
    {
        return a.id == b.id && a.ref_pos == b.ref_pos && a.velocity == b.velocity &&
               a.window == b.window;
    }
};

struct SpaceTimePoint {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const SpaceTimePoint&, const SpaceTimePoint&) = default;
};

/// An MT-TSP instance. The depot is stationary; its start copy is pinned to
/// t = 0 and its return copy may be reached any time in [0, horizon].
struct Instance {
    double side = 100.0;
    double horizon = 150.0;
    double v_max = 4.0;
    Vec2 depot = Vec2::Zero();
    std::vector<Target> targets;

    std::size_t size() const { return targets.size(); }
    double diagonal() const;
    /// True if `p` lies in the axis-aligned square of side `side` centred on the depot.
    bool in_square(const Vec2& p, double tol = 1e-9) const;

    friend bool operator==(const Instance& a, const Instance& b)
    {
        return a.side == b.side && a.horizon == b.horizon && a.v_max == b.v_max &&
               a.depot == b.depot && a.targets == b.targets;
    }
};

/// Node numbering shared by the graph, both formulations and tours: 0 is the
/// depot start s, 1..n are the targets in list order, n + 1 is the depot copy s'.
inline constexpr int kDepotStart = 0;
inline int depot_return(const Instance& instance) { return static_cast<int>(instance.size()) + 1; }
inline int node_count(const Instance& instance) { return static_cast<int>(instance.size()) + 2; }

/// Motion of any node as a Target: the depot copies are stationary with
/// windows [0, 0] (s) and [0, horizon] (s').
Target node_motion(const Instance& instance, int node);

Vec2 target_position(const Target& target, double t);

/// Earliest time t' >= agent_time inside the target's window at which an
/// agent leaving `agent_pos` at `agent_time` with speed cap `v_max` can meet
/// the target. Empty if no such time exists in the window.
std::optional<double> earliest_intercept(const Vec2& agent_pos, double agent_time,
                                         const Target& target, double v_max);

struct GeneratorParams {
    double side = 100.0;
    double horizon = 150.0;
    double speed_lo = 0.5;
    double speed_hi = 1.0;
    double v_max = 4.0;
};

/// Random instance with depot at the origin and full-horizon windows. Every
/// trajectory stays inside the square for all t in [0, horizon].
Instance generate(std::size_t n, std::uint64_t seed, const GeneratorParams& params = {});

struct WindowAssignment {
    /// One instance per requested duration, in the same order.
    std::vector<Instance> instances;
    /// Target nodes (1..n, i.e. position in `targets` plus one) in visit order.
    std::vector<int> sequence;
    /// Visit time of each target in `sequence` order.
    std::vector<double> visit_times;
    double completion_time = 0.0;
    int attempts = 0;
};

inline constexpr int kDefaultWindowAttempts = 1000;

/// Samples visit sequences until the quickest tour at `v_min_agent` returns
/// to the depot by the horizon, then places nested windows of each duration
/// around the visit times. Durations must be ascending. The returned
/// instances keep the input's v_max.
WindowAssignment assign_windows(const Instance& instance, std::span<const double> durations,
                                double v_min_agent, std::uint64_t seed,
                                int max_attempts = kDefaultWindowAttempts);

/// Window of length `duration` centred on `visit_time`, shifted to fit in
/// [0, horizon]. Windows built this way are nested in the duration.
TimeWindow window_around(double visit_time, double duration, double horizon);

/// Throws InstanceError on the first violated invariant.
void validate(const Instance& instance);

std::string serialize(const Instance& instance);
/// Throws ParseError (line/field of the first violation).
Instance parse_instance(std::string_view text);

Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);

}  // namespace mttsp
