#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mttsp/conic.hpp"
#include "mttsp/instance.hpp"

namespace mttsp {

/// An agent tour: node sequence starting at s (0) and ending at s' (n + 1),
/// with the visit time and position of each entry.
struct Tour {
    std::vector<int> sequence;
    std::vector<double> times;
    std::vector<Vec2> positions;
    double cost = 0.0;

    /// Sum of Euclidean leg lengths over `positions`.
    double path_length() const;
    /// Target nodes only, in visit order.
    std::vector<int> targets() const;
};

struct QuickestTour {
    /// Visit time of each target, in sequence order.
    std::vector<double> visit_times;
    /// Arrival time back at the depot. Not clipped to the horizon.
    double completion_time = 0.0;
};

/// Greedy earliest arrival through `sequence` (target nodes 1..n, or a full
/// sequence with depots at both ends) at speed `v_max`, respecting target
/// windows. Empty when some target cannot be intercepted inside its window.
std::optional<QuickestTour> quickest_tour(const Instance& instance, std::span<const int> sequence,
                                          double v_max);

/// Shortest tour visiting the targets in the given order. Empty if no time
/// assignment is feasible.
std::optional<Tour> fixed_sequence_optimum(const Instance& instance,
                                           std::span<const int> sequence,
                                           const SolverSettings& settings = {});

inline constexpr std::size_t kBruteForceMaxTargets = 10;

struct BruteForceResult {
    std::optional<Tour> tour;
    long long sequences_enumerated = 0;
    long long sequences_solved = 0;
};

/// Minimum of fixed_sequence_optimum over every visit order; among equal
/// costs the lexicographically smallest order wins. Throws
/// std::invalid_argument for more than kBruteForceMaxTargets targets.
BruteForceResult brute_force(const Instance& instance, const SolverSettings& settings = {});

enum class ViolationKind { structure, start_time, window, trajectory, speed, cost };

const char* to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind = ViolationKind::structure;
    /// Position in the tour sequence (-1 if not tied to one).
    int index = -1;
    double magnitude = 0.0;
    std::string message;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    int count(ViolationKind kind) const;
};

inline constexpr double kFeasibilityTol = 1e-6;

FeasibilityReport check_feasible(const Instance& instance, const Tour& tour,
                                 double tol = kFeasibilityTol);

std::string serialize(const Tour& tour);
Tour parse_tour(std::string_view text);
Tour load_tour(const std::string& path);
void save_tour(const Tour& tour, const std::string& path);

}  // namespace mttsp
