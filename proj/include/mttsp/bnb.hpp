#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "mttsp/conic.hpp"
#include "mttsp/formulations.hpp"
#include "mttsp/oracle.hpp"

namespace mttsp {

enum class MipStatus { optimal, feasible, infeasible, no_incumbent };

const char* to_string(MipStatus status);

struct MipSettings {
    double time_limit = std::numeric_limits<double>::infinity();
    double abs_tol = 1e-9;
    double rel_tol = 1e-6;
    SolverSettings conic;
    /// CSV progress lines (node,z_P,z_D,gap,elapsed) when set.
    std::ostream* log = nullptr;
};

struct MipResult {
    MipStatus status = MipStatus::no_incumbent;
    std::optional<Tour> incumbent;
    double z_P = std::numeric_limits<double>::infinity();
    double z_D = -std::numeric_limits<double>::infinity();
    double gap_percent = std::numeric_limits<double>::infinity();
    long long nodes_explored = 0;
    double runtime = 0.0;
    double root_bound = -std::numeric_limits<double>::infinity();
    int cuts_added = 0;
    /// Formulation point with every binary fixed to the incumbent's edges,
    /// and its objective. Empty when there is no incumbent.
    Eigen::VectorXd primal;
    double primal_objective = std::numeric_limits<double>::quiet_NaN();
};

/// |z_P - z_D| / |z_P| * 100 (0 when both are zero, +inf without an incumbent).
double gap_percent(double z_P, double z_D);

struct BnbNode {
    std::vector<int> fixed_zero;
    std::vector<int> fixed_one;
    double parent_bound = -std::numeric_limits<double>::infinity();
    int depth = 0;
};

MipResult solve_mip(const MixedBinaryConicProgram& program, const MipSettings& settings = {});

/// Edge whose y is closest to 0.5; ties go to the smaller edge id. Throws
/// std::logic_error when every y is within `tol` of 0 or 1.
int branch_select(const Eigen::VectorXd& primal, const VariableLayout& layout,
                  double tol = kIntegralityTol);

/// Follows the largest flow out of s through unvisited targets to s', then
/// optimises visit times for that order. Empty if the order is infeasible.
std::optional<Tour> incumbent_heuristic(const Instance& instance, const Graph& graph,
                                        const Eigen::VectorXd& primal,
                                        const VariableLayout& layout,
                                        const SolverSettings& settings = {});

/// The flow-following order alone (target nodes).
std::vector<int> follow_flow(const Graph& graph, const Eigen::VectorXd& primal,
                             const VariableLayout& layout);

}  // namespace mttsp
