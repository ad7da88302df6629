#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mttsp/conic.hpp"
#include "mttsp/graph.hpp"
#include "mttsp/instance.hpp"
#include "mttsp/oracle.hpp"

namespace mttsp {

enum class Formulation { bigm, gcs };

const char* to_string(Formulation formulation);
/// Accepts "bigm" and "gcs".
Formulation parse_formulation(const std::string& name);

/// Node columns (big-M only): visit time and position.
struct NodeColumns {
    int t = -1;
    int px = -1;
    int py = -1;
};

/// Edge columns. `length` is l~ in big-M and l in GCS; `lbar` exists only in
/// big-M, z and z' only in GCS. Unused slots hold -1.
struct EdgeColumns {
    int y = -1;
    int length = -1;
    int lx = -1;
    int ly = -1;
    int lbar = -1;
    int zx = -1, zy = -1, zt = -1;
    int zpx = -1, zpy = -1, zpt = -1;
};

struct VariableLayout {
    Formulation formulation = Formulation::gcs;
    std::vector<NodeColumns> nodes;
    std::vector<EdgeColumns> edges;
    /// Symbol of every column; slacks are named "slack[<row>]".
    std::vector<std::string> symbols;

    /// Symbol slots (name, column) in a fixed order.
    std::vector<std::pair<std::string, int>> slots() const;
    /// Throws std::logic_error unless every slot holds a distinct column of
    /// a `num_columns`-column program and every other column is a slack.
    void audit(int num_columns) const;
};

struct MixedBinaryConicProgram {
    ConicProgram base;
    /// Binary columns, one per edge in edge-id order.
    std::vector<int> binaries;
    VariableLayout layout;
    Instance instance;
    Graph graph;
    /// For each binary, columns that must vanish when it is 0 (empty for big-M).
    std::vector<std::vector<int>> vanishing;
};

MixedBinaryConicProgram build_bigm(const Instance& instance, const Graph& graph);
MixedBinaryConicProgram build_gcs(const Instance& instance, const Graph& graph);
MixedBinaryConicProgram build(Formulation formulation, const Instance& instance);

/// The continuous relaxation. Binaries already carry y <= 1 rows and
/// nonnegativity in the base program, so this is the base program itself.
ConicProgram relax(const MixedBinaryConicProgram& program);

inline constexpr double kIntegralityTol = 1e-6;

/// Raised when the chosen edges do not form one s -> s' path through every target.
class TourStructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Edge ids with y_e rounded to 1, as a node sequence from s to s'. Throws
/// TourStructureError for fractional values or a support that is not a
/// single Hamiltonian path.
std::vector<int> extract_sequence(const Graph& graph, const VariableLayout& layout,
                                  const Eigen::VectorXd& primal,
                                  double tol = kIntegralityTol);

/// Tour read off a binary-feasible primal. GCS takes (p_i, t_i) from the
/// sums of z' over incoming edges (z over outgoing edges for s); big-M reads
/// the node columns. The cost is the Euclidean length of the recovered path.
Tour recover_tour(const Instance& instance, const Graph& graph, const VariableLayout& layout,
                  const Eigen::VectorXd& primal, double tol = kIntegralityTol);

/// Pointwise check of the biconvex restatement at a candidate (y, p, t):
/// degree and conservation rows, windows, position definitions, and per edge
/// z = y (p_i, t_i), z' = y (p_j, t_j) with the speed and cone rows for the
/// induced lengths. Returns the names of violated rows.
std::vector<std::string> check_biconvex(const Instance& instance, const Graph& graph,
                                        const std::vector<double>& y,
                                        const std::vector<Vec2>& p,
                                        const std::vector<double>& t, double tol = 1e-6);

/// The y/p/t point of a tour, for check_biconvex.
struct BiconvexPoint {
    std::vector<double> y;
    std::vector<Vec2> p;
    std::vector<double> t;
};
BiconvexPoint biconvex_point(const Instance& instance, const Graph& graph, const Tour& tour);

/// Text dump with symbol names on rows and columns.
void dump(const MixedBinaryConicProgram& program, std::ostream& os);

}  // namespace mttsp
