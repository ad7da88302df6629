#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mttsp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

enum class ConeKind { free, nonneg, soc };

/// A run of consecutive variables sharing one cone. For `soc` the first
/// variable is the radial term: x0 >= ||x[1:]||.
struct ConeBlock {
    ConeKind kind = ConeKind::free;
    int size = 0;
};

/// min c'x + offset  s.t.  Ax = b,  x in K
/// where K is the product of `cones`, laid over the variables in order.
struct ConicProgram {
    Eigen::VectorXd objective;
    double objective_offset = 0.0;
    SparseMatrix equalities;
    Eigen::VectorXd rhs;
    std::vector<ConeBlock> cones;
    std::vector<std::string> variable_names;
    std::vector<std::string> constraint_names;

    int num_variables() const { return static_cast<int>(objective.size()); }
    int num_constraints() const { return static_cast<int>(rhs.size()); }
    /// Cone kind of every variable (expanded from `cones`).
    std::vector<ConeKind> variable_kinds() const;
    /// Throws std::invalid_argument on inconsistent dimensions or cone layout.
    void check() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, iteration_limit, time_limit };

const char* to_string(SolveStatus status);

struct Residuals {
    double primal = std::numeric_limits<double>::infinity();
    double dual = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
};

struct SolveResult {
    SolveStatus status = SolveStatus::iteration_limit;
    Eigen::VectorXd primal;
    /// Equality multipliers y of the dual  max b'y  s.t.  c - A'y = s,  s in K*.
    Eigen::VectorXd dual;
    /// Dual slack s (zero on free variables).
    Eigen::VectorXd dual_slack;
    double objective_value = std::numeric_limits<double>::quiet_NaN();
    Residuals residuals;
    int iterations = 0;
    double solve_time = 0.0;
};

struct SolverSettings {
    double tol = 1e-8;
    int max_iters = 200;
    double time_budget = std::numeric_limits<double>::infinity();
    /// Threshold on normalised Farkas residuals for infeasible/unbounded.
    double infeasibility_tol = 1e-8;
    /// Prints one line per iteration to stderr.
    bool verbose = false;
    /// Called with every finished solve.
    std::function<void(const ConicProgram&, const SolveResult&)> observer;
};

/// Primal-dual interior-point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra predictor-corrector steps.
/// Single-threaded and deterministic. Limits are reported through the status.
SolveResult solve(const ConicProgram& program, const SolverSettings& settings = {});

/// Residuals recomputed from the program data alone. Relative measures use
/// the same normalisation the solver stops on:
///   primal = max(||Ax-b||inf, cone violation of x) / (1 + ||b||inf)
///   dual   = max(||(c-A'y-s)||inf, cone violation of s) / (1 + ||c||inf)
///   gap    = |c'x - b'y| / (1 + |c'x| + |b'y|)
struct CertificateReport {
    bool applicable = false;
    double primal_abs = 0.0;
    double primal_cone_violation = 0.0;
    double dual_abs = 0.0;
    double dual_cone_violation = 0.0;
    double gap_abs = 0.0;
    Residuals relative;

    double worst() const;
};

CertificateReport check_certificate(const ConicProgram& program, const SolveResult& result);

/// Smallest eigenvalue of x in the Jordan algebra of the cone (negative
/// means outside). Free blocks contribute +inf.
double cone_margin(std::span<const ConeBlock> cones, const Eigen::VectorXd& x);

/// Plain-text dump: dimensions, cone layout, objective, then one line per
/// nonzero of A ("row col value") and the right-hand side, with names.
void dump(const ConicProgram& program, std::ostream& os);

struct LinearTerm {
    int column = 0;
    double coefficient = 0.0;
};

using LinearExpr = std::vector<LinearTerm>;

/// Incremental construction of a ConicProgram. Inequalities become
/// equalities with a fresh nonnegative slack.
class ProgramBuilder {
public:
    int add_free(std::string name);
    int add_nonneg(std::string name);
    /// Adds a second-order cone over `names.size()` fresh variables; returns
    /// the column of the radial term (the rest follow consecutively).
    int add_soc(std::span<const std::string> names);

    void add_cost(int column, double coefficient);
    void add_equality(const LinearExpr& expr, double rhs, std::string name);
    /// expr >= rhs; returns the slack column.
    int add_greater_equal(const LinearExpr& expr, double rhs, std::string name);
    /// expr <= rhs; returns the slack column.
    int add_less_equal(const LinearExpr& expr, double rhs, std::string name);

    int num_variables() const { return static_cast<int>(names_.size()); }
    int num_constraints() const { return static_cast<int>(rhs_.size()); }

    ConicProgram build() const;

private:
    int push_variable(std::string name, ConeKind kind, int block_size);

    std::vector<std::string> names_;
    std::vector<ConeBlock> cones_;
    std::vector<double> cost_;
    std::vector<Eigen::Triplet<double>> triplets_;
    std::vector<double> rhs_;
    std::vector<std::string> row_names_;
};

/// Appends the row expr <= rhs to an existing program, with a fresh
/// nonnegative slack as the last column. Returns the slack column.
int append_less_equal(ConicProgram& program, const LinearExpr& expr, double rhs, std::string name);

struct ColumnFixing {
    int column = 0;
    double value = 0.0;
};

/// A program with some columns replaced by constants, plus whatever the
/// substitution forces: emptied rows are dropped (or flagged inconsistent),
/// singleton rows on scalar variables fix that variable, and rows whose free
/// part is a same-sign sum of nonnegative variables with zero right-hand side
/// force them all to zero. Second-order cone blocks must be fixed whole.
struct ReducedProgram {
    ConicProgram program;
    bool infeasible = false;
    std::string reason;
    /// Column of the original program for every reduced column.
    std::vector<int> kept_columns;
    /// Original-space values; fixed entries are final, the rest are filled by expand().
    Eigen::VectorXd fixed_values;

    Eigen::VectorXd expand(const Eigen::VectorXd& reduced_primal) const;
};

ReducedProgram fix_columns(const ConicProgram& program, std::span<const ColumnFixing> fixings,
                           double feasibility_tol = 1e-9);

}  // namespace mttsp
