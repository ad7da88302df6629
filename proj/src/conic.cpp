#include "mttsp/conic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "mttsp/text_format.hpp"

namespace mttsp {

const char* to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::time_limit: return "time_limit";
    }
    return "unknown";
}

std::vector<ConeKind> ConicProgram::variable_kinds() const
{
    std::vector<ConeKind> kinds;
    kinds.reserve(num_variables());
    for (const ConeBlock& block : cones)
        kinds.insert(kinds.end(), block.size, block.kind);
    return kinds;
}

void ConicProgram::check() const
{
    const int n = num_variables();
    const int m = num_constraints();
    if (equalities.rows() != m || equalities.cols() != n)
        throw std::invalid_argument("conic program: A is " + std::to_string(equalities.rows()) +
                                    "x" + std::to_string(equalities.cols()) + ", expected " +
                                    std::to_string(m) + "x" + std::to_string(n));
    int covered = 0;
    for (const ConeBlock& block : cones) {
        if (block.size <= 0)
            throw std::invalid_argument("conic program: empty cone block");
        if (block.kind == ConeKind::soc && block.size < 2)
            throw std::invalid_argument("conic program: second-order cone of size < 2");
        covered += block.size;
    }
    if (covered != n)
        throw std::invalid_argument("conic program: cone layout covers " + std::to_string(covered) +
                                    " of " + std::to_string(n) + " variables");
    if (!variable_names.empty() && static_cast<int>(variable_names.size()) != n)
        throw std::invalid_argument("conic program: variable name count mismatch");
    if (!constraint_names.empty() && static_cast<int>(constraint_names.size()) != m)
        throw std::invalid_argument("conic program: constraint name count mismatch");
}

double cone_margin(std::span<const ConeBlock> cones, const Eigen::VectorXd& x)
{
    double margin = std::numeric_limits<double>::infinity();
    Eigen::Index offset = 0;
    for (const ConeBlock& block : cones) {
        switch (block.kind) {
        case ConeKind::free: break;
        case ConeKind::nonneg:
            margin = std::min(margin, x.segment(offset, block.size).minCoeff());
            break;
        case ConeKind::soc:
            margin = std::min(margin,
                              x[offset] - x.segment(offset + 1, block.size - 1).norm());
            break;
        }
        offset += block.size;
    }
    return margin;
}

double CertificateReport::worst() const
{
    return std::max({relative.primal, relative.dual, relative.gap});
}

CertificateReport check_certificate(const ConicProgram& program, const SolveResult& result)
{
    CertificateReport report;
    if (result.status != SolveStatus::optimal)
        return report;
    report.applicable = true;

    const Eigen::VectorXd& x = result.primal;
    const Eigen::VectorXd& y = result.dual;
    const Eigen::VectorXd& s = result.dual_slack;
    const Eigen::VectorXd& c = program.objective;
    const Eigen::VectorXd& b = program.rhs;

    const auto inf_norm = [](const Eigen::VectorXd& v) {
        return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
    };

    report.primal_abs = inf_norm(program.equalities * x - b);
    report.primal_cone_violation = std::max(0.0, -cone_margin(program.cones, x));

    // Free variables carry no dual slack: their reduced cost must vanish.
    Eigen::VectorXd reduced = c - program.equalities.transpose() * y;
    Eigen::VectorXd dual_res = reduced - s;
    Eigen::Index offset = 0;
    for (const ConeBlock& block : program.cones) {
        if (block.kind == ConeKind::free)
            dual_res.segment(offset, block.size) = reduced.segment(offset, block.size);
        offset += block.size;
    }
    report.dual_abs = inf_norm(dual_res);
    report.dual_cone_violation = std::max(0.0, -cone_margin(program.cones, s));

    const double pobj = c.dot(x);
    const double dobj = b.dot(y);
    report.gap_abs = std::abs(pobj - dobj);

    report.relative.primal =
        std::max(report.primal_abs, report.primal_cone_violation) / (1.0 + inf_norm(b));
    report.relative.dual =
        std::max(report.dual_abs, report.dual_cone_violation) / (1.0 + inf_norm(c));
    report.relative.gap = report.gap_abs / (1.0 + std::abs(pobj) + std::abs(dobj));
    return report;
}

void dump(const ConicProgram& program, std::ostream& os)
{
    const auto var_name = [&](int j) {
        return program.variable_names.empty() ? "x" + std::to_string(j)
                                              : program.variable_names[j];
    };
    const auto row_name = [&](int i) {
        return program.constraint_names.empty()
                   ? "r" + std::to_string(i)
                   : program.constraint_names[i];
    };

    os << "conic-program 1\n";
    os << "variables " << program.num_variables() << "\n";
    os << "constraints " << program.num_constraints() << "\n";
    os << "offset " << format_number(program.objective_offset) << "\n";
    for (const ConeBlock& block : program.cones) {
        const char* kind = block.kind == ConeKind::free     ? "free"
                           : block.kind == ConeKind::nonneg ? "nonneg"
                                                            : "soc";
        os << "cone " << kind << " " << block.size << "\n";
    }
    for (int j = 0; j < program.num_variables(); ++j)
        os << "var " << j << " " << var_name(j) << " cost " << format_number(program.objective[j])
           << "\n";
    for (int i = 0; i < program.num_constraints(); ++i)
        os << "rhs " << i << " " << row_name(i) << " " << format_number(program.rhs[i]) << "\n";
    for (int j = 0; j < program.equalities.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(program.equalities, j); it; ++it)
            os << "a " << it.row() << " " << j << " " << format_number(it.value()) << "\n";
}

// ---------------------------------------------------------------------------

int ProgramBuilder::push_variable(std::string name, ConeKind kind, int block_size)
{
    const int column = num_variables();
    names_.push_back(std::move(name));
    cost_.push_back(0.0);
    if (block_size > 0) {
        const bool merge = kind != ConeKind::soc && !cones_.empty() && cones_.back().kind == kind;
        if (merge)
            cones_.back().size += block_size;
        else
            cones_.push_back({kind, block_size});
    }
    return column;
}

int ProgramBuilder::add_free(std::string name)
{
    return push_variable(std::move(name), ConeKind::free, 1);
}

int ProgramBuilder::add_nonneg(std::string name)
{
    return push_variable(std::move(name), ConeKind::nonneg, 1);
}

int ProgramBuilder::add_soc(std::span<const std::string> names)
{
    if (names.size() < 2)
        throw std::invalid_argument("second-order cone needs at least two variables");
    const int first = push_variable(names[0], ConeKind::soc, static_cast<int>(names.size()));
    for (std::size_t k = 1; k < names.size(); ++k)
        push_variable(names[k], ConeKind::soc, 0);
    return first;
}

void ProgramBuilder::add_cost(int column, double coefficient)
{
    cost_.at(column) += coefficient;
}

void ProgramBuilder::add_equality(const LinearExpr& expr, double rhs, std::string name)
{
    const int row = num_constraints();
    for (const LinearTerm& term : expr) {
        if (term.column < 0 || term.column >= num_variables())
            throw std::out_of_range("linear term refers to unknown column");
        if (term.coefficient != 0.0)
            triplets_.emplace_back(row, term.column, term.coefficient);
    }
    rhs_.push_back(rhs);
    row_names_.push_back(std::move(name));
}

int ProgramBuilder::add_greater_equal(const LinearExpr& expr, double rhs, std::string name)
{
    const int slack = add_nonneg("slack[" + name + "]");
    LinearExpr with_slack = expr;
    with_slack.push_back({slack, -1.0});
    add_equality(with_slack, rhs, std::move(name));
    return slack;
}

int ProgramBuilder::add_less_equal(const LinearExpr& expr, double rhs, std::string name)
{
    const int slack = add_nonneg("slack[" + name + "]");
    LinearExpr with_slack = expr;
    with_slack.push_back({slack, 1.0});
    add_equality(with_slack, rhs, std::move(name));
    return slack;
}

ConicProgram ProgramBuilder::build() const
{
    ConicProgram program;
    const int n = num_variables();
    const int m = num_constraints();
    program.objective = Eigen::Map<const Eigen::VectorXd>(cost_.data(), n);
    program.rhs = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);
    program.equalities.resize(m, n);
    program.equalities.setFromTriplets(triplets_.begin(), triplets_.end());
    program.equalities.makeCompressed();
    program.cones = cones_;
    program.variable_names = names_;
    program.constraint_names = row_names_;
    program.check();
    return program;
}

int append_less_equal(ConicProgram& program, const LinearExpr& expr, double rhs, std::string name)
{
    const int n = program.num_variables();
    const int m = program.num_constraints();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(program.equalities.nonZeros() + expr.size() + 1);
    for (int j = 0; j < n; ++j)
        for (SparseMatrix::InnerIterator it(program.equalities, j); it; ++it)
            triplets.emplace_back(it.row(), j, it.value());
    for (const LinearTerm& term : expr) {
        if (term.column < 0 || term.column >= n)
            throw std::out_of_range("linear term refers to unknown column");
        triplets.emplace_back(m, term.column, term.coefficient);
    }
    triplets.emplace_back(m, n, 1.0);

    program.equalities.resize(m + 1, n + 1);
    program.equalities.setFromTriplets(triplets.begin(), triplets.end());
    program.equalities.makeCompressed();
    program.rhs.conservativeResize(m + 1);
    program.rhs[m] = rhs;
    program.objective.conservativeResize(n + 1);
    program.objective[n] = 0.0;
    if (!program.cones.empty() && program.cones.back().kind == ConeKind::nonneg)
        program.cones.back().size += 1;
    else
        program.cones.push_back({ConeKind::nonneg, 1});
    if (static_cast<int>(program.variable_names.size()) == n)
        program.variable_names.push_back("slack[" + name + "]");
    if (static_cast<int>(program.constraint_names.size()) == m)
        program.constraint_names.push_back(std::move(name));
    return n;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd ReducedProgram::expand(const Eigen::VectorXd& reduced_primal) const
{
    Eigen::VectorXd full = fixed_values;
    for (std::size_t k = 0; k < kept_columns.size(); ++k)
        full[kept_columns[k]] = reduced_primal[static_cast<Eigen::Index>(k)];
    return full;
}

ReducedProgram fix_columns(const ConicProgram& program, std::span<const ColumnFixing> fixings,
                           double feasibility_tol)
{
    const int n = program.num_variables();
    const int m = program.num_constraints();
    const std::vector<ConeKind> kinds = program.variable_kinds();

    ReducedProgram out;
    out.fixed_values = Eigen::VectorXd::Zero(n);
    std::vector<char> fixed(n, 0);

    const auto fail = [&](std::string reason) {
        out.infeasible = true;
        out.reason = std::move(reason);
        return out;
    };

    for (const ColumnFixing& f : fixings) {
        if (f.column < 0 || f.column >= n)
            throw std::out_of_range("fix_columns: column out of range");
        fixed[f.column] = 1;
        out.fixed_values[f.column] = f.value;
    }

    // Row-major copy for row scans.
    const Eigen::SparseMatrix<double, Eigen::RowMajor, int> rows = program.equalities;
    std::vector<char> row_done(m, 0);

    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < m; ++i) {
            if (row_done[i])
                continue;
            double residual = program.rhs[i];
            int open = 0;
            int last_open = -1;
            double last_coef = 0.0;
            bool all_nonneg = true;
            int positive = 0;
            int negative = 0;
            for (decltype(rows)::InnerIterator it(rows, i); it; ++it) {
                const int j = static_cast<int>(it.col());
                if (fixed[j]) {
                    residual -= it.value() * out.fixed_values[j];
                    continue;
                }
                ++open;
                last_open = j;
                last_coef = it.value();
                if (kinds[j] != ConeKind::nonneg)
                    all_nonneg = false;
                (it.value() > 0 ? positive : negative) += 1;
            }
            const double scale = 1.0 + std::abs(program.rhs[i]);
            const std::string label = program.constraint_names.empty()
                                          ? "row " + std::to_string(i)
                                          : program.constraint_names[i];
            if (open == 0) {
                if (std::abs(residual) > feasibility_tol * scale)
                    return fail(label + ": fixed columns leave residual " + format_number(residual));
                row_done[i] = 1;
                changed = true;
                continue;
            }
            const ConeKind kind = kinds[last_open];
            if (open == 1 && kind != ConeKind::soc) {
                double value = residual / last_coef;
                if (kind == ConeKind::nonneg) {
                    if (value < -feasibility_tol * scale)
                        return fail(label + ": forces a nonnegative variable to " +
                                    format_number(value));
                    value = std::max(value, 0.0);
                }
                fixed[last_open] = 1;
                out.fixed_values[last_open] = value;
                row_done[i] = 1;
                changed = true;
                continue;
            }
            if (all_nonneg && (positive == 0 || negative == 0)) {
                // sum of same-sign multiples of nonnegative variables
                const double signed_residual = positive > 0 ? residual : -residual;
                if (signed_residual < -feasibility_tol * scale)
                    return fail(label + ": nonnegative combination cannot reach " +
                                format_number(residual));
                if (signed_residual <= feasibility_tol * scale) {
                    for (decltype(rows)::InnerIterator it(rows, i); it; ++it) {
                        const int j = static_cast<int>(it.col());
                        if (!fixed[j]) {
                            fixed[j] = 1;
                            out.fixed_values[j] = 0.0;
                        }
                    }
                    row_done[i] = 1;
                    changed = true;
                }
            }
        }
    }

    // Cone blocks must be kept or dropped whole.
    std::vector<ConeBlock> cones;
    Eigen::Index offset = 0;
    for (const ConeBlock& block : program.cones) {
        int kept = 0;
        for (int k = 0; k < block.size; ++k)
            if (!fixed[(offset + k)])
                ++kept;
        if (block.kind == ConeKind::soc) {
            if (kept != 0 && kept != block.size)
                throw std::logic_error("fix_columns: second-order cone fixed partially");
            if (kept == 0 && program.objective.size() > 0) {
                const Eigen::VectorXd v = out.fixed_values.segment(offset, block.size);
                if (v[0] - v.tail(block.size - 1).norm() < -feasibility_tol * (1.0 + v.norm()))
                    return fail("fixed values leave a second-order cone");
            }
        }
        if (kept > 0) {
            if (block.kind != ConeKind::soc && !cones.empty() && cones.back().kind == block.kind)
                cones.back().size += kept;
            else
                cones.push_back({block.kind, kept});
        }
        offset += block.size;
    }

    std::vector<int> column_map(n, -1);
    for (int j = 0; j < n; ++j) {
        if (!fixed[j]) {
            column_map[j] = static_cast<int>(out.kept_columns.size());
            out.kept_columns.push_back(j);
        }
    }
    std::vector<int> row_map(m, -1);
    int kept_rows = 0;
    for (int i = 0; i < m; ++i)
        if (!row_done[i])
            row_map[i] = kept_rows++;

    ConicProgram& reduced = out.program;
    const int kept_cols = static_cast<int>(out.kept_columns.size());
    reduced.objective.resize(kept_cols);
    reduced.objective_offset = program.objective_offset;
    for (int j = 0; j < n; ++j) {
        if (fixed[j])
            reduced.objective_offset += program.objective[j] * out.fixed_values[j];
        else
            reduced.objective[column_map[j]] = program.objective[j];
    }

    reduced.rhs = Eigen::VectorXd::Zero(kept_rows);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(program.equalities.nonZeros());
    for (int i = 0; i < m; ++i)
        if (row_map[i] >= 0)
            reduced.rhs[row_map[i]] = program.rhs[i];
    for (int j = 0; j < n; ++j) {
        for (SparseMatrix::InnerIterator it(program.equalities, j); it; ++it) {
            const int r = row_map[it.row()];
            if (r < 0)
                continue;
            if (fixed[j])
                reduced.rhs[r] -= it.value() * out.fixed_values[j];
            else
                triplets.emplace_back(r, column_map[j], it.value());
        }
    }
    reduced.equalities.resize(kept_rows, kept_cols);
    reduced.equalities.setFromTriplets(triplets.begin(), triplets.end());
    reduced.equalities.makeCompressed();
    reduced.cones = std::move(cones);

    if (!program.variable_names.empty())
        for (int j : out.kept_columns)
            reduced.variable_names.push_back(program.variable_names[j]);
    if (!program.constraint_names.empty())
        for (int i = 0; i < m; ++i)
            if (row_map[i] >= 0)
                reduced.constraint_names.push_back(
                    program.constraint_names[i]);
    return out;
}

}  // namespace mttsp
