#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "ldl.hpp"
#include "mttsp/conic.hpp"

using namespace mttsp;

namespace {

// min t  s.t.  t >= ||(x, y)||, x = 3, y = 4.
ConicProgram distance_program()
{
    ProgramBuilder b;
    const std::string names[] = {"t", "x", "y"};
    const int t = b.add_soc(names);
    b.add_cost(t, 1.0);
    b.add_equality({{t + 1, 1.0}}, 3.0, "x");
    b.add_equality({{t + 2, 1.0}}, 4.0, "y");
    return b.build();
}

// min -x1 - 2 x2  s.t.  x1 + x2 <= 4, x1 + 3 x2 <= 6, x >= 0.  Optimum at (3, 1): -5.
ConicProgram small_lp()
{
    ProgramBuilder b;
    const int x1 = b.add_nonneg("x1");
    const int x2 = b.add_nonneg("x2");
    b.add_cost(x1, -1.0);
    b.add_cost(x2, -2.0);
    b.add_less_equal({{x1, 1.0}, {x2, 1.0}}, 4.0, "c1");
    b.add_less_equal({{x1, 1.0}, {x2, 3.0}}, 6.0, "c2");
    return b.build();
}

}  // namespace

TEST(Builder, LayoutAndNames)
{
    const ConicProgram p = small_lp();
    EXPECT_NO_THROW(p.check());
    EXPECT_EQ(p.num_variables(), 4);
    EXPECT_EQ(p.num_constraints(), 2);
    EXPECT_EQ(p.variable_names[0], "x1");
    EXPECT_EQ(p.constraint_names[1], "c2");
    for (ConeKind k : p.variable_kinds())
        EXPECT_EQ(k, ConeKind::nonneg);
}

TEST(Builder, CheckRejectsBadLayout)
{
    ConicProgram p = small_lp();
    p.cones.back().size += 1;
    EXPECT_THROW(p.check(), std::invalid_argument);
}

TEST(Solve, SecondOrderConeDistance)
{
    const ConicProgram p = distance_program();
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective_value, 5.0, 1e-7);
    EXPECT_NEAR(r.primal[0], 5.0, 1e-7);
    EXPECT_LE(check_certificate(p, r).worst(), 1e-7);
}

TEST(Solve, LinearProgramVertex)
{
    const ConicProgram p = small_lp();
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective_value, -5.0, 1e-7);
    EXPECT_NEAR(r.primal[0], 3.0, 1e-6);
    EXPECT_NEAR(r.primal[1], 1.0, 1e-6);
    const CertificateReport cert = check_certificate(p, r);
    EXPECT_TRUE(cert.applicable);
    EXPECT_LE(cert.worst(), 1e-7);
    // Dual of a <= constraint in a minimisation is nonpositive.
    EXPECT_NEAR(r.dual[0], -0.5, 1e-6);
    EXPECT_NEAR(r.dual[1], -0.5, 1e-6);
}

TEST(Solve, ObjectiveOffset)
{
    ConicProgram p = distance_program();
    p.objective_offset = 2.5;
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective_value, 7.5, 1e-7);
}

TEST(Solve, DetectsInfeasibility)
{
    ProgramBuilder b;
    const int x = b.add_nonneg("x");
    b.add_cost(x, 1.0);
    b.add_equality({{x, 1.0}}, -1.0, "neg");
    const SolveResult r = solve(b.build());
    EXPECT_EQ(r.status, SolveStatus::infeasible);
}

TEST(Solve, DetectsUnboundedness)
{
    ProgramBuilder b;
    const int x = b.add_nonneg("x");
    const int y = b.add_nonneg("y");
    b.add_cost(x, -1.0);
    b.add_equality({{x, 1.0}, {y, -1.0}}, 1.0, "diff");
    const SolveResult r = solve(b.build());
    EXPECT_EQ(r.status, SolveStatus::unbounded);
}

TEST(Solve, IterationLimitIsReported)
{
    SolverSettings settings;
    settings.max_iters = 1;
    const SolveResult r = solve(small_lp(), settings);
    EXPECT_EQ(r.status, SolveStatus::iteration_limit);
}

TEST(Solve, ObserverSeesEverySolve)
{
    int calls = 0;
    SolverSettings settings;
    settings.observer = [&](const ConicProgram& p, const SolveResult& r) {
        ++calls;
        EXPECT_EQ(p.num_variables(), r.primal.size());
    };
    solve(small_lp(), settings);
    solve(distance_program(), settings);
    EXPECT_EQ(calls, 2);
}

TEST(Solve, FreeVariablesAndRedundantRows)
{
    // min |u - 1| + |w + 2| with u + w = 0 via SOC of size 2, with a duplicated row.
    ProgramBuilder b;
    const int u = b.add_free("u");
    const int w = b.add_free("w");
    const std::string n1[] = {"a", "ra"};
    const std::string n2[] = {"c", "rc"};
    const int a = b.add_soc(n1);
    const int c = b.add_soc(n2);
    b.add_cost(a, 1.0);
    b.add_cost(c, 1.0);
    b.add_equality({{a + 1, 1.0}, {u, -1.0}}, -1.0, "ra");
    b.add_equality({{c + 1, 1.0}, {w, -1.0}}, 2.0, "rc");
    b.add_equality({{u, 1.0}, {w, 1.0}}, 0.0, "link");
    b.add_equality({{u, 2.0}, {w, 2.0}}, 0.0, "link2");
    const ConicProgram p = b.build();
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective_value, 1.0, 1e-7);
}

TEST(ConeMargin, SecondOrderCone)
{
    const ConeBlock cones[] = {{ConeKind::soc, 3}};
    EXPECT_NEAR(cone_margin(cones, Eigen::Vector3d(5, 3, 4)), 0.0, 1e-12);
    EXPECT_NEAR(cone_margin(cones, Eigen::Vector3d(6, 3, 4)), 1.0, 1e-12);
    EXPECT_LT(cone_margin(cones, Eigen::Vector3d(4, 3, 4)), 0.0);
}

TEST(Certificate, FlagsPerturbedPoint)
{
    const ConicProgram p = distance_program();
    SolveResult r = solve(p);
    r.primal[1] += 1e-3;
    EXPECT_GT(check_certificate(p, r).relative.primal, 1e-5);
}

TEST(AppendLessEqual, CutsTheOptimum)
{
    ConicProgram p = small_lp();
    const int slack = append_less_equal(p, {{1, 1.0}}, 0.5, "cut");
    EXPECT_EQ(slack, p.num_variables() - 1);
    EXPECT_NO_THROW(p.check());
    const SolveResult r = solve(p);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    // x2 = 0.5, x1 = 3.5: -4.5.
    EXPECT_NEAR(r.objective_value, -4.5, 1e-7);
}

TEST(FixColumns, SubstitutesAndExpands)
{
    const ConicProgram p = small_lp();
    const ColumnFixing fix[] = {{1, 1.0}};
    const ReducedProgram reduced = fix_columns(p, fix);
    ASSERT_FALSE(reduced.infeasible);
    EXPECT_LT(reduced.program.num_variables(), p.num_variables());
    const SolveResult r = solve(reduced.program);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    const Eigen::VectorXd x = reduced.expand(r.primal);
    ASSERT_EQ(x.size(), p.num_variables());
    EXPECT_NEAR(x[1], 1.0, 0.0);
    EXPECT_NEAR(x[0], 3.0, 1e-6);
    EXPECT_NEAR(p.objective.dot(x), -5.0, 1e-6);
    EXPECT_LE((p.equalities * x - p.rhs).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(FixColumns, DetectsInconsistency)
{
    const ConicProgram p = distance_program();
    const ColumnFixing fix[] = {{0, 1.0}, {1, 1.0}, {2, 4.0}};
    EXPECT_TRUE(fix_columns(p, fix).infeasible);
}

TEST(FixColumns, ForcesZeroSums)
{
    // x1 + x2 + s = 0 after fixing nothing else pins all three to zero.
    ProgramBuilder b;
    const int x1 = b.add_nonneg("x1");
    const int x2 = b.add_nonneg("x2");
    const int z = b.add_nonneg("z");
    b.add_cost(z, 1.0);
    b.add_equality({{x1, 1.0}, {x2, 1.0}, {z, -1.0}}, 0.0, "sum");
    const ConicProgram p = b.build();
    const ColumnFixing fix[] = {{z, 0.0}};
    const ReducedProgram reduced = fix_columns(p, fix);
    ASSERT_FALSE(reduced.infeasible);
    EXPECT_EQ(reduced.program.num_variables(), 0);
}

TEST(Dump, ListsNamesAndNonzeros)
{
    std::ostringstream os;
    dump(small_lp(), os);
    const std::string text = os.str();
    EXPECT_NE(text.find("x1"), std::string::npos);
    EXPECT_NE(text.find("c2"), std::string::npos);
}

TEST(QuasiDefiniteLdl, MatchesDenseSolve)
{
    // [ H  A' ; A  -D ] with H, D positive definite.
    const int n = 6, m = 3;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n + m, n + m);
    for (int i = 0; i < n; ++i)
        dense(i, i) = 2.0 + i;
    dense(1, 0) = dense(0, 1) = 0.5;
    for (int i = 0; i < m; ++i) {
        dense(n + i, n + i) = -1e-3 * (i + 1);
        dense(n + i, i) = dense(i, n + i) = 1.0;
        dense(n + i, i + 3) = dense(i + 3, n + i) = -2.0;
    }
    const Eigen::MatrixXd lower_dense = dense.triangularView<Eigen::Lower>();
    SparseMatrix lower = lower_dense.sparseView();
    lower.makeCompressed();
    std::vector<int> signs(n + m, 1);
    for (int i = n; i < n + m; ++i)
        signs[i] = -1;

    detail::QuasiDefiniteLdl ldl;
    ldl.analyze(lower, signs);
    ldl.factor(lower);
    EXPECT_EQ(ldl.regularized_pivots(), 0);
    const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(n + m, -1.0, 2.0);
    const Eigen::VectorXd x = ldl.solve(rhs);
    EXPECT_LE((dense * x - rhs).lpNorm<Eigen::Infinity>(), 1e-10);
}
