#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mttsp/formulations.hpp"
#include "support.hpp"

using namespace mttsp;
using mttsp::testing::single_target_instance;
using mttsp::testing::stationary;

namespace {

const double kDurations[] = {25.0, 50.0, 75.0};

Eigen::VectorXd with_edges(const MixedBinaryConicProgram& p, const std::vector<std::pair<int, int>>& arcs)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p.base.num_variables());
    for (const auto& [tail, head] : arcs)
        x[p.layout.edges[p.graph.find(tail, head)].y] = 1.0;
    return x;
}

}  // namespace

TEST(FormulationName, RoundTrip)
{
    EXPECT_EQ(parse_formulation("bigm"), Formulation::bigm);
    EXPECT_EQ(parse_formulation(to_string(Formulation::gcs)), Formulation::gcs);
    EXPECT_THROW(parse_formulation("GCS"), std::invalid_argument);
}

TEST(Layout, AuditPassesForBothFormulations)
{
    const Instance instance = generate(4, 1);
    for (Formulation f : {Formulation::bigm, Formulation::gcs}) {
        const MixedBinaryConicProgram p = build(f, instance);
        EXPECT_NO_THROW(p.base.check());
        EXPECT_NO_THROW(p.layout.audit(p.base.num_variables()));
        EXPECT_EQ(p.binaries.size(), 20u);
        EXPECT_EQ(p.layout.edges.size(), 20u);
        ASSERT_EQ(p.vanishing.size(), 20u);
        for (const std::vector<int>& group : p.vanishing)
            EXPECT_EQ(group.empty(), f == Formulation::bigm);
    }
}

TEST(Layout, AuditCatchesSharedColumns)
{
    MixedBinaryConicProgram p = build(Formulation::gcs, generate(2, 1));
    p.layout.edges[1].zx = p.layout.edges[0].zx;
    EXPECT_THROW(p.layout.audit(p.base.num_variables()), std::logic_error);
}

TEST(Layout, NodeColumnsOnlyInBigM)
{
    const Instance instance = generate(3, 1);
    EXPECT_EQ(build(Formulation::bigm, instance).layout.nodes.size(), 5u);
    EXPECT_TRUE(build(Formulation::gcs, instance).layout.nodes.empty());
    for (const EdgeColumns& c : build(Formulation::gcs, instance).layout.edges)
        EXPECT_EQ(c.lbar, -1);
}

TEST(SingleTarget, BothFormulationsGiveOutAndBack)
{
    const Instance instance = single_target_instance(10.0);
    for (Formulation f : {Formulation::bigm, Formulation::gcs}) {
        const MixedBinaryConicProgram p = build(f, instance);
        const ColumnFixing fix[] = {{p.binaries[0], 1.0}, {p.binaries[1], 1.0}};
        const ReducedProgram reduced = fix_columns(p.base, fix);
        ASSERT_FALSE(reduced.infeasible);
        const SolveResult r = solve(reduced.program);
        ASSERT_EQ(r.status, SolveStatus::optimal) << to_string(f);
        EXPECT_NEAR(r.objective_value, 20.0, 1e-6) << to_string(f);
        const Eigen::VectorXd x = reduced.expand(r.primal);
        const Tour tour = recover_tour(instance, p.graph, p.layout, x);
        EXPECT_EQ(tour.sequence, (std::vector<int>{0, 1, 2}));
        EXPECT_NEAR(tour.cost, 20.0, 1e-6);
        EXPECT_TRUE(check_feasible(instance, tour).ok());
        EXPECT_GE(tour.times[1], 2.5 - 1e-6);
    }
}

TEST(Gcs, RelaxationIsExactForOneTarget)
{
    const MixedBinaryConicProgram p = build(Formulation::gcs, single_target_instance(10.0));
    const SolveResult r = solve(relax(p));
    ASSERT_EQ(r.status, SolveStatus::optimal);
    EXPECT_NEAR(r.objective_value, 20.0, 1e-6);
}

TEST(Gcs, ZeroEdgeForcesItsVariablesToZero)
{
    const Instance instance = assign_windows(generate(3, 2), kDurations, 4.0, 2).instances[1];
    const MixedBinaryConicProgram p = build(Formulation::gcs, instance);
    const int e = p.graph.find(1, 2);
    const ColumnFixing fix[] = {{p.binaries[e], 0.0}};
    const ReducedProgram reduced = fix_columns(p.base, fix);
    ASSERT_FALSE(reduced.infeasible);
    const SolveResult r = solve(reduced.program);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    const Eigen::VectorXd x = reduced.expand(r.primal);
    for (int column : p.vanishing[e])
        EXPECT_NEAR(x[column], 0.0, 1e-6) << p.layout.symbols[column];

    // Pinning the whole group to zero is consistent with the rows.
    std::vector<ColumnFixing> all{{p.binaries[e], 0.0}};
    for (int column : p.vanishing[e])
        all.push_back({column, 0.0});
    const ReducedProgram pinned = fix_columns(p.base, all);
    ASSERT_FALSE(pinned.infeasible);
    const SolveResult q = solve(pinned.program);
    ASSERT_EQ(q.status, SolveStatus::optimal);
    EXPECT_NEAR(q.objective_value, r.objective_value, 1e-6);
}

TEST(Gcs, UnitEdgePutsZOnTheSegment)
{
    const Instance instance = assign_windows(generate(3, 2), kDurations, 4.0, 2).instances[2];
    const MixedBinaryConicProgram p = build(Formulation::gcs, instance);
    const int e = p.graph.find(1, 2);
    const ColumnFixing fix[] = {{p.binaries[e], 1.0}};
    const ReducedProgram reduced = fix_columns(p.base, fix);
    ASSERT_FALSE(reduced.infeasible);
    const SolveResult r = solve(reduced.program);
    ASSERT_EQ(r.status, SolveStatus::optimal);
    const Eigen::VectorXd x = reduced.expand(r.primal);
    const EdgeColumns& c = p.layout.edges[e];
    const SegmentSet tail = node_set(instance, 1);
    const SegmentSet head = node_set(instance, 2);
    EXPECT_TRUE(tail.contains({x[c.zx], x[c.zy], x[c.zt]}, 1e-6));
    EXPECT_TRUE(head.contains({x[c.zpx], x[c.zpy], x[c.zpt]}, 1e-6));
}

TEST(BigM, RelaxationBoundIsZero)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Instance instance = assign_windows(generate(5, seed), kDurations, 4.0, seed).instances[0];
        const SolveResult r = solve(relax(build(Formulation::bigm, instance)));
        ASSERT_EQ(r.status, SolveStatus::optimal);
        EXPECT_LE(r.objective_value, 1e-6);
        EXPECT_GE(r.objective_value, -1e-6);
    }
}

TEST(Gcs, RelaxationBoundsTheOracle)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Instance instance = assign_windows(generate(4, seed), kDurations, 4.0, seed).instances[0];
        const SolveResult r = solve(relax(build(Formulation::gcs, instance)));
        ASSERT_EQ(r.status, SolveStatus::optimal);
        const BruteForceResult oracle = brute_force(instance);
        ASSERT_TRUE(oracle.tour);
        EXPECT_GT(r.objective_value, 0.0);
        EXPECT_LE(r.objective_value, oracle.tour->cost * (1 + 1e-6));
    }
}

TEST(ExtractSequence, FollowsTheChosenEdges)
{
    const MixedBinaryConicProgram p = build(Formulation::gcs, generate(3, 1));
    const Eigen::VectorXd x = with_edges(p, {{0, 2}, {2, 3}, {3, 1}, {1, 4}});
    EXPECT_EQ(extract_sequence(p.graph, p.layout, x), (std::vector<int>{0, 2, 3, 1, 4}));
}

TEST(ExtractSequence, RejectsSubtours)
{
    // s -> 3 -> s' plus the cycle 1 <-> 2.
    const MixedBinaryConicProgram p = build(Formulation::gcs, generate(3, 1));
    const Eigen::VectorXd x = with_edges(p, {{0, 3}, {3, 4}, {1, 2}, {2, 1}});
    EXPECT_THROW(extract_sequence(p.graph, p.layout, x), TourStructureError);
}

TEST(ExtractSequence, RejectsFractionalAndBranchingSupport)
{
    const MixedBinaryConicProgram p = build(Formulation::gcs, generate(2, 1));
    Eigen::VectorXd x = with_edges(p, {{0, 1}, {1, 2}, {2, 3}});
    x[p.layout.edges[p.graph.find(0, 1)].y] = 0.5;
    EXPECT_THROW(extract_sequence(p.graph, p.layout, x), TourStructureError);
    Eigen::VectorXd y = with_edges(p, {{0, 1}, {1, 2}, {1, 3}, {2, 3}});
    EXPECT_THROW(extract_sequence(p.graph, p.layout, y), TourStructureError);
}

TEST(Biconvex, OracleTourSatisfiesEveryRow)
{
    const Instance instance = assign_windows(generate(4, 5), kDurations, 4.0, 5).instances[1];
    const BruteForceResult oracle = brute_force(instance);
    ASSERT_TRUE(oracle.tour);
    const Graph graph = Graph::build(instance);
    const BiconvexPoint point = biconvex_point(instance, graph, *oracle.tour);
    EXPECT_TRUE(check_biconvex(instance, graph, point.y, point.p, point.t).empty());

    BiconvexPoint late = point;
    const int first = oracle.tour->sequence[1];
    late.t[first] = instance.targets[first - 1].window.hi + 1.0;
    EXPECT_FALSE(check_biconvex(instance, graph, late.y, late.p, late.t).empty());
}

TEST(Dump, NamesRowsAndColumns)
{
    std::ostringstream os;
    dump(build(Formulation::gcs, single_target_instance(10.0)), os);
    const std::string text = os.str();
    EXPECT_NE(text.find("formulation gcs"), std::string::npos);
    EXPECT_NE(text.find("z'_t[0,1]"), std::string::npos);
}
