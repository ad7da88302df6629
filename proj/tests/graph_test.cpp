#include <gtest/gtest.h>

#include "mttsp/graph.hpp"
#include "support.hpp"

using namespace mttsp;

TEST(GraphBuild, SingleTarget)
{
    const Graph g = Graph::build(generate(1, 1));
    ASSERT_EQ(g.num_edges(), 2);
    EXPECT_EQ(g.edge(0).tail, 0);
    EXPECT_EQ(g.edge(0).head, 1);
    EXPECT_EQ(g.edge(1).tail, 1);
    EXPECT_EQ(g.edge(1).head, 2);
}

TEST(GraphBuild, EdgeCountFormula)
{
    EXPECT_EQ(Graph::build(generate(3, 1)).num_edges(), 12);
    for (int n = 1; n <= 8; ++n)
        EXPECT_EQ(Graph::build(generate(n, 2)).num_edges(), n * n + n);
}

TEST(GraphBuild, NoDepotShortcutOrSelfLoops)
{
    for (int n = 1; n <= 6; ++n) {
        const Graph g = Graph::build(generate(n, 3));
        EXPECT_EQ(g.find(g.source(), g.sink()), -1);
        for (const Edge& e : g.edges()) {
            EXPECT_NE(e.tail, e.head);
            EXPECT_NE(e.head, g.source());
            EXPECT_NE(e.tail, g.sink());
        }
    }
}

TEST(GraphBuild, SortedDenseAndAdjacencyConsistent)
{
    const Graph g = Graph::build(generate(5, 4));
    for (int id = 0; id < g.num_edges(); ++id) {
        EXPECT_EQ(g.edge(id).id, id);
        if (id > 0) {
            const Edge& a = g.edge(id - 1);
            const Edge& b = g.edge(id);
            EXPECT_TRUE(a.tail < b.tail || (a.tail == b.tail && a.head < b.head));
        }
    }
    int in_total = 0, out_total = 0;
    for (int v = 0; v < g.num_nodes(); ++v) {
        for (int id : g.in_edges(v))
            EXPECT_EQ(g.edge(id).head, v);
        for (int id : g.out_edges(v))
            EXPECT_EQ(g.edge(id).tail, v);
        in_total += static_cast<int>(g.in_edges(v).size());
        out_total += static_cast<int>(g.out_edges(v).size());
    }
    EXPECT_EQ(in_total, g.num_edges());
    EXPECT_EQ(out_total, g.num_edges());
    EXPECT_EQ(g.out_edges(g.source()).size(), 5u);
    EXPECT_EQ(g.in_edges(g.sink()).size(), 5u);
    EXPECT_EQ(g.in_edges(3).size(), 5u);
    EXPECT_EQ(g.out_edges(3).size(), 5u);
}

TEST(NodeSet, DepotStartIsAPoint)
{
    const Instance instance = generate(2, 1);
    const SegmentSet s = node_set(instance, 0);
    EXPECT_TRUE(s.degenerate());
    EXPECT_EQ(s.start, (SpaceTimePoint{0, 0, 0}));
}

TEST(NodeSet, DepotReturnIsVerticalSegment)
{
    const Instance instance = generate(2, 1);
    const SegmentSet s = node_set(instance, 3);
    EXPECT_EQ(s.start, (SpaceTimePoint{0, 0, 0}));
    EXPECT_EQ(s.end, (SpaceTimePoint{0, 0, 150}));
}

TEST(NodeSet, StationaryTarget)
{
    Instance instance;
    instance.targets = {mttsp::testing::stationary(1, 3, 4, 10, 20)};
    const SegmentSet s = node_set(instance, 1);
    EXPECT_EQ(s.start, (SpaceTimePoint{3, 4, 10}));
    EXPECT_EQ(s.end, (SpaceTimePoint{3, 4, 20}));
}

TEST(NodeSet, MembershipFollowsTheMotionLaw)
{
    const Instance instance = generate(3, 5);
    for (int node = 1; node <= 3; ++node) {
        const SegmentSet s = node_set(instance, node);
        const Target& target = instance.targets[node - 1];
        for (double t : {0.0, 33.3, 150.0}) {
            const Vec2 p = target.position(t);
            EXPECT_TRUE(s.contains({p.x(), p.y(), t}, 1e-9));
            EXPECT_FALSE(s.contains({p.x() + 0.01, p.y(), t}, 1e-9));
        }
        EXPECT_FALSE(s.contains({0, 0, 151.0}, 1e-9));
    }
}
