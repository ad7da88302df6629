#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mttsp/oracle.hpp"
#include "mttsp/text_format.hpp"
#include "support.hpp"

using namespace mttsp;
using mttsp::testing::grid_completion;
using mttsp::testing::near_rel;
using mttsp::testing::shortest_closed_walk;
using mttsp::testing::single_target_instance;
using mttsp::testing::stationary;

namespace {

Instance two_stationary_targets()
{
    Instance instance;
    instance.v_max = 8.0;
    instance.targets = {stationary(1, 10, 0, 0, 150), stationary(2, 0, 10, 0, 150)};
    return instance;
}

const double kDurations[] = {25.0, 50.0, 75.0};

}  // namespace

TEST(FixedSequence, OutAndBack)
{
    const Instance instance = single_target_instance(10.0);
    const std::vector<int> seq{0, 1, 2};
    const auto tour = fixed_sequence_optimum(instance, seq);
    ASSERT_TRUE(tour);
    EXPECT_NEAR(tour->cost, 20.0, 1e-7);
    EXPECT_EQ(tour->sequence, seq);
    EXPECT_TRUE(check_feasible(instance, *tour).ok());
}

TEST(FixedSequence, TargetsOnlySequenceAccepted)
{
    const Instance instance = single_target_instance(10.0);
    const std::vector<int> seq{1};
    const auto tour = fixed_sequence_optimum(instance, seq);
    ASSERT_TRUE(tour);
    EXPECT_EQ(tour->sequence, (std::vector<int>{0, 1, 2}));
}

TEST(FixedSequence, WindowTooEarly)
{
    const Instance instance = single_target_instance(10.0, 0.0, 1.0);
    const std::vector<int> seq{1};
    EXPECT_FALSE(fixed_sequence_optimum(instance, seq));
}

TEST(FixedSequence, TwoTargetsBothOrders)
{
    const Instance instance = two_stationary_targets();
    const double expected = 20.0 + std::sqrt(200.0);
    EXPECT_NEAR(expected, 34.14213562373095, 1e-12);
    for (const std::vector<int>& seq : {std::vector<int>{1, 2}, std::vector<int>{2, 1}}) {
        const auto tour = fixed_sequence_optimum(instance, seq);
        ASSERT_TRUE(tour);
        EXPECT_NEAR(tour->cost, expected, 1e-6);
        EXPECT_TRUE(check_feasible(instance, *tour).ok());
    }
}

TEST(FixedSequence, WaitingCanShortenTheTour)
{
    // A target passing by the depot late in its window: the cheapest tour
    // meets it near the origin, which needs waiting rather than rushing out.
    Instance instance;
    instance.targets = {Target{1, Vec2(-40, 0), Vec2(0.5, 0), {0, 150}}};
    const std::vector<int> seq{1};
    const auto tour = fixed_sequence_optimum(instance, seq);
    ASSERT_TRUE(tour);
    EXPECT_NEAR(tour->cost, 0.0, 1e-5);
    EXPECT_NEAR(tour->times[1], 80.0, 1e-3);
    EXPECT_TRUE(check_feasible(instance, *tour).ok());
}

TEST(FixedSequence, NeverWorseThanQuickestTour)
{
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Instance instance = assign_windows(generate(4, seed), kDurations, 4.0, seed).instances[0];
        const std::vector<int> seq{1, 2, 3, 4};
        const auto quick = quickest_tour(instance, seq, instance.v_max);
        const auto tour = fixed_sequence_optimum(instance, seq);
        ASSERT_EQ(quick.has_value(), tour.has_value());
        if (!tour)
            continue;
        EXPECT_TRUE(check_feasible(instance, *tour).ok());
        double greedy_length = 0.0;
        Vec2 at = instance.depot;
        for (std::size_t k = 0; k < seq.size(); ++k) {
            const Vec2 p = instance.targets[seq[k] - 1].position(quick->visit_times[k]);
            greedy_length += (p - at).norm();
            at = p;
        }
        greedy_length += (instance.depot - at).norm();
        EXPECT_LE(tour->cost, greedy_length + 1e-6);
    }
}

TEST(BruteForce, SingleTargetMatchesFixedSequence)
{
    const Instance instance = single_target_instance(10.0);
    const BruteForceResult r = brute_force(instance);
    ASSERT_TRUE(r.tour);
    EXPECT_NEAR(r.tour->cost, 20.0, 1e-7);
    EXPECT_EQ(r.sequences_enumerated, 1);
}

TEST(BruteForce, TiesPickLexicographicallySmallestOrder)
{
    const BruteForceResult r = brute_force(two_stationary_targets());
    ASSERT_TRUE(r.tour);
    EXPECT_EQ(r.tour->targets(), (std::vector<int>{1, 2}));
    EXPECT_NEAR(r.tour->cost, 34.14213562373095, 1e-6);
}

TEST(BruteForce, StationaryTargetsReduceToClosedWalk)
{
    const std::vector<Vec2> points{{10, 20}, {-30, 5}, {25, -40}, {-5, -15}, {40, 40}};
    Instance instance;
    instance.v_max = 1000.0;
    for (std::size_t k = 0; k < points.size(); ++k)
        instance.targets.push_back(stationary(static_cast<int>(k) + 1, points[k].x(), points[k].y(), 0, 150));
    const BruteForceResult r = brute_force(instance);
    ASSERT_TRUE(r.tour);
    EXPECT_TRUE(near_rel(r.tour->cost, shortest_closed_walk(instance.depot, points), 1e-6));
}

TEST(BruteForce, InfeasibleInstance)
{
    const BruteForceResult r = brute_force(single_target_instance(10.0, 0.0, 1.0));
    EXPECT_FALSE(r.tour);
}

TEST(BruteForce, RefusesLargeInstances)
{
    EXPECT_THROW(brute_force(generate(kBruteForceMaxTargets + 1, 1)), std::invalid_argument);
}

TEST(BruteForce, RelabellingTargetsKeepsTheOptimum)
{
    const Instance instance = assign_windows(generate(5, 3), kDurations, 4.0, 3).instances[1];
    Instance shuffled = instance;
    const std::vector<int> perm{3, 0, 4, 2, 1};
    for (std::size_t k = 0; k < perm.size(); ++k) {
        shuffled.targets[k] = instance.targets[perm[k]];
        shuffled.targets[k].id = static_cast<int>(k) + 1;
    }
    const BruteForceResult a = brute_force(instance);
    const BruteForceResult b = brute_force(shuffled);
    ASSERT_TRUE(a.tour && b.tour);
    EXPECT_TRUE(near_rel(a.tour->cost, b.tour->cost, 1e-6));
}

TEST(BruteForce, PruningStillSolvesEveryFeasibleOrderItNeeds)
{
    const Instance instance = assign_windows(generate(5, 2), kDurations, 4.0, 2).instances[0];
    const BruteForceResult r = brute_force(instance);
    EXPECT_LE(r.sequences_solved, r.sequences_enumerated);
    EXPECT_LE(r.sequences_enumerated, 120);
    ASSERT_TRUE(r.tour);
    EXPECT_TRUE(check_feasible(instance, *r.tour).ok());
}

TEST(CheckFeasible, WindowViolation)
{
    const Instance instance = two_stationary_targets();
    const std::vector<int> seq{1, 2};
    Tour tour = *fixed_sequence_optimum(instance, seq);
    Instance narrowed = instance;
    narrowed.targets[0].window = {0.0, tour.times[1]};
    tour.times[1] += 0.1;
    narrowed.v_max = 1e6;
    const FeasibilityReport report = check_feasible(narrowed, tour);
    EXPECT_EQ(report.count(ViolationKind::window), 1);
    EXPECT_EQ(report.violations.size(), 1u);
}

TEST(CheckFeasible, SpeedViolation)
{
    const Instance instance = single_target_instance(10.0);
    Tour tour = *fixed_sequence_optimum(instance, std::vector<int>{1});
    Instance slow = instance;
    slow.v_max = 0.5 * 10.0 / tour.times[1];
    const FeasibilityReport report = check_feasible(slow, tour);
    EXPECT_GE(report.count(ViolationKind::speed), 1);
    bool first_leg = false;
    for (const Violation& v : report.violations)
        first_leg |= v.kind == ViolationKind::speed && v.index == 1;
    EXPECT_TRUE(first_leg);
}

TEST(CheckFeasible, StructureTrajectoryAndCost)
{
    const Instance instance = two_stationary_targets();
    const Tour good = *fixed_sequence_optimum(instance, std::vector<int>{1, 2});

    Tour missing = good;
    missing.sequence.erase(missing.sequence.begin() + 1);
    missing.times.erase(missing.times.begin() + 1);
    missing.positions.erase(missing.positions.begin() + 1);
    EXPECT_GE(check_feasible(instance, missing).count(ViolationKind::structure), 1);

    Tour off = good;
    off.positions[1] += Vec2(0.5, 0.0);
    EXPECT_GE(check_feasible(instance, off).count(ViolationKind::trajectory), 1);

    Tour late_start = good;
    late_start.times[0] = 1.0;
    EXPECT_GE(check_feasible(instance, late_start).count(ViolationKind::start_time), 1);

    Tour wrong_cost = good;
    wrong_cost.cost += 1.0;
    EXPECT_EQ(check_feasible(instance, wrong_cost).count(ViolationKind::cost), 1);
}

TEST(QuickestTour, OutAndBackCompletion)
{
    const Instance instance = single_target_instance(20.0);
    const auto q = quickest_tour(instance, std::vector<int>{1}, 4.0);
    ASSERT_TRUE(q);
    EXPECT_NEAR(q->visit_times[0], 5.0, 1e-12);
    EXPECT_NEAR(q->completion_time, 10.0, 1e-12);
}

TEST(QuickestTour, MatchesTimeGridSearch)
{
    // Greedy earliest arrival against an all-states grid DP: the DP can only
    // be later (grid rounding), and by at most a few grid steps.
    const double h = 0.05;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance instance = assign_windows(generate(4, seed), kDurations, 4.0, seed).instances[0];
        const std::vector<int> order{1, 2, 3, 4};
        const auto greedy = quickest_tour(instance, order, 4.0);
        const double dp = grid_completion(instance, order, 4.0, h);
        if (!greedy) {
            EXPECT_TRUE(std::isinf(dp));
            continue;
        }
        EXPECT_LE(greedy->completion_time, dp + 1e-9);
        if (std::isfinite(dp))
            EXPECT_LE(dp - greedy->completion_time, 4 * h * 5);
    }
}

TEST(QuickestTour, InfeasibleWindow)
{
    const Instance instance = single_target_instance(20.0, 0.0, 4.0);
    EXPECT_FALSE(quickest_tour(instance, std::vector<int>{1}, 4.0));
}

TEST(Monotonicity, WiderWindowsAndFasterAgentNeverCostMore)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const WindowAssignment wa = assign_windows(generate(5, seed), kDurations, 4.0, seed);
        double previous = std::numeric_limits<double>::infinity();
        for (const Instance& instance : wa.instances) {
            const BruteForceResult r = brute_force(instance);
            ASSERT_TRUE(r.tour);
            EXPECT_LE(r.tour->cost, previous + 1e-6 * std::max(1.0, previous));
            previous = r.tour->cost;
        }
        previous = std::numeric_limits<double>::infinity();
        for (double v : {4.0, 6.0, 8.0}) {
            Instance instance = wa.instances[0];
            instance.v_max = v;
            const BruteForceResult r = brute_force(instance);
            ASSERT_TRUE(r.tour);
            EXPECT_LE(r.tour->cost, previous + 1e-6 * std::max(1.0, previous));
            previous = r.tour->cost;
        }
    }
}

TEST(TourText, RoundTrip)
{
    const Tour tour = *fixed_sequence_optimum(two_stationary_targets(), std::vector<int>{2, 1});
    const Tour back = parse_tour(serialize(tour));
    EXPECT_EQ(back.sequence, tour.sequence);
    EXPECT_EQ(back.times, tour.times);
    EXPECT_EQ(back.cost, tour.cost);
    for (std::size_t k = 0; k < tour.positions.size(); ++k)
        EXPECT_EQ(back.positions[k], tour.positions[k]);
}

TEST(TourText, Malformed)
{
    EXPECT_THROW(parse_tour("mttsp-tour 1\ncost 1\nstops 2\nstop 0 0 0 0\n"), ParseError);
    EXPECT_THROW(parse_tour("mttsp-tour 1\ncost x\n"), ParseError);
}
