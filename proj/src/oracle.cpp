#include "mttsp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mttsp/text_format.hpp"

namespace mttsp {

double Tour::path_length() const
{
    double length = 0.0;
    for (std::size_t k = 1; k < positions.size(); ++k)
        length += (positions[k] - positions[k - 1]).norm();
    return length;
}

std::vector<int> Tour::targets() const
{
    if (sequence.size() < 2)
        return {};
    return {sequence.begin() + 1, sequence.end() - 1};
}

namespace {

/// Target part of a sequence given with or without depot endpoints.
std::vector<int> target_order(const Instance& instance, std::span<const int> sequence)
{
    const int n = static_cast<int>(instance.size());
    std::vector<int> order(sequence.begin(), sequence.end());
    if (order.size() == static_cast<std::size_t>(n) + 2 && order.front() == kDepotStart &&
        order.back() == n + 1)
        order = std::vector<int>(order.begin() + 1, order.end() - 1);
    if (order.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("sequence must visit every target once");
    std::vector<char> seen(n + 1, 0);
    for (int node : order) {
        if (node < 1 || node > n || seen[node])
            throw std::invalid_argument("sequence must visit every target once");
        seen[node] = 1;
    }
    return order;
}

Tour make_tour(const Instance& instance, const std::vector<int>& order,
               const std::vector<double>& target_times, double return_time)
{
    Tour tour;
    tour.sequence.reserve(order.size() + 2);
    tour.sequence.push_back(kDepotStart);
    tour.sequence.insert(tour.sequence.end(), order.begin(), order.end());
    tour.sequence.push_back(depot_return(instance));
    tour.times.push_back(0.0);
    tour.times.insert(tour.times.end(), target_times.begin(), target_times.end());
    tour.times.push_back(return_time);
    for (std::size_t k = 0; k < tour.sequence.size(); ++k)
        tour.positions.push_back(node_motion(instance, tour.sequence[k]).position(tour.times[k]));
    tour.cost = tour.path_length();
    return tour;
}

// Earliest-arrival chain; `agent` is the state after the last visited node.
struct ChainState {
    Vec2 position;
    double time = 0.0;
};

std::optional<ChainState> advance(const ChainState& agent, const Target& target, double v_max)
{
    const std::optional<double> t = earliest_intercept(agent.position, agent.time, target, v_max);
    if (!t)
        return std::nullopt;
    return ChainState{target.position(*t), *t};
}

double return_time(const Instance& instance, const ChainState& agent, double v_max)
{
    return agent.time + (instance.depot - agent.position).norm() / v_max;
}

}  // namespace

std::optional<QuickestTour> quickest_tour(const Instance& instance, std::span<const int> sequence,
                                          double v_max)
{
    const std::vector<int> order = target_order(instance, sequence);
    QuickestTour out;
    ChainState agent{instance.depot, 0.0};
    for (int node : order) {
        const std::optional<ChainState> next = advance(agent, instance.targets[node - 1], v_max);
        if (!next)
            return std::nullopt;
        agent = *next;
        out.visit_times.push_back(agent.time);
    }
    out.completion_time = return_time(instance, agent, v_max);
    return out;
}

std::optional<Tour> fixed_sequence_optimum(const Instance& instance,
                                           std::span<const int> sequence,
                                           const SolverSettings& settings)
{
    const std::vector<int> order = target_order(instance, sequence);
    const std::optional<QuickestTour> quickest = quickest_tour(instance, order, instance.v_max);
    if (!quickest || quickest->completion_time > instance.horizon)
        return std::nullopt;

    // Nodes along the tour; t of s is the constant 0.
    std::vector<int> nodes{kDepotStart};
    nodes.insert(nodes.end(), order.begin(), order.end());
    nodes.push_back(depot_return(instance));
    std::vector<Target> motion;
    for (int node : nodes)
        motion.push_back(node_motion(instance, node));

    ProgramBuilder b;
    std::vector<int> t_col(nodes.size(), -1);
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        const std::string name = "t[" + std::to_string(nodes[k]) + "]";
        t_col[k] = b.add_free(name);
        const TimeWindow& w = motion[k].window;
        if (w.lo == w.hi) {
            b.add_equality({{t_col[k], 1.0}}, w.lo, "fix " + name);
        } else {
            b.add_greater_equal({{t_col[k], 1.0}}, w.lo, "lo " + name);
            b.add_less_equal({{t_col[k], 1.0}}, w.hi, "hi " + name);
        }
    }
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const std::string leg = std::to_string(nodes[k]) + "," + std::to_string(nodes[k + 1]);
        const std::string names[] = {"l[" + leg + "]", "lx[" + leg + "]", "ly[" + leg + "]"};
        const int l = b.add_soc(names);
        b.add_cost(l, 1.0);
        const Vec2 dref = motion[k + 1].ref_pos - motion[k].ref_pos;
        for (int axis = 0; axis < 2; ++axis) {
            LinearExpr expr{{l + 1 + axis, 1.0}, {t_col[k + 1], -motion[k + 1].velocity[axis]}};
            if (k > 0)
                expr.push_back({t_col[k], motion[k].velocity[axis]});
            b.add_equality(expr, dref[axis], "d" + std::string(axis ? "y" : "x") + "[" + leg + "]");
        }
        LinearExpr speed{{t_col[k + 1], instance.v_max}, {l, -1.0}};
        if (k > 0)
            speed.push_back({t_col[k], -instance.v_max});
        b.add_greater_equal(speed, 0.0, "speed[" + leg + "]");
    }

    Tour greedy = make_tour(instance, order, quickest->visit_times, quickest->completion_time);
    const SolveResult result = solve(b.build(), settings);
    if (result.status != SolveStatus::optimal)
        // Feasible but without interior, e.g. the greedy schedule is the only one.
        return greedy;

    // Solver times can sit a rounding error outside a window or short of a
    // leg's reach. Snap them into [earliest, latest], where latest[k] is the
    // last time at node k from which the rest of the tour stays feasible.
    const std::size_t last = nodes.size() - 1;
    std::vector<double> latest(nodes.size());
    latest[last] = instance.horizon;
    for (std::size_t k = last; k-- > 1;) {
        Target next = motion[k + 1];
        next.window.hi = std::min(next.window.hi, latest[k + 1]);
        const auto feasible = [&](double t) {
            return earliest_intercept(motion[k].position(t), t, next, instance.v_max).has_value();
        };
        double lo = motion[k].window.lo;
        double hi = motion[k].window.hi;
        if (!feasible(lo))
            return greedy;
        if (!feasible(hi)) {
            for (int it = 0; it < 200 && lo < hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi)
                    break;
                (feasible(mid) ? lo : hi) = mid;
            }
            hi = lo;
        }
        latest[k] = hi;
    }

    std::vector<double> times;
    ChainState agent{instance.depot, 0.0};
    for (std::size_t k = 1; k < last; ++k) {
        Target bounded = motion[k];
        bounded.window.hi = latest[k];
        const std::optional<double> earliest =
            earliest_intercept(agent.position, agent.time, bounded, instance.v_max);
        if (!earliest)
            return greedy;
        const double t = std::clamp(result.primal[t_col[k]], *earliest, latest[k]);
        times.push_back(t);
        agent = {motion[k].position(t), t};
    }
    const double back = std::clamp(result.primal[t_col[last]],
                                   return_time(instance, agent, instance.v_max), instance.horizon);
    Tour tour = make_tour(instance, order, times, back);
    return tour.cost <= greedy.cost ? tour : greedy;
}

BruteForceResult brute_force(const Instance& instance, const SolverSettings& settings)
{
    const std::size_t n = instance.size();
    if (n > kBruteForceMaxTargets)
        throw std::invalid_argument("brute_force: refusing " + std::to_string(n) +
                                    " targets (limit " +
                                    std::to_string(kBruteForceMaxTargets) + ")");
    BruteForceResult out;
    std::vector<int> order;
    std::vector<char> used(n + 1, 0);

    // Depth-first in lexicographic order; a prefix is dropped as soon as the
    // earliest-arrival chain misses a window, which is exact for feasibility.
    const auto recurse = [&](auto&& self, const ChainState& agent) -> void {
        if (order.size() == n) {
            ++out.sequences_enumerated;
            if (return_time(instance, agent, instance.v_max) > instance.horizon)
                return;
            std::optional<Tour> tour = fixed_sequence_optimum(instance, order, settings);
            ++out.sequences_solved;
            if (!tour)
                return;
            const double slack = 1e-9 * std::max(1.0, tour->cost);
            if (!out.tour || tour->cost < out.tour->cost - slack)
                out.tour = std::move(tour);
            return;
        }
        for (int node = 1; node <= static_cast<int>(n); ++node) {
            if (used[node])
                continue;
            const std::optional<ChainState> next =
                advance(agent, instance.targets[node - 1], instance.v_max);
            if (!next)
                continue;
            used[node] = 1;
            order.push_back(node);
            self(self, *next);
            order.pop_back();
            used[node] = 0;
        }
    };
    recurse(recurse, ChainState{instance.depot, 0.0});
    return out;
}

const char* to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::structure: return "structure";
    case ViolationKind::start_time: return "start_time";
    case ViolationKind::window: return "window";
    case ViolationKind::trajectory: return "trajectory";
    case ViolationKind::speed: return "speed";
    case ViolationKind::cost: return "cost";
    }
    return "?";
}

int FeasibilityReport::count(ViolationKind kind) const
{
    return static_cast<int>(std::count_if(violations.begin(), violations.end(),
                                          [&](const Violation& v) { return v.kind == kind; }));
}

FeasibilityReport check_feasible(const Instance& instance, const Tour& tour, double tol)
{
    FeasibilityReport report;
    const auto add = [&](ViolationKind kind, int index, double magnitude, std::string message) {
        report.violations.push_back({kind, index, magnitude, std::move(message)});
    };

    const int n = static_cast<int>(instance.size());
    const std::size_t len = tour.sequence.size();
    if (tour.times.size() != len || tour.positions.size() != len) {
        add(ViolationKind::structure, -1, 0.0, "sequence, times and positions differ in length");
        return report;
    }
    if (len != static_cast<std::size_t>(n) + 2)
        add(ViolationKind::structure, -1, 0.0,
            "expected " + std::to_string(n + 2) + " stops, got " + std::to_string(len));
    if (len == 0)
        return report;
    if (tour.sequence.front() != kDepotStart)
        add(ViolationKind::structure, 0, 0.0, "tour does not start at s");
    if (tour.sequence.back() != n + 1)
        add(ViolationKind::structure, static_cast<int>(len) - 1, 0.0, "tour does not end at s'");
    std::vector<int> seen(n + 2, 0);
    bool nodes_valid = true;
    for (std::size_t k = 0; k < len; ++k) {
        const int node = tour.sequence[k];
        if (node < 0 || node > n + 1) {
            add(ViolationKind::structure, static_cast<int>(k), 0.0,
                "unknown node " + std::to_string(node));
            nodes_valid = false;
        } else if (++seen[node] == 2) {
            add(ViolationKind::structure, static_cast<int>(k), 0.0,
                "node " + std::to_string(node) + " visited twice");
        }
    }
    for (int node = 1; node <= n; ++node)
        if (seen[node] == 0)
            add(ViolationKind::structure, -1, 0.0, "target " + std::to_string(node) + " not visited");
    if (!nodes_valid)
        return report;

    if (std::abs(tour.times.front()) > tol && tour.sequence.front() == kDepotStart)
        add(ViolationKind::start_time, 0, std::abs(tour.times.front()), "tour does not start at t = 0");

    for (std::size_t k = 0; k < len; ++k) {
        const int node = tour.sequence[k];
        const Target motion = node_motion(instance, node);
        const double t = tour.times[k];
        if (node != kDepotStart) {
            const double excess = std::max(motion.window.lo - t, t - motion.window.hi);
            if (excess > tol)
                add(ViolationKind::window, static_cast<int>(k), excess,
                    "node " + std::to_string(node) + " visited at " + format_number(t) +
                        " outside [" + format_number(motion.window.lo) + ", " +
                        format_number(motion.window.hi) + "]");
        }
        const double miss = (tour.positions[k] - motion.position(t)).norm();
        if (miss > tol)
            add(ViolationKind::trajectory, static_cast<int>(k), miss,
                "node " + std::to_string(node) + " is " + format_number(miss) +
                    " away from its trajectory");
    }
    for (std::size_t k = 1; k < len; ++k) {
        const double dist = (tour.positions[k] - tour.positions[k - 1]).norm();
        const double reach = instance.v_max * (tour.times[k] - tour.times[k - 1]);
        if (dist > reach + tol)
            add(ViolationKind::speed, static_cast<int>(k), dist - reach,
                "leg " + std::to_string(tour.sequence[k - 1]) + "->" +
                    std::to_string(tour.sequence[k]) + " needs " + format_number(dist) +
                    " but allows " + format_number(reach));
    }
    const double length = tour.path_length();
    if (std::abs(length - tour.cost) > tol * std::max(1.0, length))
        add(ViolationKind::cost, -1, std::abs(length - tour.cost),
            "stated cost " + format_number(tour.cost) + " differs from path length " +
                format_number(length));
    return report;
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kTourHeader = "mttsp-tour";

}  // namespace

std::string serialize(const Tour& tour)
{
    std::ostringstream os;
    os << kTourHeader << " 1\n";
    os << "cost " << format_number(tour.cost) << "\n";
    os << "stops " << tour.sequence.size() << "\n";
    for (std::size_t k = 0; k < tour.sequence.size(); ++k)
        os << "stop " << tour.sequence[k] << " " << format_number(tour.times[k]) << " "
           << format_number(tour.positions[k].x()) << " " << format_number(tour.positions[k].y())
           << "\n";
    return os.str();
}

Tour parse_tour(std::string_view text)
{
    const std::vector<TextLine> lines = tokenize_lines(text);
    if (lines.empty() || lines.front().key() != kTourHeader)
        throw ParseError(lines.empty() ? 0 : lines.front().number, kTourHeader, "missing header");
    expect_tokens(lines.front(), 2, "version");
    if (parse_integer(lines.front(), 1, "version") != 1)
        throw ParseError(lines.front().number, "version", "unsupported version");

    Tour tour;
    bool have_cost = false;
    long long stops = -1;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const TextLine& line = lines[k];
        if (line.key() == "cost") {
            expect_tokens(line, 2, "cost");
            tour.cost = parse_number(line, 1, "cost");
            have_cost = true;
        } else if (line.key() == "stops") {
            expect_tokens(line, 2, "stops");
            stops = parse_integer(line, 1, "stops");
        } else if (line.key() == "stop") {
            expect_tokens(line, 5, "stop");
            tour.sequence.push_back(static_cast<int>(parse_integer(line, 1, "node")));
            tour.times.push_back(parse_number(line, 2, "time"));
            tour.positions.emplace_back(parse_number(line, 3, "x"), parse_number(line, 4, "y"));
        } else {
            throw ParseError(line.number, line.key(), "unknown field");
        }
    }
    const std::size_t end_line = lines.back().number;
    if (stops < 0)
        throw ParseError(end_line, "stops", "missing field");
    if (stops != static_cast<long long>(tour.sequence.size()))
        throw ParseError(end_line, "stops", "count does not match stop lines");
    if (!have_cost)
        tour.cost = tour.path_length();
    return tour;
}

Tour load_tour(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_tour(buffer.str());
}

void save_tour(const Tour& tour, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << serialize(tour);
}

}  // namespace mttsp
