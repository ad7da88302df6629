#include "mttsp/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <queue>
#include <set>

namespace mttsp {

const char* to_string(MipStatus status)
{
    switch (status) {
    case MipStatus::optimal: return "optimal";
    case MipStatus::feasible: return "feasible";
    case MipStatus::infeasible: return "infeasible";
    case MipStatus::no_incumbent: return "no_incumbent";
    }
    return "?";
}

double gap_percent(double z_P, double z_D)
{
    if (!std::isfinite(z_P) || !std::isfinite(z_D))
        return std::numeric_limits<double>::infinity();
    const double diff = std::abs(z_P - z_D);
    if (z_P == 0.0)
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / std::abs(z_P) * 100.0;
}

int branch_select(const Eigen::VectorXd& primal, const VariableLayout& layout, double tol)
{
    int best = -1;
    double best_distance = 1.0;
    for (std::size_t e = 0; e < layout.edges.size(); ++e) {
        const double y = primal[layout.edges[e].y];
        if (std::abs(y - std::round(y)) <= tol)
            continue;
        const double distance = std::abs(y - 0.5);
        if (distance < best_distance) {
            best_distance = distance;
            best = static_cast<int>(e);
        }
    }
    if (best < 0)
        throw std::logic_error("branch_select: solution is integral");
    return best;
}

std::vector<int> follow_flow(const Graph& graph, const Eigen::VectorXd& primal,
                             const VariableLayout& layout)
{
    std::vector<int> order;
    std::vector<char> visited(graph.num_nodes(), 0);
    int node = graph.source();
    for (int step = 0; step < graph.num_targets(); ++step) {
        int next = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int id : graph.out_edges(node)) {
            const int head = graph.edge(id).head;
            if (head == graph.sink() || visited[head])
                continue;
            const double y = primal[layout.edges[id].y];
            if (y > best) {
                best = y;
                next = head;
            }
        }
        visited[next] = 1;
        order.push_back(next);
        node = next;
    }
    return order;
}

std::optional<Tour> incumbent_heuristic(const Instance& instance, const Graph& graph,
                                        const Eigen::VectorXd& primal,
                                        const VariableLayout& layout,
                                        const SolverSettings& settings)
{
    return fixed_sequence_optimum(instance, follow_flow(graph, primal, layout), settings);
}

namespace {

using Clock = std::chrono::steady_clock;

enum : signed char { kFree = -1, kZero = 0, kOne = 1 };

constexpr double kPolishTol = 1e-11;

/// Degree implications of the fixings: every target has one incoming and one
/// outgoing edge, s one outgoing, s' one incoming. False on contradiction.
bool propagate(const Graph& graph, std::vector<signed char>& state)
{
    std::vector<const std::vector<int>*> groups{&graph.out_edges(graph.source()),
                                                &graph.in_edges(graph.sink())};
    for (int i = 1; i <= graph.num_targets(); ++i) {
        groups.push_back(&graph.in_edges(i));
        groups.push_back(&graph.out_edges(i));
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const std::vector<int>* group : groups) {
            int ones = 0, free = 0, last_free = -1;
            for (int id : *group) {
                if (state[id] == kOne)
                    ++ones;
                else if (state[id] == kFree) {
                    ++free;
                    last_free = id;
                }
            }
            if (ones > 1 || (ones == 0 && free == 0))
                return false;
            if (ones == 1 && free > 0) {
                for (int id : *group)
                    if (state[id] == kFree)
                        state[id] = kZero;
                changed = true;
            } else if (ones == 0 && free == 1) {
                state[last_free] = kOne;
                changed = true;
            }
        }
    }
    return true;
}

struct NodeSolve {
    enum class Kind { infeasible, optimal, unknown } kind = Kind::unknown;
    double objective = 0.0;
    Eigen::VectorXd primal;  // full space; empty when unknown
};

class BranchAndBound {
public:
    BranchAndBound(const MixedBinaryConicProgram& program, const MipSettings& settings)
        : program_(program), settings_(settings), working_(program.base)
    {
    }

    MipResult run();

private:
    double elapsed() const
    {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }
    double cutoff() const
    {
        if (!std::isfinite(result_.z_P))
            return std::numeric_limits<double>::infinity();
        return result_.z_P - std::max(settings_.abs_tol, settings_.rel_tol * std::abs(result_.z_P));
    }

    NodeSolve solve_fixed(const std::vector<signed char>& state, double tol = 0.0);
    void offer(std::optional<Tour> tour);
    void offer_sequence(const std::vector<int>& order);
    void log_line();
    void polish();

    const MixedBinaryConicProgram& program_;
    const MipSettings& settings_;
    ConicProgram working_;
    MipResult result_;
    Clock::time_point start_ = Clock::now();
    std::set<std::vector<int>> tried_;
    bool logged_header_ = false;
};

NodeSolve BranchAndBound::solve_fixed(const std::vector<signed char>& state, double tol)
{
    std::vector<ColumnFixing> fixings;
    for (std::size_t e = 0; e < state.size(); ++e) {
        if (state[e] == kFree)
            continue;
        fixings.push_back({program_.binaries[e], static_cast<double>(state[e])});
        if (state[e] == kZero)
            for (int column : program_.vanishing[e])
                fixings.push_back({column, 0.0});
    }
    const ReducedProgram reduced = fix_columns(working_, fixings);
    NodeSolve out;
    if (reduced.infeasible) {
        out.kind = NodeSolve::Kind::infeasible;
        return out;
    }
    if (reduced.program.num_variables() == 0) {
        out.kind = NodeSolve::Kind::optimal;
        out.objective = reduced.program.objective_offset;
        out.primal = reduced.expand(Eigen::VectorXd());
        return out;
    }
    SolverSettings conic = settings_.conic;
    conic.time_budget = std::min(conic.time_budget, settings_.time_limit - elapsed());
    if (tol > 0.0)
        conic.tol = tol;
    const SolveResult r = solve(reduced.program, conic);
    if (r.status == SolveStatus::infeasible) {
        out.kind = NodeSolve::Kind::infeasible;
    } else if (r.status == SolveStatus::optimal) {
        out.kind = NodeSolve::Kind::optimal;
        out.objective = r.objective_value;
        out.primal = reduced.expand(r.primal);
    }
    return out;
}

void BranchAndBound::offer(std::optional<Tour> tour)
{
    if (!tour || tour->cost >= result_.z_P)
        return;
    if (!check_feasible(program_.instance, *tour).ok())
        return;
    result_.z_P = tour->cost;
    result_.incumbent = std::move(tour);
}

void BranchAndBound::offer_sequence(const std::vector<int>& order)
{
    if (!tried_.insert(order).second)
        return;
    offer(fixed_sequence_optimum(program_.instance, order, settings_.conic));
}

void BranchAndBound::log_line()
{
    if (!settings_.log)
        return;
    std::ostream& os = *settings_.log;
    if (!logged_header_) {
        os << "node,z_P,z_D,gap,elapsed\n";
        logged_header_ = true;
    }
    os.precision(12);
    os << result_.nodes_explored << "," << result_.z_P << "," << result_.z_D << ","
       << gap_percent(result_.z_P, result_.z_D) << "," << elapsed() << "\n";
}

void BranchAndBound::polish()
{
    if (!result_.incumbent)
        return;
    const Graph& graph = program_.graph;
    std::vector<signed char> state(graph.num_edges(), kZero);
    const std::vector<int>& seq = result_.incumbent->sequence;
    for (std::size_t k = 1; k < seq.size(); ++k)
        state[graph.find(seq[k - 1], seq[k])] = kOne;
    NodeSolve fixed = solve_fixed(state, std::min(settings_.conic.tol, kPolishTol));
    if (fixed.kind != NodeSolve::Kind::optimal)
        fixed = solve_fixed(state);
    if (fixed.kind != NodeSolve::Kind::optimal)
        return;
    result_.primal = fixed.primal;
    result_.primal_objective = fixed.objective;
}

MipResult BranchAndBound::run()
{
    const Graph& graph = program_.graph;
    const int num_edges = graph.num_edges();

    struct Open {
        double bound;
        long long order;
        std::vector<signed char> state;
        bool operator>(const Open& other) const
        {
            return bound != other.bound ? bound > other.bound : order > other.order;
        }
    };
    std::priority_queue<Open, std::vector<Open>, std::greater<>> open;
    long long pushed = 0;
    std::optional<Open> plunge;
    bool hit_limit = false;

    plunge = Open{-std::numeric_limits<double>::infinity(), pushed++,
                  std::vector<signed char>(num_edges, kFree)};
    bool first = true;

    // Smallest bound among nodes discarded by bound; still a valid global bound.
    double pruned_min = std::numeric_limits<double>::infinity();
    const auto open_bound = [&](double current) {
        double bound = std::min(current, pruned_min);
        if (plunge)
            bound = std::min(bound, plunge->bound);
        if (!open.empty())
            bound = std::min(bound, open.top().bound);
        return bound;
    };

    while (plunge || !open.empty()) {
        if (elapsed() >= settings_.time_limit) {
            hit_limit = true;
            break;
        }
        Open node = plunge ? std::move(*plunge) : open.top();
        if (plunge)
            plunge.reset();
        else
            open.pop();
        if (node.bound >= cutoff()) {
            pruned_min = std::min(pruned_min, node.bound);
            continue;
        }
        if (!propagate(graph, node.state))
            continue;

        const NodeSolve solved = solve_fixed(node.state);
        ++result_.nodes_explored;
        if (solved.kind == NodeSolve::Kind::infeasible) {
            if (first)
                result_.root_bound = std::numeric_limits<double>::infinity();
            first = false;
            result_.z_D = std::max(result_.z_D, std::min(open_bound(result_.z_P), result_.z_P));
            log_line();
            continue;
        }
        double bound = node.bound;
        if (solved.kind == NodeSolve::Kind::optimal)
            bound = std::max(bound, solved.objective);
        if (first)
            result_.root_bound = bound;
        first = false;

        const auto finish_node = [&](double current) {
            result_.z_D = std::max(result_.z_D, std::min(open_bound(current), result_.z_P));
            log_line();
        };

        if (bound >= cutoff()) {
            pruned_min = std::min(pruned_min, bound);
            finish_node(result_.z_P);
            continue;
        }

        // Branch candidate; -1 when the relaxation is integral.
        int branch = -1;
        if (solved.kind == NodeSolve::Kind::optimal) {
            try {
                branch = branch_select(solved.primal, program_.layout);
            } catch (const std::logic_error&) {
                branch = -1;
            }
        } else {
            const auto it = std::find(node.state.begin(), node.state.end(), kFree);
            branch = it == node.state.end() ? -1 : static_cast<int>(it - node.state.begin());
        }

        if (branch < 0) {
            pruned_min = std::min(pruned_min, bound);
            Eigen::VectorXd point = solved.primal;
            if (solved.kind != NodeSolve::Kind::optimal) {
                // Every binary is fixed but the relaxation failed numerically.
                point = Eigen::VectorXd::Zero(working_.num_variables());
                for (int e = 0; e < num_edges; ++e)
                    point[program_.binaries[e]] = node.state[e] == kOne ? 1.0 : 0.0;
            }
            try {
                const std::vector<int> seq = extract_sequence(graph, program_.layout, point);
                offer_sequence(std::vector<int>(seq.begin() + 1, seq.end() - 1));
            } catch (const TourStructureError&) {
                // Disconnected integral support: forbid exactly this edge set.
                LinearExpr cut;
                for (int e = 0; e < num_edges; ++e)
                    if (point[program_.binaries[e]] > 0.5)
                        cut.push_back({program_.binaries[e], 1.0});
                append_less_equal(working_, cut, static_cast<double>(cut.size()) - 1.0,
                                  "nogood" + std::to_string(result_.cuts_added));
                ++result_.cuts_added;
                open.push(Open{bound, pushed++, node.state});
            }
            finish_node(result_.z_P);
            continue;
        }

        if (solved.kind == NodeSolve::Kind::optimal) {
            const std::vector<int> order = follow_flow(graph, solved.primal, program_.layout);
            offer_sequence(order);
            if (bound >= cutoff()) {
                pruned_min = std::min(pruned_min, bound);
                finish_node(result_.z_P);
                continue;
            }
        }

        Open one{bound, pushed++, node.state};
        one.state[branch] = kOne;
        Open zero{bound, pushed++, std::move(node.state)};
        zero.state[branch] = kZero;
        open.push(std::move(zero));
        plunge = std::move(one);
        finish_node(bound);
    }

    if (!hit_limit) {
        if (result_.incumbent) {
            result_.status = MipStatus::optimal;
            result_.z_D = std::max(result_.z_D, std::min(pruned_min, result_.z_P));
        } else {
            result_.status = MipStatus::infeasible;
        }
    } else {
        result_.status = result_.incumbent ? MipStatus::feasible : MipStatus::no_incumbent;
        result_.z_D = std::max(result_.z_D, std::min(open_bound(result_.z_P), result_.z_P));
    }
    if (result_.incumbent)
        result_.z_D = std::min(result_.z_D, result_.z_P);
    result_.gap_percent = gap_percent(result_.z_P, result_.z_D);
    polish();
    result_.runtime = elapsed();
    log_line();
    return result_;
}

}  // namespace

MipResult solve_mip(const MixedBinaryConicProgram& program, const MipSettings& settings)
{
    BranchAndBound bnb(program, settings);
    return bnb.run();
}

}  // namespace mttsp
