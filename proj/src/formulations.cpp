#include "mttsp/formulations.hpp"

#include <cmath>
#include <ostream>

namespace mttsp {

const char* to_string(Formulation formulation)
{
    return formulation == Formulation::bigm ? "bigm" : "gcs";
}

Formulation parse_formulation(const std::string& name)
{
    if (name == "bigm")
        return Formulation::bigm;
    if (name == "gcs")
        return Formulation::gcs;
    throw std::invalid_argument("unknown formulation '" + name + "' (expected bigm or gcs)");
}

std::vector<std::pair<std::string, int>> VariableLayout::slots() const
{
    std::vector<std::pair<std::string, int>> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string tag = "[" + std::to_string(i) + "]";
        out.emplace_back("t" + tag, nodes[i].t);
        out.emplace_back("p_x" + tag, nodes[i].px);
        out.emplace_back("p_y" + tag, nodes[i].py);
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const EdgeColumns& c = edges[e];
        const std::string tag = "[" + std::to_string(e) + "]";
        out.emplace_back("y" + tag, c.y);
        out.emplace_back((formulation == Formulation::bigm ? "ltilde" : "l") + tag, c.length);
        out.emplace_back("l_x" + tag, c.lx);
        out.emplace_back("l_y" + tag, c.ly);
        if (formulation == Formulation::bigm) {
            out.emplace_back("lbar" + tag, c.lbar);
        } else {
            out.emplace_back("z_x" + tag, c.zx);
            out.emplace_back("z_y" + tag, c.zy);
            out.emplace_back("z_t" + tag, c.zt);
            out.emplace_back("z'_x" + tag, c.zpx);
            out.emplace_back("z'_y" + tag, c.zpy);
            out.emplace_back("z'_t" + tag, c.zpt);
        }
    }
    return out;
}

void VariableLayout::audit(int num_columns) const
{
    if (static_cast<int>(symbols.size()) != num_columns)
        throw std::logic_error("layout: symbol table does not cover the program");
    std::vector<int> owner(num_columns, 0);
    for (const auto& [name, column] : slots()) {
        if (column < 0 || column >= num_columns)
            throw std::logic_error("layout: slot " + name + " has no column");
        if (owner[column]++ != 0)
            throw std::logic_error("layout: column " + std::to_string(column) +
                                   " is shared by two slots (" + name + ")");
    }
    for (int j = 0; j < num_columns; ++j)
        if (owner[j] == 0 && symbols[j].rfind("slack[", 0) != 0)
            throw std::logic_error("layout: column " + symbols[j] + " maps to no symbol");
}

namespace {

std::string edge_tag(const Edge& e)
{
    return "[" + std::to_string(e.tail) + "," + std::to_string(e.head) + "]";
}

std::string node_tag(int node)
{
    return "[" + std::to_string(node) + "]";
}

/// lo <= expr <= hi as one equality when the interval is a point.
void add_range(ProgramBuilder& b, const LinearExpr& expr, double lo, double hi,
               const std::string& name, std::vector<int>* slacks = nullptr)
{
    if (lo == hi) {
        b.add_equality(expr, lo, name);
        return;
    }
    const int a = b.add_greater_equal(expr, lo, name + ".lo");
    const int c = b.add_less_equal(expr, hi, name + ".hi");
    if (slacks) {
        slacks->push_back(a);
        slacks->push_back(c);
    }
}

void add_degree_rows(ProgramBuilder& b, const Graph& g, const std::vector<EdgeColumns>& cols,
                     bool with_conservation)
{
    const auto sum_y = [&](const std::vector<int>& ids, double sign) {
        LinearExpr expr;
        for (int id : ids)
            expr.push_back({cols[id].y, sign});
        return expr;
    };
    b.add_equality(sum_y(g.out_edges(g.source()), 1.0), 1.0, "out(s)");
    b.add_equality(sum_y(g.in_edges(g.sink()), 1.0), 1.0, "in(s')");
    for (int i = 1; i <= g.num_targets(); ++i)
        b.add_equality(sum_y(g.in_edges(i), 1.0), 1.0, "in" + node_tag(i));
    if (with_conservation) {
        for (int i = 1; i <= g.num_targets(); ++i) {
            LinearExpr expr = sum_y(g.in_edges(i), 1.0);
            const LinearExpr out = sum_y(g.out_edges(i), -1.0);
            expr.insert(expr.end(), out.begin(), out.end());
            b.add_equality(expr, 0.0, "flow" + node_tag(i));
        }
    }
}

MixedBinaryConicProgram finish(ProgramBuilder& b, VariableLayout layout, const Instance& instance,
                               const Graph& graph, std::vector<std::vector<int>> vanishing)
{
    MixedBinaryConicProgram out;
    out.base = b.build();
    layout.symbols = out.base.variable_names;
    layout.audit(out.base.num_variables());
    for (const EdgeColumns& c : layout.edges)
        out.binaries.push_back(c.y);
    out.layout = std::move(layout);
    out.instance = instance;
    out.graph = graph;
    out.vanishing = std::move(vanishing);
    return out;
}

}  // namespace

MixedBinaryConicProgram build_bigm(const Instance& instance, const Graph& graph)
{
    ProgramBuilder b;
    VariableLayout layout;
    layout.formulation = Formulation::bigm;
    const double T = instance.horizon;
    const double R = instance.diagonal();
    const double v = instance.v_max;

    for (int i = 0; i < graph.num_nodes(); ++i) {
        const std::string tag = node_tag(i);
        NodeColumns c;
        c.t = b.add_free("t" + tag);
        c.px = b.add_free("p_x" + tag);
        c.py = b.add_free("p_y" + tag);
        layout.nodes.push_back(c);
    }
    for (const Edge& e : graph.edges()) {
        const std::string tag = edge_tag(e);
        EdgeColumns c;
        c.y = b.add_nonneg("y" + tag);
        c.length = b.add_nonneg("ltilde" + tag);
        const std::string cone[] = {"lbar" + tag, "l_x" + tag, "l_y" + tag};
        c.lbar = b.add_soc(cone);
        c.lx = c.lbar + 1;
        c.ly = c.lbar + 2;
        b.add_cost(c.length, 1.0);
        layout.edges.push_back(c);
    }

    add_degree_rows(b, graph, layout.edges, true);
    for (int i = 0; i < graph.num_nodes(); ++i) {
        const NodeColumns& c = layout.nodes[i];
        const Target m = node_motion(instance, i);
        add_range(b, {{c.t, 1.0}}, m.window.lo, m.window.hi, "window" + node_tag(i));
        b.add_equality({{c.px, 1.0}, {c.t, -m.velocity.x()}}, m.ref_pos.x(), "pos_x" + node_tag(i));
        b.add_equality({{c.py, 1.0}, {c.t, -m.velocity.y()}}, m.ref_pos.y(), "pos_y" + node_tag(i));
    }
    for (const Edge& e : graph.edges()) {
        const std::string tag = edge_tag(e);
        const EdgeColumns& c = layout.edges[e.id];
        const NodeColumns& ni = layout.nodes[e.tail];
        const NodeColumns& nj = layout.nodes[e.head];
        b.add_less_equal({{c.y, 1.0}}, 1.0, "ub" + tag);
        b.add_equality({{c.lx, 1.0}, {nj.px, -1.0}, {ni.px, 1.0}}, 0.0, "def_lx" + tag);
        b.add_equality({{c.ly, 1.0}, {nj.py, -1.0}, {ni.py, 1.0}}, 0.0, "def_ly" + tag);
        // ltilde <= v (t_j - t_i + T (1 - y))
        b.add_greater_equal({{nj.t, v}, {ni.t, -v}, {c.y, -v * T}, {c.length, -1.0}}, -v * T,
                            "speed" + tag);
        // lbar = ltilde + R (1 - y)
        b.add_equality({{c.lbar, 1.0}, {c.length, -1.0}, {c.y, R}}, R, "cone" + tag);
    }
    return finish(b, std::move(layout), instance, graph,
                  std::vector<std::vector<int>>(graph.num_edges()));
}

MixedBinaryConicProgram build_gcs(const Instance& instance, const Graph& graph)
{
    ProgramBuilder b;
    VariableLayout layout;
    layout.formulation = Formulation::gcs;
    const double v = instance.v_max;

    std::vector<std::vector<int>> vanishing(graph.num_edges());
    for (const Edge& e : graph.edges()) {
        const std::string tag = edge_tag(e);
        EdgeColumns c;
        c.y = b.add_nonneg("y" + tag);
        c.zx = b.add_free("z_x" + tag);
        c.zy = b.add_free("z_y" + tag);
        c.zt = b.add_free("z_t" + tag);
        c.zpx = b.add_free("z'_x" + tag);
        c.zpy = b.add_free("z'_y" + tag);
        c.zpt = b.add_free("z'_t" + tag);
        const std::string cone[] = {"l" + tag, "l_x" + tag, "l_y" + tag};
        c.length = b.add_soc(cone);
        c.lx = c.length + 1;
        c.ly = c.length + 2;
        b.add_cost(c.length, 1.0);
        layout.edges.push_back(c);
        vanishing[e.id] = {c.zx, c.zy, c.zt, c.zpx, c.zpy, c.zpt, c.length, c.lx, c.ly};
    }

    add_degree_rows(b, graph, layout.edges, false);
    // Coupled conservation: (z'_t, y) summed over E_in equals (z_t, y) over E_out.
    for (int i = 1; i <= graph.num_targets(); ++i) {
        LinearExpr time_expr, flow_expr;
        for (int id : graph.in_edges(i)) {
            time_expr.push_back({layout.edges[id].zpt, 1.0});
            flow_expr.push_back({layout.edges[id].y, 1.0});
        }
        for (int id : graph.out_edges(i)) {
            time_expr.push_back({layout.edges[id].zt, -1.0});
            flow_expr.push_back({layout.edges[id].y, -1.0});
        }
        b.add_equality(time_expr, 0.0, "flow_t" + node_tag(i));
        b.add_equality(flow_expr, 0.0, "flow" + node_tag(i));
    }
    for (const Edge& e : graph.edges()) {
        const std::string tag = edge_tag(e);
        const EdgeColumns& c = layout.edges[e.id];
        std::vector<int>& gone = vanishing[e.id];
        const Target mi = node_motion(instance, e.tail);
        const Target mj = node_motion(instance, e.head);

        b.add_less_equal({{c.y, 1.0}}, 1.0, "ub" + tag);
        b.add_equality({{c.lx, 1.0}, {c.zpx, -1.0}, {c.zx, 1.0}}, 0.0, "def_lx" + tag);
        b.add_equality({{c.ly, 1.0}, {c.zpy, -1.0}, {c.zy, 1.0}}, 0.0, "def_ly" + tag);
        gone.push_back(
            b.add_greater_equal({{c.zpt, v}, {c.zt, -v}, {c.length, -1.0}}, 0.0, "speed" + tag));

        // Perspective of X_i for z and of X_j for z'.
        const auto perspective = [&](int x, int y, int t, const Target& m, const std::string& side) {
            const TimeWindow& w = m.window;
            if (w.lo == w.hi) {
                b.add_equality({{t, 1.0}, {c.y, -w.lo}}, 0.0, side + "_t" + tag);
            } else {
                gone.push_back(b.add_greater_equal({{t, 1.0}, {c.y, -w.lo}}, 0.0, side + "_t.lo" + tag));
                gone.push_back(b.add_less_equal({{t, 1.0}, {c.y, -w.hi}}, 0.0, side + "_t.hi" + tag));
            }
            b.add_equality({{x, 1.0}, {t, -m.velocity.x()}, {c.y, -m.ref_pos.x()}}, 0.0,
                           side + "_x" + tag);
            b.add_equality({{y, 1.0}, {t, -m.velocity.y()}, {c.y, -m.ref_pos.y()}}, 0.0,
                           side + "_y" + tag);
        };
        perspective(c.zx, c.zy, c.zt, mi, "z");
        perspective(c.zpx, c.zpy, c.zpt, mj, "z'");
    }
    return finish(b, std::move(layout), instance, graph, std::move(vanishing));
}

MixedBinaryConicProgram build(Formulation formulation, const Instance& instance)
{
    const Graph graph = Graph::build(instance);
    return formulation == Formulation::bigm ? build_bigm(instance, graph)
                                            : build_gcs(instance, graph);
}

ConicProgram relax(const MixedBinaryConicProgram& program)
{
    return program.base;
}

std::vector<int> extract_sequence(const Graph& graph, const VariableLayout& layout,
                                  const Eigen::VectorXd& primal, double tol)
{
    std::vector<int> chosen_out(graph.num_nodes(), -1);
    int chosen = 0;
    for (const Edge& e : graph.edges()) {
        const double y = primal[layout.edges[e.id].y];
        const double r = std::round(y);
        if (std::abs(y - r) > tol || (r != 0.0 && r != 1.0))
            throw TourStructureError("edge " + edge_tag(e) + " has non-binary flow " +
                                     std::to_string(y));
        if (r == 1.0) {
            if (chosen_out[e.tail] != -1)
                throw TourStructureError("node " + std::to_string(e.tail) +
                                         " has two outgoing edges");
            chosen_out[e.tail] = e.head;
            ++chosen;
        }
    }
    std::vector<int> sequence{graph.source()};
    std::vector<char> visited(graph.num_nodes(), 0);
    visited[graph.source()] = 1;
    int node = graph.source();
    while (node != graph.sink()) {
        const int next = chosen_out[node];
        if (next == -1)
            throw TourStructureError("path stops at node " + std::to_string(node));
        if (visited[next])
            throw TourStructureError("path revisits node " + std::to_string(next));
        visited[next] = 1;
        sequence.push_back(next);
        node = next;
    }
    if (static_cast<int>(sequence.size()) != graph.num_nodes() || chosen != graph.num_nodes() - 1)
        throw TourStructureError("chosen edges are not a single path through every target");
    return sequence;
}

Tour recover_tour(const Instance& instance, const Graph& graph, const VariableLayout& layout,
                  const Eigen::VectorXd& primal, double tol)
{
    Tour tour;
    tour.sequence = extract_sequence(graph, layout, primal, tol);
    for (int node : tour.sequence) {
        double x = 0.0, y = 0.0, t = 0.0;
        if (layout.formulation == Formulation::bigm) {
            const NodeColumns& c = layout.nodes[node];
            x = primal[c.px];
            y = primal[c.py];
            t = primal[c.t];
        } else if (node == graph.source()) {
            for (int id : graph.out_edges(node)) {
                const EdgeColumns& c = layout.edges[id];
                x += primal[c.zx];
                y += primal[c.zy];
                t += primal[c.zt];
            }
        } else {
            for (int id : graph.in_edges(node)) {
                const EdgeColumns& c = layout.edges[id];
                x += primal[c.zpx];
                y += primal[c.zpy];
                t += primal[c.zpt];
            }
        }
        tour.positions.emplace_back(x, y);
        tour.times.push_back(t);
    }
    (void)instance;
    tour.cost = tour.path_length();
    return tour;
}

BiconvexPoint biconvex_point(const Instance& instance, const Graph& graph, const Tour& tour)
{
    BiconvexPoint point;
    point.y.assign(graph.num_edges(), 0.0);
    point.p.assign(graph.num_nodes(), Vec2::Zero());
    point.t.assign(graph.num_nodes(), 0.0);
    for (std::size_t k = 0; k < tour.sequence.size(); ++k) {
        point.p[tour.sequence[k]] = tour.positions[k];
        point.t[tour.sequence[k]] = tour.times[k];
        if (k > 0) {
            const int id = graph.find(tour.sequence[k - 1], tour.sequence[k]);
            if (id < 0)
                throw TourStructureError("tour uses a missing edge");
            point.y[id] = 1.0;
        }
    }
    (void)instance;
    return point;
}

std::vector<std::string> check_biconvex(const Instance& instance, const Graph& graph,
                                        const std::vector<double>& y, const std::vector<Vec2>& p,
                                        const std::vector<double>& t, double tol)
{
    std::vector<std::string> bad;
    const auto sum = [&](const std::vector<int>& ids) {
        double s = 0.0;
        for (int id : ids)
            s += y[id];
        return s;
    };
    if (std::abs(sum(graph.out_edges(graph.source())) - 1.0) > tol)
        bad.push_back("out(s)");
    if (std::abs(sum(graph.in_edges(graph.sink())) - 1.0) > tol)
        bad.push_back("in(s')");
    for (int i = 1; i <= graph.num_targets(); ++i) {
        if (std::abs(sum(graph.in_edges(i)) - 1.0) > tol)
            bad.push_back("in" + node_tag(i));
        if (std::abs(sum(graph.in_edges(i)) - sum(graph.out_edges(i))) > tol)
            bad.push_back("flow" + node_tag(i));
    }
    for (int i = 0; i < graph.num_nodes(); ++i) {
        const Target m = node_motion(instance, i);
        if (!m.window.contains(t[i], tol))
            bad.push_back("window" + node_tag(i));
        const Vec2 expected = m.position(t[i]);
        if (std::abs(p[i].x() - expected.x()) > tol)
            bad.push_back("pos_x" + node_tag(i));
        if (std::abs(p[i].y() - expected.y()) > tol)
            bad.push_back("pos_y" + node_tag(i));
    }
    for (const Edge& e : graph.edges()) {
        const double ye = y[e.id];
        if (std::abs(ye - std::round(ye)) > tol || ye < -tol || ye > 1.0 + tol)
            bad.push_back("binary" + edge_tag(e));
        // z = y (p_i, t_i), z' = y (p_j, t_j); the tightest l is the cone norm.
        const Vec2 l_xy = ye * (p[e.head] - p[e.tail]);
        const double l = l_xy.norm();
        if (l > instance.v_max * ye * (t[e.head] - t[e.tail]) + tol)
            bad.push_back("speed" + edge_tag(e));
    }
    return bad;
}

void dump(const MixedBinaryConicProgram& program, std::ostream& os)
{
    os << "formulation " << to_string(program.layout.formulation) << "\n";
    os << "binaries";
    for (int column : program.binaries)
        os << " " << column;
    os << "\n";
    dump(program.base, os);
}

}  // namespace mttsp
