#include "mttsp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "mttsp/oracle.hpp"
#include "mttsp/text_format.hpp"

namespace mttsp {

double Instance::diagonal() const
{
    return std::numbers::sqrt2 * side;
}

bool Instance::in_square(const Vec2& p, double tol) const
{
    const double half = 0.5 * side + tol;
    return ((p - depot).array().abs() <= half).all();
}

Target node_motion(const Instance& instance, int node)
{
    const int n = static_cast<int>(instance.size());
    if (node == kDepotStart)
        return Target{kDepotStart, instance.depot, Vec2::Zero(), {0.0, 0.0}};
    if (node == n + 1)
        return Target{n + 1, instance.depot, Vec2::Zero(), {0.0, instance.horizon}};
    if (node < 0 || node > n + 1)
        throw std::out_of_range("node " + std::to_string(node) + " out of range");
    return instance.targets[node - 1];
}

Vec2 target_position(const Target& target, double t)
{
    return target.position(t);
}

std::optional<double> earliest_intercept(const Vec2& agent_pos, double agent_time,
                                         const Target& target, double v_max)
{
    const double t_start = std::max(agent_time, target.window.lo);
    if (t_start > target.window.hi)
        return std::nullopt;

    // Meeting at agent_time + tau requires |d + tau v| <= v_max tau, i.e.
    // f(tau) = (|v|^2 - v_max^2) tau^2 + 2 (d.v) tau + |d|^2 <= 0.
    const Vec2 d = target.position(agent_time) - agent_pos;
    const Vec2& v = target.velocity;
    const double qa = v.squaredNorm() - v_max * v_max;
    const double qb = 2.0 * d.dot(v);
    const double qc = d.squaredNorm();
    const auto reachable = [&](double tau) { return (qa * tau + qb) * tau + qc <= 0.0; };

    const double lo = t_start - agent_time;
    const double hi = target.window.hi - agent_time;
    if (reachable(lo))
        return agent_time + lo;

    // Feasible taus form an interval (or a ray); find where it starts past lo.
    double first = std::numeric_limits<double>::infinity();
    if (qa == 0.0) {
        if (qb < 0.0)
            first = -qc / qb;
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (qb + std::copysign(sq, qb));
            double r1 = q / qa;
            double r2 = q != 0.0 ? qc / q : r1;
            if (r1 > r2)
                std::swap(r1, r2);
            // f <= 0 on [r1, r2] if qa > 0, outside (r1, r2) if qa < 0.
            first = qa > 0.0 ? (r2 >= lo ? std::max(r1, lo) : first) : std::max(r2, lo);
        }
    }
    if (!(first <= hi))
        return std::nullopt;
    return agent_time + first;
}

Instance generate(std::size_t n, std::uint64_t seed, const GeneratorParams& params)
{
    if (n == 0)
        throw std::invalid_argument("generate: need at least one target");
    if (!(params.speed_lo <= params.speed_hi) || params.speed_lo < 0.0)
        throw std::invalid_argument("generate: empty speed range");
    if (!(params.side > 0.0) || !(params.horizon > 0.0))
        throw std::invalid_argument("generate: side and horizon must be positive");
    if (params.speed_lo * params.horizon > std::numbers::sqrt2 * params.side)
        throw std::invalid_argument(
            "generate: slowest target leaves the square within the horizon");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double half = 0.5 * params.side;

    Instance instance;
    instance.side = params.side;
    instance.horizon = params.horizon;
    instance.v_max = params.v_max;
    instance.depot = Vec2::Zero();
    instance.targets.reserve(n);

    for (std::size_t k = 0; k < n; ++k) {
        Target target;
        target.id = static_cast<int>(k) + 1;
        target.window = {0.0, params.horizon};
        // Rejection on (speed, heading): the whole segment over [0, T] must fit.
        for (;;) {
            const double speed = params.speed_lo + (params.speed_hi - params.speed_lo) * unit(rng);
            const double heading = 2.0 * std::numbers::pi * unit(rng);
            const Vec2 velocity = speed * Vec2(std::cos(heading), std::sin(heading));
            const Vec2 travel = params.horizon * velocity;
            if (std::abs(travel.x()) > params.side || std::abs(travel.y()) > params.side)
                continue;
            // ref_pos and ref_pos + travel both inside [-half, half]^2.
            const Vec2 lo = (-half - travel.array().min(0.0)).matrix();
            const Vec2 hi = (half - travel.array().max(0.0)).matrix();
            target.velocity = velocity;
            target.ref_pos = Vec2(lo.x() + (hi.x() - lo.x()) * unit(rng),
                                  lo.y() + (hi.y() - lo.y()) * unit(rng));
            break;
        }
        instance.targets.push_back(target);
    }
    return instance;
}

TimeWindow window_around(double visit_time, double duration, double horizon)
{
    if (duration >= horizon)
        return {0.0, horizon};
    const double lo = std::max(0.0, std::min(visit_time - 0.5 * duration, horizon - duration));
    return {lo, lo + duration};
}

WindowAssignment assign_windows(const Instance& instance, std::span<const double> durations,
                                double v_min_agent, std::uint64_t seed, int max_attempts)
{
    if (durations.empty())
        throw std::invalid_argument("assign_windows: no durations");
    if (!std::is_sorted(durations.begin(), durations.end()))
        throw std::invalid_argument("assign_windows: durations must be ascending");
    if (!(durations.front() > 0.0))
        throw std::invalid_argument("assign_windows: durations must be positive");

    // Construction runs on the unrestricted instance.
    Instance open = instance;
    for (Target& t : open.targets)
        t.window = {0.0, instance.horizon};

    std::mt19937_64 rng(seed);
    std::vector<int> sequence(instance.size());
    std::iota(sequence.begin(), sequence.end(), 1);

    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        std::shuffle(sequence.begin(), sequence.end(), rng);
        const std::optional<QuickestTour> tour = quickest_tour(open, sequence, v_min_agent);
        if (!tour || tour->completion_time > instance.horizon)
            continue;

        WindowAssignment out;
        out.sequence = sequence;
        out.visit_times = tour->visit_times;
        out.completion_time = tour->completion_time;
        out.attempts = attempt;
        for (double duration : durations) {
            Instance windowed = instance;
            for (std::size_t k = 0; k < sequence.size(); ++k) {
                Target& target = windowed.targets[sequence[k] - 1];
                target.window = window_around(tour->visit_times[k], duration, instance.horizon);
            }
            out.instances.push_back(std::move(windowed));
        }
        return out;
    }
    throw GenerationError("assign_windows: no sequence finished within the horizon after " +
                          std::to_string(max_attempts) + " attempts");
}

void validate(const Instance& instance)
{
    const auto fail = [](const std::string& what) { throw InstanceError(what); };
    if (!(instance.side > 0.0) || !std::isfinite(instance.side))
        fail("side must be positive");
    if (!(instance.horizon > 0.0) || !std::isfinite(instance.horizon))
        fail("horizon must be positive");
    if (!(instance.v_max > 0.0) || !std::isfinite(instance.v_max))
        fail("vmax must be positive");
    if (!instance.depot.allFinite())
        fail("depot must be finite");

    std::set<int> ids;
    for (const Target& t : instance.targets) {
        const std::string who = "target " + std::to_string(t.id) + ": ";
        if (t.id <= 0)
            fail(who + "id must be positive");
        if (!ids.insert(t.id).second)
            fail(who + "duplicate id");
        if (!t.ref_pos.allFinite() || !t.velocity.allFinite())
            fail(who + "non-finite trajectory");
        if (!(t.window.lo <= t.window.hi))
            fail(who + "window start after window end");
        if (t.window.lo < 0.0 || t.window.hi > instance.horizon)
            fail(who + "window outside [0, horizon]");
        if (t.speed() > instance.v_max)
            fail(who + "faster than the agent");
        const double tol = 1e-9 * instance.side;
        if (!instance.in_square(t.window_start(), tol) || !instance.in_square(t.window_end(), tol))
            fail(who + "leaves the square during its window");
    }
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHeader = "mttsp-instance";
constexpr int kVersion = 1;

}  // namespace

std::string serialize(const Instance& instance)
{
    std::ostringstream os;
    const auto num = format_number;
    os << kHeader << " " << kVersion << "\n";
    os << "side " << num(instance.side) << "\n";
    os << "horizon " << num(instance.horizon) << "\n";
    os << "vmax " << num(instance.v_max) << "\n";
    os << "depot " << num(instance.depot.x()) << " " << num(instance.depot.y()) << "\n";
    os << "targets " << instance.size() << "\n";
    for (const Target& t : instance.targets) {
        os << "target " << t.id << " ref_pos " << num(t.ref_pos.x()) << " " << num(t.ref_pos.y())
           << " velocity " << num(t.velocity.x()) << " " << num(t.velocity.y()) << " window "
           << num(t.window.lo) << " " << num(t.window.hi) << "\n";
    }
    return os.str();
}

Instance parse_instance(std::string_view text)
{
    const std::vector<TextLine> lines = tokenize_lines(text);
    if (lines.empty())
        throw ParseError(0, kHeader, "empty input");
    const TextLine& header = lines.front();
    if (header.key() != kHeader)
        throw ParseError(header.number, kHeader, "missing header");
    expect_tokens(header, 2, "version");
    if (parse_integer(header, 1, "version") != kVersion)
        throw ParseError(header.number, "version", "unsupported version " + header.tokens[1]);

    Instance instance;
    instance.targets.clear();
    std::set<std::string> seen;
    long long declared_targets = -1;

    for (std::size_t k = 1; k < lines.size(); ++k) {
        const TextLine& line = lines[k];
        const std::string& key = line.key();
        if (key != "target" && !seen.insert(key).second)
            throw ParseError(line.number, key, "duplicate field");
        if (key == "side") {
            expect_tokens(line, 2, key);
            instance.side = parse_number(line, 1, key);
        } else if (key == "horizon") {
            expect_tokens(line, 2, key);
            instance.horizon = parse_number(line, 1, key);
        } else if (key == "vmax") {
            expect_tokens(line, 2, key);
            instance.v_max = parse_number(line, 1, key);
        } else if (key == "depot") {
            expect_tokens(line, 3, key);
            instance.depot = Vec2(parse_number(line, 1, key), parse_number(line, 2, key));
        } else if (key == "targets") {
            expect_tokens(line, 2, key);
            declared_targets = parse_integer(line, 1, key);
            if (declared_targets < 0)
                throw ParseError(line.number, key, "negative count");
        } else if (key == "target") {
            expect_tokens(line, 11, key);
            const auto expect_word = [&](std::size_t idx, const char* word) {
                if (line.tokens[idx] != word)
                    throw ParseError(line.number, word,
                                     "expected '" + std::string(word) + "', got '" +
                                         line.tokens[idx] + "'");
            };
            expect_word(2, "ref_pos");
            expect_word(5, "velocity");
            expect_word(8, "window");
            Target t;
            t.id = static_cast<int>(parse_integer(line, 1, "id"));
            t.ref_pos = Vec2(parse_number(line, 3, "ref_pos"), parse_number(line, 4, "ref_pos"));
            t.velocity = Vec2(parse_number(line, 6, "velocity"), parse_number(line, 7, "velocity"));
            t.window = {parse_number(line, 9, "window"), parse_number(line, 10, "window")};
            if (!(t.window.lo <= t.window.hi))
                throw ParseError(line.number, "window", "window start after window end");
            instance.targets.push_back(t);
        } else {
            throw ParseError(line.number, key, "unknown field");
        }
    }

    const std::size_t end_line = lines.back().number;
    for (const char* required : {"side", "horizon", "vmax", "depot", "targets"})
        if (!seen.contains(required))
            throw ParseError(end_line, required, "missing field");
    if (declared_targets != static_cast<long long>(instance.size()))
        throw ParseError(end_line, "targets",
                         "declared " + std::to_string(declared_targets) + " targets, found " +
                             std::to_string(instance.size()));
    try {
        validate(instance);
    } catch (const InstanceError& e) {
        throw ParseError(0, "instance", e.what());
    }
    return instance;
}

Instance load_instance(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_instance(buffer.str());
}

void save_instance(const Instance& instance, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << serialize(instance);
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

}  // namespace mttsp
