// SPDX-License-Identifier: Apache-2.0

#include "mmw/navsim.hpp"

#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <tuple>

namespace mmw
{

const char *to_string(Policy p)
{
    switch (p)
    {
    case Policy::Baseline:
        return "Baseline";
    case Policy::AoaBySnr:
        return "AoaBySnr";
    case Policy::AoaWhenLos:
        return "AoaWhenLos";
    case Policy::AoaWhenLosOrFirstNlos:
        return "AoaWhenLosOrFirstNlos";
    case Policy::VisualLos:
        return "VisualLos";
    }
    return "?";
}

Policy policy_from_string(const std::string &s)
{
    for (Policy p : kAllPolicies)
        if (s == to_string(p))
            return p;
    throw DataError("unknown policy '" + s + "'");
}

const char *to_string(Difficulty d)
{
    switch (d)
    {
    case Difficulty::Easy:
        return "Easy";
    case Difficulty::Moderate:
        return "Moderate";
    case Difficulty::Hard:
        return "Hard";
    }
    return "?";
}

Difficulty difficulty_from_string(const std::string &s)
{
    for (Difficulty d : {Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard})
        if (s == to_string(d))
            return d;
    throw DataError("unknown difficulty '" + s + "'");
}

const char *to_string(GoalSource g)
{
    switch (g)
    {
    case GoalSource::None:
        return "none";
    case GoalSource::Oracle:
        return "oracle";
    case GoalSource::Frontier:
        return "frontier";
    case GoalSource::Wireless:
        return "wireless";
    case GoalSource::Visual:
        return "visual";
    }
    return "?";
}

namespace
{

constexpr double kSqrt2 = 1.4142135623730951;
constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

bool passable(const OccupancyMap &m, int ix, int iy)
{
    return m.in_bounds(ix, iy) && m.at(ix, iy) != CellState::Wall;
}

// Diagonal moves must not squeeze between two blocked orthogonal cells.
bool move_ok(const OccupancyMap &m, int ix, int iy, int d)
{
    const int nx = ix + kDx[d], ny = iy + kDy[d];
    if (!passable(m, nx, ny))
        return false;
    if (d >= 4)
        return passable(m, ix + kDx[d], iy) && passable(m, ix, iy + kDy[d]);
    return true;
}

double octile(int dx, int dy)
{
    dx = std::abs(dx);
    dy = std::abs(dy);
    const int lo = std::min(dx, dy), hi = std::max(dx, dy);
    return (hi - lo) + kSqrt2 * lo;
}

// Path costs are sums of 1 and sqrt(2) steps; carrying the two counts keeps
// equal-cost comparisons exact.
struct Cost
{
    int straight = 0;
    int diag = 0;
    double value() const { return straight + kSqrt2 * diag; }
};

std::vector<double> dijkstra(const OccupancyMap &m, int src)
{
    std::vector<double> dist(m.cells.size(), std::numeric_limits<double>::infinity());
    std::vector<Cost> cost(m.cells.size());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(src)] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty())
    {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)])
            continue;
        const int ux = u % m.nx, uy = u / m.nx;
        for (int k = 0; k < 8; ++k)
        {
            if (!move_ok(m, ux, uy, k))
                continue;
            const int v = m.index(ux + kDx[k], uy + kDy[k]);
            Cost c = cost[static_cast<std::size_t>(u)];
            (k < 4 ? c.straight : c.diag) += 1;
            if (c.value() < dist[static_cast<std::size_t>(v)])
            {
                dist[static_cast<std::size_t>(v)] = c.value();
                cost[static_cast<std::size_t>(v)] = c;
                pq.push({c.value(), v});
            }
        }
    }
    return dist;
}

} // namespace

std::vector<Point2> plan_shortest(const OccupancyMap &map, const Point2 &from, const Point2 &to)
{
    const auto [sx, sy] = map.cell_of(from);
    const auto [gx, gy] = map.cell_of(to);
    if (!passable(map, sx, sy) || !passable(map, gx, gy))
        return {};
    const int src = map.index(sx, sy), dst = map.index(gx, gy);
    if (src == dst)
        return {map.center(src)};

    const Point2 a = map.center(src), b = map.center(dst);
    const Point2 dir = (b - a).normalized();
    auto line_dist = [&](int idx) {
        const Point2 v = map.center(idx) - a;
        return std::abs(v.x() * dir.y() - v.y() * dir.x());
    };

    const std::size_t n = map.cells.size();
    std::vector<Cost> g(n);
    std::vector<double> gv(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    // (f, line distance, h, index): lexicographic order gives deterministic,
    // line-hugging expansions among equal-cost candidates.
    using Item = std::tuple<double, double, double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    gv[static_cast<std::size_t>(src)] = 0.0;
    open.push({octile(gx - sx, gy - sy), 0.0, octile(gx - sx, gy - sy), src});
    while (!open.empty())
    {
        const int u = std::get<3>(open.top());
        open.pop();
        if (closed[static_cast<std::size_t>(u)])
            continue;
        closed[static_cast<std::size_t>(u)] = 1;
        if (u == dst)
            break;
        const int ux = u % map.nx, uy = u / map.nx;
        for (int k = 0; k < 8; ++k)
        {
            if (!move_ok(map, ux, uy, k))
                continue;
            const int vx = ux + kDx[k], vy = uy + kDy[k];
            const int v = map.index(vx, vy);
            if (closed[static_cast<std::size_t>(v)])
                continue;
            Cost c = g[static_cast<std::size_t>(u)];
            (k < 4 ? c.straight : c.diag) += 1;
            const double cv = c.value();
            const double old = gv[static_cast<std::size_t>(v)];
            const bool better = cv < old || (cv == old && line_dist(u) < line_dist(parent[static_cast<std::size_t>(v)]));
            if (!better)
                continue;
            g[static_cast<std::size_t>(v)] = c;
            gv[static_cast<std::size_t>(v)] = cv;
            parent[static_cast<std::size_t>(v)] = u;
            const double h = octile(gx - vx, gy - vy);
            open.push({cv + h, line_dist(v), h, v});
        }
    }
    if (parent[static_cast<std::size_t>(dst)] < 0)
        return {};
    std::vector<Point2> path;
    for (int c = dst; c >= 0; c = parent[static_cast<std::size_t>(c)])
    {
        path.push_back(map.center(c));
        if (c == src)
            break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

double path_cost_cells(const OccupancyMap &map, const std::vector<Point2> &path)
{
    Cost c;
    for (std::size_t i = 1; i < path.size(); ++i)
    {
        const auto [ax, ay] = map.cell_of(path[i - 1]);
        const auto [bx, by] = map.cell_of(path[i]);
        const int dx = std::abs(bx - ax), dy = std::abs(by - ay);
        if (dx + dy == 1)
            c.straight += 1;
        else if (dx == 1 && dy == 1)
            c.diag += 1;
        else
            throw std::invalid_argument("path_cost_cells: path cells are not 8-adjacent");
    }
    return c.value();
}

Point2 frontier_goal(const OccupancyMap &known, const Point2 &pos)
{
    const int nx = known.nx, ny = known.ny;
    std::vector<std::uint8_t> is_frontier(known.cells.size(), 0);
    bool any = false;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
        {
            if (known.at(ix, iy) != CellState::Free)
                continue;
            for (int k = 0; k < 8; ++k)
            {
                const int x = ix + kDx[k], y = iy + kDy[k];
                if (known.in_bounds(x, y) && known.at(x, y) == CellState::Unknown)
                {
                    is_frontier[static_cast<std::size_t>(known.index(ix, iy))] = 1;
                    any = true;
                    break;
                }
            }
        }
    if (!any)
        throw NoFrontier("frontier_goal: map fully explored");

    const auto [px, py] = known.cell_of(pos);
    const auto dist = dijkstra(known, known.index(px, py));

    // 8-connected clusters, scanned in index order so each cluster is
    // identified by its lowest cell index.
    std::vector<int> label(known.cells.size(), -1);
    double best_d = std::numeric_limits<double>::infinity();
    std::vector<int> best_cells;
    for (int start = 0; start < static_cast<int>(known.cells.size()); ++start)
    {
        if (!is_frontier[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0)
            continue;
        std::vector<int> cells{start};
        label[static_cast<std::size_t>(start)] = start;
        for (std::size_t q = 0; q < cells.size(); ++q)
        {
            const int c = cells[q];
            for (int k = 0; k < 8; ++k)
            {
                const int x = c % nx + kDx[k], y = c / nx + kDy[k];
                if (!known.in_bounds(x, y))
                    continue;
                const int v = known.index(x, y);
                if (is_frontier[static_cast<std::size_t>(v)] && label[static_cast<std::size_t>(v)] < 0)
                {
                    label[static_cast<std::size_t>(v)] = start;
                    cells.push_back(v);
                }
            }
        }
        double d = std::numeric_limits<double>::infinity();
        for (int c : cells)
            d = std::min(d, dist[static_cast<std::size_t>(c)]);
        if (d < best_d)
        {
            best_d = d;
            best_cells = std::move(cells);
        }
    }
    if (best_cells.empty())
        throw NoFrontier("frontier_goal: no reachable frontier");

    Point2 centroid = Point2::Zero();
    for (int c : best_cells)
        centroid += known.center(c);
    centroid /= static_cast<double>(best_cells.size());
    std::sort(best_cells.begin(), best_cells.end());
    int goal = best_cells.front();
    double goal_d = (known.center(goal) - centroid).squaredNorm();
    for (int c : best_cells)
    {
        const double d = (known.center(c) - centroid).squaredNorm();
        if (d < goal_d - 1e-12)
        {
            goal = c;
            goal_d = d;
        }
    }
    return known.center(goal);
}

bool policy_admits(Policy policy, LinkState s)
{
    switch (policy)
    {
    case Policy::AoaBySnr:
        return true;
    case Policy::AoaWhenLos:
        return s == LinkState::LOS;
    case Policy::AoaWhenLosOrFirstNlos:
        return s == LinkState::LOS || s == LinkState::FirstOrderNLOS;
    default:
        return false;
    }
}

std::optional<Point2> wireless_goal(const Point2 &pos, const std::vector<PathEstimate> &estimates,
                                    LinkState state_pred, Policy policy, const NavConfig &cfg, double side_m)
{
    if (estimates.empty() || !policy_admits(policy, state_pred))
        return std::nullopt;
    const auto best = std::max_element(estimates.begin(), estimates.end(),
                                       [](const auto &a, const auto &b) { return a.snr_db < b.snr_db; });
    if (best->snr_db < cfg.snr_gate_db)
        return std::nullopt;
    const double th = deg2rad(best->aoa_deg);
    Point2 g = pos + cfg.wireless_goal_m * Point2(std::cos(th), std::sin(th));
    g.x() = std::clamp(g.x(), 0.0, side_m);
    g.y() = std::clamp(g.y(), 0.0, side_m);
    return g;
}

bool visual_detect(const Environment &env, const Point2 &pos, double heading_deg, const Point2 &tx,
                   const NavConfig &cfg)
{
    const double range = (tx - pos).norm();
    if (range > cfg.detect_range_m)
        return false;
    if (range > 1e-12 && angle_diff_deg(azimuth_deg(pos, tx), heading_deg) > cfg.fov_deg / 2.0)
        return false;
    return line_of_sight(env, pos, tx);
}

namespace
{

double point_segment_dist(const Point2 &p, const Point2 &a, const Point2 &b)
{
    const Point2 ab = b - a;
    const double l2 = ab.squaredNorm();
    const double t = l2 > 0.0 ? std::clamp((p - a).dot(ab) / l2, 0.0, 1.0) : 0.0;
    return (a + t * ab - p).norm();
}

class Agent
{
  public:
    Agent(const Environment &env, const OccupancyMap &truth, const NavConfig &cfg, const Point2 &start)
        : env_(env), truth_(truth), cfg_(cfg), known_(OccupancyMap::unknown_like(truth)), pos_(start)
    {
        sense();
    }

    const OccupancyMap &known() const { return known_; }
    const Point2 &pos() const { return pos_; }
    double heading() const { return heading_; }
    void set_heading(double h) { heading_ = h; }
    bool idle() const { return waypoints_.empty(); }

    /// Plans to `goal` on `map`; returns false when unreachable.
    bool plan(const OccupancyMap &map, const Point2 &goal)
    {
        // Plan from the waypoint currently being approached so the agent
        // never leaves the cell-center graph.
        const Point2 anchor = waypoints_.empty() ? snap_ : waypoints_.front();
        auto path = plan_shortest(map, anchor, goal);
        if (path.empty())
            return false;
        waypoints_.assign(path.begin(), path.end());
        if ((waypoints_.front() - pos_).norm() < 1e-12)
            waypoints_.erase(waypoints_.begin());
        return true;
    }

    void clear_plan() { waypoints_.clear(); }

    /// Advances one step along the plan; returns the swept segment.
    std::pair<Point2, Point2> step()
    {
        const Point2 before = pos_;
        double left = cfg_.step_m;
        while (left > 1e-12 && !waypoints_.empty())
        {
            const Point2 d = waypoints_.front() - pos_;
            const double len = d.norm();
            if (len <= left + 1e-12)
            {
                pos_ = waypoints_.front();
                snap_ = pos_;
                waypoints_.erase(waypoints_.begin());
                left -= len;
            }
            else
            {
                pos_ += d * (left / len);
                left = 0.0;
            }
        }
        if ((pos_ - before).norm() > 1e-12)
            heading_ = azimuth_deg(before, pos_);
        sense();
        return {before, pos_};
    }

    /// True if the remaining plan enters a cell now known to be a wall.
    bool plan_blocked() const
    {
        for (const auto &w : waypoints_)
        {
            const auto [ix, iy] = known_.cell_of(w);
            if (known_.at(ix, iy) == CellState::Wall)
                return true;
        }
        return false;
    }

  private:
    void reveal(int ix, int iy)
    {
        known_.at(ix, iy) = truth_.at(ix, iy);
    }

    void sense()
    {
        const double r = cfg_.sensing_radius_m;
        const double res = known_.resolution;
        const auto [cx, cy] = known_.cell_of(pos_);
        const int span = static_cast<int>(std::ceil(r / res)) + 1;
        for (int iy = std::max(0, cy - span); iy <= std::min(known_.ny - 1, cy + span); ++iy)
            for (int ix = std::max(0, cx - span); ix <= std::min(known_.nx - 1, cx + span); ++ix)
            {
                if (known_.at(ix, iy) != CellState::Unknown)
                    continue;
                const bool near = std::abs(ix - cx) <= 1 && std::abs(iy - cy) <= 1;
                const Point2 c = known_.center(ix, iy);
                if (near || ((c - pos_).norm() <= r && line_of_sight(env_, pos_, c)))
                    reveal(ix, iy);
            }
    }

    const Environment &env_;
    const OccupancyMap &truth_;
    const NavConfig &cfg_;
    OccupancyMap known_;
    Point2 pos_;
    Point2 snap_ = pos_;
    double heading_ = 0.0;
    std::vector<Point2> waypoints_;
};

Point2 farthest_known(const OccupancyMap &known, const Point2 &pos)
{
    const auto [px, py] = known.cell_of(pos);
    const auto dist = dijkstra(known, known.index(px, py));
    int best = known.index(px, py);
    for (int i = 0; i < static_cast<int>(dist.size()); ++i)
        if (std::isfinite(dist[static_cast<std::size_t>(i)]) && known.cells[static_cast<std::size_t>(i)] == CellState::Free &&
            dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(best)])
            best = i;
    return known.center(best);
}

// Pulls a goal that landed on a known wall back toward `from`.
Point2 snap_goal(const OccupancyMap &known, const Point2 &from, const Point2 &goal)
{
    const double len = (goal - from).norm();
    const int n = static_cast<int>(std::ceil(len / (0.5 * known.resolution)));
    for (int i = n; i > 0; --i)
    {
        const Point2 p = from + (goal - from) * (static_cast<double>(i) / n);
        const auto [ix, iy] = known.cell_of(p);
        if (known.at(ix, iy) != CellState::Wall)
            return p;
    }
    return from;
}

} // namespace

EpisodeResult run_episode(const Environment &env, const OccupancyMap &truth, int tx_id, const Point2 &start,
                          Policy policy, const ObserveFn &observe, std::uint64_t seed, const NavConfig &cfg)
{
    if (tx_id < 0 || static_cast<std::size_t>(tx_id) >= env.tx_locations.size())
        throw std::out_of_range("run_episode: invalid tx id");
    {
        const auto [ix, iy] = truth.cell_of(start);
        if (start.x() < 0.0 || start.y() < 0.0 || start.x() > env.side_m || start.y() > env.side_m ||
            truth.at(ix, iy) != CellState::Free)
            throw InvalidStart("run_episode: start is not in free space");
    }
    const Point2 tx = env.tx_locations[static_cast<std::size_t>(tx_id)];

    EpisodeResult res;
    res.tx_id = tx_id;
    res.start = start;
    res.policy = policy;

    // The agent starts at the center of its cell.
    const auto [sx, sy] = truth.cell_of(start);
    Agent agent(env, truth, cfg, truth.center(sx, sy));
    {
        std::mt19937_64 rng(mix_seed(seed, 0x4ead));
        boost::random::uniform_real_distribution<double> u(-180.0, 180.0);
        agent.set_heading(u(rng));
    }

    GoalSource source = GoalSource::None;
    bool target_seen = false;
    int steps = 0;
    int since_plan = 0;
    res.trajectory.push_back({agent.pos(), source});

    auto choose_goal = [&]() {
        agent.clear_plan();
        if (policy == Policy::Baseline)
        {
            source = GoalSource::Oracle;
            agent.plan(truth, tx);
            return;
        }
        if (policy == Policy::VisualLos && target_seen)
        {
            source = GoalSource::Visual;
            if (agent.plan(agent.known(), tx))
                return;
        }
        if (policy != Policy::VisualLos && observe)
        {
            const WirelessObservation obs = observe(agent.pos());
            if (auto g = wireless_goal(agent.pos(), obs.estimates, obs.predicted, policy, cfg, env.side_m))
            {
                source = GoalSource::Wireless;
                if (agent.plan(agent.known(), snap_goal(agent.known(), agent.pos(), *g)))
                    return;
            }
        }
        source = GoalSource::Frontier;
        try
        {
            if (agent.plan(agent.known(), frontier_goal(agent.known(), agent.pos())))
                return;
        }
        catch (const NoFrontier &)
        {
        }
        agent.plan(agent.known(), farthest_known(agent.known(), agent.pos()));
    };

    bool arrived = (agent.pos() - tx).norm() <= cfg.arrival_radius_m;
    if (policy == Policy::VisualLos)
        target_seen = visual_detect(env, agent.pos(), agent.heading(), tx, cfg);
    if (!arrived)
        choose_goal();
    while (!arrived && steps < cfg.max_steps)
    {
        const auto [a, b] = agent.step();
        ++steps;
        ++since_plan;
        res.trajectory.push_back({agent.pos(), source});
        if (point_segment_dist(tx, a, b) <= cfg.arrival_radius_m)
        {
            arrived = true;
            break;
        }
        bool replan = agent.idle() || since_plan >= cfg.replan_interval || agent.plan_blocked();
        if (policy == Policy::VisualLos && !target_seen &&
            visual_detect(env, agent.pos(), agent.heading(), tx, cfg))
        {
            target_seen = true;
            replan = true;
        }
        if (replan)
        {
            choose_goal();
            since_plan = 0;
        }
    }
    res.success = arrived;
    res.steps = arrived ? steps : cfg.max_steps + 1;
    return res;
}

std::vector<EpisodeResult> run_policies(const Environment &env, const OccupancyMap &truth, int tx_id,
                                        const Point2 &start, const std::vector<Policy> &policies,
                                        const ObserveFn &observe, std::uint64_t seed, const NavConfig &cfg)
{
    std::vector<EpisodeResult> out;
    EpisodeResult base = run_episode(env, truth, tx_id, start, Policy::Baseline, observe, seed, cfg);
    const int baseline_steps = std::max(1, base.steps);
    for (Policy p : policies)
    {
        EpisodeResult r = p == Policy::Baseline ? base : run_episode(env, truth, tx_id, start, p, observe, seed, cfg);
        r.baseline_steps = baseline_steps;
        r.relative_time = static_cast<double>(r.steps) / baseline_steps;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<Difficulty> classify_difficulty(const std::vector<int> &baseline_steps)
{
    if (baseline_steps.empty())
        throw EmptyDataset("classify_difficulty: no episodes");
    std::vector<double> sorted(baseline_steps.begin(), baseline_steps.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double q1 = quantile(1.0 / 3.0), q2 = quantile(2.0 / 3.0);
    std::vector<Difficulty> out;
    out.reserve(baseline_steps.size());
    for (int s : baseline_steps)
        out.push_back(s <= q1 ? Difficulty::Easy : (s <= q2 ? Difficulty::Moderate : Difficulty::Hard));
    return out;
}

} // namespace mmw
