// SPDX-License-Identifier: Apache-2.0

#include "mmw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

namespace mmw
{

const Material &Environment::material_of(const Segment &s) const
{
    if (s.material < 0 || static_cast<std::size_t>(s.material) >= materials.size())
        throw InvalidEnvironment("wall references unknown material id " + std::to_string(s.material));
    return materials[static_cast<std::size_t>(s.material)];
}

namespace
{

double cross2(const Point2 &u, const Point2 &v) { return u.x() * v.y() - u.y() * v.x(); }

bool in_bounds(const Point2 &p, double side)
{
    return p.x() >= -kGeomTol && p.y() >= -kGeomTol && p.x() <= side + kGeomTol && p.y() <= side + kGeomTol;
}

// Coverage of one boundary edge by the union of collinear wall segments.
bool edge_covered(const Environment &env, const Point2 &a, const Point2 &b)
{
    const Point2 dir = (b - a).normalized();
    const double len = (b - a).norm();
    std::vector<std::pair<double, double>> spans;
    for (const auto &w : env.walls)
    {
        if (std::abs(cross2(w.a - a, dir)) > 1e-6 || std::abs(cross2(w.b - a, dir)) > 1e-6)
            continue;
        double s0 = (w.a - a).dot(dir), s1 = (w.b - a).dot(dir);
        if (s0 > s1)
            std::swap(s0, s1);
        spans.emplace_back(s0, s1);
    }
    std::sort(spans.begin(), spans.end());
    double reach = 0.0;
    for (const auto &[s0, s1] : spans)
    {
        if (s0 > reach + 1e-6)
            return false;
        reach = std::max(reach, s1);
    }
    return reach >= len - 1e-6;
}

} // namespace

void validate(const Environment &env)
{
    if (!(env.side_m > 0.0))
        throw InvalidEnvironment("side length must be positive");
    for (const auto &m : env.materials)
        if (m.permittivity_rel < 1.0 || m.conductivity < 0.0)
            throw InvalidEnvironment("material parameters out of range");
    for (const auto &w : env.walls)
    {
        if (!in_bounds(w.a, env.side_m) || !in_bounds(w.b, env.side_m))
            throw InvalidEnvironment("wall endpoint outside bounds");
        if (w.length() <= kGeomTol)
            throw InvalidEnvironment("degenerate wall segment");
        (void)env.material_of(w);
    }
    const double s = env.side_m;
    const Point2 c00(0, 0), c10(s, 0), c11(s, s), c01(0, s);
    if (!edge_covered(env, c00, c10) || !edge_covered(env, c10, c11) || !edge_covered(env, c11, c01) ||
        !edge_covered(env, c01, c00))
        throw InvalidEnvironment("outer boundary is not closed");
    for (const auto &t : env.tx_locations)
    {
        if (!in_bounds(t, s))
            throw InvalidEnvironment("transmitter outside bounds");
        if (wall_clearance(env, t) < 0.1 - 1e-12)
            throw InvalidEnvironment("transmitter closer than 0.1 m to a wall");
    }
}

// ------------------------------------------------------------------------
// Floor plan generation

namespace
{

struct Rect
{
    double x0, y0, x1, y1;
    double w() const { return x1 - x0; }
    double h() const { return y1 - y0; }
};

struct Door
{
    bool on_vertical_wall; // wall is x = line
    double line;
    double lo, hi;
};

struct Planner
{
    const GenConfig &cfg;
    std::mt19937_64 rng;
    std::vector<Rect> leaves;
    std::vector<Door> doors;
    std::vector<Segment> walls;

    double margin() const { return cfg.lattice_offset + cfg.lattice; }

    std::vector<double> lattice_points(double lo, double hi) const
    {
        std::vector<double> pts;
        const double k0 = std::ceil((lo - cfg.lattice_offset) / cfg.lattice - 1e-9);
        for (double k = k0;; k += 1.0)
        {
            const double v = cfg.lattice_offset + k * cfg.lattice;
            if (v > hi + 1e-9)
                break;
            pts.push_back(v);
        }
        return pts;
    }

    std::vector<double> door_widths() const
    {
        std::vector<double> ws;
        for (double w = cfg.lattice; w <= cfg.door_width_max + 1e-9; w += cfg.lattice)
            if (w >= cfg.door_width_min - 1e-9)
                ws.push_back(w);
        return ws;
    }

    // A new wall ending at `at` on the boundary line must keep clear of doors there.
    bool endpoint_clear(bool boundary_is_vertical, double line, double at) const
    {
        for (const auto &d : doors)
        {
            if (d.on_vertical_wall != boundary_is_vertical || std::abs(d.line - line) > 1e-9)
                continue;
            if (at > d.lo - cfg.door_clearance && at < d.hi + cfg.door_clearance)
                return false;
        }
        return true;
    }

    bool try_split(std::size_t leaf_ix, bool vertical)
    {
        const Rect r = leaves[leaf_ix];
        const double span_len = vertical ? r.h() : r.w();
        const auto widths = door_widths();
        if (widths.empty() || span_len < widths.front() + 2.0 * margin())
            return false;
        const double lo = (vertical ? r.x0 : r.y0) + cfg.min_room_dim;
        const double hi = (vertical ? r.x1 : r.y1) - cfg.min_room_dim;
        auto cuts = lattice_points(lo, hi);
        std::erase_if(cuts, [&](double c) {
            return vertical ? !(endpoint_clear(false, r.y0, c) && endpoint_clear(false, r.y1, c))
                            : !(endpoint_clear(true, r.x0, c) && endpoint_clear(true, r.x1, c));
        });
        if (cuts.empty())
            return false;
        const double c = cuts[std::uniform_int_distribution<std::size_t>(0, cuts.size() - 1)(rng)];

        std::vector<double> fitting;
        for (double w : widths)
            if (span_len >= w + 2.0 * margin())
                fitting.push_back(w);
        const double dw = fitting[std::uniform_int_distribution<std::size_t>(0, fitting.size() - 1)(rng)];
        const double s0 = vertical ? r.y0 : r.x0;
        const double s1 = vertical ? r.y1 : r.x1;
        const auto starts = lattice_points(s0 + margin(), s1 - margin() - dw);
        if (starts.empty())
            return false;
        const double d0 = starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
        const double d1 = d0 + dw;

        if (vertical)
        {
            walls.push_back({Point2(c, r.y0), Point2(c, d0), 0});
            walls.push_back({Point2(c, d1), Point2(c, r.y1), 0});
            doors.push_back({true, c, d0, d1});
            leaves[leaf_ix] = {r.x0, r.y0, c, r.y1};
            leaves.push_back({c, r.y0, r.x1, r.y1});
        }
        else
        {
            walls.push_back({Point2(r.x0, c), Point2(d0, c), 0});
            walls.push_back({Point2(d1, c), Point2(r.x1, c), 0});
            doors.push_back({false, c, d0, d1});
            leaves[leaf_ix] = {r.x0, r.y0, r.x1, c};
            leaves.push_back({r.x0, c, r.x1, r.y1});
        }
        return true;
    }

    bool split_once()
    {
        std::vector<double> weights;
        for (const auto &l : leaves)
            weights.push_back(l.w() * l.h());
        std::vector<std::size_t> order;
        // Area-weighted draw without replacement.
        while (order.size() < leaves.size())
        {
            std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
            const std::size_t ix = pick(rng);
            order.push_back(ix);
            weights[ix] = 0.0;
            if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; }))
                break;
        }
        for (std::size_t ix : order)
        {
            const Rect &r = leaves[ix];
            bool vertical;
            if (r.w() > 1.25 * r.h())
                vertical = true;
            else if (r.h() > 1.25 * r.w())
                vertical = false;
            else
                vertical = std::bernoulli_distribution(0.5)(rng);
            if (try_split(ix, vertical) || try_split(ix, !vertical))
                return true;
        }
        return false;
    }
};

} // namespace

Environment generate_environment(std::uint64_t seed, const GenConfig &cfg)
{
    if (cfg.min_rooms < 1 || cfg.max_rooms < cfg.min_rooms)
        throw GenerationFailed("invalid room count range");
    if (cfg.min_room_dim < 1.5 || cfg.door_width_min < 0.8)
        throw GenerationFailed("room dimension below 1.5 m or door narrower than 0.8 m");

    for (int attempt = 0; attempt < cfg.max_retries; ++attempt)
    {
        Planner p{cfg, std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(attempt), 0x9e0)), {}, {}, {}};
        const int target = std::uniform_int_distribution<int>(cfg.min_rooms, cfg.max_rooms)(p.rng);
        p.leaves.push_back({0.0, 0.0, cfg.side_m, cfg.side_m});
        bool ok = true;
        while (static_cast<int>(p.leaves.size()) < target)
        {
            if (!p.split_once())
            {
                ok = false;
                break;
            }
        }
        if (!ok)
            continue;

        Environment env;
        env.side_m = cfg.side_m;
        env.seed = seed;
        const double s = cfg.side_m;
        env.walls = {{Point2(0, 0), Point2(s, 0), 0},
                     {Point2(s, 0), Point2(s, s), 0},
                     {Point2(s, s), Point2(0, s), 0},
                     {Point2(0, s), Point2(0, 0), 0}};
        env.walls.insert(env.walls.end(), p.walls.begin(), p.walls.end());
        validate(env);
        return env;
    }
    throw GenerationFailed("floor plan constraints unsatisfiable after " + std::to_string(cfg.max_retries) +
                           " attempts");
}

Environment place_transmitters(const Environment &env, int n, std::uint64_t seed, const PlacementConfig &cfg)
{
    if (n < 1)
        throw PlacementFailed("need at least one transmitter");
    Environment out = env;
    out.tx_locations.clear();
    std::mt19937_64 rng(mix_seed(seed, 0x7a11));
    std::uniform_real_distribution<double> coord(cfg.wall_clearance, env.side_m - cfg.wall_clearance);
    for (int t = 0; t < n; ++t)
    {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts_per_tx && !placed; ++attempt)
        {
            const Point2 p(coord(rng), coord(rng));
            if (wall_clearance(env, p) < cfg.wall_clearance)
                continue;
            bool far = true;
            for (const auto &q : out.tx_locations)
                far = far && (p - q).norm() >= cfg.min_separation;
            if (!far)
                continue;
            out.tx_locations.push_back(p);
            placed = true;
        }
        if (!placed)
            throw PlacementFailed("could not place transmitter " + std::to_string(t));
    }
    return out;
}

// ------------------------------------------------------------------------

bool segment_hits_wall(const Point2 &p, const Point2 &q, const Segment &w)
{
    const Point2 r = q - p;
    const Point2 e = w.b - w.a;
    const double rl = r.norm();
    const double el = e.norm();
    if (rl <= 0.0 || el <= 0.0)
        return false;
    const double tol_t = kGeomTol / rl;
    const double tol_s = kGeomTol / el;
    const Point2 ap = w.a - p;
    const double denom = cross2(r, e);
    if (std::abs(denom) <= 1e-12 * rl * el)
    {
        // Parallel: only a collinear overlap counts.
        if (std::abs(cross2(ap, r)) / rl > kGeomTol)
            return false;
        double t0 = ap.dot(r) / (rl * rl);
        double t1 = (w.b - p).dot(r) / (rl * rl);
        if (t0 > t1)
            std::swap(t0, t1);
        return t1 > tol_t && t0 < 1.0 - tol_t;
    }
    const double t = cross2(ap, e) / denom;
    const double s = cross2(ap, r) / denom;
    return t > tol_t && t < 1.0 - tol_t && s >= -tol_s && s <= 1.0 + tol_s;
}

bool line_of_sight(const Environment &env, const Point2 &a, const Point2 &b)
{
    for (const auto &w : env.walls)
        if (segment_hits_wall(a, b, w))
            return false;
    return true;
}

int count_crossings(const Environment &env, const Point2 &a, const Point2 &b)
{
    int n = 0;
    for (const auto &w : env.walls)
        n += segment_hits_wall(a, b, w) ? 1 : 0;
    return n;
}

double point_segment_distance(const Point2 &p, const Segment &s)
{
    const Point2 e = s.b - s.a;
    const double l2 = e.squaredNorm();
    if (l2 <= 0.0)
        return (p - s.a).norm();
    const double t = std::clamp((p - s.a).dot(e) / l2, 0.0, 1.0);
    return (p - (s.a + t * e)).norm();
}

double wall_clearance(const Environment &env, const Point2 &p)
{
    double d = std::numeric_limits<double>::infinity();
    for (const auto &w : env.walls)
        d = std::min(d, point_segment_distance(p, w));
    return d;
}

bool box_intersects_segment(const Point2 &lo, const Point2 &hi, const Segment &s)
{
    // Liang-Barsky clipping against the closed box.
    double t0 = 0.0, t1 = 1.0;
    const Point2 d = s.b - s.a;
    for (int axis = 0; axis < 2; ++axis)
    {
        const double p0 = s.a[axis];
        const double dd = d[axis];
        if (std::abs(dd) < 1e-15)
        {
            if (p0 < lo[axis] || p0 > hi[axis])
                return false;
            continue;
        }
        double ta = (lo[axis] - p0) / dd;
        double tb = (hi[axis] - p0) / dd;
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return false;
    }
    return true;
}

// ------------------------------------------------------------------------

namespace
{

// Marks cells of a regular grid whose closed square touches any wall.
std::vector<std::uint8_t> touched_cells(const Environment &env, const Point2 &origin, int nx, int ny, double h)
{
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(nx) * ny, 0);
    for (const auto &w : env.walls)
    {
        const double xmin = std::min(w.a.x(), w.b.x()), xmax = std::max(w.a.x(), w.b.x());
        const double ymin = std::min(w.a.y(), w.b.y()), ymax = std::max(w.a.y(), w.b.y());
        const int ix0 = std::max(0, static_cast<int>(std::floor((xmin - origin.x()) / h)) - 1);
        const int ix1 = std::min(nx - 1, static_cast<int>(std::floor((xmax - origin.x()) / h)) + 1);
        const int iy0 = std::max(0, static_cast<int>(std::floor((ymin - origin.y()) / h)) - 1);
        const int iy1 = std::min(ny - 1, static_cast<int>(std::floor((ymax - origin.y()) / h)) + 1);
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix)
            {
                const Point2 lo = origin + Point2(ix * h, iy * h);
                const Point2 hi = lo + Point2(h, h);
                if (box_intersects_segment(lo, hi, w))
                    hit[static_cast<std::size_t>(iy) * nx + ix] = 1;
            }
    }
    return hit;
}

} // namespace

int RxGrid::valid_count() const
{
    return static_cast<int>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::optional<std::pair<int, int>> RxGrid::nearest_valid(const Point2 &p) const
{
    std::optional<std::pair<int, int>> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
        {
            if (!is_valid(ix, iy))
                continue;
            const double d = (center(ix, iy) - p).squaredNorm();
            if (d < best_d)
            {
                best_d = d;
                best = std::make_pair(ix, iy);
            }
        }
    return best;
}

RxGrid make_rx_grid(const Environment &env, int nx, int ny, double spacing, Point2 origin)
{
    if (nx * spacing > env.side_m + 1e-9 || ny * spacing > env.side_m + 1e-9)
        throw InvalidEnvironment("receiver grid exceeds environment bounds");
    RxGrid g;
    g.origin = origin;
    g.nx = nx;
    g.ny = ny;
    g.spacing = spacing;
    auto hit = touched_cells(env, origin, nx, ny, spacing);
    g.valid.resize(hit.size());
    for (std::size_t i = 0; i < hit.size(); ++i)
        g.valid[i] = hit[i] ? 0 : 1;
    return g;
}

OccupancyMap OccupancyMap::unknown_like(const OccupancyMap &ref)
{
    OccupancyMap m;
    m.resolution = ref.resolution;
    m.nx = ref.nx;
    m.ny = ref.ny;
    m.cells.assign(ref.cells.size(), CellState::Unknown);
    return m;
}

std::pair<int, int> OccupancyMap::cell_of(const Point2 &p) const
{
    const int ix = std::clamp(static_cast<int>(std::floor(p.x() / resolution)), 0, nx - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(p.y() / resolution)), 0, ny - 1);
    return {ix, iy};
}

OccupancyMap rasterize(const Environment &env, double resolution)
{
    OccupancyMap m;
    m.resolution = resolution;
    m.nx = static_cast<int>(std::llround(env.side_m / resolution));
    m.ny = m.nx;
    const auto hit = touched_cells(env, Point2(0, 0), m.nx, m.ny, resolution);
    m.cells.resize(hit.size());
    for (std::size_t i = 0; i < hit.size(); ++i)
        m.cells[i] = hit[i] ? CellState::Wall : CellState::Free;
    return m;
}

int free_components(const OccupancyMap &map)
{
    std::vector<int> label(map.cells.size(), -1);
    int n = 0;
    std::deque<int> queue;
    for (int start = 0; start < static_cast<int>(map.cells.size()); ++start)
    {
        if (map.cells[start] != CellState::Free || label[start] >= 0)
            continue;
        label[start] = n;
        queue.push_back(start);
        while (!queue.empty())
        {
            const int c = queue.front();
            queue.pop_front();
            const int cx = c % map.nx, cy = c / map.nx;
            constexpr int dx[4] = {1, -1, 0, 0};
            constexpr int dy[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k)
            {
                const int x = cx + dx[k], y = cy + dy[k];
                if (!map.in_bounds(x, y))
                    continue;
                const int ni = map.index(x, y);
                if (map.cells[ni] == CellState::Free && label[ni] < 0)
                {
                    label[ni] = n;
                    queue.push_back(ni);
                }
            }
        }
        ++n;
    }
    return n;
}

} // namespace mmw
