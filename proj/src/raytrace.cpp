// SPDX-License-Identifier: Apache-2.0

#include "mmw/raytrace.hpp"

#include <algorithm>
#include <cmath>

namespace mmw
{

const char *to_string(LinkState s)
{
    switch (s)
    {
    case LinkState::LOS:
        return "LOS";
    case LinkState::FirstOrderNLOS:
        return "FirstOrderNLOS";
    case LinkState::HigherOrderNLOS:
        return "HigherOrderNLOS";
    case LinkState::Outage:
        return "Outage";
    }
    return "?";
}

LinkState link_state_from_string(const std::string &s)
{
    for (int i = 0; i < kNumLinkStates; ++i)
        if (s == to_string(static_cast<LinkState>(i)))
            return static_cast<LinkState>(i);
    throw DataError("unknown link state '" + s + "'");
}

bool Corner::in_wedge(double az_deg) const
{
    double off = std::fmod(az_deg - wedge_start_deg, 360.0);
    if (off < 0.0)
        off += 360.0;
    constexpr double eps = 1e-7;
    return off > eps && off < wedge_width_deg - eps;
}

std::vector<Corner> find_corners(const Environment &env)
{
    std::vector<Point2> pts;
    for (const auto &w : env.walls)
        for (const Point2 &p : {w.a, w.b})
            if (std::none_of(pts.begin(), pts.end(), [&](const Point2 &q) { return (q - p).norm() < kGeomTol; }))
                pts.push_back(p);

    std::vector<Corner> out;
    for (const auto &p : pts)
    {
        std::vector<double> dirs;
        for (const auto &w : env.walls)
        {
            const bool at_a = (w.a - p).norm() < kGeomTol;
            const bool at_b = (w.b - p).norm() < kGeomTol;
            if (at_a)
                dirs.push_back(azimuth_deg(w.a, w.b));
            else if (at_b)
                dirs.push_back(azimuth_deg(w.b, w.a));
            else if (point_segment_distance(p, w) < kGeomTol)
            {
                dirs.push_back(azimuth_deg(p, w.a));
                dirs.push_back(azimuth_deg(p, w.b));
            }
        }
        if (dirs.empty())
            continue;
        std::sort(dirs.begin(), dirs.end());
        double best_gap = 0.0, best_start = 0.0;
        for (std::size_t i = 0; i < dirs.size(); ++i)
        {
            const double next = (i + 1 < dirs.size()) ? dirs[i + 1] : dirs.front() + 360.0;
            const double gap = next - dirs[i];
            if (gap > best_gap)
            {
                best_gap = gap;
                best_start = dirs[i];
            }
        }
        if (best_gap > 180.0 + 1e-6)
            out.push_back({p, best_start, best_gap});
    }
    return out;
}

namespace
{

double cross2(const Point2 &u, const Point2 &v) { return u.x() * v.y() - u.y() * v.x(); }

// Signed distance of p from the infinite line through s.
double signed_dist(const Segment &s, const Point2 &p)
{
    const Point2 e = s.b - s.a;
    return cross2(e, p - s.a) / e.norm();
}

Point2 mirror(const Segment &s, const Point2 &p)
{
    const Point2 e = (s.b - s.a).normalized();
    const Point2 v = p - s.a;
    const Point2 proj = s.a + e * v.dot(e);
    return 2.0 * proj - p;
}

// Walls sharing one infinite line get the same id; reflecting twice in a row
// off the same line is meaningless.
std::vector<int> line_ids(const Environment &env)
{
    std::vector<int> ids(env.walls.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < env.walls.size(); ++i)
    {
        if (ids[i] >= 0)
            continue;
        ids[i] = next;
        for (std::size_t j = i + 1; j < env.walls.size(); ++j)
            if (ids[j] < 0 && std::abs(signed_dist(env.walls[i], env.walls[j].a)) < 1e-9 &&
                std::abs(signed_dist(env.walls[i], env.walls[j].b)) < 1e-9)
                ids[j] = next;
        ++next;
    }
    return ids;
}

} // namespace

Tracer::Tracer(const Environment &env, const Point2 &tx, const TraceConfig &cfg)
    : env_(env), tx_(tx), cfg_(cfg), wavelength_(kSpeedOfLight / cfg.carrier_hz)
{
    tx_tree_ = build_tree(tx_, std::min(cfg_.max_reflections, cfg_.max_order));
    if (cfg_.enable_diffraction && cfg_.max_order >= 1)
    {
        corners_ = find_corners(env_);
        const int leg_depth = std::min(cfg_.max_reflections, cfg_.max_order - 1);
        corner_trees_.reserve(corners_.size());
        tx_to_corner_.resize(corners_.size());
        for (std::size_t c = 0; c < corners_.size(); ++c)
        {
            corner_trees_.push_back(build_tree(corners_[c].point, leg_depth));
            std::vector<Leg> legs;
            legs_to(tx_tree_, corners_[c].point, leg_depth, legs);
            for (auto &leg : legs)
            {
                const Point2 &prev = leg.points[leg.points.size() - 2];
                if (corners_[c].in_wedge(azimuth_deg(corners_[c].point, prev)))
                    tx_to_corner_[c].push_back(std::move(leg));
            }
        }
    }
}

Tracer::ImageTree Tracer::build_tree(const Point2 &source, int max_depth) const
{
    const auto ids = line_ids(env_);
    ImageTree tree;
    tree.source = source;
    tree.images.push_back({source, -1, -1, 0});
    for (std::size_t n = 0; n < tree.images.size(); ++n)
    {
        const Image cur = tree.images[n];
        if (cur.depth >= max_depth)
            continue;
        for (int w = 0; w < static_cast<int>(env_.walls.size()); ++w)
        {
            if (cur.wall >= 0 && ids[static_cast<std::size_t>(w)] == ids[static_cast<std::size_t>(cur.wall)])
                continue;
            const Segment &seg = env_.walls[static_cast<std::size_t>(w)];
            if (std::abs(signed_dist(seg, cur.point)) < kGeomTol)
                continue;
            tree.images.push_back({mirror(seg, cur.point), w, static_cast<int>(n), cur.depth + 1});
        }
    }
    return tree;
}

bool Tracer::leg_clear(const Point2 &p, const Point2 &q, int &crossings) const
{
    crossings = 0;
    for (const auto &w : env_.walls)
    {
        if (segment_hits_wall(p, q, w))
        {
            if (!cfg_.enable_transmission)
                return false;
            ++crossings;
        }
    }
    return true;
}

cplx Tracer::reflection_coeff(int wall, const Point2 &incoming_from, const Point2 &at) const
{
    const Segment &s = env_.walls[static_cast<std::size_t>(wall)];
    const Point2 e = (s.b - s.a).normalized();
    const Point2 n(-e.y(), e.x());
    const Point2 d = (at - incoming_from).normalized();
    const double cos_inc = std::min(1.0, std::abs(n.dot(d)));
    return fresnel_reflection<double>(env_.material_of(s), rad2deg(std::acos(cos_inc)));
}

void Tracer::legs_to(const ImageTree &tree, const Point2 &target, int max_depth, std::vector<Leg> &out) const
{
    std::vector<Point2> pts;
    std::vector<int> walls;
    for (const auto &img : tree.images)
    {
        if (img.depth > max_depth)
            continue;
        pts.clear();
        walls.clear();
        pts.push_back(target);
        Point2 cur = target;
        const Image *node = &img;
        bool ok = true;
        while (node->depth > 0)
        {
            const Segment &seg = env_.walls[static_cast<std::size_t>(node->wall)];
            const double dc = signed_dist(seg, cur);
            const double di = signed_dist(seg, node->point);
            if (!(dc * di < 0.0) || std::abs(dc) < kGeomTol)
            {
                ok = false;
                break;
            }
            const double u = dc / (dc - di);
            const Point2 x = cur + u * (node->point - cur);
            const Point2 e = seg.b - seg.a;
            const double s = (x - seg.a).dot(e) / e.squaredNorm();
            const double tol_s = kGeomTol / e.norm();
            if (s < -tol_s || s > 1.0 + tol_s)
            {
                ok = false;
                break;
            }
            pts.push_back(x);
            walls.push_back(node->wall);
            cur = x;
            node = &tree.images[static_cast<std::size_t>(node->parent)];
        }
        if (!ok)
            continue;
        pts.push_back(tree.source);
        std::reverse(pts.begin(), pts.end());
        std::reverse(walls.begin(), walls.end());

        Leg leg;
        leg.crossings = 0;
        leg.coeff = cplx(1.0, 0.0);
        for (std::size_t i = 0; i + 1 < pts.size() && ok; ++i)
        {
            if ((pts[i + 1] - pts[i]).norm() < kGeomTol)
            {
                ok = false;
                break;
            }
            int c = 0;
            ok = leg_clear(pts[i], pts[i + 1], c);
            leg.crossings += c;
        }
        if (!ok)
            continue;
        for (std::size_t r = 0; r < walls.size(); ++r)
            leg.coeff *= reflection_coeff(walls[r], pts[r], pts[r + 1]);
        leg.points = pts;
        leg.walls = walls;
        out.push_back(std::move(leg));
    }
}

PathComponent Tracer::make_path(const Leg &first, const Leg *second, int corner) const
{
    PathComponent p;
    std::vector<Point2> pts = first.points;
    double loss = 1.0;
    cplx coeff = first.coeff;
    int crossings = first.crossings;

    auto add_leg_interactions = [&](const Leg &leg) {
        for (std::size_t r = 0; r < leg.walls.size(); ++r)
            p.interactions.push_back({InteractionKind::Reflection, leg.walls[r], leg.points[r + 1]});
    };
    add_leg_interactions(first);
    if (second)
    {
        p.interactions.push_back(
            {InteractionKind::Diffraction, corner, corners_[static_cast<std::size_t>(corner)].point});
        add_leg_interactions(*second);
        pts.insert(pts.end(), second->points.begin() + 1, second->points.end());
        coeff *= second->coeff * cplx(-1.0, 0.0); // pi phase per diffraction
        crossings += second->crossings;
        loss *= std::pow(10.0, -cfg_.diffraction_loss_db / 20.0);
    }
    if (crossings > 0)
    {
        loss *= std::pow(10.0, -cfg_.transmission_loss_db * crossings / 20.0);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            for (int w = 0; w < static_cast<int>(env_.walls.size()); ++w)
                if (segment_hits_wall(pts[i], pts[i + 1], env_.walls[static_cast<std::size_t>(w)]))
                    p.interactions.push_back({InteractionKind::Transmission, w, pts[i]});
    }

    double length = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        length += (pts[i + 1] - pts[i]).norm();
    p.delay_ns = length / kSpeedOfLightMPerNs;
    const double friis = wavelength_ / (4.0 * kPi * length);
    const double phase = -2.0 * kPi * cfg_.carrier_hz * (p.delay_ns * 1e-9);
    p.gain = friis * loss * coeff * std::polar(1.0, phase);
    p.aod_deg = azimuth_deg(pts[0], pts[1]);
    p.aoa_deg = azimuth_deg(pts.back(), pts[pts.size() - 2]);
    return p;
}

std::vector<PathComponent> Tracer::trace(const Point2 &rx) const
{
    if ((rx - tx_).norm() < kGeomTol)
        throw std::invalid_argument("trace: transmitter and receiver coincide");
    std::vector<PathComponent> paths;

    std::vector<Leg> legs;
    legs_to(tx_tree_, rx, std::min(cfg_.max_reflections, cfg_.max_order), legs);
    for (const auto &leg : legs)
        if (static_cast<int>(leg.walls.size()) + leg.crossings <= cfg_.max_order)
            paths.push_back(make_path(leg, nullptr, -1));

    if (cfg_.enable_diffraction)
    {
        std::vector<Leg> second;
        for (std::size_t c = 0; c < corners_.size(); ++c)
        {
            if (tx_to_corner_[c].empty())
                continue;
            const Corner &corner = corners_[c];
            second.clear();
            legs_to(corner_trees_[c], rx, std::min(cfg_.max_reflections, cfg_.max_order - 1), second);
            for (const auto &b : second)
            {
                if (!corner.in_wedge(azimuth_deg(corner.point, b.points[1])))
                    continue;
                for (const auto &a : tx_to_corner_[c])
                {
                    const int order = static_cast<int>(a.walls.size() + b.walls.size()) + 1 + a.crossings + b.crossings;
                    if (order > cfg_.max_order ||
                        static_cast<int>(a.walls.size() + b.walls.size()) > cfg_.max_reflections)
                        continue;
                    // Only the shadow side of the corner receives diffracted energy.
                    const Point2 &prev = a.points[a.points.size() - 2];
                    if (line_of_sight(env_, prev, b.points[1]))
                        continue;
                    paths.push_back(make_path(a, &b, static_cast<int>(c)));
                }
            }
        }
    }

    std::stable_sort(paths.begin(), paths.end(),
                     [](const PathComponent &x, const PathComponent &y) { return std::abs(x.gain) > std::abs(y.gain); });
    if (paths.size() > cfg_.max_paths)
        paths.resize(cfg_.max_paths);
    return paths;
}

std::vector<PathComponent> trace_link(const Environment &env, const Point2 &tx, const Point2 &rx, int max_reflections,
                                      bool enable_diffraction)
{
    TraceConfig cfg;
    cfg.max_reflections = max_reflections;
    cfg.enable_diffraction = enable_diffraction;
    return Tracer(env, tx, cfg).trace(rx);
}

LinkState label_link(const std::vector<PathComponent> &paths, const std::vector<double> &snr_db, double threshold_db)
{
    if (paths.size() != snr_db.size())
        throw MisalignedInput("label_link: " + std::to_string(paths.size()) + " paths but " +
                              std::to_string(snr_db.size()) + " SNR values");
    bool los = false, first = false, any = false;
    for (std::size_t i = 0; i < paths.size(); ++i)
    {
        if (snr_db[i] < threshold_db)
            continue;
        any = true;
        const int order = paths[i].order();
        los = los || order == 0;
        first = first || order == 1;
    }
    if (los)
        return LinkState::LOS;
    if (first)
        return LinkState::FirstOrderNLOS;
    if (any)
        return LinkState::HigherOrderNLOS;
    return LinkState::Outage;
}

std::vector<LinkRecord> trace_map(const Environment &env, int tx_id, const RxGrid &grid, const PathSnrFn &snr_db,
                                  const TraceConfig &cfg, double threshold_db)
{
    if (tx_id < 0 || static_cast<std::size_t>(tx_id) >= env.tx_locations.size())
        throw std::out_of_range("trace_map: invalid tx id");
    const Point2 tx = env.tx_locations[static_cast<std::size_t>(tx_id)];
    const Tracer tracer(env, tx, cfg);
    std::vector<LinkRecord> out;
    out.reserve(static_cast<std::size_t>(grid.valid_count()));
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
        {
            if (!grid.is_valid(ix, iy))
                continue;
            LinkRecord rec;
            rec.tx_id = tx_id;
            rec.cell_ix = ix;
            rec.cell_iy = iy;
            const Point2 rx = grid.center(ix, iy);
            if ((rx - tx).norm() > kGeomTol)
                rec.paths = tracer.trace(rx);
            std::vector<double> snr;
            snr.reserve(rec.paths.size());
            for (const auto &p : rec.paths)
                snr.push_back(snr_db(p));
            rec.true_state = label_link(rec.paths, snr, threshold_db);
            out.push_back(std::move(rec));
        }
    return out;
}

} // namespace mmw
