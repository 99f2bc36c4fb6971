// SPDX-License-Identifier: Apache-2.0
//
// 2D rectilinear indoor environments: walls, transmitter sites, the receiver
// grid and rasterized occupancy.

#ifndef MMW_GEOMETRY_HPP
#define MMW_GEOMETRY_HPP

#include "mmw/common.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mmw
{

struct Segment
{
    Point2 a{0.0, 0.0};
    Point2 b{0.0, 0.0};
    int material = 0;

    double length() const { return (b - a).norm(); }
};

struct Material
{
    double permittivity_rel = 1.0;
    double conductivity = 0.0; // S/m
    double frequency_hz = 28e9;

    /// ITU layered drywall at 28 GHz.
    static Material drywall_28ghz() { return {2.94, 0.1226, 28e9}; }
};

struct Environment
{
    double side_m = 24.0;
    std::vector<Segment> walls;
    std::vector<Point2> tx_locations;
    std::uint64_t seed = 0;
    /// Indexed by Segment::material. The JSON schema stores only ids; loading
    /// fills this table with the default material set.
    std::vector<Material> materials{Material::drywall_28ghz()};

    const Material &material_of(const Segment &s) const;
};

/// Throws InvalidEnvironment if any Environment invariant is violated.
void validate(const Environment &env);

struct GenConfig
{
    double side_m = 24.0;
    int min_rooms = 4;
    int max_rooms = 10;
    double min_room_dim = 1.5;
    double door_width_min = 0.8;
    double door_width_max = 1.25;
    /// All wall and door coordinates sit on the lattice offset + k * lattice.
    double lattice = 0.25;
    double lattice_offset = 0.125;
    /// Keeps wall junctions away from door openings.
    double door_clearance = 0.5;
    int max_retries = 64;
};

/// Random rectilinear floor plan: the outer square split into rooms by
/// axis-aligned walls, each carrying one door. Deterministic per (seed, cfg).
Environment generate_environment(std::uint64_t seed, const GenConfig &cfg = {});

struct PlacementConfig
{
    double min_separation = 1.0;
    double wall_clearance = 0.25;
    int max_attempts_per_tx = 20000;
};

Environment place_transmitters(const Environment &env, int n, std::uint64_t seed,
                               const PlacementConfig &cfg = {});

// ------------------------------------------------------------------------
// Intersection queries

inline constexpr double kGeomTol = 1e-9;

/// True if segment [p, q] touches wall w. The parameter along [p, q] must be
/// strictly inside (endpoints within kGeomTol meters are ignored); on the wall
/// side touching an endpoint counts.
bool segment_hits_wall(const Point2 &p, const Point2 &q, const Segment &w);

/// True iff the open segment (a, b) meets no wall.
bool line_of_sight(const Environment &env, const Point2 &a, const Point2 &b);

/// Number of walls crossed by the open segment (a, b).
int count_crossings(const Environment &env, const Point2 &a, const Point2 &b);

double point_segment_distance(const Point2 &p, const Segment &s);

/// Minimum distance from p to any wall.
double wall_clearance(const Environment &env, const Point2 &p);

/// Closed axis-aligned box [lo, hi] against a closed segment.
bool box_intersects_segment(const Point2 &lo, const Point2 &hi, const Segment &s);

// ------------------------------------------------------------------------
// Receiver grid

struct RxGrid
{
    Point2 origin{0.0, 0.0};
    int nx = 160;
    int ny = 160;
    double spacing = 0.15;
    std::vector<std::uint8_t> valid; // row-major, index = iy * nx + ix

    Point2 center(int ix, int iy) const
    {
        return origin + Point2((ix + 0.5) * spacing, (iy + 0.5) * spacing);
    }
    bool is_valid(int ix, int iy) const { return valid[static_cast<std::size_t>(iy) * nx + ix] != 0; }
    int valid_count() const;
    /// Nearest valid cell to p, or nullopt if the grid has none.
    std::optional<std::pair<int, int>> nearest_valid(const Point2 &p) const;
};

/// Cells whose closed square touches a wall are invalid.
RxGrid make_rx_grid(const Environment &env, int nx, int ny, double spacing, Point2 origin = {0.0, 0.0});

// ------------------------------------------------------------------------
// Occupancy

enum class CellState : std::uint8_t
{
    Free = 0,
    Wall = 1,
    Unknown = 2
};

struct OccupancyMap
{
    double resolution = 0.25;
    int nx = 0;
    int ny = 0;
    std::vector<CellState> cells;

    static OccupancyMap unknown_like(const OccupancyMap &ref);

    bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx && iy < ny; }
    CellState at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
    CellState &at(int ix, int iy) { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
    int index(int ix, int iy) const { return iy * nx + ix; }
    std::pair<int, int> cell_of(const Point2 &p) const;
    Point2 center(int ix, int iy) const { return {(ix + 0.5) * resolution, (iy + 0.5) * resolution}; }
    Point2 center(int idx) const { return center(idx % nx, idx / nx); }
};

/// Cells whose closed square touches a wall are Wall, all others Free.
OccupancyMap rasterize(const Environment &env, double resolution = 0.25);

/// Number of 4-connected components of Free cells.
int free_components(const OccupancyMap &map);

} // namespace mmw

#endif
