// SPDX-License-Identifier: Apache-2.0
//
// Grid-world target navigation: A* planning, frontier exploration, wireless
// and visual goal selection, and episode evaluation.

#ifndef MMW_NAVSIM_HPP
#define MMW_NAVSIM_HPP

#include "mmw/classifier.hpp"
#include "mmw/geometry.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mmw
{

enum class Policy : std::uint8_t
{
    Baseline,
    AoaBySnr,
    AoaWhenLos,
    AoaWhenLosOrFirstNlos,
    VisualLos
};

inline constexpr Policy kAllPolicies[] = {Policy::Baseline, Policy::AoaBySnr, Policy::AoaWhenLos,
                                          Policy::AoaWhenLosOrFirstNlos, Policy::VisualLos};

const char *to_string(Policy p);
Policy policy_from_string(const std::string &s);

enum class Difficulty : std::uint8_t
{
    Easy,
    Moderate,
    Hard
};

const char *to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string &s);

enum class GoalSource : std::uint8_t
{
    None,
    Oracle,
    Frontier,
    Wireless,
    Visual
};

const char *to_string(GoalSource g);

struct NavConfig
{
    double step_m = 0.25;
    int max_steps = 1000;
    int replan_interval = 15;
    double wireless_goal_m = 3.75;
    double snr_gate_db = 10.0;
    double arrival_radius_m = 0.3;
    double sensing_radius_m = 3.0;
    double fov_deg = 79.0;
    double detect_range_m = 5.0;
    double map_resolution = 0.25;
};

/// 8-connected A* over cells that are not Wall (Unknown is passable), no
/// corner cutting, diagonal cost sqrt(2). Returns cell centers from the
/// start cell to the goal cell, or an empty list if unreachable. Among
/// equal-cost paths it prefers the one closest to the start-goal line.
std::vector<Point2> plan_shortest(const OccupancyMap &map, const Point2 &from, const Point2 &to);

/// Cost (in cells) of an 8-connected cell path.
double path_cost_cells(const OccupancyMap &map, const std::vector<Point2> &path);

/// Goal cell center of the nearest frontier cluster, nearest by path distance.
/// Throws NoFrontier when no known-free cell borders unknown space.
Point2 frontier_goal(const OccupancyMap &known, const Point2 &pos);

bool policy_admits(Policy policy, LinkState predicted);

std::optional<Point2> wireless_goal(const Point2 &pos, const std::vector<PathEstimate> &estimates,
                                    LinkState state_pred, Policy policy, const NavConfig &cfg = {},
                                    double side_m = 24.0);

bool visual_detect(const Environment &env, const Point2 &pos, double heading_deg, const Point2 &tx,
                   const NavConfig &cfg = {});

/// What the agent's radio reports at a position.
struct WirelessObservation
{
    std::vector<PathEstimate> estimates;
    LinkState predicted = LinkState::Outage;
};

using ObserveFn = std::function<WirelessObservation(const Point2 &pos)>;

struct TrajectoryPoint
{
    Point2 p;
    GoalSource source = GoalSource::None;
};

struct EpisodeResult
{
    int env_id = 0;
    int tx_id = 0;
    Point2 start{0.0, 0.0};
    Policy policy = Policy::Baseline;
    bool success = false;
    /// max_steps + 1 when the target was not reached.
    int steps = 0;
    int baseline_steps = 0;
    double relative_time = 0.0;
    Difficulty difficulty = Difficulty::Easy;
    std::vector<TrajectoryPoint> trajectory;
};

/// Runs one policy from `start` until the agent passes within the arrival
/// radius of the TX or the step cap is hit. `truth` is rasterize(env).
/// baseline_steps / relative_time are left for the caller to fill in.
EpisodeResult run_episode(const Environment &env, const OccupancyMap &truth, int tx_id, const Point2 &start,
                          Policy policy, const ObserveFn &observe, std::uint64_t seed, const NavConfig &cfg = {});

/// Runs the Baseline first and then every policy in `policies`, filling
/// baseline_steps and relative_time.
std::vector<EpisodeResult> run_policies(const Environment &env, const OccupancyMap &truth, int tx_id,
                                        const Point2 &start, const std::vector<Policy> &policies,
                                        const ObserveFn &observe, std::uint64_t seed, const NavConfig &cfg = {});

/// Tercile split, boundaries at the 1/3 and 2/3 linear-interpolated
/// quantiles; a value equal to a boundary goes to the lower tier.
std::vector<Difficulty> classify_difficulty(const std::vector<int> &baseline_steps);

} // namespace mmw

#endif
