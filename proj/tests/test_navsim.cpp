// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <doctest.h>

using namespace mmw;

namespace
{

OccupancyMap blank_map(int nx, int ny, CellState s = CellState::Free)
{
    OccupancyMap m;
    m.nx = nx;
    m.ny = ny;
    m.cells.assign(static_cast<std::size_t>(nx) * ny, s);
    return m;
}

WirelessObservation nothing(const Point2 &) { return {}; }

// Radio that reports the traced strongest path exactly, labelled by LOS.
ObserveFn perfect_radio(const Environment &env, const Point2 &tx)
{
    return [env, tx](const Point2 &p) {
        WirelessObservation o;
        if ((p - tx).norm() < 1e-6)
            return o;
        const auto paths = trace_link(env, tx, p);
        if (paths.empty())
            return o;
        const auto &best = paths.front();
        PathEstimate e;
        e.aoa_deg = best.aoa_deg;
        e.aod_deg = best.aod_deg;
        e.snr_db = 30.0;
        o.estimates.push_back(e);
        o.predicted = best.order() == 0 ? LinkState::LOS : LinkState::FirstOrderNLOS;
        return o;
    };
}

} // namespace

TEST_CASE("A* shortest paths")
{
    SUBCASE("straight corridor of 10 cells")
    {
        auto m = blank_map(10, 1);
        const auto path = plan_shortest(m, m.center(0, 0), m.center(9, 0));
        REQUIRE(path.size() == 10);
        CHECK(path_cost_cells(m, path) == doctest::Approx(9.0));
    }
    SUBCASE("from equals to")
    {
        auto m = blank_map(5, 5);
        const auto path = plan_shortest(m, m.center(2, 2), m.center(2, 2));
        REQUIRE(path.size() == 1);
        CHECK(path_cost_cells(m, path) == 0.0);
    }
    SUBCASE("unreachable goal")
    {
        auto m = blank_map(5, 5);
        for (int y = 0; y < 5; ++y)
            m.at(2, y) = CellState::Wall;
        CHECK(plan_shortest(m, m.center(0, 0), m.center(4, 4)).empty());
    }
    SUBCASE("no corner cutting")
    {
        auto m = blank_map(2, 2);
        m.at(1, 0) = CellState::Wall;
        m.at(0, 1) = CellState::Wall;
        CHECK(plan_shortest(m, m.center(0, 0), m.center(1, 1)).empty());
    }
    SUBCASE("cost equals Dijkstra on random maps")
    {
        std::mt19937_64 rng(17);
        std::uniform_int_distribution<int> size(5, 30);
        std::bernoulli_distribution wall(0.25), unknown(0.1);
        int reachable = 0;
        for (int trial = 0; trial < 200; ++trial)
        {
            auto m = blank_map(size(rng), size(rng));
            for (auto &c : m.cells)
                c = wall(rng) ? CellState::Wall : (unknown(rng) ? CellState::Unknown : CellState::Free);
            m.cells.front() = CellState::Free;
            m.cells.back() = CellState::Free;
            const Point2 a = m.center(0), b = m.center(static_cast<int>(m.cells.size()) - 1);
            const double ref = test::dijkstra_cost_cells(m, a, b);
            const auto path = plan_shortest(m, a, b);
            if (std::isinf(ref))
            {
                CHECK(path.empty());
                continue;
            }
            ++reachable;
            REQUIRE_FALSE(path.empty());
            CHECK(path_cost_cells(m, path) == doctest::Approx(ref).epsilon(1e-9));
            for (const auto &p : path)
            {
                const auto [ix, iy] = m.cell_of(p);
                CHECK(m.at(ix, iy) != CellState::Wall);
            }
        }
        CHECK(reachable > 50);
    }
}

TEST_CASE("frontier goal")
{
    SUBCASE("fully known map has no frontier")
    {
        CHECK_THROWS_AS(frontier_goal(blank_map(6, 6), {0.5, 0.5}), NoFrontier);
    }
    SUBCASE("frontier through a door")
    {
        // Known left room, unknown beyond the door column.
        auto m = blank_map(9, 9);
        for (int y = 0; y < 9; ++y)
        {
            m.at(4, y) = CellState::Wall;
            for (int x = 5; x < 9; ++x)
                m.at(x, y) = CellState::Unknown;
        }
        m.at(4, 4) = CellState::Free;
        const auto g = frontier_goal(m, m.center(1, 1));
        CHECK(m.cell_of(g) == std::make_pair(4, 4));
    }
    SUBCASE("ties go to the lowest cell index")
    {
        auto m = blank_map(7, 1);
        m.at(0, 0) = CellState::Unknown;
        m.at(6, 0) = CellState::Unknown;
        const auto g = frontier_goal(m, m.center(3, 0));
        CHECK(m.cell_of(g) == std::make_pair(1, 0));
    }
}

TEST_CASE("wireless goal")
{
    PathEstimate e;
    e.aoa_deg = 0.0;
    e.snr_db = 20.0;
    NavConfig cfg;

    auto g = wireless_goal({5.0, 5.0}, {e}, LinkState::LOS, Policy::AoaWhenLos, cfg);
    REQUIRE(g);
    CHECK((*g - Point2(8.75, 5.0)).norm() < 1e-12);

    CHECK_FALSE(wireless_goal({5.0, 5.0}, {e}, LinkState::FirstOrderNLOS, Policy::AoaWhenLos, cfg));
    CHECK(wireless_goal({5.0, 5.0}, {e}, LinkState::FirstOrderNLOS, Policy::AoaWhenLosOrFirstNlos, cfg));
    CHECK(wireless_goal({5.0, 5.0}, {e}, LinkState::HigherOrderNLOS, Policy::AoaBySnr, cfg));
    CHECK_FALSE(wireless_goal({5.0, 5.0}, {}, LinkState::LOS, Policy::AoaBySnr, cfg));

    e.snr_db = 9.9;
    CHECK_FALSE(wireless_goal({5.0, 5.0}, {e}, LinkState::LOS, Policy::AoaBySnr, cfg));

    e.snr_db = 20.0;
    e.aoa_deg = 90.0;
    g = wireless_goal({5.0, 22.0}, {e}, LinkState::LOS, Policy::AoaBySnr, cfg);
    REQUIRE(g);
    CHECK(g->y() == 24.0);

    PathEstimate weak = e, strong = e;
    weak.snr_db = 15.0;
    weak.aoa_deg = 180.0;
    strong.snr_db = 25.0;
    strong.aoa_deg = -90.0;
    g = wireless_goal({10.0, 10.0}, {weak, strong}, LinkState::LOS, Policy::AoaBySnr, cfg);
    REQUIRE(g);
    CHECK((*g - Point2(10.0, 6.25)).norm() < 1e-9);
}

TEST_CASE("visual detection")
{
    const auto env = test::box_env(10.0);
    CHECK(visual_detect(env, {2, 5}, 0.0, {6, 5}));
    CHECK(visual_detect(env, {2, 5}, 39.0, {6, 5}));
    CHECK_FALSE(visual_detect(env, {2, 5}, 40.0, {6, 5}));
    CHECK_FALSE(visual_detect(env, {2, 5}, 180.0, {6, 5}));
    CHECK_FALSE(visual_detect(env, {2, 5}, 0.0, {7.5, 5}));

    const auto walled = test::door_env(10.0, 4.125, 1.0, 2.0);
    CHECK_FALSE(visual_detect(walled, {2, 5}, 0.0, {6, 5}));
}

TEST_CASE("episodes")
{
    SUBCASE("baseline in an empty room takes 19 steps for 5 m")
    {
        auto env = test::box_env(24.0);
        env.tx_locations = {{15.125, 10.125}};
        const auto truth = rasterize(env);
        const auto r = run_episode(env, truth, 0, {10.125, 10.125}, Policy::Baseline, nothing, 1);
        CHECK(r.success);
        CHECK(r.steps == 19);
        CHECK(r.trajectory.front().source == GoalSource::None);
    }
    SUBCASE("perfect radio is near the baseline")
    {
        auto env = test::door_env(12.0, 6.125, 4.875, 5.875);
        env.tx_locations = {{9.125, 9.125}, {3.125, 3.125}};
        const auto truth = rasterize(env);
        for (const Point2 start : {Point2(2.125, 8.125), Point2(10.125, 2.125)})
            for (int t = 0; t < 2; ++t)
            {
                INFO("start " << start.transpose() << " tx " << t);
                const auto rs = run_policies(env, truth, t, start, {Policy::AoaWhenLosOrFirstNlos},
                                             perfect_radio(env, env.tx_locations[static_cast<std::size_t>(t)]), 3);
                REQUIRE(rs.size() == 1);
                CHECK(rs[0].success);
                CHECK(rs[0].relative_time <= 1.3);
            }
    }
    SUBCASE("sealed target is never reached")
    {
        auto env = test::box_env(12.0);
        env.walls.push_back({{8.125, 8.125}, {11.125, 8.125}, 0});
        env.walls.push_back({{11.125, 8.125}, {11.125, 11.125}, 0});
        env.walls.push_back({{11.125, 11.125}, {8.125, 11.125}, 0});
        env.walls.push_back({{8.125, 11.125}, {8.125, 8.125}, 0});
        env.tx_locations = {{9.625, 9.625}};
        const auto truth = rasterize(env);
        for (Policy p : {Policy::Baseline, Policy::AoaBySnr})
        {
            const auto r = run_episode(env, truth, 0, {2.125, 2.125}, p, perfect_radio(env, env.tx_locations[0]), 5);
            CHECK_FALSE(r.success);
            CHECK(r.steps == NavConfig{}.max_steps + 1);
        }
    }
    SUBCASE("determinism and wall avoidance")
    {
        auto env = test::door_env(12.0, 6.125, 4.875, 5.875);
        env.tx_locations = {{9.125, 9.125}};
        const auto truth = rasterize(env);
        for (Policy p : kAllPolicies)
        {
            const auto a = run_episode(env, truth, 0, {2.125, 2.125}, p, perfect_radio(env, env.tx_locations[0]), 8);
            const auto b = run_episode(env, truth, 0, {2.125, 2.125}, p, perfect_radio(env, env.tx_locations[0]), 8);
            CHECK(a.steps == b.steps);
            REQUIRE(a.trajectory.size() == b.trajectory.size());
            for (std::size_t i = 0; i < a.trajectory.size(); ++i)
                CHECK(a.trajectory[i].p == b.trajectory[i].p);
            for (std::size_t i = 1; i < a.trajectory.size(); ++i)
                CHECK(line_of_sight(env, a.trajectory[i - 1].p, a.trajectory[i].p));
        }
    }
    SUBCASE("invalid start")
    {
        auto env = test::door_env(12.0, 6.125, 4.875, 5.875);
        env.tx_locations = {{9.125, 9.125}};
        const auto truth = rasterize(env);
        CHECK_THROWS_AS(run_episode(env, truth, 0, {6.125, 2.0}, Policy::Baseline, nothing, 1), InvalidStart);
        CHECK_THROWS_AS(run_episode(env, truth, 0, {-1.0, 2.0}, Policy::Baseline, nothing, 1), InvalidStart);
    }
}

TEST_CASE("difficulty terciles")
{
    const auto d = classify_difficulty({10, 20, 30, 40, 50, 60, 70, 80, 90});
    const std::vector<Difficulty> want{Difficulty::Easy,     Difficulty::Easy,     Difficulty::Easy,
                                       Difficulty::Moderate, Difficulty::Moderate, Difficulty::Moderate,
                                       Difficulty::Hard,     Difficulty::Hard,     Difficulty::Hard};
    CHECK(d == want);

    for (const auto x : classify_difficulty(std::vector<int>(12, 40)))
        CHECK(x == Difficulty::Easy);

    std::vector<int> steps(193);
    std::iota(steps.begin(), steps.end(), 1);
    std::shuffle(steps.begin(), steps.end(), std::mt19937_64(3));
    std::array<int, 3> counts{};
    for (const auto x : classify_difficulty(steps))
        ++counts[static_cast<std::size_t>(x)];
    for (int c : counts)
        CHECK(std::abs(c - 193 / 3) <= 1);

    CHECK_THROWS_AS(classify_difficulty({}), EmptyDataset);
}
