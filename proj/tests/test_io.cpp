// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include "mmw/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mmw;
namespace fs = std::filesystem;

namespace
{

struct TempDir
{
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path() / ("mmw_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string &name) const { return (path / name).string(); }
};

void write_text(const std::string &path, const std::string &text)
{
    std::ofstream(path) << text;
}

} // namespace

TEST_CASE("environment round trip")
{
    TempDir dir;
    const auto env = place_transmitters(generate_environment(5), 3, 9);
    io::save_environment(dir.file("env.json"), env);
    const auto back = io::load_environment(dir.file("env.json"));
    CHECK(back.side_m == env.side_m);
    CHECK(back.seed == env.seed);
    REQUIRE(back.walls.size() == env.walls.size());
    for (std::size_t i = 0; i < env.walls.size(); ++i)
    {
        CHECK(back.walls[i].a == env.walls[i].a);
        CHECK(back.walls[i].b == env.walls[i].b);
        CHECK(back.walls[i].material == env.walls[i].material);
    }
    REQUIRE(back.tx_locations.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(back.tx_locations[i] == env.tx_locations[i]);
}

TEST_CASE("path map round trip")
{
    TempDir dir;
    auto env = test::door_env(10.0, 5.125, 4.0, 5.0);
    env.tx_locations = {{2.125, 2.125}};
    const auto grid = make_rx_grid(env, 8, 8, 1.2);
    const auto recs = trace_map(env, 0, grid, [](const PathComponent &p) { return 100.0 + p.gain_db(); });
    REQUIRE_FALSE(recs.empty());
    io::save_path_map(dir.file("paths.ndjson"), recs);
    const auto back = io::load_path_map(dir.file("paths.ndjson"));
    REQUIRE(back.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
    {
        CHECK(back[i].cell_ix == recs[i].cell_ix);
        CHECK(back[i].cell_iy == recs[i].cell_iy);
        CHECK(back[i].true_state == recs[i].true_state);
        REQUIRE(back[i].paths.size() == recs[i].paths.size());
        for (std::size_t k = 0; k < recs[i].paths.size(); ++k)
        {
            const auto &a = recs[i].paths[k], &b = back[i].paths[k];
            CHECK(std::abs(a.gain - b.gain) <= 1e-12 * std::abs(a.gain));
            CHECK(a.aoa_deg == b.aoa_deg);
            CHECK(a.aod_deg == b.aod_deg);
            CHECK(a.delay_ns == b.delay_ns);
            CHECK(a.order() == b.order());
        }
    }
}

TEST_CASE("estimates, dataset, model and episode round trips")
{
    TempDir dir;

    io::LinkEstimates le;
    le.env_id = 3;
    le.tx_id = 2;
    le.cell_ix = 11;
    le.cell_iy = 7;
    PathEstimate a, b;
    a.rel_delay_ns = 12.5;
    a.aoa_deg = -33.25;
    a.aod_deg = 71.0;
    a.snr_db = 18.75;
    b.aoa_deg = 1.0 / 3.0;
    b.aod_deg = -179.5;
    b.snr_db = 5.0;
    le.estimates = {a, b};
    io::save_estimates(dir.file("est.ndjson"), {le, io::LinkEstimates{}});
    const auto est = io::load_estimates(dir.file("est.ndjson"));
    REQUIRE(est.size() == 2);
    CHECK(est[0].env_id == 3);
    CHECK(est[0].cell_iy == 7);
    REQUIRE(est[0].estimates.size() == 2);
    CHECK(est[0].estimates[1].aoa_deg == 1.0 / 3.0);
    CHECK(est[0].estimates[0].snr_db == 18.75);
    CHECK(est[1].estimates.empty());

    LinkSample s;
    s.features = assemble_features(le.estimates, FeatureMode::AoaAod);
    s.label = LinkState::FirstOrderNLOS;
    s.env_id = 3;
    s.tx_id = 2;
    s.cell_ix = 11;
    s.cell_iy = 7;
    io::save_dataset(dir.file("ds.ndjson"), {s});
    const auto ds = io::load_dataset(dir.file("ds.ndjson"));
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].features == s.features);
    CHECK(ds[0].label == s.label);
    CHECK(ds[0].cell_ix == 11);

    const auto model = MlpModel::initialize({15, 8, 6, 4}, 21, FeatureMode::AoaOnly);
    io::save_model(dir.file("model.json"), model);
    const auto m2 = io::load_model(dir.file("model.json"));
    CHECK(m2.mode == FeatureMode::AoaOnly);
    REQUIRE(m2.layers.size() == model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i)
    {
        CHECK(m2.layers[i].w == model.layers[i].w);
        CHECK(m2.layers[i].b == model.layers[i].b);
    }

    EpisodeResult ep;
    ep.env_id = 4;
    ep.tx_id = 1;
    ep.start = {2.125, 3.375};
    ep.policy = Policy::AoaWhenLosOrFirstNlos;
    ep.success = true;
    ep.steps = 57;
    ep.baseline_steps = 50;
    ep.relative_time = 1.14;
    ep.difficulty = Difficulty::Moderate;
    ep.trajectory = {{{2.125, 3.375}, GoalSource::None}, {{2.375, 3.375}, GoalSource::Wireless}};
    io::save_episodes(dir.file("eps.ndjson"), {ep});
    const auto eps = io::load_episodes(dir.file("eps.ndjson"));
    REQUIRE(eps.size() == 1);
    CHECK(eps[0].policy == ep.policy);
    CHECK(eps[0].steps == 57);
    CHECK(eps[0].relative_time == 1.14);
    CHECK(eps[0].difficulty == Difficulty::Moderate);
    REQUIRE(eps[0].trajectory.size() == 2);
    CHECK(eps[0].trajectory[1].source == GoalSource::Wireless);
    CHECK(eps[0].trajectory[1].p == ep.trajectory[1].p);
}

TEST_CASE("text outputs")
{
    const std::vector<EpochMetrics> hist{{1, 1.5, 1.25, 0.5, 0.25}};
    CHECK(io::metrics_csv(hist) == "epoch,train_loss,val_loss,train_acc,val_acc\n1,1.5,1.25,0.5,0.25\n");
    CHECK(io::fmt(0.1) == "0.1");
    CHECK(io::fmt(std::nan("")) == "nan");

    auto env = test::box_env(3.0);
    const auto grid = make_rx_grid(env, 3, 2, 1.0);
    CHECK(io::grid_mask_csv(grid) == "0,0,0\n0,1,0\n");
}

TEST_CASE("malformed input raises DataError")
{
    TempDir dir;
    write_text(dir.file("bad.json"), "{ not json");
    CHECK_THROWS_AS(io::load_environment(dir.file("bad.json")), DataError);
    CHECK_THROWS_AS(io::load_environment(dir.file("missing.json")), DataError);

    write_text(dir.file("keys.json"), R"({"side_m": 10})");
    CHECK_THROWS_AS(io::load_environment(dir.file("keys.json")), DataError);

    write_text(dir.file("types.ndjson"), R"({"env_id":"x","tx_id":0,"cell":[0,0],"estimates":[]})" "\n");
    CHECK_THROWS_AS(io::load_estimates(dir.file("types.ndjson")), DataError);

    write_text(dir.file("trunc.ndjson"), R"({"env_id":0,"tx_id":0,"cell":[0,0],"estimates":[]})" "\n{\"env_id\":");
    CHECK_THROWS_AS(io::load_estimates(dir.file("trunc.ndjson")), DataError);

    write_text(dir.file("model.json"),
               R"({"mode":"aoa_aod","layers":[{"rows":2,"cols":3,"w":[1,2,3],"b":[0,0]}]})");
    CHECK_THROWS_AS(io::load_model(dir.file("model.json")), DataError);

    write_text(dir.file("label.ndjson"),
               R"({"env_id":0,"tx_id":0,"cell_ix":0,"cell_iy":0,"label":"sideways","features":[]})" "\n");
    CHECK_THROWS_AS(io::load_dataset(dir.file("label.ndjson")), DataError);
}
