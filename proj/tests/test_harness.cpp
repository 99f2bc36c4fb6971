// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include "mmw/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmw;
namespace fs = std::filesystem;

namespace
{

fs::path scratch(const std::string &name)
{
    const fs::path p = fs::temp_directory_path() / ("mmw_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig smoke_config()
{
    ExperimentConfig c = ExperimentConfig::desk();
    c.n_envs = 4;
    c.train_envs = 2;
    c.eval_envs = 2;
    c.tx_per_env = 2;
    c.grid_nx = 30;
    c.grid_ny = 30;
    c.grid_spacing = 0.8;
    c.nav_starts_per_tx = 3;
    c.classifier.epochs = 20;
    return c;
}

// Second column of a "key,x,cdf" style CSV grouped by its leading fields.
void check_cdf_monotone(const std::string &csv, std::size_t key_fields)
{
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::string prev_key;
    double prev_x = -1e300, prev_c = 0.0;
    while (std::getline(in, line))
    {
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string x; std::getline(ls, x, ',');)
            f.push_back(x);
        REQUIRE(f.size() == key_fields + 2);
        std::string key;
        for (std::size_t i = 0; i < key_fields; ++i)
            key += f[i] + "/";
        const double x = std::stod(f[key_fields]), c = std::stod(f[key_fields + 1]);
        if (key != prev_key)
        {
            prev_key = key;
            prev_x = -1e300;
            prev_c = 0.0;
        }
        CHECK(x >= prev_x);
        CHECK(c > prev_c);
        CHECK(c <= 1.0);
        prev_x = x;
        prev_c = c;
    }
}

} // namespace

TEST_CASE("experiment config")
{
    const auto desk = ExperimentConfig::desk();
    CHECK_NOTHROW(desk.validate());
    CHECK_NOTHROW(ExperimentConfig::full().validate());
    CHECK(ExperimentConfig::full().n_envs == 38);
    CHECK(desk.eval_env_ids() == std::vector<int>{4, 5, 6, 7});
    CHECK(desk.is_train_env(3));
    CHECK_FALSE(desk.is_train_env(4));

    auto c = desk;
    c.seeds.noise = 99;
    c.classifier.epochs = 7;
    c.nav.max_steps = 500;
    c.rx_array.n_rows = 2;
    const auto back = config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.seeds.noise == 99);
    CHECK(back.nav.max_steps == 500);

    const auto partial = config_from_json(io::json{{"tx_per_env", 5}});
    CHECK(partial.tx_per_env == 5);
    CHECK(partial.grid_nx == desk.grid_nx);

    CHECK_THROWS_AS(config_from_json(io::json{{"train_envs", 3}}), DataError);
    CHECK_THROWS_AS(config_from_json(io::json{{"tx_per_env", "many"}}), DataError);

    const auto dir = scratch("config");
    save_config((dir / "c.json").string(), c);
    CHECK(to_json(load_config((dir / "c.json").string())) == to_json(c));
    fs::remove_all(dir);
}

TEST_CASE("dataset join")
{
    LinkRecord r;
    r.tx_id = 0;
    r.cell_ix = 1;
    r.cell_iy = 2;
    r.true_state = LinkState::LOS;
    io::LinkEstimates e;
    e.env_id = 5;
    e.tx_id = 0;
    e.cell_ix = 1;
    e.cell_iy = 2;

    const auto joined = join_dataset(5, {r}, {e});
    REQUIRE(joined.size() == 1);
    CHECK(joined[0].label == LinkState::LOS);
    CHECK(joined[0].features.size() == 20);

    CHECK_THROWS_AS(join_dataset(5, {r}, {}), KeyMismatch);
    CHECK_THROWS_AS(join_dataset(4, {r}, {e}), KeyMismatch);
    auto other = e;
    other.cell_iy = 3;
    CHECK_THROWS_AS(join_dataset(5, {r}, {other}), KeyMismatch);
    CHECK_THROWS_AS(join_dataset(5, {r}, {e, e}), KeyMismatch);
}

TEST_CASE("staged dataset construction")
{
    auto cfg = ExperimentConfig::desk();
    cfg.n_envs = 2;
    cfg.train_envs = 1;
    cfg.eval_envs = 1;
    cfg.tx_per_env = 1;
    cfg.grid_nx = 12;
    cfg.grid_ny = 12;
    cfg.grid_spacing = 2.0;
    const auto dir = scratch("stages").string();
    save_config(run::config_file(dir), cfg);
    stage_gen_env(cfg, dir);
    stage_raytrace(cfg, dir, dir);
    stage_estimate(cfg, dir, dir);
    const auto bal = stage_build_dataset(cfg, dir, dir);

    const LinkBudget budget(cfg);
    for (int e = 0; e < 2; ++e)
    {
        const auto env = io::load_environment(run::env_file(dir, e));
        const auto grid = experiment_grid(cfg, env);
        const auto paths = io::load_path_map(run::paths_file(dir, e, 0));
        const auto est = io::load_estimates(run::estimates_file(dir, e, 0));
        CHECK(paths.size() == est.size());
        CHECK(static_cast<int>(paths.size()) >= grid.valid_count() - 1);
        CHECK(static_cast<int>(paths.size()) <= grid.valid_count());

        const auto samples = io::load_dataset(run::dataset_file(dir, e == 0));
        CHECK(samples.size() == paths.size());
        long count = 0;
        for (auto n : (e == 0 ? bal.train : bal.eval))
            count += n;
        CHECK(count == static_cast<long>(samples.size()));

        // Labels agree with a fresh trace of the same links.
        const int n_check = std::min<int>(50, static_cast<int>(paths.size()));
        const Tracer tracer(env, env.tx_locations[0], cfg.trace);
        for (int i = 0; i < n_check; ++i)
        {
            const auto &rec = paths[static_cast<std::size_t>(i)];
            const auto fresh = tracer.trace(grid.center(rec.cell_ix, rec.cell_iy));
            std::vector<double> snr;
            for (const auto &p : fresh)
                snr.push_back(budget.path_snr_db(p));
            CHECK(label_link(fresh, snr, cfg.label_threshold_db) == samples[static_cast<std::size_t>(i)].label);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("empirical CDF and quantiles")
{
    const auto cdf = empirical_cdf({3.0, 1.0, 2.0}, 4);
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair<double, double>{1.0, 0.25});
    CHECK(cdf[2] == std::pair<double, double>{3.0, 0.75});
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(std::isnan(quantile({}, 0.5)));
}

TEST_CASE("smoke pipeline is complete and reproducible")
{
    const auto cfg = smoke_config();
    const auto a = scratch("smoke_a"), b = scratch("smoke_b");
    save_config(run::config_file(a.string()), cfg);
    save_config(run::config_file(b.string()), cfg);
    const auto rep = run_pipeline(cfg, a.string());
    run_pipeline(cfg, b.string());

    for (const char *f : {"aoa_cdf.csv", "confusion.csv", "training.csv", "arrivals.csv", "speed_cdf.csv",
                          "summary.json"})
    {
        INFO(f);
        const auto x = slurp(a / "report" / f);
        CHECK(x.size() > 20);
        CHECK(x == slurp(b / "report" / f));
    }
    check_cdf_monotone(rep.aoa_cdf_csv, 1);
    check_cdf_monotone(rep.speed_cdf_csv, 2);

    const auto &nav = rep.summary.at("navigation");
    CHECK(nav.at("episodes").get<long>() ==
          static_cast<long>(cfg.eval_envs * cfg.tx_per_env * cfg.nav_starts_per_tx * 5));
    CHECK(nav.at("step_cap_consistent").get<bool>());
    CHECK(nav.at("baseline_mean_relative_time").get<double>() == 1.0);
    CHECK(nav.at("arrivals").at("Baseline").at("all").at("rate").get<double>() == 1.0);
    for (const char *m : {"aoa_aod", "aoa_only"})
    {
        const double acc = rep.summary.at("classifier").at(m).at("accuracy").get<double>();
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    CHECK(rep.summary.at("dataset").at("train_total").get<long>() > 0);

    fs::remove_all(a);
    fs::remove_all(b);
}
