// SPDX-License-Identifier: Apache-2.0

#include "mmw/harness.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <tuple>

namespace mmw
{

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExperimentSeeds, env, noise, train, nav)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GenConfig, side_m, min_rooms, max_rooms, min_room_dim, door_width_min,
                                   door_width_max, lattice, lattice_offset, door_clearance, max_retries)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PlacementConfig, min_separation, wall_clearance, max_attempts_per_tx)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TraceConfig, max_reflections, enable_diffraction, enable_transmission, max_order,
                                   diffraction_loss_db, transmission_loss_db, carrier_hz, max_paths)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ArrayConfig, n_arrays, n_ant, n_rows, sector_azimuths_deg, element_spacing,
                                   carrier_hz, element_gmax_dbi, back_floor_db)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SoundingConfig, tx_power_dbm, bandwidth_hz, waveform_len, noise_figure_db, n_dly,
                                   delay_window_ns, delay_offset_ns, t_sync_s, t_sweep_s, noiseless, waveform_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecomposeOptions, oversample, power_iters, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EstimatorConfig, k_paths, gamma_min_db, snr_offset_db, refine_aoa, fine_step_deg,
                                   refine_half_span_deg, decomp)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TrainConfig, hidden, learning_rate, beta1, beta2, epsilon, epochs, batch, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(NavConfig, step_m, max_steps, replan_interval, wireless_goal_m, snr_gate_db,
                                   arrival_radius_m, sensing_radius_m, fov_deg, detect_range_m, map_resolution)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExperimentConfig, n_envs, train_envs, eval_envs, tx_per_env, seeds, grid_nx,
                                   grid_ny, grid_spacing, label_threshold_db, gen, placement, trace, tx_array,
                                   rx_array, tx_beams, rx_beams, sounding, estimator, calibrate_snr, classifier, nav,
                                   nav_starts_per_tx, nav_min_start_distance_m)

using io::json;
namespace fs = std::filesystem;

namespace
{

void progress(const std::string &stage, const std::string &msg)
{
    std::clog << "[" << stage << "] " << msg << std::endl;
}

std::string padded(int v, int width)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, v);
    return buf;
}

std::string state_key(LinkState s)
{
    return to_string(s);
}

std::tuple<int, int, int> link_key(int tx, int ix, int iy)
{
    return {tx, ix, iy};
}

std::vector<std::string> metrics_lines(const std::string &path)
{
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            lines.push_back(line);
    return lines;
}

} // namespace

// ------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::desk()
{
    ExperimentConfig c;
    c.n_envs = 8;
    c.train_envs = 4;
    c.eval_envs = 4;
    c.tx_per_env = 3;
    c.grid_nx = 60;
    c.grid_ny = 60;
    c.grid_spacing = 0.4;
    return c;
}

ExperimentConfig ExperimentConfig::full()
{
    return ExperimentConfig{};
}

void ExperimentConfig::validate() const
{
    if (n_envs <= 0 || train_envs <= 0 || eval_envs <= 0)
        throw DataError("config: environment counts must be positive");
    if (train_envs + eval_envs != n_envs)
        throw DataError("config: train_envs + eval_envs must equal n_envs");
    if (tx_per_env <= 0)
        throw DataError("config: tx_per_env must be positive");
    if (grid_nx <= 0 || grid_ny <= 0 || grid_spacing <= 0.0)
        throw DataError("config: invalid receiver grid");
    if (grid_nx * grid_spacing > gen.side_m + 1e-9 || grid_ny * grid_spacing > gen.side_m + 1e-9)
        throw DataError("config: receiver grid exceeds the environment");
    if (tx_beams <= 0 || rx_beams <= 0)
        throw DataError("config: beam counts must be positive");
    if (nav_starts_per_tx < 0)
        throw DataError("config: nav_starts_per_tx must be non-negative");
    if (std::abs(nav.map_resolution - gen.lattice) > 1e-12)
        throw DataError("config: nav.map_resolution must equal the wall lattice spacing");
    tx_array.validate();
    rx_array.validate();
    sounding.validate();
}

std::vector<int> ExperimentConfig::eval_env_ids() const
{
    std::vector<int> ids;
    for (int e = train_envs; e < n_envs; ++e)
        ids.push_back(e);
    return ids;
}

json to_json(const ExperimentConfig &cfg)
{
    json j;
    mmw::to_json(j, cfg);
    return j;
}

ExperimentConfig config_from_json(const json &j, const ExperimentConfig &base)
{
    if (!j.is_object())
        throw DataError("config: expected a JSON object");
    json merged = to_json(base);
    merged.merge_patch(j);
    try
    {
        ExperimentConfig cfg = merged.get<ExperimentConfig>();
        cfg.validate();
        return cfg;
    }
    catch (const json::exception &e)
    {
        throw DataError(std::string("config: ") + e.what());
    }
}

void save_config(const std::string &path, const ExperimentConfig &cfg)
{
    write_file_atomic(path, to_json(cfg).dump(2) + "\n");
}

ExperimentConfig load_config(const std::string &path, const ExperimentConfig &base)
{
    json j;
    try
    {
        j = json::parse(read_file(path));
    }
    catch (const json::exception &e)
    {
        throw DataError(path + ": " + e.what());
    }
    return config_from_json(j, base);
}

namespace run
{

std::string config_file(const std::string &dir)
{
    return (fs::path(dir) / "config.json").string();
}

std::string env_file(const std::string &dir, int env_id)
{
    return (fs::path(dir) / "envs" / ("env_" + padded(env_id, 3) + ".json")).string();
}

std::string paths_file(const std::string &dir, int env_id, int tx_id)
{
    return (fs::path(dir) / "paths" / ("env_" + padded(env_id, 3) + "_tx_" + padded(tx_id, 2) + ".ndjson")).string();
}

std::string estimates_file(const std::string &dir, int env_id, int tx_id)
{
    return (fs::path(dir) / "estimates" / ("env_" + padded(env_id, 3) + "_tx_" + padded(tx_id, 2) + ".ndjson"))
        .string();
}

std::string tensor_file(const std::string &dir, int env_id, int tx_id, int ix, int iy)
{
    return (fs::path(dir) / "tensors" /
            ("env_" + padded(env_id, 3) + "_tx_" + padded(tx_id, 2) + "_" + padded(ix, 3) + "_" + padded(iy, 3) +
             ".mmwt"))
        .string();
}

std::string dataset_file(const std::string &dir, bool train_split)
{
    return (fs::path(dir) / "dataset" / (train_split ? "train.ndjson" : "eval.ndjson")).string();
}

std::string model_file(const std::string &dir, FeatureMode mode)
{
    return (fs::path(dir) / "models" / (std::string(to_string(mode)) + ".json")).string();
}

std::string metrics_file(const std::string &dir, FeatureMode mode)
{
    return (fs::path(dir) / "models" / ("metrics_" + std::string(to_string(mode)) + ".csv")).string();
}

std::string episodes_file(const std::string &dir)
{
    return (fs::path(dir) / "episodes" / "episodes.ndjson").string();
}

} // namespace run

// ------------------------------------------------------------------------
// Shared helpers

LinkBudget::LinkBudget(const ExperimentConfig &cfg)
    : tx_cb(build_codebook(cfg.tx_array, cfg.tx_beams)), rx_cb(build_codebook(cfg.rx_array, cfg.rx_beams)),
      noise_dbm(noise_floor_dbm(cfg.sounding)), tx_power_dbm(cfg.sounding.tx_power_dbm)
{
}

double LinkBudget::path_snr_db(const PathComponent &p) const
{
    return best_beam_snr_db(p, tx_cb, rx_cb, tx_power_dbm, noise_dbm);
}

int LinkBudget::strongest_path(const std::vector<PathComponent> &paths) const
{
    int best = -1;
    double best_snr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < paths.size(); ++i)
    {
        const double s = path_snr_db(paths[i]);
        if (s > best_snr)
        {
            best_snr = s;
            best = static_cast<int>(i);
        }
    }
    return best;
}

RxGrid experiment_grid(const ExperimentConfig &cfg, const Environment &env)
{
    return make_rx_grid(env, cfg.grid_nx, cfg.grid_ny, cfg.grid_spacing);
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values, std::size_t denominator)
{
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(values.size());
    if (denominator == 0)
        return out;
    for (std::size_t i = 0; i < values.size(); ++i)
        out.emplace_back(values[i], static_cast<double>(i + 1) / static_cast<double>(denominator));
    return out;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// ------------------------------------------------------------------------
// Stages

void stage_gen_env(const ExperimentConfig &cfg, const std::string &out)
{
    cfg.validate();
    save_config(run::config_file(out), cfg);
    for (int e = 0; e < cfg.n_envs; ++e)
    {
        const Environment base = generate_environment(mix_seed(cfg.seeds.env, e), cfg.gen);
        const Environment env = place_transmitters(base, cfg.tx_per_env, mix_seed(cfg.seeds.env, e, 1), cfg.placement);
        io::save_environment(run::env_file(out, e), env);
    }
    progress("gen-env", std::to_string(cfg.n_envs) + " environments");
}

void stage_raytrace(const ExperimentConfig &cfg, const std::string &in, const std::string &out)
{
    const LinkBudget budget(cfg);
    const PathSnrFn snr = [&](const PathComponent &p) { return budget.path_snr_db(p); };
    for (int e = 0; e < cfg.n_envs; ++e)
    {
        const Environment env = io::load_environment(run::env_file(in, e));
        if (static_cast<int>(env.tx_locations.size()) != cfg.tx_per_env)
            throw DataError("raytrace: environment " + std::to_string(e) + " has the wrong TX count");
        const RxGrid grid = experiment_grid(cfg, env);
        write_file_atomic((fs::path(out) / "paths" / ("env_" + padded(e, 3) + "_grid.csv")).string(),
                          io::grid_mask_csv(grid));
        for (int t = 0; t < cfg.tx_per_env; ++t)
            io::save_path_map(run::paths_file(out, e, t),
                              trace_map(env, t, grid, snr, cfg.trace, cfg.label_threshold_db));
        progress("raytrace", "env " + std::to_string(e));
    }
}

void stage_sound(const ExperimentConfig &cfg, const std::string &in, const std::string &out, int limit)
{
    if (limit <= 0)
        throw DataError("sound: limit must be positive");
    const LinkBudget budget(cfg);
    const Sounder sounder(cfg.sounding, budget.tx_cb, budget.rx_cb);
    for (int e = 0; e < cfg.n_envs; ++e)
        for (int t = 0; t < cfg.tx_per_env; ++t)
        {
            const auto recs = io::load_path_map(run::paths_file(in, e, t));
            const std::size_t n = std::min<std::size_t>(recs.size(), static_cast<std::size_t>(limit));
            for (std::size_t i = 0; i < n; ++i)
            {
                const LinkRecord &r = recs[i * recs.size() / n];
                const std::uint64_t seed =
                    mix_seed(cfg.seeds.noise, e, t, static_cast<std::uint64_t>(r.cell_iy) * cfg.grid_nx + r.cell_ix);
                save_tensor(run::tensor_file(out, e, t, r.cell_ix, r.cell_iy), sounder.sound(r.paths, seed));
            }
        }
}

void stage_estimate(const ExperimentConfig &cfg, const std::string &in, const std::string &out)
{
    const LinkBudget budget(cfg);
    const Sounder sounder(cfg.sounding, budget.tx_cb, budget.rx_cb);
    EstimatorConfig ecfg = cfg.estimator;
    if (cfg.calibrate_snr)
        ecfg.snr_offset_db = snr_calibration_offset_db(cfg.sounding, budget.tx_cb, budget.rx_cb);
    const Estimator estimator(budget.rx_cb, ecfg);
    for (int e = 0; e < cfg.n_envs; ++e)
    {
        for (int t = 0; t < cfg.tx_per_env; ++t)
        {
            const auto recs = io::load_path_map(run::paths_file(in, e, t));
            std::vector<io::LinkEstimates> est;
            est.reserve(recs.size());
            for (const auto &r : recs)
            {
                const std::uint64_t seed =
                    mix_seed(cfg.seeds.noise, e, t, static_cast<std::uint64_t>(r.cell_iy) * cfg.grid_nx + r.cell_ix);
                est.push_back({e, t, r.cell_ix, r.cell_iy, estimator.estimate(sounder.sound(r.paths, seed))});
            }
            io::save_estimates(run::estimates_file(out, e, t), est);
        }
        progress("estimate", "env " + std::to_string(e));
    }
}

std::vector<LinkSample> join_dataset(int env_id, const std::vector<LinkRecord> &paths,
                                     const std::vector<io::LinkEstimates> &estimates)
{
    std::map<std::tuple<int, int, int>, const io::LinkEstimates *> by_key;
    for (const auto &e : estimates)
    {
        if (e.env_id != env_id)
            throw KeyMismatch("estimate record belongs to environment " + std::to_string(e.env_id));
        if (!by_key.emplace(link_key(e.tx_id, e.cell_ix, e.cell_iy), &e).second)
            throw KeyMismatch("duplicate estimate record");
    }
    if (by_key.size() != paths.size())
        throw KeyMismatch("estimates cover " + std::to_string(by_key.size()) + " links, ray tracing " +
                          std::to_string(paths.size()));
    std::vector<LinkSample> out;
    out.reserve(paths.size());
    for (const auto &r : paths)
    {
        const auto it = by_key.find(link_key(r.tx_id, r.cell_ix, r.cell_iy));
        if (it == by_key.end())
            throw KeyMismatch("no estimates for tx " + std::to_string(r.tx_id) + " cell (" +
                              std::to_string(r.cell_ix) + ", " + std::to_string(r.cell_iy) + ")");
        LinkSample s;
        s.features = assemble_features(it->second->estimates, FeatureMode::AoaAod);
        s.label = r.true_state;
        s.env_id = env_id;
        s.tx_id = r.tx_id;
        s.cell_ix = r.cell_ix;
        s.cell_iy = r.cell_iy;
        out.push_back(std::move(s));
    }
    return out;
}

ClassBalance stage_build_dataset(const ExperimentConfig &cfg, const std::string &in, const std::string &out)
{
    std::vector<LinkSample> train_set, eval_set;
    for (int e = 0; e < cfg.n_envs; ++e)
        for (int t = 0; t < cfg.tx_per_env; ++t)
        {
            auto samples = join_dataset(e, io::load_path_map(run::paths_file(in, e, t)),
                                        io::load_estimates(run::estimates_file(in, e, t)));
            auto &dst = cfg.is_train_env(e) ? train_set : eval_set;
            dst.insert(dst.end(), std::make_move_iterator(samples.begin()), std::make_move_iterator(samples.end()));
        }
    ClassBalance bal;
    for (const auto &s : train_set)
        ++bal.train[static_cast<int>(s.label)];
    for (const auto &s : eval_set)
        ++bal.eval[static_cast<int>(s.label)];

    io::save_dataset(run::dataset_file(out, true), train_set);
    io::save_dataset(run::dataset_file(out, false), eval_set);
    json summary;
    for (int c = 0; c < kNumLinkStates; ++c)
    {
        const std::string k = state_key(static_cast<LinkState>(c));
        summary["train"][k] = bal.train[c];
        summary["eval"][k] = bal.eval[c];
    }
    summary["train_total"] = train_set.size();
    summary["eval_total"] = eval_set.size();
    write_file_atomic((fs::path(out) / "dataset" / "class_balance.json").string(), summary.dump(2) + "\n");
    progress("build-dataset", std::to_string(train_set.size()) + " train / " + std::to_string(eval_set.size()) +
                                  " eval samples");
    return bal;
}

void stage_train(const ExperimentConfig &cfg, const std::string &in, const std::string &out)
{
    const auto train_set = io::load_dataset(run::dataset_file(in, true));
    const auto eval_set = io::load_dataset(run::dataset_file(in, false));
    TrainConfig tcfg = cfg.classifier;
    tcfg.seed = cfg.seeds.train;
    for (FeatureMode mode : {FeatureMode::AoaAod, FeatureMode::AoaOnly})
    {
        const TrainResult res = train(train_set, eval_set, tcfg, mode);
        io::save_model(run::model_file(out, mode), res.model);
        write_file_atomic(run::metrics_file(out, mode), io::metrics_csv(res.history));
        progress("train", std::string(to_string(mode)) + " val_acc " + io::fmt(res.history.back().val_acc));
    }
}

void stage_eval_classifier(const ExperimentConfig &, const std::string &in, const std::string &out)
{
    const auto eval_set = io::load_dataset(run::dataset_file(in, false));
    json j;
    for (FeatureMode mode : {FeatureMode::AoaAod, FeatureMode::AoaOnly})
    {
        const EvalResult r = evaluate(io::load_model(run::model_file(in, mode)), eval_set);
        json m;
        m["accuracy"] = r.accuracy;
        m["total"] = r.total;
        m["recall"] = json::object();
        m["confusion"] = json::array();
        for (int t = 0; t < kNumLinkStates; ++t)
        {
            m["recall"][state_key(static_cast<LinkState>(t))] = r.recall[t];
            m["confusion"].push_back(std::vector<long>(r.confusion[t].begin(), r.confusion[t].end()));
        }
        j[to_string(mode)] = m;
    }
    write_file_atomic((fs::path(out) / "eval" / "classifier.json").string(), j.dump(2) + "\n");
}

namespace
{

struct CellObservations
{
    const RxGrid *grid = nullptr;
    std::map<std::pair<int, int>, WirelessObservation> cells;

    WirelessObservation operator()(const Point2 &pos) const
    {
        const auto c = grid->nearest_valid(pos);
        if (!c)
            return {};
        const auto it = cells.find(*c);
        return it == cells.end() ? WirelessObservation{} : it->second;
    }
};

std::vector<Point2> draw_starts(const ExperimentConfig &cfg, const OccupancyMap &truth, const Point2 &tx,
                                std::uint64_t seed)
{
    std::vector<int> free_cells;
    for (int i = 0; i < truth.nx * truth.ny; ++i)
        if (truth.cells[static_cast<std::size_t>(i)] == CellState::Free &&
            (truth.center(i) - tx).norm() >= cfg.nav_min_start_distance_m)
            free_cells.push_back(i);
    std::vector<Point2> starts;
    if (free_cells.empty())
        return starts;
    boost::random::mt19937_64 rng(seed);
    boost::random::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);
    const int max_attempts = 100 * std::max(1, cfg.nav_starts_per_tx);
    for (int a = 0; a < max_attempts && static_cast<int>(starts.size()) < cfg.nav_starts_per_tx; ++a)
    {
        const Point2 p = truth.center(free_cells[pick(rng)]);
        if (std::find(starts.begin(), starts.end(), p) != starts.end())
            continue;
        if (plan_shortest(truth, p, tx).empty())
            continue;
        starts.push_back(p);
    }
    return starts;
}

} // namespace

void stage_navigate(const ExperimentConfig &cfg, const std::string &in, const std::string &out)
{
    const MlpModel model = io::load_model(run::model_file(in, FeatureMode::AoaAod));
    const std::vector<Policy> policies(std::begin(kAllPolicies), std::end(kAllPolicies));
    std::vector<EpisodeResult> episodes;
    std::vector<int> start_baselines;
    std::vector<std::pair<std::size_t, std::size_t>> start_ranges;
    for (int e : cfg.eval_env_ids())
    {
        const Environment env = io::load_environment(run::env_file(in, e));
        const OccupancyMap truth = rasterize(env, cfg.nav.map_resolution);
        const RxGrid grid = experiment_grid(cfg, env);
        for (int t = 0; t < cfg.tx_per_env; ++t)
        {
            CellObservations obs;
            obs.grid = &grid;
            for (const auto &le : io::load_estimates(run::estimates_file(in, e, t)))
            {
                WirelessObservation w;
                w.estimates = le.estimates;
                w.predicted = static_cast<LinkState>(predict(model, assemble_features(le.estimates, FeatureMode::AoaAod)));
                obs.cells.emplace(std::make_pair(le.cell_ix, le.cell_iy), std::move(w));
            }
            const ObserveFn observe = std::cref(obs);
            const Point2 tx = env.tx_locations[static_cast<std::size_t>(t)];
            const auto starts = draw_starts(cfg, truth, tx, mix_seed(cfg.seeds.nav, e, t));
            for (std::size_t s = 0; s < starts.size(); ++s)
            {
                auto res = run_policies(env, truth, t, starts[s], policies, observe, mix_seed(cfg.seeds.nav, e, t, s + 1),
                                        cfg.nav);
                const std::size_t first = episodes.size();
                for (auto &r : res)
                {
                    r.env_id = e;
                    episodes.push_back(std::move(r));
                }
                start_baselines.push_back(episodes[first].baseline_steps);
                start_ranges.emplace_back(first, episodes.size());
            }
        }
        progress("navigate", "env " + std::to_string(e));
    }
    const auto tiers = classify_difficulty(start_baselines);
    for (std::size_t s = 0; s < start_ranges.size(); ++s)
        for (std::size_t i = start_ranges[s].first; i < start_ranges[s].second; ++i)
            episodes[i].difficulty = tiers[s];
    io::save_episodes(run::episodes_file(out), episodes);
}

// ------------------------------------------------------------------------
// Report

namespace
{

constexpr LinkState kReportedStates[] = {LinkState::LOS, LinkState::FirstOrderNLOS, LinkState::HigherOrderNLOS};

void aoa_section(const ExperimentConfig &cfg, const std::string &in, Report &rep)
{
    const LinkBudget budget(cfg);
    std::array<std::vector<double>, kNumLinkStates> errors;
    std::array<long, kNumLinkStates> excluded{};
    for (int e : cfg.eval_env_ids())
        for (int t = 0; t < cfg.tx_per_env; ++t)
        {
            const auto paths = io::load_path_map(run::paths_file(in, e, t));
            std::map<std::pair<int, int>, std::vector<PathEstimate>> est;
            for (auto &le : io::load_estimates(run::estimates_file(in, e, t)))
                est.emplace(std::make_pair(le.cell_ix, le.cell_iy), std::move(le.estimates));
            for (const auto &r : paths)
            {
                if (r.true_state == LinkState::Outage)
                    continue;
                const int s = static_cast<int>(r.true_state);
                const auto it = est.find({r.cell_ix, r.cell_iy});
                if (it == est.end())
                    throw KeyMismatch("report: missing estimates for a traced link");
                const int best = budget.strongest_path(r.paths);
                if (it->second.empty() || best < 0)
                {
                    ++excluded[s];
                    continue;
                }
                errors[s].push_back(
                    angle_diff_deg(it->second.front().aoa_deg, r.paths[static_cast<std::size_t>(best)].aoa_deg));
            }
        }

    rep.aoa_cdf_csv = "state,err_deg,cdf\n";
    json aoa = json::object();
    for (LinkState st : kReportedStates)
    {
        const auto &err = errors[static_cast<int>(st)];
        for (const auto &[x, c] : empirical_cdf(err, err.size()))
            rep.aoa_cdf_csv += state_key(st) + "," + io::fmt(x) + "," + io::fmt(c) + "\n";
        const auto below = std::count_if(err.begin(), err.end(), [](double x) { return x < 5.0; });
        json s;
        s["links"] = err.size();
        s["excluded_no_estimate"] = excluded[static_cast<int>(st)];
        s["frac_below_5deg"] = err.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : static_cast<double>(below) / static_cast<double>(err.size());
        s["median_deg"] = quantile(err, 0.5);
        s["p90_deg"] = quantile(err, 0.9);
        aoa[state_key(st)] = s;
    }
    rep.summary["aoa_error"] = aoa;
}

void classifier_section(const std::string &in, Report &rep)
{
    const json j = [&] {
        try
        {
            return json::parse(read_file((fs::path(in) / "eval" / "classifier.json").string()));
        }
        catch (const json::exception &e)
        {
            throw DataError(std::string("classifier.json: ") + e.what());
        }
    }();
    rep.confusion_csv = "mode,true,pred,count\n";
    rep.training_csv = "mode,epoch,train_loss,val_loss,train_acc,val_acc\n";
    json cls = json::object();
    for (FeatureMode mode : {FeatureMode::AoaAod, FeatureMode::AoaOnly})
    {
        const std::string m = to_string(mode);
        if (!j.contains(m))
            throw DataError("classifier.json lacks mode " + m);
        const json &r = j.at(m);
        for (int t = 0; t < kNumLinkStates; ++t)
            for (int p = 0; p < kNumLinkStates; ++p)
                rep.confusion_csv += m + "," + state_key(static_cast<LinkState>(t)) + "," +
                                     state_key(static_cast<LinkState>(p)) + "," +
                                     std::to_string(r.at("confusion").at(t).at(p).get<long>()) + "\n";
        cls[m] = {{"accuracy", r.at("accuracy")}, {"recall", r.at("recall")}, {"total", r.at("total")}};

        const auto lines = metrics_lines(run::metrics_file(in, mode));
        for (std::size_t i = 1; i < lines.size(); ++i)
            rep.training_csv += m + "," + lines[i] + "\n";
    }
    rep.summary["classifier"] = cls;
}

void navigation_section(const ExperimentConfig &cfg, const std::string &in, Report &rep)
{
    const auto episodes = io::load_episodes(run::episodes_file(in));
    rep.arrivals_csv = "policy,difficulty,rate\n";
    rep.speed_cdf_csv = "policy,difficulty,rel_time,cdf\n";
    json arrivals = json::object();
    const std::vector<std::string> tiers = {to_string(Difficulty::Easy), to_string(Difficulty::Moderate),
                                            to_string(Difficulty::Hard), "all"};
    double baseline_rel_sum = 0.0;
    long baseline_n = 0;
    bool step_cap_ok = true;
    for (const auto &r : episodes)
    {
        if (r.success != (r.steps <= cfg.nav.max_steps))
            step_cap_ok = false;
        if (r.policy == Policy::Baseline)
        {
            baseline_rel_sum += r.relative_time;
            ++baseline_n;
        }
    }
    for (Policy p : kAllPolicies)
    {
        for (const auto &tier : tiers)
        {
            long total = 0;
            long ok = 0;
            std::vector<double> rel;
            for (const auto &r : episodes)
            {
                if (r.policy != p || (tier != "all" && tier != to_string(r.difficulty)))
                    continue;
                ++total;
                if (r.success)
                {
                    ++ok;
                    rel.push_back(r.relative_time);
                }
            }
            const double rate = total ? static_cast<double>(ok) / static_cast<double>(total)
                                      : std::numeric_limits<double>::quiet_NaN();
            rep.arrivals_csv += std::string(to_string(p)) + "," + tier + "," + io::fmt(rate) + "\n";
            arrivals[to_string(p)][tier] = {{"rate", rate}, {"episodes", total}};
            for (const auto &[x, c] : empirical_cdf(rel, static_cast<std::size_t>(total)))
                rep.speed_cdf_csv +=
                    std::string(to_string(p)) + "," + tier + "," + io::fmt(x) + "," + io::fmt(c) + "\n";
        }
    }
    rep.summary["navigation"] = {
        {"episodes", episodes.size()},
        {"arrivals", arrivals},
        {"baseline_mean_relative_time",
         baseline_n ? baseline_rel_sum / static_cast<double>(baseline_n) : std::numeric_limits<double>::quiet_NaN()},
        {"step_cap_consistent", step_cap_ok}};
}

} // namespace

Report build_report(const ExperimentConfig &cfg, const std::string &in)
{
    Report rep;
    rep.summary = json::object();
    aoa_section(cfg, in, rep);
    classifier_section(in, rep);
    navigation_section(cfg, in, rep);
    const fs::path balance = fs::path(in) / "dataset" / "class_balance.json";
    if (fs::exists(balance))
    {
        try
        {
            rep.summary["dataset"] = json::parse(read_file(balance.string()));
        }
        catch (const json::exception &e)
        {
            throw DataError(std::string("class_balance.json: ") + e.what());
        }
    }
    return rep;
}

void write_report(const Report &r, const std::string &out)
{
    const fs::path dir(out);
    write_file_atomic((dir / "aoa_cdf.csv").string(), r.aoa_cdf_csv);
    write_file_atomic((dir / "confusion.csv").string(), r.confusion_csv);
    write_file_atomic((dir / "training.csv").string(), r.training_csv);
    write_file_atomic((dir / "arrivals.csv").string(), r.arrivals_csv);
    write_file_atomic((dir / "speed_cdf.csv").string(), r.speed_cdf_csv);
    write_file_atomic((dir / "summary.json").string(), r.summary.dump(2) + "\n");
}

Report run_pipeline(const ExperimentConfig &cfg, const std::string &dir)
{
    stage_gen_env(cfg, dir);
    stage_raytrace(cfg, dir, dir);
    stage_estimate(cfg, dir, dir);
    stage_build_dataset(cfg, dir, dir);
    stage_train(cfg, dir, dir);
    stage_eval_classifier(cfg, dir, dir);
    stage_navigate(cfg, dir, dir);
    Report rep = build_report(cfg, dir);
    write_report(rep, (fs::path(dir) / "report").string());
    return rep;
}

} // namespace mmw
