// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and the staged pipeline. Every stage reads its
// inputs from a run directory and writes its outputs into one:
//
//   config.json
//   envs/env_000.json
//   paths/env_000_tx_00.ndjson       (io::save_path_map)
//   estimates/env_000_tx_00.ndjson   (io::save_estimates)
//   tensors/env_000_tx_00_ix_iy.mmwt (sound stage, selected links only)
//   dataset/train.ndjson, dataset/eval.ndjson, dataset/class_balance.json
//   models/aoa_aod.json, models/aoa_only.json, models/metrics_<mode>.csv
//   eval/classifier.json
//   episodes/episodes.ndjson
//
// The report stage turns a run directory into CSV files plus summary.json.

#ifndef MMW_HARNESS_HPP
#define MMW_HARNESS_HPP

#include "mmw/io.hpp"

#include <map>
#include <string>
#include <vector>

namespace mmw
{

struct ExperimentSeeds
{
    std::uint64_t env = 7;
    std::uint64_t noise = 11;
    std::uint64_t train = 1;
    std::uint64_t nav = 13;
};

struct ExperimentConfig
{
    int n_envs = 38;
    int train_envs = 18;
    int eval_envs = 20;
    int tx_per_env = 10;
    ExperimentSeeds seeds;

    int grid_nx = 160;
    int grid_ny = 160;
    double grid_spacing = 0.15;
    double label_threshold_db = 5.0;

    GenConfig gen;
    PlacementConfig placement;
    TraceConfig trace;
    ArrayConfig tx_array = ArrayConfig::ue();
    ArrayConfig rx_array = ArrayConfig::gnb();
    int tx_beams = 48;
    int rx_beams = 24;
    SoundingConfig sounding;
    EstimatorConfig estimator;
    /// Replace estimator.snr_offset_db with snr_calibration_offset_db().
    bool calibrate_snr = true;
    TrainConfig classifier;
    NavConfig nav;
    int nav_starts_per_tx = 13;
    double nav_min_start_distance_m = 2.0;

    /// 8 environments (4 train / 4 eval) x 3 TX on a 60 x 60 grid at 0.4 m.
    static ExperimentConfig desk();
    /// 38 environments (18 / 20) x 10 TX on a 160 x 160 grid at 0.15 m.
    static ExperimentConfig full();

    void validate() const;
    /// Training environments are ids [0, train_envs), evaluation the rest.
    bool is_train_env(int env_id) const { return env_id < train_envs; }
    std::vector<int> eval_env_ids() const;
};

io::json to_json(const ExperimentConfig &cfg);
/// Missing keys keep the values of `base`.
ExperimentConfig config_from_json(const io::json &j, const ExperimentConfig &base = ExperimentConfig::desk());
void save_config(const std::string &path, const ExperimentConfig &cfg);
ExperimentConfig load_config(const std::string &path, const ExperimentConfig &base = ExperimentConfig::desk());

namespace run
{

std::string config_file(const std::string &dir);
std::string env_file(const std::string &dir, int env_id);
std::string paths_file(const std::string &dir, int env_id, int tx_id);
std::string estimates_file(const std::string &dir, int env_id, int tx_id);
std::string tensor_file(const std::string &dir, int env_id, int tx_id, int ix, int iy);
std::string dataset_file(const std::string &dir, bool train_split);
std::string model_file(const std::string &dir, FeatureMode mode);
std::string metrics_file(const std::string &dir, FeatureMode mode);
std::string episodes_file(const std::string &dir);

} // namespace run

/// Codebooks, noise floor and per-path SNR shared by the stages.
struct LinkBudget
{
    Codebook tx_cb;
    Codebook rx_cb;
    double noise_dbm = 0.0;
    double tx_power_dbm = 0.0;

    explicit LinkBudget(const ExperimentConfig &cfg);
    double path_snr_db(const PathComponent &p) const;
    /// Index of the path with the highest best-beam SNR, or -1 if empty.
    int strongest_path(const std::vector<PathComponent> &paths) const;
};

RxGrid experiment_grid(const ExperimentConfig &cfg, const Environment &env);

// Stages. `in` and `out` are run directories and may be the same.
void stage_gen_env(const ExperimentConfig &cfg, const std::string &out);
void stage_raytrace(const ExperimentConfig &cfg, const std::string &in, const std::string &out);
/// Sounds up to `limit` links per (env, tx) map, evenly spaced, and saves
/// their tensors. Intended for inspection; the estimate stage sounds every
/// link itself.
void stage_sound(const ExperimentConfig &cfg, const std::string &in, const std::string &out, int limit);
void stage_estimate(const ExperimentConfig &cfg, const std::string &in, const std::string &out);

struct ClassBalance
{
    std::array<long, kNumLinkStates> train{};
    std::array<long, kNumLinkStates> eval{};
};

/// Joins estimates with ray-trace labels. Throws KeyMismatch unless both
/// sides cover the same (env, tx, cell) keys.
std::vector<LinkSample> join_dataset(int env_id, const std::vector<LinkRecord> &paths,
                                     const std::vector<io::LinkEstimates> &estimates);
ClassBalance stage_build_dataset(const ExperimentConfig &cfg, const std::string &in, const std::string &out);
void stage_train(const ExperimentConfig &cfg, const std::string &in, const std::string &out);
void stage_eval_classifier(const ExperimentConfig &cfg, const std::string &in, const std::string &out);
void stage_navigate(const ExperimentConfig &cfg, const std::string &in, const std::string &out);

struct Report
{
    std::string aoa_cdf_csv;
    std::string confusion_csv;
    std::string training_csv;
    std::string arrivals_csv;
    std::string speed_cdf_csv;
    io::json summary;
};

Report build_report(const ExperimentConfig &cfg, const std::string &in);
/// Writes aoa_cdf.csv, confusion.csv, training.csv, arrivals.csv,
/// speed_cdf.csv and summary.json into `out`.
void write_report(const Report &r, const std::string &out);

/// Every stage in order on one run directory, then the report into
/// `<dir>/report`.
Report run_pipeline(const ExperimentConfig &cfg, const std::string &dir);

/// Empirical CDF: sorted values with cdf = rank / denominator.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values, std::size_t denominator);

/// Linearly interpolated quantile of unsorted data, NaN if empty.
double quantile(std::vector<double> values, double q);

} // namespace mmw

#endif
