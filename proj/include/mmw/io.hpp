// SPDX-License-Identifier: Apache-2.0
//
// Persistence for every pipeline artifact. JSON records use nlohmann::json
// (shortest round-trip double formatting); record streams are
// newline-delimited JSON.

#ifndef MMW_IO_HPP
#define MMW_IO_HPP

#include "mmw/classifier.hpp"
#include "mmw/navsim.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mmw::io
{

using nlohmann::json;

// Environment: {"side_m", "walls":[{"x1","y1","x2","y2","material"}], "tx":[{"x","y"}], "seed"}
json to_json(const Environment &env);
Environment environment_from_json(const json &j);
void save_environment(const std::string &path, const Environment &env);
Environment load_environment(const std::string &path);

// Path map, one record per link:
// {tx_id, cell_ix, cell_iy, state, paths:[{gain_db, phase_rad, aoa_deg, aod_deg, delay_ns, order}]}
json to_json(const LinkRecord &rec);
LinkRecord link_record_from_json(const json &j);
void save_path_map(const std::string &path, const std::vector<LinkRecord> &recs);
std::vector<LinkRecord> load_path_map(const std::string &path);

// Estimates, one record per link:
// {env_id, tx_id, cell:[ix, iy], estimates:[{rel_delay_ns, aoa_deg, aod_deg, snr_db}]}
struct LinkEstimates
{
    int env_id = 0;
    int tx_id = 0;
    int cell_ix = 0;
    int cell_iy = 0;
    std::vector<PathEstimate> estimates;
};

json to_json(const LinkEstimates &e);
LinkEstimates link_estimates_from_json(const json &j);
void save_estimates(const std::string &path, const std::vector<LinkEstimates> &recs);
std::vector<LinkEstimates> load_estimates(const std::string &path);

// Dataset: {env_id, tx_id, cell_ix, cell_iy, label, features:[...]}
json to_json(const LinkSample &s);
LinkSample link_sample_from_json(const json &j);
void save_dataset(const std::string &path, const std::vector<LinkSample> &samples);
std::vector<LinkSample> load_dataset(const std::string &path);

// Model: {layers:[{rows, cols, w:[row-major], b:[...]}], mode}
json to_json(const MlpModel &m);
MlpModel model_from_json(const json &j);
void save_model(const std::string &path, const MlpModel &m);
MlpModel load_model(const std::string &path);

/// epoch,train_loss,val_loss,train_acc,val_acc
std::string metrics_csv(const std::vector<EpochMetrics> &history);

// Episode log: {env_id, tx_id, start:{x,y}, policy, success, steps,
// baseline_steps, relative_time, difficulty, trajectory:[{x, y, goal_source}]}
json to_json(const EpisodeResult &r);
EpisodeResult episode_from_json(const json &j);
void save_episodes(const std::string &path, const std::vector<EpisodeResult> &eps);
std::vector<EpisodeResult> load_episodes(const std::string &path);

/// [{k, azimuth_deg, sector}]
json codebook_json(const Codebook &cb);

/// ny rows of nx comma-separated 0/1 values, row iy = 0 first.
std::string grid_mask_csv(const RxGrid &grid);

/// Reads every non-empty line of a newline-delimited JSON file.
std::vector<json> read_ndjson(const std::string &path);
void write_ndjson(const std::string &path, const std::vector<json> &records);

/// Fixed-format number for CSV output.
std::string fmt(double v);

} // namespace mmw::io

#endif
