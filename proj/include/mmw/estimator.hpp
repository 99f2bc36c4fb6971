// SPDX-License-Identifier: Apache-2.0
//
// Two-stage low-rank decomposition of the correlation tensor and per-path
// parameter extraction (relative delay, AoA, AoD, SNR).

#ifndef MMW_ESTIMATOR_HPP
#define MMW_ESTIMATOR_HPP

#include "mmw/sounding.hpp"

#include <cstdint>
#include <vector>

namespace mmw
{

struct RankOneFactor
{
    Eigen::VectorXcd a; // delay
    Eigen::VectorXcd b; // RX beams
    Eigen::VectorXcd c; // TX beams
    double energy = 0.0; // |a|^2 |b|^2 |c|^2
};

struct PathEstimate
{
    double rel_delay_ns = 0.0;
    double raw_delay_ns = 0.0;
    double aoa_deg = 0.0;      // refined
    double aoa_grid_deg = 0.0; // RX codebook angle of the peak beam
    double aod_deg = 0.0;
    double snr_db = 0.0;     // calibrated
    double raw_snr_db = 0.0; // 10 log10(energy / E_avg)
    int delay_idx = 0;
    int rx_idx = 0;
    int tx_idx = 0;
};

struct DecomposeOptions
{
    int oversample = 5;
    int power_iters = 1;
    std::uint64_t seed = 0x5eed;
};

/// Stage 1: top-r SVD of the n_dly x (n_rx n_tx) unfolding via randomized
/// subspace iteration. Stage 2: dominant SVD of each reshaped right factor.
/// Returned factors are sorted by descending energy.
std::vector<RankOneFactor> decompose(const CorrelationTensor &t, int r, const DecomposeOptions &opt = {});

struct EstimatorConfig
{
    int k_paths = 5;
    double gamma_min_db = 5.0;
    /// Subtracted from 10 log10(energy / E_avg); see snr_calibration_offset_db.
    double snr_offset_db = 0.0;
    bool refine_aoa = true;
    double fine_step_deg = 1.0;
    double refine_half_span_deg = 90.0;
    DecomposeOptions decomp;
};

/// Estimation against a fixed RX codebook, with the fine AoA grid precomputed.
class Estimator
{
  public:
    Estimator(const Codebook &rx_cb, const EstimatorConfig &cfg = {});

    std::vector<PathEstimate> extract(const std::vector<RankOneFactor> &factors, const CorrelationTensor &t) const;
    std::vector<PathEstimate> estimate(const CorrelationTensor &t) const;
    const EstimatorConfig &config() const { return cfg_; }

  private:
    double refine_aoa(const Eigen::VectorXcd &b, int peak_beam) const;

    Codebook rx_cb_;
    EstimatorConfig cfg_;
    std::vector<std::vector<int>> sector_beams_;
    std::vector<std::vector<double>> fine_az_;
    // Per sector: unit-norm beam-response columns over the fine grid.
    std::vector<Eigen::MatrixXcd> fine_resp_;
};

/// Peak picking on each factor. `rx_cb` supplies the fine-grid beam
/// responses for AoA refinement; it must match the tensor's RX axis.
std::vector<PathEstimate> extract_peaks(const std::vector<RankOneFactor> &factors, const CorrelationTensor &t,
                                        const Codebook &rx_cb, const EstimatorConfig &cfg);

/// decompose with r = k_paths, extract, gate, and sort by SNR descending.
std::vector<PathEstimate> estimate_link(const CorrelationTensor &t, const Codebook &rx_cb,
                                        const EstimatorConfig &cfg = {});

/// Offset mapping 10 log10(energy / E_avg) onto the per-path best-beam SNR
/// scale, fitted at `operating_snr_db` and averaged over AoA/AoD.
double snr_calibration_offset_db(const SoundingConfig &scfg, const Codebook &tx_cb, const Codebook &rx_cb,
                                 double operating_snr_db = 20.0, double grid_step_deg = 1.0);

} // namespace mmw

#endif
