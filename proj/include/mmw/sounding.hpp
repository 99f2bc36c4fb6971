// SPDX-License-Identifier: Apache-2.0
//
// Beam-swept channel sounding: waveform synthesis, AWGN at the thermal
// floor, and the delay x RX-beam x TX-beam matched-filter tensor.

#ifndef MMW_SOUNDING_HPP
#define MMW_SOUNDING_HPP

#include "mmw/arrays.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmw
{

struct SoundingConfig
{
    double tx_power_dbm = 23.0;
    double bandwidth_hz = 4e8;
    int waveform_len = 2048;
    double noise_figure_db = 6.0;
    int n_dly = 256;
    double delay_window_ns = 640.0;
    /// Delay of the first correlator tap.
    double delay_offset_ns = 0.0;
    double t_sync_s = 0.0;
    double t_sweep_s = 0.0;
    bool noiseless = false;
    std::uint64_t waveform_seed = 1;

    double sample_period_ns() const { return 1e9 / bandwidth_hz; }
    void validate() const;
};

double noise_floor_dbm(const SoundingConfig &cfg);

/// Unit-power QPSK symbols on every frequency bin, taken to the time domain.
/// Flat spectrum gives an exact cyclic autocorrelation of len * delta.
Eigen::VectorXcd synthesize_waveform(std::uint64_t seed, int len);

/// Complex tensor S[i, j, k] stored as an n_dly x (n_rx * n_tx) matrix with
/// column j * n_tx + k.
struct CorrelationTensor
{
    int n_dly = 0;
    int n_rx = 0;
    int n_tx = 0;
    Eigen::MatrixXcd data;
    std::vector<double> delay_grid_ns;
    std::vector<double> rx_angles_deg;
    std::vector<double> tx_angles_deg;

    cplx operator()(int i, int j, int k) const { return data(i, j * n_tx + k); }
    cplx &operator()(int i, int j, int k) { return data(i, j * n_tx + k); }
    /// E_avg: mean |S|^2 over all entries.
    double mean_energy() const;
};

/// Sounds links for a fixed pair of codebooks.
class Sounder
{
  public:
    Sounder(const SoundingConfig &cfg, Codebook tx_cb, Codebook rx_cb);

    /// Closed-form correlator: each path contributes a band-limited
    /// Dirichlet kernel at its fractional delay; noise is drawn per RX
    /// antenna directly at the correlator output, where the flat-spectrum
    /// waveform makes it white across lags with variance sigma^2 * len.
    CorrelationTensor sound(const std::vector<PathComponent> &paths, std::uint64_t noise_seed) const;

    /// Sample-level route: per-antenna received waveforms with fractional
    /// delays applied in the frequency domain, time-domain AWGN, RX beam
    /// combining and FFT correlation.
    CorrelationTensor sound_waveform(const std::vector<PathComponent> &paths, std::uint64_t noise_seed) const;

    /// Matched-filter kernel for a delay offset in samples.
    cplx kernel(double offset_samples) const;

    const SoundingConfig &config() const { return cfg_; }
    const Codebook &tx_codebook() const { return tx_cb_; }
    const Codebook &rx_codebook() const { return rx_cb_; }
    double noise_mw() const { return noise_mw_; }

  private:
    CorrelationTensor empty_tensor() const;

    SoundingConfig cfg_;
    Codebook tx_cb_;
    Codebook rx_cb_;
    Eigen::MatrixXcd rx_combiner_; // n_rx x composite, rows v_j^H
    double noise_mw_;
};

CorrelationTensor sound_link(const std::vector<PathComponent> &paths, const SoundingConfig &cfg,
                             const Codebook &tx_cb, const Codebook &rx_cb, std::uint64_t noise_seed);

/// Binary container, little-endian:
///   "MMWT" | u32 version (1) | u32 n_dly | u32 n_rx | u32 n_tx
///   | f64 delay_grid_ns[n_dly] | f64 rx_angles_deg[n_rx] | f64 tx_angles_deg[n_tx]
///   | f32 (re, im) pairs in row-major [i][j][k] order.
void save_tensor(const std::string &path, const CorrelationTensor &t);
CorrelationTensor load_tensor(const std::string &path);

} // namespace mmw

#endif
