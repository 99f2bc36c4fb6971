// SPDX-License-Identifier: Apache-2.0
//
// Multi-sector phased arrays: patch element pattern, per-sector ULA
// signatures, best-sector selection, beam codebooks and beamforming gains.

#ifndef MMW_ARRAYS_HPP
#define MMW_ARRAYS_HPP

#include "mmw/raytrace.hpp"

#include <vector>

namespace mmw
{

struct ArrayConfig
{
    int n_arrays = 3;
    /// Azimuth elements per sector.
    int n_ant = 8;
    /// Elevation rows per sector, folded into a fixed panel gain of
    /// 10*log10(n_rows) dB since only azimuth is modeled.
    int n_rows = 1;
    std::vector<double> sector_azimuths_deg{0.0, 120.0, -120.0};
    double element_spacing = 0.5; // wavelengths
    double carrier_hz = 28e9;
    double element_gmax_dbi = 5.0;
    double back_floor_db = 25.0;

    /// UE terminal: three 1x8 ULAs.
    static ArrayConfig ue();
    /// gNB terminal: three 4x4 UPAs, 4 azimuth columns plus 4-row panel gain.
    static ArrayConfig gnb();

    int composite_len() const { return n_arrays * n_ant; }
    double panel_gain_db() const;
    void validate() const;
};

double element_gain_dbi(double theta_off_boresight_deg, double gmax_dbi = 5.0, double back_floor_db = 25.0);

/// u^(j)(az): length n_ant, ||u||^2 equals the sector directivity (linear).
Eigen::VectorXcd sector_signature(const ArrayConfig &cfg, int sector, double az_deg);
double sector_directivity(const ArrayConfig &cfg, int sector, double az_deg);

/// Concatenation of all sector signatures.
Eigen::VectorXcd composite_signature(const ArrayConfig &cfg, double az_deg);

int best_sector(const ArrayConfig &cfg, double az_deg);

/// Composite-length vector carrying only the best sector's signature.
Eigen::VectorXcd best_sector_signature(const ArrayConfig &cfg, double az_deg);

struct CodebookEntry
{
    int k = 0;
    double azimuth_deg = 0.0;
    int sector = 0;
    Eigen::VectorXcd weights; // composite length, unit norm, zero outside `sector`
};

struct Codebook
{
    ArrayConfig array;
    std::vector<CodebookEntry> entries;

    int n_dir() const { return static_cast<int>(entries.size()); }
    std::vector<double> azimuths() const;
    /// n_dir x composite_len matrix whose row k is w_k^H.
    Eigen::MatrixXcd combiner() const;
};

Codebook build_codebook(const ArrayConfig &cfg, int n_dir);

/// w_k^H u(az) for a single codebook entry; only the owning sector contributes.
cplx beam_response(const Codebook &cb, int k, double az_deg);

/// Vector of beam_response over all entries.
Eigen::VectorXcd beam_responses(const Codebook &cb, double az_deg);

/// g * (w_k^H u_tx(aod)) * (v_j^H u_rx(aoa)).
cplx beamformed_amplitude(const PathComponent &path, const Codebook &tx_cb, int k, const Codebook &rx_cb, int j);

/// Strongest codebook-pair SNR of a single path.
double best_beam_snr_db(const PathComponent &path, const Codebook &tx_cb, const Codebook &rx_cb,
                        double tx_power_dbm, double noise_dbm);

} // namespace mmw

#endif
