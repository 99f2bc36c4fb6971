// SPDX-License-Identifier: Apache-2.0

#include "mmw/arrays.hpp"

#include <cmath>

namespace mmw
{

ArrayConfig ArrayConfig::ue()
{
    return ArrayConfig{};
}

ArrayConfig ArrayConfig::gnb()
{
    ArrayConfig c;
    c.n_ant = 4;
    c.n_rows = 4;
    return c;
}

double ArrayConfig::panel_gain_db() const
{
    return 10.0 * std::log10(static_cast<double>(n_rows));
}

void ArrayConfig::validate() const
{
    if (n_arrays < 1 || n_ant < 1 || n_rows < 1)
        throw std::invalid_argument("ArrayConfig: counts must be positive");
    if (static_cast<int>(sector_azimuths_deg.size()) != n_arrays)
        throw std::invalid_argument("ArrayConfig: one azimuth per sector required");
    if (!(element_spacing > 0.0))
        throw std::invalid_argument("ArrayConfig: element spacing must be positive");
}

double element_gain_dbi(double theta_deg, double gmax_dbi, double back_floor_db)
{
    const double floor_dbi = gmax_dbi - back_floor_db;
    const double c = std::cos(deg2rad(wrap_deg(theta_deg)));
    if (c <= 0.0)
        return floor_dbi;
    return std::max(gmax_dbi + 20.0 * std::log10(c), floor_dbi);
}

Eigen::VectorXcd sector_signature(const ArrayConfig &cfg, int sector, double az_deg)
{
    const double off = wrap_deg(az_deg - cfg.sector_azimuths_deg.at(static_cast<std::size_t>(sector)));
    const double amp =
        std::sqrt(db_to_lin(element_gain_dbi(off, cfg.element_gmax_dbi, cfg.back_floor_db)) * cfg.n_rows);
    const double dphi = -2.0 * kPi * cfg.element_spacing * std::sin(deg2rad(off));
    Eigen::VectorXcd u(cfg.n_ant);
    for (int m = 0; m < cfg.n_ant; ++m)
        u(m) = std::polar(amp, dphi * m);
    return u;
}

double sector_directivity(const ArrayConfig &cfg, int sector, double az_deg)
{
    const double off = wrap_deg(az_deg - cfg.sector_azimuths_deg.at(static_cast<std::size_t>(sector)));
    return db_to_lin(element_gain_dbi(off, cfg.element_gmax_dbi, cfg.back_floor_db)) * cfg.n_rows * cfg.n_ant;
}

Eigen::VectorXcd composite_signature(const ArrayConfig &cfg, double az_deg)
{
    Eigen::VectorXcd u(cfg.composite_len());
    for (int s = 0; s < cfg.n_arrays; ++s)
        u.segment(s * cfg.n_ant, cfg.n_ant) = sector_signature(cfg, s, az_deg);
    return u;
}

int best_sector(const ArrayConfig &cfg, double az_deg)
{
    int best = 0;
    double best_d = sector_directivity(cfg, 0, az_deg);
    for (int s = 1; s < cfg.n_arrays; ++s)
    {
        const double d = sector_directivity(cfg, s, az_deg);
        if (d > best_d * (1.0 + 1e-12))
        {
            best = s;
            best_d = d;
        }
    }
    return best;
}

Eigen::VectorXcd best_sector_signature(const ArrayConfig &cfg, double az_deg)
{
    const int s = best_sector(cfg, az_deg);
    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(cfg.composite_len());
    u.segment(s * cfg.n_ant, cfg.n_ant) = sector_signature(cfg, s, az_deg);
    return u;
}

std::vector<double> Codebook::azimuths() const
{
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto &e : entries)
        out.push_back(e.azimuth_deg);
    return out;
}

Eigen::MatrixXcd Codebook::combiner() const
{
    Eigen::MatrixXcd m(n_dir(), array.composite_len());
    for (int k = 0; k < n_dir(); ++k)
        m.row(k) = entries[static_cast<std::size_t>(k)].weights.adjoint();
    return m;
}

Codebook build_codebook(const ArrayConfig &cfg, int n_dir)
{
    cfg.validate();
    if (n_dir < cfg.n_arrays)
        throw std::invalid_argument("build_codebook: need at least one beam per sector");
    Codebook cb;
    cb.array = cfg;
    cb.entries.reserve(static_cast<std::size_t>(n_dir));
    for (int k = 0; k < n_dir; ++k)
    {
        CodebookEntry e;
        e.k = k;
        e.azimuth_deg = -180.0 + k * 360.0 / n_dir;
        e.sector = best_sector(cfg, e.azimuth_deg);
        e.weights = best_sector_signature(cfg, e.azimuth_deg);
        e.weights.normalize();
        cb.entries.push_back(std::move(e));
    }
    return cb;
}

cplx beam_response(const Codebook &cb, int k, double az_deg)
{
    const auto &e = cb.entries.at(static_cast<std::size_t>(k));
    const int n = cb.array.n_ant;
    return e.weights.segment(e.sector * n, n).dot(sector_signature(cb.array, e.sector, az_deg));
}

Eigen::VectorXcd beam_responses(const Codebook &cb, double az_deg)
{
    const int n = cb.array.n_ant;
    std::vector<Eigen::VectorXcd> sig;
    sig.reserve(static_cast<std::size_t>(cb.array.n_arrays));
    for (int s = 0; s < cb.array.n_arrays; ++s)
        sig.push_back(sector_signature(cb.array, s, az_deg));
    Eigen::VectorXcd out(cb.n_dir());
    for (int k = 0; k < cb.n_dir(); ++k)
    {
        const auto &e = cb.entries[static_cast<std::size_t>(k)];
        out(k) = e.weights.segment(e.sector * n, n).dot(sig[static_cast<std::size_t>(e.sector)]);
    }
    return out;
}

cplx beamformed_amplitude(const PathComponent &path, const Codebook &tx_cb, int k, const Codebook &rx_cb, int j)
{
    return path.gain * beam_response(tx_cb, k, path.aod_deg) * beam_response(rx_cb, j, path.aoa_deg);
}

double best_beam_snr_db(const PathComponent &path, const Codebook &tx_cb, const Codebook &rx_cb,
                        double tx_power_dbm, double noise_dbm)
{
    const double tx = beam_responses(tx_cb, path.aod_deg).cwiseAbs2().maxCoeff();
    const double rx = beam_responses(rx_cb, path.aoa_deg).cwiseAbs2().maxCoeff();
    return tx_power_dbm + lin_to_db(std::norm(path.gain) * tx * rx) - noise_dbm;
}

} // namespace mmw
