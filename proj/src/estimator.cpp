// SPDX-License-Identifier: Apache-2.0

#include "mmw/estimator.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mmw
{

namespace
{

Eigen::MatrixXcd orthonormal_basis(const Eigen::MatrixXcd &y)
{
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(y);
    return qr.householderQ() * Eigen::MatrixXcd::Identity(y.rows(), y.cols());
}

template <typename Vec>
int argmax_abs(const Vec &v)
{
    int best = 0;
    double best_v = -1.0;
    for (int i = 0; i < static_cast<int>(v.size()); ++i)
    {
        const double m = std::norm(v(i));
        if (m > best_v)
        {
            best_v = m;
            best = i;
        }
    }
    return best;
}

} // namespace

std::vector<RankOneFactor> decompose(const CorrelationTensor &t, int r, const DecomposeOptions &opt)
{
    const Eigen::MatrixXcd &m = t.data;
    if (r < 1 || r > std::min<Eigen::Index>(m.rows(), m.cols()))
        throw std::invalid_argument("decompose: rank out of range");
    if (m.squaredNorm() == 0.0)
        throw DegenerateTensor("decompose: tensor is identically zero");

    const Eigen::Index rows = m.rows(), cols = m.cols();
    const Eigen::Index width = std::min<Eigen::Index>(r + opt.oversample, std::min(rows, cols));

    Eigen::MatrixXcd u, v;
    Eigen::VectorXd sv;
    if (width >= std::min(rows, cols))
    {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u = svd.matrixU();
        v = svd.matrixV();
        sv = svd.singularValues();
    }
    else
    {
        std::mt19937_64 rng(opt.seed);
        boost::random::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXcd omega(cols, width);
        for (Eigen::Index c = 0; c < width; ++c)
            for (Eigen::Index i = 0; i < cols; ++i)
            {
                const double re = gauss(rng);
                const double im = gauss(rng);
                omega(i, c) = cplx(re, im);
            }
        Eigen::MatrixXcd q = orthonormal_basis(m * omega);
        for (int it = 0; it < opt.power_iters; ++it)
        {
            const Eigen::MatrixXcd z = orthonormal_basis(m.adjoint() * q);
            q = orthonormal_basis(m * z);
        }
        const Eigen::MatrixXcd bsmall = q.adjoint() * m;
        // Singular triplets of the short-wide sketch from its Gram matrix.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(bsmall * bsmall.adjoint());
        const Eigen::Index w = bsmall.rows();
        u.resize(rows, w);
        v.resize(cols, w);
        sv.resize(w);
        const Eigen::MatrixXcd ub = eig.eigenvectors().rowwise().reverse();
        u = q * ub;
        for (Eigen::Index l = 0; l < w; ++l)
        {
            sv(l) = std::sqrt(std::max(eig.eigenvalues()(w - 1 - l), 0.0));
            v.col(l) = sv(l) > 0.0 ? Eigen::VectorXcd(bsmall.adjoint() * ub.col(l) / sv(l))
                                   : Eigen::VectorXcd::Zero(cols);
        }
    }

    std::vector<RankOneFactor> out;
    out.reserve(static_cast<std::size_t>(r));
    for (int l = 0; l < r; ++l)
    {
        RankOneFactor f;
        f.a = sv(l) * u.col(l);
        // Row-space vector of M is conj(v); its reshape is b c^T up to scale.
        Eigen::MatrixXcd p(t.n_rx, t.n_tx);
        for (int j = 0; j < t.n_rx; ++j)
            for (int k = 0; k < t.n_tx; ++k)
                p(j, k) = std::conj(v(j * t.n_tx + k, l));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig2(p * p.adjoint());
        const Eigen::Index top = t.n_rx - 1;
        const double s2 = std::sqrt(std::max(eig2.eigenvalues()(top), 0.0));
        f.b = eig2.eigenvectors().col(top);
        f.c = s2 > 0.0 ? Eigen::VectorXcd(f.b.adjoint() * p).transpose().eval() : Eigen::VectorXcd::Zero(t.n_tx);
        f.energy = f.a.squaredNorm() * f.b.squaredNorm() * f.c.squaredNorm();
        out.push_back(std::move(f));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const RankOneFactor &x, const RankOneFactor &y) { return x.energy > y.energy; });
    return out;
}

Estimator::Estimator(const Codebook &rx_cb, const EstimatorConfig &cfg) : rx_cb_(rx_cb), cfg_(cfg)
{
    if (cfg_.k_paths < 1)
        throw std::invalid_argument("Estimator: k_paths must be >= 1");
    const int n_sec = rx_cb_.array.n_arrays;
    const int steps = static_cast<int>(std::floor(2.0 * cfg_.refine_half_span_deg / cfg_.fine_step_deg + 1e-9));
    sector_beams_.resize(static_cast<std::size_t>(n_sec));
    fine_az_.resize(static_cast<std::size_t>(n_sec));
    fine_resp_.resize(static_cast<std::size_t>(n_sec));
    for (const auto &e : rx_cb_.entries)
        sector_beams_[static_cast<std::size_t>(e.sector)].push_back(e.k);
    for (int s = 0; s < n_sec; ++s)
    {
        const auto &beams = sector_beams_[static_cast<std::size_t>(s)];
        const double boresight = rx_cb_.array.sector_azimuths_deg[static_cast<std::size_t>(s)];
        auto &az = fine_az_[static_cast<std::size_t>(s)];
        Eigen::MatrixXcd &resp = fine_resp_[static_cast<std::size_t>(s)];
        resp.resize(static_cast<Eigen::Index>(beams.size()), steps + 1);
        for (int g = 0; g <= steps; ++g)
        {
            az.push_back(wrap_deg(boresight - cfg_.refine_half_span_deg + g * cfg_.fine_step_deg));
            Eigen::VectorXcd p(static_cast<Eigen::Index>(beams.size()));
            for (std::size_t i = 0; i < beams.size(); ++i)
                p(static_cast<Eigen::Index>(i)) = beam_response(rx_cb_, beams[i], az.back());
            const double pn = p.norm();
            resp.col(g) = pn > 0.0 ? Eigen::VectorXcd(p / pn) : p;
        }
    }
}

double Estimator::refine_aoa(const Eigen::VectorXcd &b, int peak_beam) const
{
    const auto sector = static_cast<std::size_t>(rx_cb_.entries[static_cast<std::size_t>(peak_beam)].sector);
    const auto &beams = sector_beams_[sector];
    Eigen::VectorXcd bs(static_cast<Eigen::Index>(beams.size()));
    for (std::size_t i = 0; i < beams.size(); ++i)
        bs(static_cast<Eigen::Index>(i)) = b(beams[i]);
    const Eigen::VectorXd score = (fine_resp_[sector].adjoint() * bs).cwiseAbs2();
    int best = 0;
    for (int g = 1; g < static_cast<int>(score.size()); ++g)
        if (score(g) > score(best) * (1.0 + 1e-12))
            best = g;
    return fine_az_[sector][static_cast<std::size_t>(best)];
}

std::vector<PathEstimate> Estimator::extract(const std::vector<RankOneFactor> &factors,
                                             const CorrelationTensor &t) const
{
    if (rx_cb_.n_dir() != t.n_rx)
        throw DimensionMismatch("extract_peaks: RX codebook does not match tensor");
    const double e_avg = t.mean_energy();
    std::vector<PathEstimate> out;
    for (const auto &f : factors)
    {
        PathEstimate e;
        e.delay_idx = argmax_abs(f.a);
        e.rx_idx = argmax_abs(f.b);
        e.tx_idx = argmax_abs(f.c);
        e.raw_delay_ns = t.delay_grid_ns[static_cast<std::size_t>(e.delay_idx)];
        e.aoa_grid_deg = t.rx_angles_deg[static_cast<std::size_t>(e.rx_idx)];
        e.aod_deg = t.tx_angles_deg[static_cast<std::size_t>(e.tx_idx)];
        e.aoa_deg = cfg_.refine_aoa ? refine_aoa(f.b, e.rx_idx) : e.aoa_grid_deg;
        e.raw_snr_db = (e_avg > 0.0 && f.energy > 0.0) ? lin_to_db(f.energy / e_avg) : -300.0;
        e.snr_db = e.raw_snr_db - cfg_.snr_offset_db;
        if (e.snr_db < cfg_.gamma_min_db)
            continue;
        out.push_back(e);
    }
    if (!out.empty())
    {
        const double t0 = std::min_element(out.begin(), out.end(), [](const auto &x, const auto &y) {
                              return x.raw_delay_ns < y.raw_delay_ns;
                          })->raw_delay_ns;
        for (auto &e : out)
            e.rel_delay_ns = e.raw_delay_ns - t0;
    }
    return out;
}

std::vector<PathEstimate> Estimator::estimate(const CorrelationTensor &t) const
{
    const int r = std::min<int>(cfg_.k_paths, static_cast<int>(std::min(t.data.rows(), t.data.cols())));
    auto est = extract(decompose(t, r, cfg_.decomp), t);
    std::stable_sort(est.begin(), est.end(), [](const auto &x, const auto &y) { return x.snr_db > y.snr_db; });
    if (static_cast<int>(est.size()) > cfg_.k_paths)
        est.resize(static_cast<std::size_t>(cfg_.k_paths));
    return est;
}

std::vector<PathEstimate> extract_peaks(const std::vector<RankOneFactor> &factors, const CorrelationTensor &t,
                                        const Codebook &rx_cb, const EstimatorConfig &cfg)
{
    return Estimator(rx_cb, cfg).extract(factors, t);
}

std::vector<PathEstimate> estimate_link(const CorrelationTensor &t, const Codebook &rx_cb, const EstimatorConfig &cfg)
{
    return Estimator(rx_cb, cfg).estimate(t);
}

double snr_calibration_offset_db(const SoundingConfig &scfg, const Codebook &tx_cb, const Codebook &rx_cb,
                                 double operating_snr_db, double grid_step_deg)
{
    auto spreads = [&](const Codebook &cb) {
        std::vector<double> out;
        for (double az = -180.0; az < 180.0 - 1e-9; az += grid_step_deg)
        {
            const Eigen::VectorXd p = beam_responses(cb, az).cwiseAbs2();
            out.push_back(p.sum() / p.maxCoeff());
        }
        return out;
    };
    const auto s_tx = spreads(tx_cb);
    const auto s_rx = spreads(rx_cb);
    const double n = scfg.waveform_len;
    const double total = static_cast<double>(scfg.n_dly) * tx_cb.n_dir() * rx_cb.n_dir();
    const double psi = db_to_lin(operating_snr_db);
    double acc = 0.0;
    for (double a : s_tx)
        for (double b : s_rx)
        {
            const double g = n * a * b * psi;
            acc += lin_to_db(g / (1.0 + g / total)) - operating_snr_db;
        }
    return acc / static_cast<double>(s_tx.size() * s_rx.size());
}

} // namespace mmw
