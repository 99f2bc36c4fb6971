// SPDX-License-Identifier: Apache-2.0

#include "mmw/sounding.hpp"

#include <boost/random/normal_distribution.hpp>
#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

namespace mmw
{

static_assert(std::endian::native == std::endian::little, "tensor container assumes a little-endian host");

void SoundingConfig::validate() const
{
    if (waveform_len < 16 || n_dly < 1 || !(bandwidth_hz > 0.0))
        throw std::invalid_argument("SoundingConfig: invalid sizes");
    if (waveform_len < n_dly)
        throw std::invalid_argument("SoundingConfig: waveform_len must be at least n_dly");
    if (n_dly * sample_period_ns() < delay_window_ns - 1e-9)
        throw std::invalid_argument("SoundingConfig: delay grid does not cover the delay window");
}

double noise_floor_dbm(const SoundingConfig &cfg)
{
    return kThermalNoiseDbmPerHz + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

namespace
{

int signed_bin(int ix, int n) { return ix < n / 2 ? ix : ix - n; }

} // namespace

Eigen::VectorXcd synthesize_waveform(std::uint64_t seed, int len)
{
    if (len < 16)
        throw std::invalid_argument("synthesize_waveform: len must be >= 16");
    std::mt19937_64 rng(seed);
    std::vector<cplx> spectrum(static_cast<std::size_t>(len));
    for (auto &s : spectrum)
    {
        const auto q = rng() >> 62;
        s = std::polar(1.0, kPi * (2.0 * static_cast<double>(q) + 1.0) / 4.0);
    }
    std::vector<cplx> time;
    Eigen::FFT<double> fft;
    fft.inv(time, spectrum);
    Eigen::VectorXcd x(len);
    const double scale = std::sqrt(static_cast<double>(len));
    for (int t = 0; t < len; ++t)
        x(t) = time[static_cast<std::size_t>(t)] * scale;
    return x;
}

double CorrelationTensor::mean_energy() const
{
    return data.size() == 0 ? 0.0 : data.squaredNorm() / static_cast<double>(data.size());
}

Sounder::Sounder(const SoundingConfig &cfg, Codebook tx_cb, Codebook rx_cb)
    : cfg_(cfg), tx_cb_(std::move(tx_cb)), rx_cb_(std::move(rx_cb))
{
    cfg_.validate();
    rx_combiner_ = rx_cb_.combiner();
    noise_mw_ = db_to_lin(noise_floor_dbm(cfg_));
}

cplx Sounder::kernel(double offset) const
{
    // sum over f in [-N/2, N/2) of exp(-j 2 pi f offset / N)
    const double n = cfg_.waveform_len;
    const double theta = 2.0 * kPi * offset / n;
    const double half = std::sin(theta / 2.0);
    double mag;
    if (std::abs(half) < 1e-12)
        mag = n * std::cos(n * theta / 2.0) / std::cos(theta / 2.0);
    else
        mag = std::sin(n * theta / 2.0) / half;
    return std::polar(mag, theta / 2.0);
}

CorrelationTensor Sounder::empty_tensor() const
{
    CorrelationTensor t;
    t.n_dly = cfg_.n_dly;
    t.n_rx = rx_cb_.n_dir();
    t.n_tx = tx_cb_.n_dir();
    t.data = Eigen::MatrixXcd::Zero(t.n_dly, t.n_rx * t.n_tx);
    t.delay_grid_ns.resize(static_cast<std::size_t>(t.n_dly));
    for (int i = 0; i < t.n_dly; ++i)
        t.delay_grid_ns[static_cast<std::size_t>(i)] = cfg_.delay_offset_ns + i * cfg_.sample_period_ns();
    t.rx_angles_deg = rx_cb_.azimuths();
    t.tx_angles_deg = tx_cb_.azimuths();
    return t;
}

CorrelationTensor Sounder::sound(const std::vector<PathComponent> &paths, std::uint64_t noise_seed) const
{
    CorrelationTensor t = empty_tensor();
    const int n_rx = t.n_rx, n_tx = t.n_tx, n_dly = t.n_dly;
    const int n_paths = static_cast<int>(paths.size());
    const double ts = cfg_.sample_period_ns();
    const double amp0 = std::sqrt(db_to_lin(cfg_.tx_power_dbm));

    if (n_paths > 0)
    {
        Eigen::MatrixXcd kern(n_dly, n_paths);
        Eigen::MatrixXcd kr(n_paths, n_rx * n_tx);
        for (int l = 0; l < n_paths; ++l)
        {
            const auto &p = paths[static_cast<std::size_t>(l)];
            for (int i = 0; i < n_dly; ++i)
                kern(i, l) = kernel((p.delay_ns - t.delay_grid_ns[static_cast<std::size_t>(i)]) / ts);
            const Eigen::VectorXcd txr = beam_responses(tx_cb_, p.aod_deg) * (amp0 * p.gain);
            const Eigen::VectorXcd rxr = beam_responses(rx_cb_, p.aoa_deg);
            for (int j = 0; j < n_rx; ++j)
                kr.row(l).segment(j * n_tx, n_tx) = (rxr(j) * txr).transpose();
        }
        t.data.noalias() = kern * kr;
    }

    if (!cfg_.noiseless)
    {
        const int n_elem = static_cast<int>(rx_combiner_.cols());
        const double sd = std::sqrt(noise_mw_ * cfg_.waveform_len / 2.0);
        std::mt19937_64 rng(noise_seed);
        boost::random::normal_distribution<double> gauss(0.0, sd);
        Eigen::MatrixXcd z(n_dly, n_elem);
        const Eigen::MatrixXcd comb_t = rx_combiner_.transpose();
        for (int k = 0; k < n_tx; ++k)
        {
            for (int a = 0; a < n_elem; ++a)
                for (int i = 0; i < n_dly; ++i)
                {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    z(i, a) = cplx(re, im);
                }
            Eigen::Map<Eigen::MatrixXcd, 0, Eigen::OuterStride<>> cols(t.data.data() + static_cast<Eigen::Index>(k) * n_dly,
                                                                        n_dly, n_rx, Eigen::OuterStride<>(n_tx * n_dly));
            cols.noalias() += z * comb_t;
        }
    }
    return t;
}

CorrelationTensor Sounder::sound_waveform(const std::vector<PathComponent> &paths, std::uint64_t noise_seed) const
{
    CorrelationTensor t = empty_tensor();
    const int n = cfg_.waveform_len;
    const int n_rx = t.n_rx, n_tx = t.n_tx, n_dly = t.n_dly;
    const int n_elem = rx_cb_.array.composite_len();
    const double ts = cfg_.sample_period_ns();
    const double amp0 = std::sqrt(db_to_lin(cfg_.tx_power_dbm));
    Eigen::FFT<double> fft;

    const Eigen::VectorXcd x = synthesize_waveform(cfg_.waveform_seed, n);
    std::vector<cplx> xv(x.data(), x.data() + n), xf;
    fft.fwd(xf, xv);

    // Delayed copies of the waveform, one per path.
    std::vector<Eigen::VectorXcd> delayed;
    for (const auto &p : paths)
    {
        const double d = p.delay_ns / ts;
        std::vector<cplx> spec(static_cast<std::size_t>(n)), out;
        for (int ix = 0; ix < n; ++ix)
            spec[static_cast<std::size_t>(ix)] =
                xf[static_cast<std::size_t>(ix)] * std::polar(1.0, -2.0 * kPi * signed_bin(ix, n) * d / n);
        fft.inv(out, spec);
        delayed.emplace_back(Eigen::Map<Eigen::VectorXcd>(out.data(), n));
    }

    const double offset = cfg_.delay_offset_ns / ts;
    const bool integer_offset = std::abs(offset - std::round(offset)) < 1e-12;

    std::mt19937_64 rng(noise_seed);
    boost::random::normal_distribution<double> gauss(0.0, std::sqrt(noise_mw_ / 2.0));

    Eigen::MatrixXcd y(n, n_elem);
    for (int k = 0; k < n_tx; ++k)
    {
        y.setZero();
        for (std::size_t l = 0; l < paths.size(); ++l)
        {
            const auto &p = paths[l];
            const cplx a = amp0 * p.gain * beam_response(tx_cb_, k, p.aod_deg);
            const Eigen::VectorXcd u = composite_signature(rx_cb_.array, p.aoa_deg);
            y.noalias() += (a * delayed[l]) * u.transpose();
        }
        if (!cfg_.noiseless)
            for (int e = 0; e < n_elem; ++e)
                for (int s = 0; s < n; ++s)
                {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    y(s, e) += cplx(re, im);
                }
        const Eigen::MatrixXcd r = y * rx_combiner_.transpose(); // n x n_rx
        for (int j = 0; j < n_rx; ++j)
        {
            std::vector<cplx> rv(r.col(j).data(), r.col(j).data() + n), rf, prod(static_cast<std::size_t>(n)), corr;
            fft.fwd(rf, rv);
            for (int ix = 0; ix < n; ++ix)
                prod[static_cast<std::size_t>(ix)] = rf[static_cast<std::size_t>(ix)] * std::conj(xf[static_cast<std::size_t>(ix)]);
            if (integer_offset)
            {
                fft.inv(corr, prod);
                const long base = std::lround(offset);
                for (int i = 0; i < n_dly; ++i)
                {
                    const long lag = ((base + i) % n + n) % n;
                    t(i, j, k) = corr[static_cast<std::size_t>(lag)];
                }
            }
            else
            {
                for (int i = 0; i < n_dly; ++i)
                {
                    const double lag = offset + i;
                    cplx acc(0.0, 0.0);
                    for (int ix = 0; ix < n; ++ix)
                        acc += prod[static_cast<std::size_t>(ix)] * std::polar(1.0, 2.0 * kPi * signed_bin(ix, n) * lag / n);
                    t(i, j, k) = acc / static_cast<double>(n);
                }
            }
        }
    }
    return t;
}

CorrelationTensor sound_link(const std::vector<PathComponent> &paths, const SoundingConfig &cfg,
                             const Codebook &tx_cb, const Codebook &rx_cb, std::uint64_t noise_seed)
{
    return Sounder(cfg, tx_cb, rx_cb).sound(paths, noise_seed);
}

namespace
{

template <typename T>
void put(std::string &buf, T v)
{
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.append(raw, sizeof(T));
}

template <typename T>
T take(const std::string &buf, std::size_t &pos)
{
    if (pos + sizeof(T) > buf.size())
        throw DataError("tensor file truncated");
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

constexpr std::uint32_t kTensorVersion = 1;

} // namespace

void save_tensor(const std::string &path, const CorrelationTensor &t)
{
    std::string buf = "MMWT";
    put<std::uint32_t>(buf, kTensorVersion);
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.n_dly));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.n_rx));
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(t.n_tx));
    for (const auto *grid : {&t.delay_grid_ns, &t.rx_angles_deg, &t.tx_angles_deg})
        for (double v : *grid)
            put<double>(buf, v);
    for (int i = 0; i < t.n_dly; ++i)
        for (int j = 0; j < t.n_rx; ++j)
            for (int k = 0; k < t.n_tx; ++k)
            {
                const cplx v = t(i, j, k);
                put<float>(buf, static_cast<float>(v.real()));
                put<float>(buf, static_cast<float>(v.imag()));
            }
    write_file_atomic(path, buf);
}

CorrelationTensor load_tensor(const std::string &path)
{
    const std::string buf = read_file(path);
    if (buf.size() < 4 || buf.compare(0, 4, "MMWT") != 0)
        throw DataError("'" + path + "' is not a tensor file");
    std::size_t pos = 4;
    if (take<std::uint32_t>(buf, pos) != kTensorVersion)
        throw DataError("unsupported tensor file version");
    CorrelationTensor t;
    t.n_dly = static_cast<int>(take<std::uint32_t>(buf, pos));
    t.n_rx = static_cast<int>(take<std::uint32_t>(buf, pos));
    t.n_tx = static_cast<int>(take<std::uint32_t>(buf, pos));
    auto grid = [&](int n) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (auto &v : g)
            v = take<double>(buf, pos);
        return g;
    };
    t.delay_grid_ns = grid(t.n_dly);
    t.rx_angles_deg = grid(t.n_rx);
    t.tx_angles_deg = grid(t.n_tx);
    t.data.resize(t.n_dly, static_cast<Eigen::Index>(t.n_rx) * t.n_tx);
    for (int i = 0; i < t.n_dly; ++i)
        for (int j = 0; j < t.n_rx; ++j)
            for (int k = 0; k < t.n_tx; ++k)
            {
                const float re = take<float>(buf, pos);
                const float im = take<float>(buf, pos);
                t(i, j, k) = cplx(re, im);
            }
    if (pos != buf.size())
        throw DataError("tensor file has trailing bytes");
    return t;
}

} // namespace mmw
