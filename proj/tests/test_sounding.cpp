// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace mmw;

namespace
{

struct Rig
{
    Codebook tx = build_codebook(ArrayConfig::ue(), 48);
    Codebook rx = build_codebook(ArrayConfig::gnb(), 24);
};

PathComponent path_at(double aoa, double aod, double delay_ns, cplx gain)
{
    PathComponent p;
    p.aoa_deg = aoa;
    p.aod_deg = aod;
    p.delay_ns = delay_ns;
    p.gain = gain;
    return p;
}

} // namespace

TEST_CASE("noise floor")
{
    SoundingConfig c;
    CHECK(noise_floor_dbm(c) == doctest::Approx(-82.0).epsilon(1e-3));
    c.noise_figure_db = 0.0;
    CHECK(noise_floor_dbm(c) == doctest::Approx(-88.0).epsilon(1e-3));
    c.noise_figure_db = 6.0;
    c.bandwidth_hz = 1e8;
    CHECK(noise_floor_dbm(c) == doctest::Approx(-88.0).epsilon(1e-3));
}

TEST_CASE("config validation")
{
    SoundingConfig c;
    c.n_dly = 100;
    CHECK_THROWS(c.validate());
    SoundingConfig d;
    d.waveform_len = 128;
    CHECK_THROWS(d.validate());
}

TEST_CASE("waveform")
{
    const auto x = synthesize_waveform(1, 2048);
    CHECK(x.squaredNorm() / 2048.0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((x - synthesize_waveform(1, 2048)).norm() == 0.0);
    int violations = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
    {
        const auto w = synthesize_waveform(seed, 256);
        double peak_off = 0.0;
        for (int lag = 0; lag < 256; ++lag)
        {
            cplx acc = 0.0;
            for (int n = 0; n < 256; ++n)
                acc += w((n + lag) % 256) * std::conj(w(n));
            if (lag == 0)
                CHECK(std::abs(acc) == doctest::Approx(256.0));
            else
                peak_off = std::max(peak_off, std::abs(acc));
        }
        violations += peak_off > 4.0 * std::sqrt(256.0);
    }
    CHECK(violations <= 2);
}

TEST_CASE("noise-only tensor is normalized by its own mean energy")
{
    Rig r;
    SoundingConfig c;
    const Sounder s(c, r.tx, r.rx);
    const auto t = s.sound({}, 5);
    CHECK(t.n_dly == 256);
    CHECK(t.n_rx == 24);
    CHECK(t.n_tx == 48);
    CHECK(t.data.allFinite());
    // Each entry carries noise power sigma^2 * N.
    CHECK(t.mean_energy() / (s.noise_mw() * c.waveform_len) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("single on-grid noiseless path peaks at its grid cell")
{
    Rig r;
    SoundingConfig c;
    c.noiseless = true;
    const Sounder s(c, r.tx, r.rx);
    const auto t = s.sound({path_at(r.rx.entries[5].azimuth_deg, r.tx.entries[20].azimuth_deg, 10 * 2.5, 1e-5)}, 0);
    Eigen::Index idx;
    t.data.cwiseAbs2().reshaped().maxCoeff(&idx);
    const int i = static_cast<int>(idx % t.n_dly);
    const int col = static_cast<int>(idx / t.n_dly);
    CHECK(i == 10);
    CHECK(col / t.n_tx == 5);
    CHECK(col % t.n_tx == 20);
}

TEST_CASE("waveform route agrees with the analytic route when noiseless")
{
    Rig r;
    SoundingConfig c;
    c.noiseless = true;
    const Sounder s(c, r.tx, r.rx);
    const std::vector<PathComponent> paths = {path_at(17.0, -33.0, 41.3, std::polar(2e-6, 0.4)),
                                              path_at(-120.0, 95.0, 87.75, std::polar(7e-7, -2.0)),
                                              path_at(150.0, 170.0, 12.5, std::polar(3e-7, 1.0))};
    const auto a = s.sound(paths, 0);
    const auto b = s.sound_waveform(paths, 0);
    CHECK((a.data - b.data).norm() / a.data.norm() < 1e-9);

    SoundingConfig off = c;
    off.delay_offset_ns = 1.3;
    const Sounder s2(off, r.tx, r.rx);
    CHECK((s2.sound(paths, 0).data - s2.sound_waveform(paths, 0).data).norm() / a.data.norm() < 1e-9);
}

TEST_CASE("linearity and energy bookkeeping")
{
    Rig r;
    SoundingConfig c;
    c.noiseless = true;
    const Sounder s(c, r.tx, r.rx);
    const auto p1 = path_at(20.0, 50.0, 30.0, std::polar(1e-6, 0.1));
    const auto p2 = path_at(-70.0, -140.0, 52.5, std::polar(4e-7, 2.2));
    const auto both = s.sound({p1, p2}, 0);
    const auto sum = s.sound({p1}, 0).data + s.sound({p2}, 0).data;
    CHECK((both.data - sum).norm() / both.data.norm() < 1e-9);

    // With noise: the same realization appears once.
    SoundingConfig n = c;
    n.noiseless = false;
    const Sounder sn(n, r.tx, r.rx);
    const auto noisy = sn.sound({p1, p2}, 9).data;
    const auto noise = sn.sound({}, 9).data;
    CHECK((noisy - noise - both.data).norm() / both.data.norm() < 1e-9);

    double per_beam = 0.0;
    for (int j = 0; j < both.n_rx; ++j)
        for (int k = 0; k < both.n_tx; ++k)
            for (int i = 0; i < both.n_dly; ++i)
                per_beam += std::norm(both(i, j, k));
    CHECK(per_beam == doctest::Approx(both.data.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("matched-filter processing gain")
{
    Rig r;
    SoundingConfig c;
    const Sounder s(c, r.tx, r.rx);
    // Pick |g| so the best beam pair sees 30 dB post-beamforming SNR.
    PathComponent p = path_at(r.rx.entries[8].azimuth_deg, r.tx.entries[30].azimuth_deg, 25.0, 1.0);
    const double snr1 = best_beam_snr_db(p, r.tx, r.rx, c.tx_power_dbm, noise_floor_dbm(c));
    p.gain = std::pow(10.0, (30.0 - snr1) / 20.0);
    const auto t = s.sound({p}, 3);
    const double peak = t.data.cwiseAbs2().maxCoeff();
    const double noise_energy = s.noise_mw() * c.waveform_len;
    const double ratio_db = lin_to_db(peak / noise_energy);
    CHECK(std::abs(ratio_db - (30.0 + lin_to_db(c.waveform_len))) <= 1.0);
}

TEST_CASE("sector isolation")
{
    Rig r;
    SoundingConfig c;
    c.noiseless = true;
    const Sounder s(c, r.tx, r.rx);
    // A path arriving exactly behind sector 0 while owned by sector 1 still
    // only excites beams whose response is nonzero.
    const auto p = path_at(120.0, 0.0, 20.0, 1e-6);
    const auto t = s.sound({p}, 0);
    for (int j = 0; j < t.n_rx; ++j)
    {
        const double beam_energy = t.data.middleCols(j * t.n_tx, t.n_tx).squaredNorm();
        const double resp = std::norm(beam_response(r.rx, j, 120.0));
        if (resp == 0.0)
            CHECK(beam_energy == 0.0);
    }
}

TEST_CASE("tensor container round trip")
{
    Rig r;
    SoundingConfig c;
    const auto t = Sounder(c, r.tx, r.rx).sound({path_at(10, 20, 30, 1e-6)}, 1);
    const std::string path = (std::filesystem::temp_directory_path() / "mmw_test_tensor.mmwt").string();
    save_tensor(path, t);
    const auto u = load_tensor(path);
    CHECK(u.n_dly == t.n_dly);
    CHECK(u.n_rx == t.n_rx);
    CHECK(u.n_tx == t.n_tx);
    CHECK(u.delay_grid_ns == t.delay_grid_ns);
    CHECK(u.rx_angles_deg == t.rx_angles_deg);
    CHECK(u.tx_angles_deg == t.tx_angles_deg);
    // Samples are stored as 32-bit floats.
    CHECK((u.data - t.data).norm() / t.data.norm() < 1e-6);
    CHECK_THROWS_AS(load_tensor(path + ".missing"), DataError);
    std::filesystem::remove(path);
}
