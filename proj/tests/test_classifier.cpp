// SPDX-License-Identifier: Apache-2.0

#include "test_util.hpp"

#include <doctest.h>

using namespace mmw;

namespace
{

PathEstimate est(double snr, double aoa, double aod, double rel)
{
    PathEstimate e;
    e.snr_db = snr;
    e.aoa_deg = aoa;
    e.aod_deg = aod;
    e.rel_delay_ns = rel;
    return e;
}

// Gaussian blobs in feature space, one per class, `n` samples each.
std::vector<LinkSample> blobs(int n, int classes, double spread, std::uint64_t seed, int env_id = 0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    std::vector<LinkSample> out;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < n; ++i)
        {
            LinkSample s;
            s.features = Eigen::VectorXd::Zero(20);
            for (int d = 0; d < 20; ++d)
                s.features(d) = (d % classes == c ? 1.0 : 0.0) + g(rng);
            s.label = static_cast<LinkState>(c);
            s.env_id = env_id;
            out.push_back(s);
        }
    return out;
}

} // namespace

TEST_CASE("feature scaling examples")
{
    CHECK(scale_snr(5.0) == 0.0);
    CHECK(scale_snr(50.0) == 1.0);
    CHECK(scale_snr(27.5) == 0.5);
    CHECK(scale_snr(-10.0) == 0.0);
    CHECK(scale_snr(80.0) == 1.0);
    CHECK(scale_angle(0.0) == 0.0);
    CHECK(scale_angle(-180.0) == -1.0);
    CHECK(scale_angle(90.0) == 0.5);
    CHECK(scale_angle(180.0) == -1.0);
    CHECK(scale_angle(270.0) == -0.5);
    CHECK(scale_delay(0.0) == 0.0);
    CHECK(scale_delay(100.0) == 1.0);
    CHECK(scale_delay(150.0) == 1.5);
}

TEST_CASE("feature assembly")
{
    CHECK(feature_dim(FeatureMode::AoaAod) == 20);
    CHECK(feature_dim(FeatureMode::AoaOnly) == 15);

    const auto empty = assemble_features({}, FeatureMode::AoaAod);
    CHECK(empty.size() == 20);
    CHECK(empty.isZero(0.0));

    const auto two = assemble_features({est(27.5, 90.0, -90.0, 0.0), est(5.0, 0.0, 45.0, 150.0)}, FeatureMode::AoaAod);
    CHECK(two(0) == 0.5);
    CHECK(two(1) == 0.5);
    CHECK(two(2) == -0.5);
    CHECK(two(3) == 0.0);
    CHECK(two(4) == 0.0);
    CHECK(two(6) == 0.25);
    CHECK(two(7) == 1.5);
    CHECK(two.tail(12).isZero(0.0));

    std::vector<PathEstimate> seven;
    for (int i = 0; i < 7; ++i)
        seven.push_back(est(10.0 + 5.0 * ((i * 3) % 7), 10.0 * i, -10.0 * i, 5.0 * i));
    const auto x = assemble_features(seven, FeatureMode::AoaAod);
    std::vector<double> snrs;
    for (const auto &e : seven)
        snrs.push_back(e.snr_db);
    std::sort(snrs.rbegin(), snrs.rend());
    for (int l = 0; l < 5; ++l)
        CHECK(x(4 * l) == doctest::Approx(scale_snr(snrs[static_cast<std::size_t>(l)])));

    const auto aoa_only = assemble_features(seven, FeatureMode::AoaOnly);
    CHECK(aoa_only.size() == 15);
    CHECK((aoa_only - to_aoa_only(x)).norm() == 0.0);
    CHECK((assemble_features(seven, FeatureMode::AoaAod) - x).norm() == 0.0);
}

TEST_CASE("forward pass")
{
    MlpModel m = MlpModel::initialize({20, 8, 6, 4}, 3);
    for (auto &l : m.layers)
    {
        l.w.setZero();
        l.b.setZero();
    }
    const auto p = m.forward(Eigen::VectorXd::Random(20));
    for (int i = 0; i < 4; ++i)
        CHECK(p(i) == doctest::Approx(0.25));
    CHECK_THROWS_AS(m.forward(Eigen::VectorXd::Zero(15)), DimensionMismatch);

    Eigen::MatrixXd logits = Eigen::MatrixXd::Random(4, 50) * 30.0;
    const Eigen::MatrixXd a = softmax_columns(logits);
    const Eigen::MatrixXd b = softmax_columns(logits.array() + 17.0);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index c = 0; c < a.cols(); ++c)
        CHECK(std::abs(a.col(c).sum() - 1.0) <= 1e-9);

    const MlpModel r = MlpModel::initialize({20, 8, 6, 4}, 9);
    const Eigen::MatrixXd xs = Eigen::MatrixXd::Random(20, 40);
    const Eigen::MatrixXd pb = r.forward_batch(xs);
    for (Eigen::Index c = 0; c < xs.cols(); ++c)
        CHECK((pb.col(c) - r.forward(xs.col(c))).norm() < 1e-12);
}

TEST_CASE("Glorot-uniform initialization")
{
    const MlpModel m = MlpModel::initialize({20, 8, 6, 4}, 5);
    REQUIRE(m.layers.size() == 3);
    for (const auto &l : m.layers)
    {
        const double lim = std::sqrt(6.0 / static_cast<double>(l.w.rows() + l.w.cols()));
        CHECK(l.w.cwiseAbs().maxCoeff() <= lim);
        CHECK(l.b.isZero(0.0));
    }
    CHECK(m.input_dim() == 20);
    CHECK(m.output_dim() == 4);
}

TEST_CASE("analytic gradient matches central differences")
{
    CHECK(test::gradient_check_max_rel_error(100, 42) <= 1e-4);
}

TEST_CASE("training")
{
    SUBCASE("separable two-class blobs")
    {
        const auto data = blobs(200, 2, 0.1, 1);
        TrainConfig cfg;
        cfg.epochs = 50;
        cfg.batch = 32;
        const auto res = train(data, data, cfg);
        CHECK(res.history.size() == 50);
        CHECK(res.history.back().train_acc >= 0.99);
    }
    SUBCASE("determinism per seed")
    {
        const auto data = blobs(100, 4, 0.3, 2);
        TrainConfig cfg;
        cfg.epochs = 20;
        cfg.batch = 64;
        const auto a = train(data, data, cfg, FeatureMode::AoaOnly);
        const auto b = train(data, data, cfg, FeatureMode::AoaOnly);
        REQUIRE(a.model.layers.size() == b.model.layers.size());
        for (std::size_t i = 0; i < a.model.layers.size(); ++i)
        {
            CHECK((a.model.layers[i].w - b.model.layers[i].w).cwiseAbs().maxCoeff() == 0.0);
            CHECK((a.model.layers[i].b - b.model.layers[i].b).cwiseAbs().maxCoeff() == 0.0);
        }
        CHECK(a.model.mode == FeatureMode::AoaOnly);
        cfg.seed = 2;
        const auto c = train(data, data, cfg, FeatureMode::AoaOnly);
        CHECK((a.model.layers[0].w - c.model.layers[0].w).norm() > 0.0);
    }
    SUBCASE("smoothed loss trace is non-increasing")
    {
        const auto data = blobs(300, 4, 0.5, 3);
        TrainConfig cfg;
        cfg.epochs = 100;
        cfg.batch = 128;
        const auto res = train(data, data, cfg);
        std::vector<double> smooth;
        for (std::size_t i = 0; i + 10 <= res.history.size(); i += 10)
        {
            double s = 0.0;
            for (std::size_t k = i; k < i + 10; ++k)
                s += res.history[k].train_loss;
            smooth.push_back(s / 10.0);
        }
        for (std::size_t i = 1; i < smooth.size(); ++i)
            CHECK(smooth[i] <= smooth[i - 1]);
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(train({}, {}, TrainConfig{}), EmptyDataset);
        auto one = blobs(10, 1, 0.1, 4);
        CHECK_THROWS_AS(train(one, one, TrainConfig{}), DataError);
    }
}

TEST_CASE("evaluation")
{
    const std::vector<int> truth{0, 0, 1, 1, 1, 2, 3, 3};
    const auto perfect = evaluate_predictions(truth, truth);
    CHECK(perfect.accuracy == 1.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(perfect.confusion[i][j] == (i == j ? std::count(truth.begin(), truth.end(), i) : 0));
    const auto constant = evaluate_predictions(truth, std::vector<int>(truth.size(), 1));
    CHECK(constant.accuracy == doctest::Approx(3.0 / 8.0));
    CHECK(constant.recall[1] == 1.0);
    CHECK(constant.recall[0] == 0.0);
    CHECK(constant.total == 8);

    const auto data = blobs(50, 4, 0.2, 6);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch = 32;
    const auto model = train(data, data, cfg).model;
    auto moved = data;
    for (auto &s : moved)
        s.env_id += 17;
    const auto a = evaluate(model, data), b = evaluate(model, moved);
    CHECK(a.confusion == b.confusion);
    for (const auto &s : data)
        CHECK(predict(model, s.features) == predict(model, s.features));
}
