// SPDX-License-Identifier: Apache-2.0

#include "mmw/classifier.hpp"

#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace mmw
{

const char *to_string(FeatureMode m)
{
    return m == FeatureMode::AoaAod ? "aoa_aod" : "aoa_only";
}

FeatureMode feature_mode_from_string(const std::string &s)
{
    if (s == "aoa_aod")
        return FeatureMode::AoaAod;
    if (s == "aoa_only")
        return FeatureMode::AoaOnly;
    throw DataError("unknown feature mode '" + s + "'");
}

double scale_snr(double gamma_db, double gamma_min_db, double gamma_max_db)
{
    return std::clamp((gamma_db - gamma_min_db) / (gamma_max_db - gamma_min_db), 0.0, 1.0);
}

double scale_angle(double deg) { return wrap_deg(deg) / 180.0; }

double scale_delay(double rel_ns, double scale_ns) { return rel_ns / scale_ns; }

int values_per_path(FeatureMode mode) { return mode == FeatureMode::AoaAod ? 4 : 3; }

int feature_dim(FeatureMode mode, int k_paths) { return values_per_path(mode) * k_paths; }

Eigen::VectorXd assemble_features(const std::vector<PathEstimate> &estimates, FeatureMode mode, int k_paths)
{
    std::vector<const PathEstimate *> order;
    order.reserve(estimates.size());
    for (const auto &e : estimates)
        order.push_back(&e);
    std::stable_sort(order.begin(), order.end(), [](auto *a, auto *b) { return a->snr_db > b->snr_db; });

    const int per = values_per_path(mode);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(feature_dim(mode, k_paths));
    const int n = std::min<int>(k_paths, static_cast<int>(order.size()));
    for (int l = 0; l < n; ++l)
    {
        const PathEstimate &e = *order[static_cast<std::size_t>(l)];
        int o = l * per;
        x(o++) = scale_snr(e.snr_db);
        x(o++) = scale_angle(e.aoa_deg);
        if (mode == FeatureMode::AoaAod)
            x(o++) = scale_angle(e.aod_deg);
        x(o) = scale_delay(e.rel_delay_ns);
    }
    return x;
}

Eigen::VectorXd to_aoa_only(const Eigen::VectorXd &full)
{
    if (full.size() % 4 != 0)
        throw DimensionMismatch("to_aoa_only: input is not an AoA+AoD feature vector");
    const Eigen::Index k = full.size() / 4;
    Eigen::VectorXd out(3 * k);
    for (Eigen::Index l = 0; l < k; ++l)
    {
        out(3 * l) = full(4 * l);
        out(3 * l + 1) = full(4 * l + 1);
        out(3 * l + 2) = full(4 * l + 3);
    }
    return out;
}

MlpModel MlpModel::initialize(const std::vector<int> &sizes, std::uint64_t seed, FeatureMode mode)
{
    if (sizes.size() < 2)
        throw std::invalid_argument("MlpModel: need at least input and output sizes");
    std::mt19937_64 rng(seed);
    MlpModel m;
    m.mode = mode;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    {
        const int in = sizes[i], out = sizes[i + 1];
        const double lim = std::sqrt(6.0 / (in + out));
        boost::random::uniform_real_distribution<double> u(-lim, lim);
        Dense d;
        d.w.resize(out, in);
        for (int c = 0; c < in; ++c)
            for (int r = 0; r < out; ++r)
                d.w(r, c) = u(rng);
        d.b = Eigen::VectorXd::Zero(out);
        m.layers.push_back(std::move(d));
    }
    return m;
}

Eigen::MatrixXd MlpModel::logits(const Eigen::MatrixXd &x) const
{
    if (x.rows() != input_dim())
        throw DimensionMismatch("MLP expects " + std::to_string(input_dim()) + " inputs, got " +
                                std::to_string(x.rows()));
    Eigen::MatrixXd h = x;
    for (std::size_t i = 0; i < layers.size(); ++i)
    {
        Eigen::MatrixXd z = layers[i].w * h;
        z.colwise() += layers[i].b;
        h = (i + 1 < layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return h;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd &logits)
{
    Eigen::MatrixXd p = logits.rowwise() - logits.colwise().maxCoeff();
    p = p.array().exp();
    p.array().rowwise() /= p.colwise().sum().array();
    return p;
}

Eigen::VectorXd MlpModel::forward(const Eigen::VectorXd &x) const { return forward_batch(x); }

Eigen::MatrixXd MlpModel::forward_batch(const Eigen::MatrixXd &x) const { return softmax_columns(logits(x)); }

double cross_entropy(const MlpModel &model, const Eigen::MatrixXd &x, const std::vector<int> &labels,
                     std::vector<Dense> *grad)
{
    const Eigen::Index n = x.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw MisalignedInput("cross_entropy: batch and label counts differ");
    if (x.rows() != model.input_dim())
        throw DimensionMismatch("cross_entropy: input dimension mismatch");
    const std::size_t nl = model.layers.size();
    std::vector<Eigen::MatrixXd> acts; // inputs of each layer
    acts.reserve(nl);
    Eigen::MatrixXd h = x;
    for (std::size_t i = 0; i < nl; ++i)
    {
        acts.push_back(h);
        Eigen::MatrixXd z = model.layers[i].w * h;
        z.colwise() += model.layers[i].b;
        h = (i + 1 < nl) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    // log-softmax
    const Eigen::RowVectorXd mx = h.colwise().maxCoeff();
    const Eigen::MatrixXd shifted = h.rowwise() - mx;
    const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    double loss = 0.0;
    for (Eigen::Index c = 0; c < n; ++c)
        loss -= shifted(labels[static_cast<std::size_t>(c)], c) - lse(c);
    loss /= static_cast<double>(n);

    if (grad)
    {
        grad->resize(nl);
        Eigen::MatrixXd delta = (shifted.rowwise() - lse).array().exp();
        for (Eigen::Index c = 0; c < n; ++c)
            delta(labels[static_cast<std::size_t>(c)], c) -= 1.0;
        delta /= static_cast<double>(n);
        for (std::size_t i = nl; i-- > 0;)
        {
            (*grad)[i].w = delta * acts[i].transpose();
            (*grad)[i].b = delta.rowwise().sum();
            if (i > 0)
            {
                Eigen::MatrixXd back = model.layers[i].w.transpose() * delta;
                delta = (acts[i].array() > 0.0).select(back, 0.0);
            }
        }
    }
    return loss;
}

DesignMatrix DesignMatrix::from_samples(const std::vector<LinkSample> &samples, FeatureMode mode)
{
    DesignMatrix d;
    const int dim = feature_dim(mode);
    d.x.resize(dim, static_cast<Eigen::Index>(samples.size()));
    d.y.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
    {
        const auto &s = samples[i];
        if (s.features.size() != feature_dim(FeatureMode::AoaAod))
            throw DimensionMismatch("sample features have unexpected length");
        d.x.col(static_cast<Eigen::Index>(i)) = mode == FeatureMode::AoaAod ? s.features : to_aoa_only(s.features);
        d.y.push_back(static_cast<int>(s.label));
    }
    return d;
}

namespace
{

std::vector<int> argmax_columns(const Eigen::MatrixXd &m)
{
    std::vector<int> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
    {
        Eigen::Index r;
        m.col(c).maxCoeff(&r);
        out[static_cast<std::size_t>(c)] = static_cast<int>(r);
    }
    return out;
}

double accuracy_of(const MlpModel &m, const DesignMatrix &d)
{
    const auto pred = argmax_columns(m.logits(d.x));
    long hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        hit += pred[i] == d.y[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

} // namespace

TrainResult train(const std::vector<LinkSample> &train_set, const std::vector<LinkSample> &val_set,
                  const TrainConfig &cfg, FeatureMode mode)
{
    if (train_set.empty())
        throw EmptyDataset("train: empty training set");
    if (cfg.epochs < 1 || cfg.batch < 1)
        throw std::invalid_argument("train: epochs and batch must be positive");
    const DesignMatrix tr = DesignMatrix::from_samples(train_set, mode);
    if (std::all_of(tr.y.begin(), tr.y.end(), [&](int y) { return y == tr.y.front(); }))
        throw DataError("train: training set contains a single class");
    const DesignMatrix va = DesignMatrix::from_samples(val_set, mode);

    std::vector<int> sizes{feature_dim(mode)};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(kNumLinkStates);

    TrainResult res;
    res.model = MlpModel::initialize(sizes, cfg.seed, mode);
    MlpModel &m = res.model;

    std::vector<Dense> m1(m.layers.size()), m2(m.layers.size()), g;
    for (std::size_t i = 0; i < m.layers.size(); ++i)
    {
        m1[i].w = m2[i].w = Eigen::MatrixXd::Zero(m.layers[i].w.rows(), m.layers[i].w.cols());
        m1[i].b = m2[i].b = Eigen::VectorXd::Zero(m.layers[i].b.size());
    }

    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5f1e));
    std::vector<int> order(static_cast<std::size_t>(tr.size()));
    std::iota(order.begin(), order.end(), 0);
    long step = 0;
    Eigen::MatrixXd xb;
    std::vector<int> yb;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch)
    {
        std::shuffle(order.begin(), order.end(), rng);
        for (int start = 0; start < tr.size(); start += cfg.batch)
        {
            const int n = std::min(cfg.batch, tr.size() - start);
            xb.resize(tr.x.rows(), n);
            yb.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
            {
                const int idx = order[static_cast<std::size_t>(start + i)];
                xb.col(i) = tr.x.col(idx);
                yb[static_cast<std::size_t>(i)] = tr.y[static_cast<std::size_t>(idx)];
            }
            cross_entropy(m, xb, yb, &g);
            ++step;
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            auto adam = [&](auto &param, auto &mom, auto &vel, const auto &grad) {
                mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * grad;
                vel = cfg.beta2 * vel + (1.0 - cfg.beta2) * grad.cwiseAbs2();
                param.array() -= cfg.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + cfg.epsilon);
            };
            for (std::size_t i = 0; i < m.layers.size(); ++i)
            {
                adam(m.layers[i].w, m1[i].w, m2[i].w, g[i].w);
                adam(m.layers[i].b, m1[i].b, m2[i].b, g[i].b);
            }
        }
        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss = cross_entropy(m, tr.x, tr.y);
        em.train_acc = accuracy_of(m, tr);
        if (va.size() > 0)
        {
            em.val_loss = cross_entropy(m, va.x, va.y);
            em.val_acc = accuracy_of(m, va);
        }
        else
        {
            em.val_loss = std::numeric_limits<double>::quiet_NaN();
            em.val_acc = std::numeric_limits<double>::quiet_NaN();
        }
        res.history.push_back(em);
    }
    return res;
}

EvalResult evaluate_predictions(const std::vector<int> &truth, const std::vector<int> &predicted)
{
    if (truth.size() != predicted.size())
        throw MisalignedInput("evaluate: truth and prediction counts differ");
    if (truth.empty())
        throw EmptyDataset("evaluate: empty dataset");
    EvalResult r;
    long hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
    {
        r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])] += 1;
        hit += truth[i] == predicted[i];
    }
    r.total = static_cast<long>(truth.size());
    r.accuracy = static_cast<double>(hit) / static_cast<double>(r.total);
    for (std::size_t c = 0; c < kNumLinkStates; ++c)
    {
        long row = 0;
        for (long v : r.confusion[c])
            row += v;
        r.recall[c] = row > 0 ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(row)
                              : std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

EvalResult evaluate(const MlpModel &model, const std::vector<LinkSample> &dataset)
{
    if (dataset.empty())
        throw EmptyDataset("evaluate: empty dataset");
    const DesignMatrix d = DesignMatrix::from_samples(dataset, model.mode);
    return evaluate_predictions(d.y, argmax_columns(model.logits(d.x)));
}

int predict(const MlpModel &model, const Eigen::VectorXd &features)
{
    const Eigen::VectorXd x = model.mode == FeatureMode::AoaAod ? features : to_aoa_only(features);
    Eigen::Index r;
    model.logits(x).col(0).maxCoeff(&r);
    return static_cast<int>(r);
}

} // namespace mmw
