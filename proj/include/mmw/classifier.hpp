// SPDX-License-Identifier: Apache-2.0
//
// Link-state classification: feature scaling, K-path feature assembly and a
// small ReLU MLP trained with Adam on softmax cross-entropy.

#ifndef MMW_CLASSIFIER_HPP
#define MMW_CLASSIFIER_HPP

#include "mmw/estimator.hpp"
#include "mmw/raytrace.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace mmw
{

enum class FeatureMode : std::uint8_t
{
    AoaAod,
    AoaOnly
};

const char *to_string(FeatureMode m);
FeatureMode feature_mode_from_string(const std::string &s);

inline constexpr int kFeaturePaths = 5;
inline constexpr double kGammaMinDb = 5.0;
inline constexpr double kGammaMaxDb = 50.0;
inline constexpr double kDelayScaleNs = 100.0;

double scale_snr(double gamma_db, double gamma_min_db = kGammaMinDb, double gamma_max_db = kGammaMaxDb);
double scale_angle(double deg);
double scale_delay(double rel_ns, double scale_ns = kDelayScaleNs);

int values_per_path(FeatureMode mode);
int feature_dim(FeatureMode mode, int k_paths = kFeaturePaths);

/// Per path: [z, aoa, aod, delay] (AoD omitted in AoaOnly mode); the K
/// strongest paths by SNR, zero blocks for missing ones.
Eigen::VectorXd assemble_features(const std::vector<PathEstimate> &estimates, FeatureMode mode,
                                  int k_paths = kFeaturePaths);

/// Drops the AoD slot of every block of an AoaAod feature vector.
Eigen::VectorXd to_aoa_only(const Eigen::VectorXd &aoa_aod);

struct LinkSample
{
    Eigen::VectorXd features; // AoaAod layout
    LinkState label = LinkState::Outage;
    int env_id = 0;
    int tx_id = 0;
    int cell_ix = 0;
    int cell_iy = 0;
};

struct Dense
{
    Eigen::MatrixXd w; // out x in
    Eigen::VectorXd b;
};

struct MlpModel
{
    std::vector<Dense> layers;
    FeatureMode mode = FeatureMode::AoaAod;

    /// Glorot-uniform weights, zero biases.
    static MlpModel initialize(const std::vector<int> &sizes, std::uint64_t seed, FeatureMode mode = FeatureMode::AoaAod);

    int input_dim() const { return static_cast<int>(layers.front().w.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().w.rows()); }

    /// Column-wise logits for a batch stored one sample per column.
    Eigen::MatrixXd logits(const Eigen::MatrixXd &x) const;
    Eigen::VectorXd forward(const Eigen::VectorXd &x) const;
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd &x) const;
};

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd &logits);

/// Mean cross-entropy over the batch; fills `grad` (same shapes as the
/// model layers) when non-null.
double cross_entropy(const MlpModel &model, const Eigen::MatrixXd &x, const std::vector<int> &labels,
                     std::vector<Dense> *grad = nullptr);

struct TrainConfig
{
    std::vector<int> hidden{8, 6};
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 300;
    int batch = 1024;
    std::uint64_t seed = 1;
};

struct EpochMetrics
{
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

/// Dense matrix view of a sample set in a given feature mode.
struct DesignMatrix
{
    Eigen::MatrixXd x; // dim x n
    std::vector<int> y;

    static DesignMatrix from_samples(const std::vector<LinkSample> &samples, FeatureMode mode);
    int size() const { return static_cast<int>(y.size()); }
};

struct TrainResult
{
    MlpModel model;
    std::vector<EpochMetrics> history;
};

TrainResult train(const std::vector<LinkSample> &train_set, const std::vector<LinkSample> &val_set,
                  const TrainConfig &cfg, FeatureMode mode = FeatureMode::AoaAod);

struct EvalResult
{
    double accuracy = 0.0;
    /// Row = true state, column = predicted state.
    std::array<std::array<long, kNumLinkStates>, kNumLinkStates> confusion{};
    /// NaN for classes absent from the evaluated set.
    std::array<double, kNumLinkStates> recall{};
    long total = 0;
};

EvalResult evaluate_predictions(const std::vector<int> &truth, const std::vector<int> &predicted);
EvalResult evaluate(const MlpModel &model, const std::vector<LinkSample> &dataset);

int predict(const MlpModel &model, const Eigen::VectorXd &aoa_aod_features);

} // namespace mmw

#endif
