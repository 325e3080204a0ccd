#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "solarpp/censored_normal.hpp"

namespace solarpp::nn {

/// Ensemble mean, ensemble standard deviation, 2 m temperature, 10 m wind.
inline constexpr int kNumFeatures = 4;
inline constexpr int kEmbeddingDim = 2;
inline constexpr int kHours = 24;

using Features = std::array<double, kNumFeatures>;

struct FeatureRow {
  Features x{};
  int hour = 0;  // local hour
  double y = 0.0;
};

enum class Mode { kEmbedding, kHourly };

/// Scale activation: softplus for PV power, ReLU(x) + 1e-3 for GHI.
enum class Head { kSoftplus, kReluOffset };

struct Scaler {
  Features mean{};
  Features sd{1.0, 1.0, 1.0, 1.0};

  Features apply(const Features& x) const;
};

/// One scaler (global) or one per local hour.
struct ScalerSet {
  bool per_hour = false;
  std::array<Scaler, kHours> scalers{};

  const Scaler& for_hour(int hour) const { return scalers[per_hour ? hour : 0]; }
};

inline constexpr double kScalerSdFloor = 1e-8;

/// Sample mean and sd per feature, sd floored at 1e-8. Per-hour mode
/// throws Error(kEmptyGroup) for an hour with fewer than two rows.
ScalerSet fit_scaler(std::span<const FeatureRow> rows, bool per_hour);

/// Dense(in, H, ReLU) -> Dense(H, H, ReLU) -> Dense(H, 2), with an optional
/// 24 x 2 hour embedding concatenated to the scaled features.
struct Mlp {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  Eigen::MatrixXd embedding;  // kEmbeddingDim x 24, empty when unused

  bool has_embedding() const { return embedding.size() != 0; }
  int input_dim() const { return kNumFeatures + (has_embedding() ? kEmbeddingDim : 0); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  /// He-uniform dense weights, zero biases, U(-0.05, 0.05) embedding.
  static Mlp initialize(int hidden, bool with_embedding, std::uint64_t seed);
  static Mlp zeros(int hidden, bool with_embedding);

  std::size_t parameter_count() const;
  /// Flat views over all parameters in a fixed order.
  std::vector<double*> parameters();
};

/// Evaluates the network on already-scaled features. Returns (mu, sigma)
/// before censoring-distribution flooring.
std::array<double, 2> evaluate(const Mlp& net, Head head, const Features& scaled, int hour);

/// Mean CRPS over a batch of scaled inputs and its gradient with respect to
/// every parameter (same layout as Mlp).
double loss_and_gradient(const Mlp& net, Head head, const CensoringBounds& bounds,
                         std::span<const Features> scaled, std::span<const int> hours, std::span<const double> y,
                         Mlp* grad);

/// Columnwise (mu, sigma) for a batch of scaled inputs.
Eigen::Matrix2Xd evaluate_batch(const Mlp& net, Head head, std::span<const Features> scaled,
                                std::span<const int> hours);

/// Mean CRPS without gradients.
double batch_loss(const Mlp& net, Head head, const CensoringBounds& bounds, std::span<const Features> scaled,
                  std::span<const int> hours, std::span<const double> y);

struct NetworkModel {
  Mode mode = Mode::kEmbedding;
  Head head = Head::kSoftplus;
  CensoringBounds bounds{};
  ScalerSet scaler{};
  std::vector<Mlp> nets;  // one (embedding) or 24 (hourly)

  const Mlp& net_for_hour(int hour) const { return nets[mode == Mode::kEmbedding ? 0 : hour]; }
};

CensoredNormal forward(const NetworkModel& model, const FeatureRow& row);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 1000;
  int patience = 10;
  int patience_night = 10;  // hourly mode: local hours 23:00-5:00
  int max_epochs = 50;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  int repeats = 10;
  int hidden = 256;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static TrainConfig defaults(Mode mode);
};

bool is_night_hour(int hour);

struct NetLog {
  int hour = -1;  // -1 for the embedding network
  int epochs = 0;
  int best_epoch = 0;  // 1-based
  double best_val_crps = 0.0;
  bool no_improvement = false;
  std::vector<double> train_crps;  // per epoch, full train split
  std::vector<double> val_crps;    // per epoch
  /// Validation CRPS of the restored weights by local hour (NaN if absent).
  std::array<double, kHours> val_crps_by_hour{};
};

struct TrainLog {
  std::vector<std::vector<NetLog>> repeats;
};

struct AveragedModel {
  std::vector<NetworkModel> repeats;
  TrainConfig config{};

  /// Averages mu and sigma over repeats, then censors to the model bounds.
  CensoredNormal predict(const FeatureRow& row) const;
  std::vector<CensoredNormal> predict(std::span<const FeatureRow> rows) const;

  /// Binary format: magic, version, JSON metadata, raw little-endian
  /// doubles. Round trip is exact.
  void save(const std::string& path) const;
  static AveragedModel load(const std::string& path);
};

/// Trains `config.repeats` networks on chronologically ordered rows. The
/// last validation_fraction of rows (per hour in hourly mode) is held out
/// for early stopping and the best epoch is restored.
AveragedModel train(std::span<const FeatureRow> rows, const TrainConfig& config, Mode mode, Head head,
                    const CensoringBounds& bounds, TrainLog* log = nullptr);

/// Direct PV forecaster: GHI ensemble features in, PV power out, with a
/// softplus head censored to [0, capacity].
AveragedModel train_direct(std::span<const FeatureRow> rows, const TrainConfig& config, Mode mode,
                           double capacity_mw, TrainLog* log = nullptr);

}  // namespace solarpp::nn
