#include "solarpp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "solarpp/error.hpp"
#include "solarpp/rng.hpp"

namespace solarpp::nn {
namespace {

using Json = nlohmann::json;

constexpr double kReluOffset = 1e-3;
constexpr char kMagic[8] = {'S', 'P', 'P', 'N', 'N', '\0', '\0', '\1'};
constexpr std::uint32_t kFormatVersion = 1;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double scale_activation(Head head, double raw) {
  return head == Head::kSoftplus ? softplus(raw) : std::max(raw, 0.0) + kReluOffset;
}

double scale_activation_derivative(Head head, double raw) {
  return head == Head::kSoftplus ? sigmoid(raw) : (raw > 0.0 ? 1.0 : 0.0);
}

std::array<Eigen::Map<Eigen::ArrayXd>, 7> tensors(Mlp& net) {
  auto map = [](auto& m) { return Eigen::Map<Eigen::ArrayXd>(m.data(), m.size()); };
  return {map(net.w1), map(net.b1), map(net.w2), map(net.b2), map(net.w3), map(net.b3), map(net.embedding)};
}

Eigen::MatrixXd input_matrix(const Mlp& net, std::span<const Features> scaled, std::span<const int> hours) {
  const auto batch = static_cast<Eigen::Index>(scaled.size());
  Eigen::MatrixXd x(net.input_dim(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    for (int f = 0; f < kNumFeatures; ++f) x(f, j) = scaled[j][f];
    if (net.has_embedding()) {
      x.block<kEmbeddingDim, 1>(kNumFeatures, j) = net.embedding.col(hours[j]);
    }
  }
  return x;
}

struct Activations {
  Eigen::MatrixXd x, z1, a1, z2, a2, z3;
};

Activations forward_pass(const Mlp& net, std::span<const Features> scaled, std::span<const int> hours) {
  Activations act;
  act.x = input_matrix(net, scaled, hours);
  act.z1 = (net.w1 * act.x).colwise() + net.b1;
  act.a1 = act.z1.cwiseMax(0.0);
  act.z2 = (net.w2 * act.a1).colwise() + net.b2;
  act.a2 = act.z2.cwiseMax(0.0);
  act.z3 = (net.w3 * act.a2).colwise() + net.b3;
  return act;
}

Mlp zeros_like(const Mlp& net) {
  Mlp z;
  z.w1 = Eigen::MatrixXd::Zero(net.w1.rows(), net.w1.cols());
  z.w2 = Eigen::MatrixXd::Zero(net.w2.rows(), net.w2.cols());
  z.w3 = Eigen::MatrixXd::Zero(net.w3.rows(), net.w3.cols());
  z.b1 = Eigen::VectorXd::Zero(net.b1.size());
  z.b2 = Eigen::VectorXd::Zero(net.b2.size());
  z.b3 = Eigen::VectorXd::Zero(net.b3.size());
  z.embedding = Eigen::MatrixXd::Zero(net.embedding.rows(), net.embedding.cols());
  return z;
}

class Adam {
 public:
  Adam(const Mlp& net, const TrainConfig& cfg) : m_(zeros_like(net)), v_(zeros_like(net)), cfg_(cfg) {}

  void step(Mlp& net, Mlp& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    auto p = tensors(net);
    auto g = tensors(grad);
    auto m = tensors(m_);
    auto v = tensors(v_);
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k].square();
      p[k] -= cfg_.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + cfg_.epsilon);
    }
  }

 private:
  Mlp m_, v_;
  const TrainConfig& cfg_;
  int t_ = 0;
};

struct ScaledSet {
  std::vector<Features> x;
  std::vector<int> hours;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
};

ScaledSet scale_rows(const std::vector<const FeatureRow*>& rows, const ScalerSet& scaler) {
  ScaledSet s;
  s.x.reserve(rows.size());
  for (const FeatureRow* r : rows) {
    s.x.push_back(scaler.for_hour(r->hour).apply(r->x));
    s.hours.push_back(r->hour);
    s.y.push_back(r->y);
  }
  return s;
}

ScaledSet slice(const ScaledSet& s, std::size_t begin, std::size_t end) {
  ScaledSet out;
  out.x.assign(s.x.begin() + begin, s.x.begin() + end);
  out.hours.assign(s.hours.begin() + begin, s.hours.begin() + end);
  out.y.assign(s.y.begin() + begin, s.y.begin() + end);
  return out;
}

Mlp train_network(const std::vector<const FeatureRow*>& rows, const ScalerSet& scaler, const TrainConfig& cfg,
                  int patience, Head head, const CensoringBounds& bounds, bool with_embedding, std::uint64_t seed,
                  NetLog& log) {
  if (rows.size() < 2) throw Error(ErrorCode::kInvalidArgument, "training needs at least two rows");
  const ScaledSet all = scale_rows(rows, scaler);
  const std::size_t n = all.size();
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  const ScaledSet train_set = slice(all, 0, n - n_val);
  const ScaledSet val_set = slice(all, n - n_val, n);

  Mlp net = Mlp::initialize(cfg.hidden, with_embedding, derive_seed(seed, "init"));
  Mlp grad = zeros_like(net);
  Adam adam(net, cfg);
  Rng shuffle_rng(derive_seed(seed, "shuffle"));

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Mlp best = net;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;
  ScaledSet batch;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.x.clear();
      batch.hours.clear();
      batch.y.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.x.push_back(train_set.x[order[k]]);
        batch.hours.push_back(train_set.hours[order[k]]);
        batch.y.push_back(train_set.y[order[k]]);
      }
      loss_and_gradient(net, head, bounds, batch.x, batch.hours, batch.y, &grad);
      adam.step(net, grad);
    }
    const double train_loss = batch_loss(net, head, bounds, train_set.x, train_set.hours, train_set.y);
    const double val_loss = batch_loss(net, head, bounds, val_set.x, val_set.hours, val_set.y);
    log.train_crps.push_back(train_loss);
    log.val_crps.push_back(val_loss);
    log.epochs = epoch;
    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
      log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  log.best_val_crps = best_val;
  log.no_improvement = log.best_epoch <= 1 && log.epochs > 1;

  log.val_crps_by_hour.fill(std::numeric_limits<double>::quiet_NaN());
  const Eigen::Matrix2Xd params = evaluate_batch(best, head, val_set.x, val_set.hours);
  std::array<double, kHours> sum{};
  std::array<int, kHours> count{};
  for (std::size_t j = 0; j < val_set.size(); ++j) {
    const CensoredNormal d(params(0, j), params(1, j), bounds);
    sum[val_set.hours[j]] += crps(d, val_set.y[j]);
    ++count[val_set.hours[j]];
  }
  for (int h = 0; h < kHours; ++h) {
    if (count[h] > 0) log.val_crps_by_hour[h] = sum[h] / count[h];
  }
  return best;
}

Json scaler_json(const Scaler& s) { return Json{{"mean", s.mean}, {"sd", s.sd}}; }

Json config_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"patience", c.patience},
              {"patience_night", c.patience_night}, {"max_epochs", c.max_epochs},
              {"validation_fraction", c.validation_fraction}, {"seed", c.seed}, {"repeats", c.repeats},
              {"hidden", c.hidden}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate");
  c.batch_size = j.at("batch_size");
  c.patience = j.at("patience");
  c.patience_night = j.at("patience_night");
  c.max_epochs = j.at("max_epochs");
  c.validation_fraction = j.at("validation_fraction");
  c.seed = j.at("seed");
  c.repeats = j.at("repeats");
  c.hidden = j.at("hidden");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.epsilon = j.at("epsilon");
  return c;
}

}  // namespace

Features Scaler::apply(const Features& x) const {
  Features out{};
  for (int f = 0; f < kNumFeatures; ++f) out[f] = (x[f] - mean[f]) / sd[f];
  return out;
}

ScalerSet fit_scaler(std::span<const FeatureRow> rows, bool per_hour) {
  ScalerSet set;
  set.per_hour = per_hour;
  const int groups = per_hour ? kHours : 1;
  for (int g = 0; g < groups; ++g) {
    Features sum{}, mean{}, ss{};
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (per_hour && r.hour != g) continue;
      for (int f = 0; f < kNumFeatures; ++f) sum[f] += r.x[f];
      ++n;
    }
    if (n < 2) {
      throw Error(ErrorCode::kEmptyGroup,
                  per_hour ? "hour " + std::to_string(g) + " has fewer than two rows" : "fewer than two rows");
    }
    for (int f = 0; f < kNumFeatures; ++f) mean[f] = sum[f] / static_cast<double>(n);
    for (const auto& r : rows) {
      if (per_hour && r.hour != g) continue;
      for (int f = 0; f < kNumFeatures; ++f) ss[f] += (r.x[f] - mean[f]) * (r.x[f] - mean[f]);
    }
    Scaler& s = set.scalers[g];
    s.mean = mean;
    for (int f = 0; f < kNumFeatures; ++f) {
      s.sd[f] = std::max(std::sqrt(ss[f] / static_cast<double>(n - 1)), kScalerSdFloor);
    }
  }
  if (!per_hour) set.scalers.fill(set.scalers[0]);
  return set;
}

Mlp Mlp::zeros(int hidden, bool with_embedding) {
  Mlp net;
  const int in = kNumFeatures + (with_embedding ? kEmbeddingDim : 0);
  net.w1 = Eigen::MatrixXd::Zero(hidden, in);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  net.b2 = Eigen::VectorXd::Zero(hidden);
  net.w3 = Eigen::MatrixXd::Zero(2, hidden);
  net.b3 = Eigen::VectorXd::Zero(2);
  if (with_embedding) net.embedding = Eigen::MatrixXd::Zero(kEmbeddingDim, kHours);
  return net;
}

Mlp Mlp::initialize(int hidden, bool with_embedding, std::uint64_t seed) {
  Mlp net = zeros(hidden, with_embedding);
  Rng rng(seed);
  auto he_uniform = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
    }
  };
  he_uniform(net.w1);
  he_uniform(net.w2);
  he_uniform(net.w3);
  for (Eigen::Index k = 0; k < net.embedding.size(); ++k) net.embedding.data()[k] = rng.uniform(-0.05, 0.05);
  return net;
}

std::size_t Mlp::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size() +
                                  embedding.size());
}

std::vector<double*> Mlp::parameters() {
  std::vector<double*> out;
  out.reserve(parameter_count());
  for (auto& t : tensors(*this)) {
    for (Eigen::Index k = 0; k < t.size(); ++k) out.push_back(&t[k]);
  }
  return out;
}

std::array<double, 2> evaluate(const Mlp& net, Head head, const Features& scaled, int hour) {
  const Eigen::Matrix2Xd out = evaluate_batch(net, head, std::span(&scaled, 1), std::span(&hour, 1));
  return {out(0, 0), out(1, 0)};
}

Eigen::Matrix2Xd evaluate_batch(const Mlp& net, Head head, std::span<const Features> scaled,
                                std::span<const int> hours) {
  const Activations act = forward_pass(net, scaled, hours);
  Eigen::Matrix2Xd out(2, act.z3.cols());
  for (Eigen::Index j = 0; j < act.z3.cols(); ++j) {
    out(0, j) = act.z3(0, j);
    out(1, j) = scale_activation(head, act.z3(1, j));
  }
  return out;
}

double batch_loss(const Mlp& net, Head head, const CensoringBounds& bounds, std::span<const Features> scaled,
                  std::span<const int> hours, std::span<const double> y) {
  if (y.empty()) return 0.0;
  const Eigen::Matrix2Xd params = evaluate_batch(net, head, scaled, hours);
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) total += crps(CensoredNormal(params(0, j), params(1, j), bounds), y[j]);
  return total / static_cast<double>(y.size());
}

double loss_and_gradient(const Mlp& net, Head head, const CensoringBounds& bounds, std::span<const Features> scaled,
                         std::span<const int> hours, std::span<const double> y, Mlp* grad) {
  const Activations act = forward_pass(net, scaled, hours);
  const auto batch = static_cast<Eigen::Index>(y.size());
  const double inv_batch = 1.0 / static_cast<double>(batch);

  Eigen::MatrixXd d_z3(2, batch);
  double total = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const double raw_scale = act.z3(1, j);
    const double sigma = scale_activation(head, raw_scale);
    const CrpsGradient g = crps_gradient(CensoredNormal(act.z3(0, j), sigma, bounds), y[j]);
    total += g.value;
    d_z3(0, j) = g.d_mu * inv_batch;
    // Below the distribution's scale floor the loss no longer depends on sigma.
    const double d_sigma = sigma < kMinScale ? 0.0 : g.d_sigma;
    d_z3(1, j) = d_sigma * scale_activation_derivative(head, raw_scale) * inv_batch;
  }

  if (grad != nullptr) {
    grad->w3.noalias() = d_z3 * act.a2.transpose();
    grad->b3 = d_z3.rowwise().sum();
    const Eigen::MatrixXd d_z2 =
        (net.w3.transpose() * d_z3).cwiseProduct((act.z2.array() > 0.0).cast<double>().matrix());
    grad->w2.noalias() = d_z2 * act.a1.transpose();
    grad->b2 = d_z2.rowwise().sum();
    const Eigen::MatrixXd d_z1 =
        (net.w2.transpose() * d_z2).cwiseProduct((act.z1.array() > 0.0).cast<double>().matrix());
    grad->w1.noalias() = d_z1 * act.x.transpose();
    grad->b1 = d_z1.rowwise().sum();
    if (net.has_embedding()) {
      const Eigen::MatrixXd d_x = net.w1.rightCols<kEmbeddingDim>().transpose() * d_z1;
      grad->embedding = Eigen::MatrixXd::Zero(kEmbeddingDim, kHours);
      for (Eigen::Index j = 0; j < batch; ++j) grad->embedding.col(hours[j]) += d_x.col(j);
    } else {
      grad->embedding.resize(0, 0);
    }
  }
  return total * inv_batch;
}

CensoredNormal forward(const NetworkModel& model, const FeatureRow& row) {
  const auto [mu, sigma] =
      evaluate(model.net_for_hour(row.hour), model.head, model.scaler.for_hour(row.hour).apply(row.x), row.hour);
  return CensoredNormal(mu, sigma, model.bounds);
}

TrainConfig TrainConfig::defaults(Mode mode) {
  TrainConfig c;
  if (mode == Mode::kHourly) {
    c.batch_size = 256;
    c.patience = 30;
    c.patience_night = 5;
    c.max_epochs = 300;
  } else {
    c.batch_size = 1000;
    c.patience = 10;
    c.patience_night = 10;
    c.max_epochs = 50;
  }
  return c;
}

bool is_night_hour(int hour) { return hour >= 23 || hour <= 5; }

CensoredNormal AveragedModel::predict(const FeatureRow& row) const {
  return predict(std::span(&row, 1)).front();
}

std::vector<CensoredNormal> AveragedModel::predict(std::span<const FeatureRow> rows) const {
  if (repeats.empty()) throw Error(ErrorCode::kUnfittedModel, "averaged model has no trained repeats");
  const std::size_t n = rows.size();
  std::vector<double> mu(n, 0.0), sigma(n, 0.0);
  for (const NetworkModel& model : repeats) {
    // Group rows by network so each group is one matrix product.
    const int groups = model.mode == Mode::kEmbedding ? 1 : kHours;
    for (int g = 0; g < groups; ++g) {
      std::vector<std::size_t> idx;
      std::vector<Features> scaled;
      std::vector<int> hours;
      for (std::size_t i = 0; i < n; ++i) {
        if (model.mode == Mode::kHourly && rows[i].hour != g) continue;
        idx.push_back(i);
        scaled.push_back(model.scaler.for_hour(rows[i].hour).apply(rows[i].x));
        hours.push_back(rows[i].hour);
      }
      if (idx.empty()) continue;
      const Eigen::Matrix2Xd out = evaluate_batch(model.nets[g], model.head, scaled, hours);
      for (std::size_t k = 0; k < idx.size(); ++k) {
        mu[idx[k]] += out(0, static_cast<Eigen::Index>(k));
        sigma[idx[k]] += std::max(out(1, static_cast<Eigen::Index>(k)), kMinScale);
      }
    }
  }
  const double r = static_cast<double>(repeats.size());
  std::vector<CensoredNormal> result;
  result.reserve(n);
  for (std::size_t i = 0; i < n; ++i) result.emplace_back(mu[i] / r, sigma[i] / r, repeats.front().bounds);
  return result;
}

AveragedModel train(std::span<const FeatureRow> rows, const TrainConfig& config, Mode mode, Head head,
                    const CensoringBounds& bounds, TrainLog* log) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "no training rows");
  for (const auto& r : rows) {
    if (r.hour < 0 || r.hour >= kHours) throw Error(ErrorCode::kInvalidArgument, "hour out of range");
  }
  AveragedModel result;
  result.config = config;
  const bool per_hour = mode == Mode::kHourly;
  const ScalerSet scaler = fit_scaler(rows, per_hour);

  std::array<std::vector<const FeatureRow*>, kHours> by_hour;
  std::vector<const FeatureRow*> all;
  for (const auto& r : rows) {
    all.push_back(&r);
    by_hour[r.hour].push_back(&r);
  }

  for (int rep = 0; rep < config.repeats; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
    NetworkModel model;
    model.mode = mode;
    model.head = head;
    model.bounds = bounds;
    model.scaler = scaler;
    std::vector<NetLog> logs;
    if (mode == Mode::kEmbedding) {
      NetLog nl;
      model.nets.push_back(train_network(all, scaler, config, config.patience, head, bounds, true, rep_seed, nl));
      logs.push_back(std::move(nl));
    } else {
      for (int h = 0; h < kHours; ++h) {
        NetLog nl;
        nl.hour = h;
        const int patience = is_night_hour(h) ? config.patience_night : config.patience;
        model.nets.push_back(train_network(by_hour[h], scaler, config, patience, head, bounds, false,
                                           derive_seed(rep_seed, static_cast<std::uint64_t>(h)), nl));
        logs.push_back(std::move(nl));
      }
    }
    result.repeats.push_back(std::move(model));
    if (log != nullptr) log->repeats.push_back(std::move(logs));
  }
  return result;
}

AveragedModel train_direct(std::span<const FeatureRow> rows, const TrainConfig& config, Mode mode,
                           double capacity_mw, TrainLog* log) {
  return train(rows, config, mode, Head::kSoftplus, CensoringBounds{0.0, capacity_mw}, log);
}

void AveragedModel::save(const std::string& path) const {
  if (repeats.empty()) throw Error(ErrorCode::kUnfittedModel, "cannot save an untrained model");
  const NetworkModel& first = repeats.front();
  Json meta;
  meta["format"] = "solarpp-nn";
  meta["version"] = kFormatVersion;
  meta["mode"] = first.mode == Mode::kEmbedding ? "embedding" : "hourly";
  meta["head"] = first.head == Head::kSoftplus ? "softplus" : "relu_offset";
  meta["bounds"] = {{"lower", first.bounds.lower},
                    {"upper", first.bounds.has_upper() ? Json(first.bounds.upper) : Json(nullptr)}};
  meta["config"] = config_json(config);
  meta["hidden"] = first.nets.front().hidden();
  meta["repeats"] = repeats.size();
  meta["nets_per_repeat"] = first.nets.size();
  meta["embedding"] = first.nets.front().has_embedding();
  meta["scaler_per_hour"] = first.scaler.per_hour;
  Json scalers = Json::array();
  for (const auto& s : first.scaler.scalers) scalers.push_back(scaler_json(s));
  meta["scalers"] = scalers;
  const std::string text = meta.dump();

  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kSerialization, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (auto model : repeats) {
    for (auto& net : model.nets) {
      for (auto& t : tensors(net)) {
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
      }
    }
  }
}

AveragedModel AveragedModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kSerialization, "cannot read " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kSerialization, path + " is not a solarpp network file");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  AveragedModel result;
  try {
    const Json meta = Json::parse(text);
    if (meta.at("version").get<std::uint32_t>() != kFormatVersion) {
      throw Error(ErrorCode::kSerialization, "unsupported network format version");
    }
    result.config = config_from_json(meta.at("config"));
    NetworkModel proto;
    proto.mode = meta.at("mode") == "embedding" ? Mode::kEmbedding : Mode::kHourly;
    proto.head = meta.at("head") == "softplus" ? Head::kSoftplus : Head::kReluOffset;
    proto.bounds.lower = meta.at("bounds").at("lower");
    if (!meta.at("bounds").at("upper").is_null()) proto.bounds.upper = meta.at("bounds").at("upper");
    proto.scaler.per_hour = meta.at("scaler_per_hour");
    for (int h = 0; h < kHours; ++h) {
      proto.scaler.scalers[h].mean = meta.at("scalers").at(h).at("mean").get<Features>();
      proto.scaler.scalers[h].sd = meta.at("scalers").at(h).at("sd").get<Features>();
    }
    const int hidden = meta.at("hidden");
    const bool embedding = meta.at("embedding");
    const std::size_t n_rep = meta.at("repeats");
    const std::size_t n_nets = meta.at("nets_per_repeat");
    for (std::size_t r = 0; r < n_rep; ++r) {
      NetworkModel model = proto;
      for (std::size_t k = 0; k < n_nets; ++k) {
        Mlp net = Mlp::zeros(hidden, embedding);
        for (auto& t : tensors(net)) {
          in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        }
        model.nets.push_back(std::move(net));
      }
      result.repeats.push_back(std::move(model));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSerialization, e.what());
  }
  if (!in) throw Error(ErrorCode::kSerialization, path + " is truncated");
  return result;
}

}  // namespace solarpp::nn
