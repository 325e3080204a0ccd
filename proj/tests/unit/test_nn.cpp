#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "solarpp/emos.hpp"
#include "solarpp/error.hpp"
#include "solarpp/nn.hpp"
#include "solarpp/rng.hpp"
#include "test_util.hpp"

using namespace solarpp;
using namespace solarpp::nn;

namespace {

Features random_features(Rng& rng) {
  return {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
}

// Linear-Gaussian target on the first feature: y = max(0, 5 + 2 x0 + (1 + 0.5|x1|) e).
std::vector<FeatureRow> linear_rows(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    r.x = {rng.uniform(0, 10), rng.uniform(0, 2), rng.normal(), rng.normal()};
    r.hour = static_cast<int>(i % 24);
    r.y = std::max(0.0, 5.0 + 2.0 * r.x[0] + (1.0 + 0.5 * r.x[1]) * rng.normal());
  }
  return rows;
}

TrainConfig small_config(std::uint64_t seed) {
  TrainConfig c;
  c.hidden = 16;
  c.repeats = 2;
  c.max_epochs = 40;
  c.patience = 5;
  c.patience_night = 5;
  c.batch_size = 64;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Mlp, ZeroWeightsGiveHeadAtZero) {
  const Mlp net = Mlp::zeros(8, true);
  const auto pv = evaluate(net, Head::kSoftplus, {1, 2, 3, 4}, 5);
  EXPECT_DOUBLE_EQ(pv[0], 0.0);
  EXPECT_NEAR(pv[1], std::log(2.0), 1e-15);
  const auto ghi = evaluate(net, Head::kReluOffset, {1, 2, 3, 4}, 5);
  EXPECT_NEAR(ghi[1], 1e-3, 1e-15);
}

TEST(Mlp, ForwardMatchesLoopOracle) {
  Rng rng(2);
  for (bool emb : {false, true}) {
    const Mlp net = Mlp::initialize(12, emb, 99);
    EXPECT_EQ(net.input_dim(), emb ? 6 : 4);
    for (int i = 0; i < 50; ++i) {
      const Features x = random_features(rng);
      const int hour = i % 24;
      for (Head head : {Head::kSoftplus, Head::kReluOffset}) {
        const auto got = evaluate(net, head, x, hour);
        const auto want = oracle::mlp_forward(net, head, x, hour);
        EXPECT_NEAR(got[0], want[0], 1e-12 * (1 + std::abs(want[0])));
        EXPECT_NEAR(got[1], want[1], 1e-12 * (1 + std::abs(want[1])));
      }
    }
  }
}

TEST(Mlp, ParameterCount) {
  const Mlp net = Mlp::zeros(256, true);
  EXPECT_EQ(net.parameter_count(), 6u * 256 + 256 + 256u * 256 + 256 + 256u * 2 + 2 + 48);
  EXPECT_EQ(Mlp::zeros(256, false).parameter_count(), 4u * 256 + 256 + 256u * 256 + 256 + 256u * 2 + 2);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (Head head : {Head::kSoftplus, Head::kReluOffset}) {
    const CensoringBounds bounds = head == Head::kSoftplus ? CensoringBounds{0.0, 3.0} : CensoringBounds{};
    Mlp net = Mlp::initialize(6, true, 17);
    for (auto* b : {&net.b1, &net.b2, &net.b3}) {
      for (Eigen::Index i = 0; i < b->size(); ++i) (*b)[i] = 0.3 * rng.normal();
    }
    std::vector<Features> x;
    std::vector<int> hours;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
      x.push_back(random_features(rng));
      hours.push_back(i * 3 % 24);
      y.push_back(i % 4 == 0 ? 0.0 : rng.uniform(0, 3));
    }
    Mlp grad;
    loss_and_gradient(net, head, bounds, x, hours, y, &grad);
    auto params = net.parameters();
    auto grads = grad.parameters();
    ASSERT_EQ(params.size(), grads.size());
    int checked = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      double* p = params[k];
      const double saved = *p;
      const double fd = oracle::central_difference(
          [&](double v) {
            *p = v;
            return batch_loss(net, head, bounds, x, hours, y);
          },
          saved, 1e-6);
      *p = saved;
      const double f0 = batch_loss(net, head, bounds, x, hours, y);
      *p = saved + 1e-6;
      const double forward = (batch_loss(net, head, bounds, x, hours, y) - f0) / 1e-6;
      *p = saved - 1e-6;
      const double backward = (f0 - batch_loss(net, head, bounds, x, hours, y)) / 1e-6;
      *p = saved;
      const double g = *grads[k];
      // Skip parameters whose step straddles a ReLU kink.
      if (std::abs(forward - backward) > 1e-3 * std::max(1e-3, std::abs(fd))) continue;
      EXPECT_NEAR(g, fd, 1e-5 * std::max(1.0, std::abs(fd))) << "parameter " << k;
      ++checked;
    }
    EXPECT_GT(checked, static_cast<int>(params.size()) * 9 / 10);
  }
}

TEST(Mlp, AbsentHoursGetNoEmbeddingGradient) {
  Rng rng(5);
  const Mlp net = Mlp::initialize(8, true, 3);
  std::vector<Features> x;
  std::vector<int> hours;
  std::vector<double> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(random_features(rng));
    hours.push_back(i % 2 == 0 ? 6 : 13);
    y.push_back(rng.uniform(0, 2));
  }
  Mlp grad;
  loss_and_gradient(net, Head::kSoftplus, CensoringBounds{}, x, hours, y, &grad);
  for (int h = 0; h < 24; ++h) {
    if (h == 6 || h == 13) {
      EXPECT_GT(grad.embedding.col(h).norm(), 0.0);
    } else {
      EXPECT_EQ(grad.embedding.col(h).norm(), 0.0) << "hour " << h;
    }
  }
}

TEST(Scaler, GlobalExample) {
  std::vector<FeatureRow> rows(3);
  rows[0].x = {1, 5, 0, 7};
  rows[1].x = {2, 5, 0, 7};
  rows[2].x = {3, 5, 3, 7};
  const auto s = fit_scaler(rows, false);
  EXPECT_DOUBLE_EQ(s.for_hour(0).mean[0], 2.0);
  EXPECT_DOUBLE_EQ(s.for_hour(17).sd[0], 1.0);
  EXPECT_DOUBLE_EQ(s.for_hour(0).sd[1], kScalerSdFloor);
  EXPECT_NEAR(s.for_hour(0).sd[2], std::sqrt(3.0), 1e-15);
  const auto z = s.for_hour(0).apply({3, 5, 1, 7});
  EXPECT_DOUBLE_EQ(z[0], 1.0);
  EXPECT_DOUBLE_EQ(z[1], 0.0);
}

TEST(Scaler, PerHourUsesOnlyThatHour) {
  std::vector<FeatureRow> rows;
  for (int h = 0; h < 24; ++h) {
    for (int k = 0; k < 3; ++k) {
      FeatureRow r;
      r.hour = h;
      r.x = {static_cast<double>(100 * h + k), 0, 0, 0};
      rows.push_back(r);
    }
  }
  const auto s = fit_scaler(rows, true);
  for (int h = 0; h < 24; ++h) {
    EXPECT_DOUBLE_EQ(s.for_hour(h).mean[0], 100.0 * h + 1);
    EXPECT_DOUBLE_EQ(s.for_hour(h).sd[0], 1.0);
  }
  rows.erase(std::remove_if(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.hour == 4; }),
             rows.end());
  try {
    fit_scaler(rows, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGroup);
  }
}

TEST(Train, InvariantToAffineFeatureRescaling) {
  auto rows = linear_rows(600, 8);
  auto cfg = small_config(3);
  cfg.max_epochs = 5;
  cfg.repeats = 1;
  const auto a = train(rows, cfg, Mode::kEmbedding, Head::kReluOffset, CensoringBounds{});
  for (auto& r : rows) {
    r.x[2] = 1000.0 + 50.0 * r.x[2];
    r.x[3] = 3.0 * r.x[3];
  }
  const auto b = train(rows, cfg, Mode::kEmbedding, Head::kReluOffset, CensoringBounds{});
  for (std::size_t i = 0; i < rows.size(); i += 37) {
    auto orig = rows[i];
    orig.x[2] = (orig.x[2] - 1000.0) / 50.0;
    orig.x[3] = orig.x[3] / 3.0;
    EXPECT_NEAR(a.predict(orig).mu(), b.predict(rows[i]).mu(), 1e-8);
  }
}

TEST(AveragedModel, AveragesMuAndSigma) {
  AveragedModel m;
  for (int k = 1; k <= 10; ++k) {
    NetworkModel nm;
    nm.head = Head::kReluOffset;
    Mlp net = Mlp::zeros(4, true);
    net.b3[0] = k;
    net.b3[1] = 2.0 * k;
    nm.nets.push_back(net);
    m.repeats.push_back(nm);
  }
  const auto d = m.predict(FeatureRow{});
  EXPECT_NEAR(d.mu(), 5.5, 1e-12);
  EXPECT_NEAR(d.sigma(), 11.0 + 1e-3, 1e-12);
  EXPECT_THROW(AveragedModel{}.predict(FeatureRow{}), Error);
}

TEST(Train, DeterministicAndRoundTrips) {
  const auto rows = linear_rows(500, 10);
  auto cfg = small_config(21);
  cfg.max_epochs = 4;
  TrainLog log;
  const auto a = train(rows, cfg, Mode::kEmbedding, Head::kSoftplus, CensoringBounds{0.0, 40.0}, &log);
  const auto b = train(rows, cfg, Mode::kEmbedding, Head::kSoftplus, CensoringBounds{0.0, 40.0});
  ASSERT_EQ(log.repeats.size(), 2u);
  testutil::TempDir dir;
  const auto path = (dir.path() / "m.bin").string();
  a.save(path);
  const auto c = AveragedModel::load(path);
  for (std::size_t i = 0; i < rows.size(); i += 11) {
    const auto pa = a.predict(rows[i]);
    EXPECT_EQ(pa.mu(), b.predict(rows[i]).mu());
    EXPECT_EQ(pa.sigma(), b.predict(rows[i]).sigma());
    EXPECT_EQ(pa.mu(), c.predict(rows[i]).mu());
    EXPECT_EQ(pa.sigma(), c.predict(rows[i]).sigma());
    EXPECT_EQ(c.predict(rows[i]).upper(), 40.0);
  }
  testutil::write_file(path, "garbage");
  EXPECT_THROW(AveragedModel::load(path), Error);
}

TEST(Train, ReducesLossAndRestoresBestEpoch) {
  const auto rows = linear_rows(3000, 12);
  TrainLog log;
  train(rows, small_config(1), Mode::kEmbedding, Head::kReluOffset, CensoringBounds{}, &log);
  for (const auto& rep : log.repeats) {
    const auto& nl = rep.front();
    ASSERT_GE(nl.epochs, 2);
    EXPECT_LT(nl.train_crps.back(), nl.train_crps.front());
    EXPECT_GE(nl.best_epoch, 1);
    EXPECT_LE(nl.best_epoch, nl.epochs);
    EXPECT_DOUBLE_EQ(nl.best_val_crps, nl.val_crps[nl.best_epoch - 1]);
    EXPECT_LE(nl.epochs - nl.best_epoch, 5);
  }
}

TEST(Train, ComparableToEmosOnLinearData) {
  const auto rows = linear_rows(6000, 13);
  const auto test_rows = linear_rows(2000, 14);
  auto cfg = small_config(2);
  cfg.repeats = 3;
  const auto nnm = train(rows, cfg, Mode::kEmbedding, Head::kReluOffset, CensoringBounds{});

  // EMOS on (x0, x1^2) as (mean, variance) is the true model family here.
  auto to_emos = [](const FeatureRow& r) {
    const double sd = 1.0 + 0.5 * r.x[1];
    return emos::Row{{r.x[0], sd * sd}, r.y, r.hour};
  };
  std::vector<emos::Row> er;
  for (const auto& r : rows) er.push_back(to_emos(r));
  const auto em = emos::fit_global(er, CensoringBounds{}, {});
  double nn_crps = 0, emos_crps = 0;
  for (const auto& r : test_rows) {
    nn_crps += crps(nnm.predict(r), r.y);
    emos_crps += crps(em.predict(to_emos(r).stats, r.hour), r.y);
  }
  EXPECT_LE(nn_crps, 1.03 * emos_crps);
}

TEST(Train, HourlyNetworksIgnoreOtherHours) {
  auto rows = linear_rows(24 * 40, 15);
  auto cfg = small_config(4);
  cfg.max_epochs = 3;
  cfg.repeats = 1;
  const auto a = train(rows, cfg, Mode::kHourly, Head::kReluOffset, CensoringBounds{});
  for (auto& r : rows) {
    if (r.hour != 9) r.y *= 3.0;
  }
  const auto b = train(rows, cfg, Mode::kHourly, Head::kReluOffset, CensoringBounds{});
  FeatureRow probe;
  probe.hour = 9;
  probe.x = {4, 1, 0, 0};
  EXPECT_EQ(a.predict(probe).mu(), b.predict(probe).mu());
  probe.hour = 10;
  EXPECT_NE(a.predict(probe).mu(), b.predict(probe).mu());
}

TEST(Train, RejectsBadInput) {
  auto rows = linear_rows(100, 1);
  rows[3].hour = 24;
  EXPECT_THROW(train(rows, small_config(1), Mode::kEmbedding, Head::kSoftplus, CensoringBounds{}), Error);
  EXPECT_THROW(train({}, small_config(1), Mode::kEmbedding, Head::kSoftplus, CensoringBounds{}), Error);
}
