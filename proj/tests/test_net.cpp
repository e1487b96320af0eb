#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "svosim/net.hpp"
#include "svosim/policy.hpp"
#include "svosim/rng.hpp"

namespace svosim {
namespace {

// Smallest architecture worth testing: 5x5x1 window, one conv channel,
// three hidden/recurrent units, two actions. 103 parameters total, so
// exhaustive finite differencing stays cheap.
ArchSpec micro_arch() {
  ArchSpec a;
  a.obs_rows = 5;
  a.obs_cols = 5;
  a.obs_channels = 1;
  a.extra_inputs = 1;
  a.conv_channels = 1;
  a.conv_kernel = 3;
  a.conv_stride = 2;
  a.hidden = 3;
  a.gru = 3;
  a.actions = 2;
  return a;
}

Trajectory random_traj(const ArchSpec& spec, int steps, Rng& rng) {
  Trajectory tr;
  tr.agent_id = 0;
  tr.steps = steps;
  tr.reserve_steps(steps, spec);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < spec.obs_size(); ++i) {
      tr.obs.push_back(static_cast<uint8_t>(rng.bounded(256)));
    }
    for (int i = 0; i < spec.extra_inputs; ++i) tr.extras.push_back(rng.uniform());
    tr.actions.push_back(static_cast<int>(rng.bounded(static_cast<uint32_t>(spec.actions))));
    tr.extrinsic.push_back(rng.uniform() * 2.0 - 1.0);
    tr.utility.push_back(rng.uniform() * 2.0 - 1.0);
  }
  return tr;
}

TEST(Arch, ParamCountMatchesHandCount) {
  const ArchSpec micro = micro_arch();
  EXPECT_EQ(micro.conv_out_rows(), 2);
  EXPECT_EQ(micro.conv_out_cols(), 2);
  EXPECT_EQ(micro.conv_out(), 4);
  EXPECT_EQ(micro.fc_in(), 5);
  // conv 10, fc 18, gru 63, heads 12
  EXPECT_EQ(micro.param_count(), 103);

  const ArchSpec dflt;
  EXPECT_EQ(dflt.conv_out_rows(), 7);
  EXPECT_EQ(dflt.fc_in(), 6 * 49 + 4);
  const int conv = 6 * 3 * 9 + 6;
  const int fc = 64 * dflt.fc_in() + 64;
  const int gru = 3 * (64 * 64 + 64 * 64 + 64);
  const int heads = 8 * 64 + 8 + 64 + 1;
  EXPECT_EQ(dflt.param_count(), conv + fc + gru + heads);
}

TEST(Arch, ValidateRejectsBadShapes) {
  ArchSpec a = micro_arch();
  a.conv_kernel = 6;  // larger than the 5x5 window
  EXPECT_THROW(a.validate(), ConfigError);
  a = micro_arch();
  a.actions = 1;
  EXPECT_THROW(a.validate(), ConfigError);
  a = micro_arch();
  a.hidden = 0;
  EXPECT_THROW(a.validate(), ConfigError);
}

TEST(Net, OffsetLayoutCoversEveryParameter) {
  // construction cross-checks the offset walk against param_count
  EXPECT_NO_THROW(Net{micro_arch()});
  EXPECT_NO_THROW(Net{ArchSpec{}});
  ArchSpec odd = micro_arch();
  odd.hidden = 7;
  odd.gru = 4;
  odd.actions = 9;
  EXPECT_NO_THROW(Net{odd});
}

TEST(Net, ForwardIsDeterministicAndNormalized) {
  Net net(micro_arch());
  Rng rng(11);
  net.init(rng);
  std::vector<double> x(25);
  for (double& v : x) v = rng.uniform();
  const std::vector<double> extra = {1.0};
  StepCache a, b;
  net.forward_step(x, extra, nullptr, a);
  net.forward_step(x, extra, nullptr, b);
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_EQ(a.value, b.value);
  double sum = 0.0;
  for (double p : a.probs) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(static_cast<int>(a.logits.size()), 2);
  // recurrent state feeds back: a second step from h differs from the first
  StepCache c;
  net.forward_step(x, extra, a.h.data(), c);
  EXPECT_NE(c.h, a.h);
}

TEST(Net, InputShapeMismatchThrows) {
  Net net(micro_arch());
  StepCache cache;
  std::vector<double> x(24, 0.0);  // one short
  std::vector<double> extra = {0.0};
  EXPECT_THROW(net.forward_step(x, extra, nullptr, cache), std::invalid_argument);
  x.assign(25, 0.0);
  extra.assign(2, 0.0);
  EXPECT_THROW(net.forward_step(x, extra, nullptr, cache), std::invalid_argument);
}

TEST(Softmax, UniformAndShiftInvariance) {
  std::vector<double> probs;
  softmax({0.0, 0.0, 0.0, 0.0}, probs);
  for (double p : probs) EXPECT_NEAR(p, 0.25, 1e-15);
  EXPECT_NEAR(entropy(probs), std::log(4.0), 1e-12);

  std::vector<double> a, b;
  softmax({1.0, -2.0, 0.5}, a);
  softmax({101.0, 98.0, 100.5}, b);  // same logits + 100
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);

  softmax({50.0, 0.0}, probs);
  EXPECT_GT(probs[0], 0.999999);
  EXPECT_NEAR(entropy(probs), 0.0, 1e-6);
}

TEST(Policy, LogProbMatchesSoftmax) {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> logits(5);
    for (double& v : logits) v = rng.uniform() * 20.0 - 10.0;
    std::vector<double> probs;
    softmax(logits, probs);
    for (int a = 0; a < 5; ++a) {
      EXPECT_NEAR(PolicyHandle::log_prob_of(logits, a), std::log(probs[a]), 1e-9);
    }
  }
}

TEST(Policy, DiscountedReturnsClosedForm) {
  const auto g = discounted_returns({1.0, 1.0, 1.0}, 0.5);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0], 1.75);
  EXPECT_DOUBLE_EQ(g[1], 1.5);
  EXPECT_DOUBLE_EQ(g[2], 1.0);
  EXPECT_TRUE(discounted_returns({}, 0.9).empty());
}

TEST(Policy, FreshPolicyIsNearUniform) {
  const ArchSpec arch;  // full-size default
  PolicyHandle policy(arch, 42);
  Rng rng(13);
  ActWorkspace ws;
  std::vector<uint8_t> obs(arch.obs_size());
  std::vector<double> extra(arch.extra_inputs, 0.0);
  extra[0] = 1.0;
  for (int rep = 0; rep < 3; ++rep) {
    for (auto& b : obs) b = static_cast<uint8_t>(rng.bounded(256));
    std::vector<double> h = policy.initial_state();
    policy.act(obs.data(), extra.data(), h, rng, ws);
    for (double p : ws.cache.probs) {
      EXPECT_NEAR(p, 1.0 / arch.actions, 0.03);
    }
  }
}

TEST(Policy, InitIsSeedDeterministic) {
  const ArchSpec arch = micro_arch();
  PolicyHandle a(arch, 7), b(arch, 7), c(arch, 8);
  EXPECT_EQ(a.net().params(), b.net().params());
  EXPECT_NE(a.net().params(), c.net().params());
}

TEST(Policy, ActValidatesRecurrentState) {
  PolicyHandle policy(micro_arch(), 1);
  Rng rng(1);
  ActWorkspace ws;
  std::vector<uint8_t> obs(25, 0);
  std::vector<double> extra = {1.0};
  std::vector<double> h(2, 0.0);  // wrong size
  EXPECT_THROW(policy.act(obs.data(), extra.data(), h, rng, ws), std::invalid_argument);
}

TEST(Learner, GradientMatchesFiniteDifferences) {
  const ArchSpec arch = micro_arch();
  ASSERT_LE(arch.param_count(), 200);
  LearnerConfig cfg;
  cfg.gamma = 0.9;
  cfg.entropy_coef = 0.01;
  cfg.value_coef = 0.5;
  Rng rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    PolicyHandle policy(arch, 100 + rep);
    std::vector<Trajectory> batch;
    batch.push_back(random_traj(arch, 5, rng));
    batch.push_back(random_traj(arch, 3, rng));
    const auto adv = policy.compute_advantages(batch, cfg);
    std::vector<double> grad;
    policy.a2c_loss_and_grad(batch, cfg, adv, grad);
    std::vector<double>& params = policy.net().params();
    // Central differences carry rounding noise of about
    // eps_machine * |loss| / eps ~ 4e-11, so components whose true
    // gradient sits below ~1e-5 are compared against that floor
    // instead of their own magnitude.
    const double eps = 3e-6;
    for (int i = 0; i < arch.param_count(); ++i) {
      const double saved = params[i];
      params[i] = saved + eps;
      const double up = policy.a2c_loss(batch, cfg, adv);
      params[i] = saved - eps;
      const double dn = policy.a2c_loss(batch, cfg, adv);
      params[i] = saved;
      const double fd = (up - dn) / (2.0 * eps);
      const double denom = std::max({1e-5, std::fabs(fd), std::fabs(grad[i])});
      worst = std::max(worst, std::fabs(fd - grad[i]) / denom);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Learner, AdvantagesAreFixedInputsToTheLoss) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 3);
  LearnerConfig cfg;
  Rng rng(5);
  std::vector<Trajectory> batch = {random_traj(arch, 4, rng)};
  const auto adv = policy.compute_advantages(batch, cfg);
  // perturbing the value bias changes the values but must not change adv
  policy.net().params()[arch.param_count() - 1] += 0.25;
  const auto adv_again = policy.compute_advantages(batch, cfg);
  EXPECT_NE(adv[0], adv_again[0]);  // value head moved
  // the stored vector itself is caller-owned and unchanged by the loss
  const double l1 = policy.a2c_loss(batch, cfg, adv);
  const double l2 = policy.a2c_loss(batch, cfg, adv);
  EXPECT_EQ(l1, l2);
}

TEST(Learner, AdamSingleStepClosedForm) {
  AdamState adam;
  std::vector<double> params = {1.0};
  adam.step(params, {0.5}, 0.1);
  // bias-corrected first step: m_hat = g, v_hat = g^2
  const double expected = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(params[0], expected, 1e-15);
  EXPECT_EQ(adam.t, 1);
  EXPECT_NEAR(adam.m[0], 0.05, 1e-15);
  EXPECT_NEAR(adam.v[0], 0.00025, 1e-18);
}

TEST(Learner, ClipByGlobalNorm) {
  std::vector<double> g = {3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_by_global_norm(g, 2.5), 5.0);  // returns pre-clip norm
  EXPECT_NEAR(g[0], 1.5, 1e-12);
  EXPECT_NEAR(g[1], 2.0, 1e-12);
  g = {3.0, 4.0};
  clip_by_global_norm(g, 0.0);  // zero cap disables clipping
  EXPECT_DOUBLE_EQ(g[0], 3.0);
  g = {3.0, 4.0};
  clip_by_global_norm(g, 10.0);  // under the cap
  EXPECT_DOUBLE_EQ(g[1], 4.0);
}

TEST(Learner, NonFiniteUtilityRejectsUpdate) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 6);
  const std::vector<double> before = policy.net().params();
  Rng rng(9);
  Trajectory tr = random_traj(arch, 3, rng);
  tr.utility[1] = std::nan("");
  LearnerConfig cfg;
  const UpdateStats st = policy.update({tr}, cfg);
  EXPECT_FALSE(st.applied);
  EXPECT_FALSE(st.note.empty());
  EXPECT_EQ(policy.net().params(), before);
  EXPECT_EQ(policy.optimizer().t, 0);
}

TEST(Learner, UpdateReportsBatchStats) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 12);
  Rng rng(21);
  std::vector<Trajectory> batch;
  batch.push_back(random_traj(arch, 4, rng));
  batch.push_back(random_traj(arch, 6, rng));
  LearnerConfig cfg;
  cfg.learning_rate = 1e-3;
  const UpdateStats st = policy.update(batch, cfg);
  EXPECT_TRUE(st.applied);
  EXPECT_EQ(st.trajectories, 2);
  EXPECT_EQ(st.steps, 10);
  EXPECT_GT(st.entropy, 0.0);
  EXPECT_GT(st.grad_norm, 0.0);
  const double want_ext =
      (batch[0].extrinsic_return() + batch[1].extrinsic_return()) / 2.0;
  EXPECT_NEAR(st.mean_extrinsic_return, want_ext, 1e-12);
}

TEST(Learner, TrajectoryLengthMismatchThrows) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 2);
  Rng rng(14);
  Trajectory tr = random_traj(arch, 3, rng);
  tr.actions.pop_back();
  LearnerConfig cfg;
  EXPECT_THROW(policy.update({tr}, cfg), std::invalid_argument);
}

TEST(Learner, BanditPrefersRewardedArm) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 5);
  LearnerConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.entropy_coef = 0.001;
  cfg.value_coef = 0.5;
  Rng rng(77);
  ActWorkspace ws;
  const std::vector<uint8_t> obs(arch.obs_size(), 0);
  const std::vector<double> extra = {1.0};
  for (int round = 0; round < 500; ++round) {
    std::vector<Trajectory> batch;
    for (int b = 0; b < 8; ++b) {
      std::vector<double> h = policy.initial_state();
      const ActResult ar = policy.act(obs.data(), extra.data(), h, rng, ws);
      Trajectory tr;
      tr.agent_id = b;
      tr.steps = 1;
      tr.obs = obs;
      tr.extras = extra;
      tr.actions = {ar.action};
      const double r = ar.action == 0 ? 1.0 : 0.0;
      tr.extrinsic = {r};
      tr.utility = {r};
      batch.push_back(std::move(tr));
    }
    ASSERT_TRUE(policy.update(batch, cfg).applied);
  }
  std::vector<double> h = policy.initial_state();
  const ActResult greedy = policy.act(obs.data(), extra.data(), h, rng, ws, /*greedy=*/true);
  EXPECT_EQ(greedy.action, 0);
  EXPECT_GT(ws.cache.probs[0], 0.9);
}

TEST(Checkpoint, RoundTripPreservesParamsAndOptimizer) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 9);
  Rng rng(3);
  LearnerConfig cfg;
  cfg.learning_rate = 0.01;
  for (int i = 0; i < 3; ++i) {
    std::vector<Trajectory> batch = {random_traj(arch, 4, rng)};
    ASSERT_TRUE(policy.update(batch, cfg).applied);
  }
  const auto blob = policy.serialize();
  PolicyHandle copy = PolicyHandle::deserialize(blob.data(), blob.size());
  EXPECT_EQ(copy.spec(), arch);
  EXPECT_EQ(copy.net().params(), policy.net().params());
  EXPECT_EQ(copy.optimizer().t, 3);
  EXPECT_EQ(copy.optimizer().m, policy.optimizer().m);
  EXPECT_EQ(copy.optimizer().v, policy.optimizer().v);
}

TEST(Checkpoint, SaveLoadFileRoundTrip) {
  const ArchSpec arch = micro_arch();
  PolicyHandle policy(arch, 31);
  const std::string path = ::testing::TempDir() + "svosim_ckpt_test.bin";
  policy.save(path);
  const PolicyHandle loaded = PolicyHandle::load(path);
  EXPECT_EQ(loaded.net().params(), policy.net().params());
  std::remove(path.c_str());
}

TEST(Checkpoint, CorruptionIsDetected) {
  PolicyHandle policy(micro_arch(), 9);
  auto blob = policy.serialize();

  auto flipped = blob;
  flipped[flipped.size() / 2] ^= 0x40;
  EXPECT_THROW(PolicyHandle::deserialize(flipped.data(), flipped.size()), IntegrityError);

  auto bad_magic = blob;
  bad_magic[0] ^= 0xff;
  EXPECT_THROW(PolicyHandle::deserialize(bad_magic.data(), bad_magic.size()), IntegrityError);

  EXPECT_THROW(PolicyHandle::deserialize(blob.data(), blob.size() - 5), IntegrityError);
  EXPECT_THROW(PolicyHandle::deserialize(blob.data(), 10), IntegrityError);
}

}  // namespace
}  // namespace svosim
