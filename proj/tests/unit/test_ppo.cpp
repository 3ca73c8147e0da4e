#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ghrl/errors.hpp"
#include "ghrl/nn/categorical.hpp"
#include "ghrl/nn/losses.hpp"
#include "ghrl/ppo/ppo.hpp"
#include "../support/gae_oracle.hpp"

using namespace ghrl::ppo;
using ghrl::nn::Matrix;
using ghrl::testing::brute_force_gae;

namespace {

RolloutBuffer random_buffer(std::size_t n, double done_prob, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution done(done_prob);
  RolloutBuffer buf(n, 2);
  for (std::size_t t = 0; t < n; ++t) {
    const double o[2] = {g(rng), g(rng)};
    buf.add(o, 0, 0.0, g(rng), g(rng), done(rng));
  }
  return buf;
}

}  // namespace

TEST(TdResidual, Examples) {
  EXPECT_EQ(td_residual(0.0, 0.0, 0.0, false, 0.97), 0.0);
  EXPECT_NEAR(td_residual(1.0, 0.0, 2.0, false, 0.97), 2.94, 1e-15);
  EXPECT_EQ(td_residual(1.5, 0.25, 100.0, true, 0.97), 1.25);
}

TEST(Gae, MatchesExpansionOnRandomBuffers) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    RolloutBuffer b = random_buffer(50, trial % 3 == 0 ? 0.0 : 0.1, rng);
    const double gamma = u(rng), lambda = u(rng), last = u(rng) * 4 - 2;
    compute_gae(b, last, gamma, lambda);
    const auto expect = brute_force_gae(b, last, gamma, lambda);
    for (std::size_t t = 0; t < b.size(); ++t) {
      ASSERT_NEAR(b.advantages[t], expect[t], 1e-10) << "trial " << trial << " t " << t;
      ASSERT_EQ(b.returns[t], b.advantages[t] + b.values[t]);
    }
  }
}

TEST(Gae, LambdaZeroGivesResiduals) {
  std::mt19937_64 rng(4);
  RolloutBuffer b = random_buffer(40, 0.2, rng);
  compute_gae(b, 0.7, 0.97, 0.0);
  for (std::size_t t = 0; t < b.size(); ++t) {
    const double v_next = t + 1 < b.size() ? b.values[t + 1] : 0.7;
    EXPECT_DOUBLE_EQ(b.advantages[t],
                     td_residual(b.rewards[t], b.values[t], v_next, b.dones[t] != 0, 0.97));
  }
}

TEST(Gae, UndiscountedZeroValuesGiveRewardSuffixSums) {
  RolloutBuffer b(5, 1);
  const double o[1] = {0.0};
  const double r[5] = {1, 2, 3, 4, 5};
  for (double x : r) b.add(o, 0, 0.0, x, 0.0, false);
  compute_gae(b, 0.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.advantages[0], 15.0);
  EXPECT_DOUBLE_EQ(b.advantages[2], 12.0);
  EXPECT_DOUBLE_EQ(b.advantages[4], 5.0);
}

TEST(Gae, EpisodeBoundaryBlocksBootstrap) {
  RolloutBuffer b(4, 1);
  const double o[1] = {0.0};
  b.add(o, 0, 0.0, 1.0, 0.0, false);
  b.add(o, 0, 0.0, 1.0, 0.0, true);
  b.add(o, 0, 0.0, 10.0, 0.0, false);
  b.add(o, 0, 0.0, 10.0, 0.0, false);
  compute_gae(b, 100.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(b.advantages[0], 2.0);
  EXPECT_DOUBLE_EQ(b.advantages[1], 1.0);
  EXPECT_DOUBLE_EQ(b.advantages[2], 120.0);  // bootstraps the mid-episode tail
}

TEST(Gae, RequiresFullBuffer) {
  RolloutBuffer b(3, 1);
  const double o[1] = {0.0};
  b.add(o, 0, 0.0, 1.0, 0.0, false);
  EXPECT_THROW(compute_gae(b, 0.0, 0.97, 0.95), ghrl::UsageError);
}

TEST(RolloutBuffer, CapacityAndWidth) {
  RolloutBuffer b(1, 2);
  const double bad[1] = {0.0};
  EXPECT_THROW(b.add(bad, 0, 0, 0, 0, false), ghrl::ShapeError);
  const double o[2] = {0.0, 1.0};
  b.add(o, 0, 0, 0, 0, false);
  EXPECT_TRUE(b.full());
  EXPECT_THROW(b.add(o, 0, 0, 0, 0, false), ghrl::UsageError);
}

TEST(Normalize, ZeroMeanUnitStd) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(3.0, 7.0);
  std::vector<double> v(2048);
  for (double& x : v) x = g(rng);
  normalize(v);
  double mean = 0, sq = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  for (double x : v) sq += (x - mean) * (x - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / v.size()), 1.0, 1e-8);
}

TEST(Permutation, IsPermutationAndDeterministic) {
  std::mt19937_64 a(9), b(9);
  const auto p = permutation(1000, a);
  EXPECT_EQ(p, permutation(1000, b));
  std::vector<int> seen(1000, 0);
  for (auto i : p) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(ActorCritic, DefaultsMatchTables) {
  PpoHyper h;
  EXPECT_EQ(h.lr, 1e-4);
  EXPECT_EQ(h.n_steps, 2048u);
  EXPECT_EQ(h.batch, 256u);
  EXPECT_EQ(h.gamma, 0.97);
  EXPECT_EQ(h.total_steps, 500000u);
  EXPECT_EQ(h.hidden, 512u);
  EXPECT_EQ(h.depth, 4u);
}

TEST(ActorCritic, BehaviorLogProbsMatchBatchRecompute) {
  PpoHyper h;
  h.hidden = 64;
  h.depth = 2;
  std::mt19937_64 rng(11);
  ActorCritic ac(12, 27, h, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  RolloutBuffer b(300, 12);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> o(12);
    for (double& x : o) x = g(rng);
    const auto p = ac.policy(o);
    const int a = ghrl::nn::sample(p, rng);
    b.add(o, a, ghrl::nn::log_softmax(ac.logits(o))[a], 0.0, ac.value(o), false);
  }
  const Matrix logits = ac.actor.forward(b.obs);
  for (std::size_t t = 0; t < b.size(); ++t) {
    const auto lp = ghrl::nn::log_softmax(logits.row(t));
    EXPECT_NEAR(lp[b.actions[t]], b.log_probs[t], 1e-12);
  }
}

// Surrogate gradient at ratio 1 with clip 0 and no entropy equals the
// gradient of -mean(A log pi(a|s)), here assembled from per-sample softmax
// Jacobians.
TEST(ActorCritic, SurrogateGradientIsVanillaPolicyGradient) {
  PpoHyper h;
  h.hidden = 16;
  h.depth = 2;
  std::mt19937_64 rng(12);
  ActorCritic ac(3, 5, h, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t B = 64;
  Matrix x(B, 3);
  for (double& v : x.flat()) v = g(rng);
  ghrl::nn::Mlp::Tape tape;
  const Matrix logits = ac.actor.forward(x, tape);
  std::vector<int> acts(B);
  std::vector<double> old_lp(B), adv(B);
  for (std::size_t i = 0; i < B; ++i) {
    acts[i] = static_cast<int>(rng() % 5);
    old_lp[i] = ghrl::nn::log_softmax(logits.row(i))[acts[i]];
    adv[i] = g(rng);
  }
  Matrix g_ppo;
  ghrl::nn::ppo_policy_loss(logits, acts, old_lp, adv, 0.0, 0.0, g_ppo);
  std::vector<double> grad_ppo(ac.actor.num_params());
  ac.actor.backward(tape, g_ppo, grad_ppo);

  Matrix g_pg(B, 5);
  for (std::size_t i = 0; i < B; ++i) {
    const auto p = ghrl::nn::softmax(logits.row(i));
    for (std::size_t j = 0; j < 5; ++j) {
      // d log p_a / d z_j = [a == j] - p_j
      const double dlogp = (static_cast<int>(j) == acts[i] ? 1.0 : 0.0) - p[j];
      g_pg(i, j) = -adv[i] * dlogp / static_cast<double>(B);
    }
  }
  std::vector<double> grad_pg(ac.actor.num_params());
  ac.actor.backward(tape, g_pg, grad_pg);
  for (std::size_t k = 0; k < grad_pg.size(); ++k) EXPECT_NEAR(grad_ppo[k], grad_pg[k], 1e-8);
}

TEST(ActorCritic, BanditProbabilityOfAdvantagedActionIncreases) {
  PpoHyper h;
  h.hidden = 8;
  h.depth = 1;
  h.lr = 1e-3;
  h.epochs = 1;
  h.batch = 32;
  std::mt19937_64 rng(13);
  ActorCritic ac(1, 2, h, rng);
  const double o[1] = {1.0};
  double prev = ac.policy(o)[0];
  for (int update = 0; update < 100; ++update) {
    RolloutBuffer b(32, 1);
    const auto lp = ghrl::nn::log_softmax(ac.logits(o));
    for (int i = 0; i < 32; ++i) b.add(o, i % 2, lp[i % 2], 0.0, 0.0, false);
    for (int i = 0; i < 32; ++i) {
      b.advantages[i] = i % 2 == 0 ? 1.0 : -1.0;
      b.returns[i] = 0.0;
    }
    ac.update(b, h, rng);
    const double p = ac.policy(o)[0];
    ASSERT_GT(p, prev) << "update " << update;
    prev = p;
  }
}

TEST(ActorCritic, UpdateIsDeterministic) {
  PpoHyper h;
  h.hidden = 32;
  h.depth = 2;
  h.n_steps = 128;
  h.batch = 32;
  h.epochs = 3;
  auto run = [&] {
    std::mt19937_64 rng(21);
    ActorCritic ac(4, 27, h, rng);
    std::normal_distribution<double> g(0.0, 1.0);
    RolloutBuffer b(128, 4);
    for (int t = 0; t < 128; ++t) {
      std::vector<double> o(4);
      for (double& x : o) x = g(rng);
      const int a = ghrl::nn::sample(ac.policy(o), rng);
      b.add(o, a, ghrl::nn::log_softmax(ac.logits(o))[a], g(rng), ac.value(o), t % 50 == 49);
    }
    compute_gae(b, 0.0, h.gamma, h.lambda);
    ac.update(b, h, rng);
    return ac;
  };
  const ActorCritic a = run(), b = run();
  EXPECT_EQ(a.actor, b.actor);
  EXPECT_EQ(a.critic, b.critic);
}

TEST(ActorCritic, GradientNormIsClippedJointly) {
  PpoHyper h;
  h.hidden = 16;
  h.depth = 1;
  h.epochs = 1;
  h.batch = 64;
  h.lr = 0.0;  // Adam with lr 0 leaves parameters; only stats matter here
  std::mt19937_64 rng(22);
  ActorCritic ac(2, 3, h, rng);
  RolloutBuffer b(64, 2);
  const double o[2] = {0.5, -0.5};
  for (int i = 0; i < 64; ++i) b.add(o, i % 3, std::log(1.0 / 3), 0.0, 0.0, false);
  for (int i = 0; i < 64; ++i) b.returns[i] = 1e3;  // huge value error
  const UpdateStats s = ac.update(b, h, rng);
  EXPECT_GT(s.grad_norm, h.max_grad_norm);
  EXPECT_EQ(s.minibatches, 1);
}

TEST(ActorCritic, NonFiniteLossThrows) {
  PpoHyper h;
  h.hidden = 8;
  h.depth = 1;
  h.batch = 4;
  std::mt19937_64 rng(23);
  ActorCritic ac(1, 2, h, rng);
  RolloutBuffer b(4, 1);
  const double o[1] = {0.0};
  for (int i = 0; i < 4; ++i) b.add(o, 0, -0.7, 0.0, 0.0, false);
  b.returns[2] = std::nan("");
  EXPECT_THROW(ac.update(b, h, rng), ghrl::TrainingDivergedError);
}
