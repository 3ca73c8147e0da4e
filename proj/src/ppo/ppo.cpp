#include "ghrl/ppo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ghrl/errors.hpp"
#include "ghrl/nn/categorical.hpp"
#include "ghrl/nn/losses.hpp"

namespace ghrl::ppo {

RolloutBuffer::RolloutBuffer(std::size_t capacity, std::size_t obs_dim)
    : obs(capacity, obs_dim),
      actions(capacity),
      log_probs(capacity),
      rewards(capacity),
      values(capacity),
      dones(capacity),
      advantages(capacity),
      returns(capacity),
      capacity_(capacity) {}

void RolloutBuffer::add(std::span<const double> o, int action, double behavior_log_prob,
                        double reward, double value, bool done) {
  if (full()) throw UsageError("rollout buffer is full");
  if (o.size() != obs.cols()) throw ShapeError("rollout buffer: observation width mismatch");
  std::copy(o.begin(), o.end(), obs.row(size_).begin());
  actions[size_] = action;
  log_probs[size_] = behavior_log_prob;
  rewards[size_] = reward;
  values[size_] = value;
  dones[size_] = done ? 1 : 0;
  ++size_;
}

void RolloutBuffer::clear() { size_ = 0; }

void compute_gae(RolloutBuffer& buf, double last_value, double gamma, double lambda) {
  if (!buf.full()) throw UsageError("advantages are computed on a full rollout buffer only");
  const std::size_t n = buf.size();
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t t = n; t-- > 0;) {
    const bool done = buf.dones[t] != 0;
    const double delta = td_residual(buf.rewards[t], buf.values[t], next_value, done, gamma);
    next_adv = delta + gamma * lambda * (done ? 0.0 : 1.0) * next_adv;
    buf.advantages[t] = next_adv;
    buf.returns[t] = next_adv + buf.values[t];
    next_value = buf.values[t];
  }
}

void normalize(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size()));
  for (double& x : v) x = (x - mean) / (sd + 1e-8);
}

std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
  return idx;
}

ActorCritic::ActorCritic(std::size_t obs_dim, std::size_t actions, const PpoHyper& hyper,
                         std::mt19937_64& rng)
    : actor(nn::layer_sizes(obs_dim, hyper.hidden, hyper.depth, actions)),
      critic(nn::layer_sizes(obs_dim, hyper.hidden, hyper.depth, 1)),
      actor_opt(actor.num_params(), hyper.lr),
      critic_opt(critic.num_params(), hyper.lr) {
  nn::init_orthogonal(actor, std::sqrt(2.0), 0.01, rng);
  nn::init_orthogonal(critic, std::sqrt(2.0), 1.0, rng);
}

std::vector<double> ActorCritic::policy(std::span<const double> obs) const {
  return nn::softmax(actor.forward(obs));
}

namespace {

[[noreturn]] void diverged(const char* what, int epoch, std::size_t mb, double value) {
  std::ostringstream os;
  os << "training diverged: non-finite " << what << " (" << value << ") at epoch " << epoch
     << ", minibatch " << mb;
  throw TrainingDivergedError(os.str());
}

}  // namespace

UpdateStats ActorCritic::update(const RolloutBuffer& buf, const PpoHyper& hyper,
                                std::mt19937_64& rng) {
  const std::size_t n = buf.size();
  if (n == 0) throw UsageError("PPO update on an empty buffer");
  std::vector<double> adv(buf.advantages.begin(), buf.advantages.begin() + static_cast<long>(n));
  if (hyper.normalize_advantage && n > 1) normalize(adv);

  actor_opt.set_lr(hyper.lr);
  critic_opt.set_lr(hyper.lr);
  UpdateStats stats;
  const std::size_t obs_dim = buf.obs.cols();
  std::vector<double> actor_grad(actor.num_params());
  std::vector<double> critic_grad(critic.num_params());
  nn::Mlp::Tape actor_tape;
  nn::Mlp::Tape critic_tape;
  nn::Matrix x;
  nn::Matrix g_actor;
  nn::Matrix g_critic;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const std::vector<std::size_t> order = permutation(n, rng);
    for (std::size_t start = 0, mb = 0; start < n; start += hyper.batch, ++mb) {
      const std::size_t end = std::min(n, start + hyper.batch);
      const std::size_t b = end - start;
      x.resize(b, obs_dim);
      std::vector<int> acts(b);
      std::vector<double> old_lp(b), mb_adv(b), ret(b);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t k = order[start + i];
        std::copy(buf.obs.row(k).begin(), buf.obs.row(k).end(), x.row(i).begin());
        acts[i] = buf.actions[k];
        old_lp[i] = buf.log_probs[k];
        mb_adv[i] = adv[k];
        ret[i] = buf.returns[k];
      }

      const nn::Matrix logits = actor.forward(x, actor_tape);
      const nn::Matrix values = critic.forward(x, critic_tape);
      const nn::PolicyLossStats pl =
          nn::ppo_policy_loss(logits, acts, old_lp, mb_adv, hyper.clip, hyper.ent_coef, g_actor);
      const double vl = nn::value_mse(values, ret, g_critic);
      if (!std::isfinite(pl.loss)) diverged("policy loss", epoch, mb, pl.loss);
      if (!std::isfinite(vl)) diverged("value loss", epoch, mb, vl);
      for (double& g : g_critic.flat()) g *= hyper.vf_coef;

      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);
      actor.backward(actor_tape, g_actor, actor_grad);
      critic.backward(critic_tape, g_critic, critic_grad);

      double sq = 0.0;
      for (double g : actor_grad) sq += g * g;
      for (double g : critic_grad) sq += g * g;
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) diverged("gradient norm", epoch, mb, norm);
      const double coef = hyper.max_grad_norm / (norm + 1e-6);
      if (coef < 1.0) {
        for (double& g : actor_grad) g *= coef;
        for (double& g : critic_grad) g *= coef;
      }
      actor_opt.step(actor.params(), actor_grad);
      critic_opt.step(critic.params(), critic_grad);

      stats.policy_loss += pl.surrogate;
      stats.value_loss += vl;
      stats.entropy += pl.entropy;
      stats.approx_kl += pl.approx_kl;
      stats.clip_fraction += pl.clip_fraction;
      stats.grad_norm += norm;
      ++stats.minibatches;
    }
  }
  const double m = static_cast<double>(std::max(stats.minibatches, 1));
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.approx_kl /= m;
  stats.clip_fraction /= m;
  stats.grad_norm /= m;
  return stats;
}

}  // namespace ghrl::ppo
