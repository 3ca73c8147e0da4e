#include "ghrl/interactive/aux.hpp"

#include <cmath>
#include <limits>

#include "ghrl/errors.hpp"
#include "ghrl/interactive/mechanisms.hpp"
#include "ghrl/nn/categorical.hpp"
#include "ghrl/nn/losses.hpp"

namespace ghrl::interactive {

InputBuffer::InputBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("input buffer capacity must be positive");
}

void InputBuffer::add(InputRecord r) {
  if (records_.size() == capacity_) records_.pop_front();
  records_.push_back(std::move(r));
}

AuxNets::AuxNets(std::size_t obs_dim, const AuxConfig& c, std::mt19937_64& rng)
    : feedback(nn::layer_sizes(obs_dim, c.hidden, c.depth, env::kNumActions)),
      advice(nn::layer_sizes(obs_dim, c.hidden, c.depth, env::kNumActions)),
      error(nn::layer_sizes(obs_dim, c.hidden, c.depth, 1)),
      feedback_opt(feedback.num_params(), c.feedback_lr),
      advice_opt(advice.num_params(), c.advice_lr),
      error_opt(error.num_params(), c.error_lr) {
  nn::init_orthogonal(feedback, std::sqrt(2.0), 1.0, rng);
  nn::init_orthogonal(advice, std::sqrt(2.0), 0.01, rng);
  nn::init_orthogonal(error, std::sqrt(2.0), 1.0, rng);
}

std::vector<double> AuxNets::feedback_estimates(std::span<const double> obs) const {
  if (!trained) return std::vector<double>(env::kNumActions, 0.0);
  return feedback.forward(obs);
}

std::vector<double> AuxNets::advice_estimate(std::span<const double> obs) const {
  if (!trained) return std::vector<double>(env::kNumActions, 1.0 / env::kNumActions);
  return nn::softmax(advice.forward(obs));
}

double AuxNets::predicted_discrepancy(std::span<const double> obs) const {
  return nn::softplus(error.forward(obs)[0]);
}

std::vector<double> AuxNets::predicted_discrepancy(const nn::Matrix& obs) const {
  const nn::Matrix raw = error.forward(obs);
  std::vector<double> out(raw.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = nn::softplus(raw(i, 0));
  return out;
}

double AuxNets::realized_discrepancy(std::span<const double> obs, int action,
                                     const oracle::GrowerInput& provided) const {
  if (provided.kind == oracle::InputKind::kFeedback) {
    return feedback_discrepancy(feedback_estimates(obs)[static_cast<std::size_t>(action)],
                                provided.feedback);
  }
  return advice_discrepancy(advice_estimate(obs), provided.advice);
}

namespace {

// One Adam step on `net` for the rows `rows` of the training set; returns the loss.
template <class LossFn>
double train_step(nn::Mlp& net, nn::Adam& opt, const nn::Matrix& x, LossFn&& loss_fn,
                  std::vector<double>& grads) {
  nn::Mlp::Tape tape;
  const nn::Matrix out = net.forward(x, tape);
  nn::Matrix g;
  const double loss = loss_fn(out, g);
  if (!std::isfinite(loss)) throw TrainingDivergedError("auxiliary network loss is not finite");
  std::fill(grads.begin(), grads.end(), 0.0);
  net.backward(tape, g, grads);
  opt.step(net.params(), grads);
  return loss;
}

std::vector<std::size_t> draw_batch(std::size_t n, const AuxConfig& c, std::mt19937_64& rng) {
  std::vector<std::size_t> idx;
  if (c.full_batch) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  idx.resize(c.batch);
  for (std::size_t& i : idx) {
    i = std::min(static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(n)), n - 1);
  }
  return idx;
}

nn::Matrix gather_obs(const std::vector<const InputRecord*>& recs, const std::vector<std::size_t>& idx) {
  nn::Matrix x(idx.size(), env::kObsSize);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const NormObs& o = recs[idx[r]]->obs;
    std::copy(o.begin(), o.end(), x.row(r).begin());
  }
  return x;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

AuxLosses update_aux(AuxNets& nets, const InputBuffer& buffer, const AuxConfig& config,
                     std::mt19937_64& rng) {
  AuxLosses out;
  if (buffer.empty()) {
    out.feedback = out.advice = out.error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::vector<const InputRecord*> fb, adv, all;
  for (const InputRecord& r : buffer.records()) {
    all.push_back(&r);
    (r.input.kind == oracle::InputKind::kFeedback ? fb : adv).push_back(&r);
  }
  nets.feedback_opt.set_lr(config.feedback_lr);
  nets.advice_opt.set_lr(config.advice_lr);
  nets.error_opt.set_lr(config.error_lr);
  std::vector<double> g_fb(nets.feedback.num_params()), g_adv(nets.advice.num_params()),
      g_err(nets.error.num_params());

  for (int it = 0; it < config.iterations; ++it) {
    if (!fb.empty()) {
      const auto idx = draw_batch(fb.size(), config, rng);
      std::vector<int> actions(idx.size());
      std::vector<double> targets(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        actions[i] = fb[idx[i]]->action;
        targets[i] = fb[idx[i]]->input.feedback;
      }
      out.feedback_curve.push_back(train_step(
          nets.feedback, nets.feedback_opt, gather_obs(fb, idx),
          [&](const nn::Matrix& o, nn::Matrix& g) { return nn::feedback_masked_mse(o, actions, targets, g); },
          g_fb));
    }
    if (!adv.empty()) {
      const auto idx = draw_batch(adv.size(), config, rng);
      nn::Matrix targets(idx.size(), env::kNumActions);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& d = adv[idx[i]]->input.advice;
        std::copy(d.begin(), d.end(), targets.row(i).begin());
      }
      out.advice_curve.push_back(train_step(
          nets.advice, nets.advice_opt, gather_obs(adv, idx),
          [&](const nn::Matrix& o, nn::Matrix& g) { return nn::advice_cross_entropy(o, targets, g); },
          g_adv));
    }
    const auto idx = draw_batch(all.size(), config, rng);
    std::vector<double> targets(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) targets[i] = all[idx[i]]->discrepancy;
    out.error_curve.push_back(train_step(
        nets.error, nets.error_opt, gather_obs(all, idx),
        [&](const nn::Matrix& o, nn::Matrix& g) { return nn::discrepancy_mse(o, targets, g); },
        g_err));
  }
  out.iterations = config.iterations;
  out.feedback = mean(out.feedback_curve);
  out.advice = mean(out.advice_curve);
  out.error = mean(out.error_curve);
  nets.trained = true;
  return out;
}

AuxLosses held_out_losses(const AuxNets& nets, const HeldOutSet& set) {
  AuxLosses out;
  out.feedback = out.advice = out.error = std::numeric_limits<double>::quiet_NaN();
  if (set.size() == 0) return out;
  if (set.actions.size() != set.size() || set.inputs.size() != set.size()) {
    throw ShapeError("held-out set: ragged columns");
  }
  nn::Matrix x(set.size(), env::kObsSize);
  for (std::size_t i = 0; i < set.size(); ++i) std::copy(set.obs[i].begin(), set.obs[i].end(), x.row(i).begin());

  std::vector<std::size_t> fb, adv;
  for (std::size_t i = 0; i < set.size(); ++i) {
    (set.inputs[i].kind == oracle::InputKind::kFeedback ? fb : adv).push_back(i);
  }
  nn::Matrix g;
  if (!fb.empty()) {
    nn::Matrix est(fb.size(), env::kNumActions);
    std::vector<int> actions(fb.size());
    std::vector<double> targets(fb.size());
    for (std::size_t k = 0; k < fb.size(); ++k) {
      const auto e = nets.feedback_estimates(x.row(fb[k]));
      std::copy(e.begin(), e.end(), est.row(k).begin());
      actions[k] = set.actions[fb[k]];
      targets[k] = set.inputs[fb[k]].feedback;
    }
    out.feedback = nn::feedback_masked_mse(est, actions, targets, g);
  }
  if (!adv.empty()) {
    double ce = 0.0;
    for (std::size_t i : adv) {
      const auto q = nets.advice_estimate(x.row(i));
      for (std::size_t a = 0; a < env::kNumActions; ++a) {
        const double t = set.inputs[i].advice[a];
        if (t > 0.0) ce -= t * std::log(std::max(q[a], nn::kProbFloor));
      }
    }
    out.advice = ce / static_cast<double>(adv.size());
  }
  const std::vector<double> pred = nets.predicted_discrepancy(x);
  double se = 0.0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double e = pred[i] - nets.realized_discrepancy(x.row(i), set.actions[i], set.inputs[i]);
    se += e * e;
  }
  out.error = se / static_cast<double>(set.size());
  return out;
}

}  // namespace ghrl::interactive
