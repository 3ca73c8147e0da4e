#include "ghrl/trainer/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "ghrl/errors.hpp"

namespace ghrl::trainer {

using nlohmann::json;
using interactive::Mechanism;

std::string to_string(Selection s) { return s == Selection::kRandom ? "random" : "selective"; }

std::string to_string(ProviderKind p) {
  switch (p) {
    case ProviderKind::kSimulated: return "simulated";
    case ProviderKind::kHumanService: return "human-service";
    case ProviderKind::kReplay: return "replay";
  }
  return "?";
}

std::string to_string(Fallback f) {
  switch (f) {
    case Fallback::kOracle: return "oracle";
    case Fallback::kEstimate: return "estimate";
    case Fallback::kSkip: return "skip";
  }
  return "?";
}

namespace {

// One entry per key: how to write it and how to read it.
struct Field {
  std::string key;
  std::function<json(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const json&)> set;
};

template <class T>
Field plain(std::string key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return json(c.*member); },
          [member, key](TrainConfig& c, const json& j) {
            try {
              c.*member = j.get<T>();
            } catch (const json::exception&) {
              throw ConfigError("wrong type for " + key);
            }
          }};
}

template <class E>
Field enumerated(std::string key, E TrainConfig::*member, std::initializer_list<E> values) {
  std::vector<E> all(values);
  return {key, [member](const TrainConfig& c) { return json(to_string(c.*member)); },
          [member, key, all](TrainConfig& c, const json& j) {
            if (!j.is_string()) throw ConfigError("wrong type for " + key);
            const std::string t = j.get<std::string>();
            for (E v : all) {
              if (to_string(v) == t) {
                c.*member = v;
                return;
              }
            }
            throw ConfigError("invalid value '" + t + "' for " + key);
          }};
}

const std::vector<Field>& fields() {
  using interactive::BehaviorLogProb;
  static const std::vector<Field> f = {
      {"mechanism", [](const TrainConfig& c) { return json(interactive::to_string(c.mechanism)); },
       [](TrainConfig&, const json&) {}},  // handled first in from_json
      plain("seed", &TrainConfig::seed),
      plain("beta0", &TrainConfig::beta0),
      plain("beta_horizon", &TrainConfig::beta_horizon),
      plain("n_inputs", &TrainConfig::n_inputs),
      enumerated("selection", &TrainConfig::selection, {Selection::kRandom, Selection::kSelective}),
      {"behavior_logprob",
       [](const TrainConfig& c) { return json(interactive::to_string(c.behavior_logprob)); },
       [](TrainConfig& c, const json& j) {
         if (!j.is_string()) throw ConfigError("wrong type for behavior_logprob");
         c.behavior_logprob = interactive::parse_behavior_log_prob(j.get<std::string>());
       }},
      plain("input_capacity", &TrainConfig::input_capacity),
      plain("aux_iterations", &TrainConfig::aux_iterations),
      plain("aux_batch", &TrainConfig::aux_batch),
      plain("aux_full_batch", &TrainConfig::aux_full_batch),
      plain("aux_hidden", &TrainConfig::aux_hidden),
      plain("aux_depth", &TrainConfig::aux_depth),
      plain("feedback_lr", &TrainConfig::feedback_lr),
      plain("advice_lr", &TrainConfig::advice_lr),
      plain("error_lr", &TrainConfig::error_lr),
      plain("lr", &TrainConfig::lr),
      plain("n_steps", &TrainConfig::n_steps),
      plain("batch", &TrainConfig::batch),
      plain("gamma", &TrainConfig::gamma),
      plain("gae_lambda", &TrainConfig::gae_lambda),
      plain("clip", &TrainConfig::clip),
      plain("epochs", &TrainConfig::epochs),
      plain("vf_coef", &TrainConfig::vf_coef),
      plain("ent_coef", &TrainConfig::ent_coef),
      plain("max_grad_norm", &TrainConfig::max_grad_norm),
      plain("normalize_advantage", &TrainConfig::normalize_advantage),
      plain("total_steps", &TrainConfig::total_steps),
      plain("hidden", &TrainConfig::hidden),
      plain("depth", &TrainConfig::depth),
      enumerated("provider", &TrainConfig::provider,
                 {ProviderKind::kSimulated, ProviderKind::kHumanService, ProviderKind::kReplay}),
      plain("replay_file", &TrainConfig::replay_file),
      plain("query_deadline_s", &TrainConfig::query_deadline_s),
      enumerated("fallback", &TrainConfig::fallback,
                 {Fallback::kOracle, Fallback::kEstimate, Fallback::kSkip}),
      plain("weather", &TrainConfig::weather),
      plain("oracle_table", &TrainConfig::oracle_table),
      plain("held_out", &TrainConfig::held_out),
      plain("output_dir", &TrainConfig::output_dir),
      plain("checkpoint_every", &TrainConfig::checkpoint_every),
      plain("evaluate_after", &TrainConfig::evaluate_after),
      plain("train_first_year", &TrainConfig::train_first_year),
      plain("train_last_year", &TrainConfig::train_last_year),
      plain("test_first_year", &TrainConfig::test_first_year),
      plain("test_last_year", &TrainConfig::test_last_year),
  };
  return f;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

TrainConfig TrainConfig::defaults(Mechanism m) {
  TrainConfig c;
  c.mechanism = m;
  const bool precise_or_sharing =
      m == Mechanism::kPolicyShapingPrecise || m == Mechanism::kControlSharing;
  c.ent_coef = precise_or_sharing ? 1e-3 : 1e-2;
  c.advice_lr = 1e-4;
  c.feedback_lr = 1e-3;
  c.error_lr = 1e-3;
  return c;
}

ppo::PpoHyper TrainConfig::ppo() const {
  ppo::PpoHyper h;
  h.lr = lr;
  h.n_steps = n_steps;
  h.batch = batch;
  h.gamma = gamma;
  h.lambda = gae_lambda;
  h.clip = clip;
  h.epochs = epochs;
  h.vf_coef = vf_coef;
  h.ent_coef = ent_coef;
  h.max_grad_norm = max_grad_norm;
  h.normalize_advantage = normalize_advantage;
  h.total_steps = total_steps;
  h.hidden = hidden;
  h.depth = depth;
  return h;
}

interactive::AuxConfig TrainConfig::aux() const {
  interactive::AuxConfig a;
  a.hidden = aux_hidden;
  a.depth = aux_depth;
  a.feedback_lr = feedback_lr;
  a.advice_lr = advice_lr;
  a.error_lr = error_lr;
  a.iterations = aux_iterations;
  a.batch = aux_batch;
  a.full_batch = aux_full_batch;
  return a;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(beta0 >= 0.0 && beta0 <= 1.0, "beta0 must lie in [0, 1]");
  require(beta_horizon > 0, "beta_horizon must be positive");
  require(n_steps > 0, "n_steps must be positive");
  require(!interactive::uses_queries(mechanism) || n_inputs <= n_steps,
          "n_inputs (" + std::to_string(n_inputs) + ") exceeds the interval length n_steps (" +
              std::to_string(n_steps) + ")");
  require(batch > 0, "batch must be positive");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip >= 0.0, "clip must be non-negative");
  require(epochs > 0, "epochs must be positive");
  require(lr >= 0.0 && feedback_lr >= 0.0 && advice_lr >= 0.0 && error_lr >= 0.0,
          "learning rates must be non-negative");
  require(total_steps > 0, "total_steps must be positive");
  require(hidden > 0 && depth > 0 && aux_hidden > 0 && aux_depth > 0, "network sizes must be positive");
  require(aux_iterations >= 0 && aux_batch > 0, "aux_iterations >= 0 and aux_batch > 0 required");
  require(input_capacity > 0, "input_capacity must be positive");
  require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  require(query_deadline_s >= 0.0, "query_deadline_s must be >= 0");
  require(provider != ProviderKind::kReplay || !replay_file.empty(), "provider replay needs replay_file");
  require(train_first_year <= train_last_year && test_first_year <= test_last_year, "bad year range");
  require(!weather.empty(), "weather must be set");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  for (const Field& f : fields()) j[f.key] = f.get(*this);
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Mechanism m = Mechanism::kBaseline;
  if (j.contains("mechanism")) {
    if (!j["mechanism"].is_string()) throw ConfigError("wrong type for mechanism");
    m = interactive::parse_mechanism(j["mechanism"].get<std::string>());
  }
  TrainConfig c = defaults(m);
  std::map<std::string, const Field*> by_key;
  for (const Field& f : fields()) by_key[f.key] = &f;
  for (const auto& [key, value] : j.items()) {
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second->set(c, value);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

std::shared_ptr<const env::WeatherSeries> load_weather_spec(const std::string& spec) {
  const std::string prefix = "synthetic:";
  if (spec.rfind(prefix, 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(spec.substr(prefix.size()));
    } catch (const std::exception&) {
      throw ConfigError("bad synthetic weather spec '" + spec + "'");
    }
    return std::make_shared<const env::WeatherSeries>(
        env::synthesize_weather(env::to_hour(2011, 1, 1), env::to_hour(2025, 1, 1), seed));
  }
  return std::make_shared<const env::WeatherSeries>(env::load_weather(spec));
}

}  // namespace ghrl::trainer
