#include "ghrl/trainer/provider.hpp"

#include <cmath>

#include "ghrl/errors.hpp"

namespace ghrl::trainer {

using nlohmann::json;

SimulatedProvider::SimulatedProvider(std::shared_ptr<const oracle::OptimalClimateTable> table,
                                     bool constraint_advice, oracle::AdviceRanges ranges)
    : table_(std::move(table)), constraint_(constraint_advice), ranges_(ranges) {
  if (!table_) throw UsageError("simulated grower needs an optimal-climate table");
}

oracle::GrowerInput SimulatedProvider::label(const Query& q) const {
  oracle::GrowerInput in;
  in.kind = q.kind;
  if (q.kind == oracle::InputKind::kFeedback) {
    if (!q.env_before) throw UsageError("feedback query without environment snapshot");
    in.feedback = oracle::binary_feedback(q.action, oracle::target_for(q.obs, *table_),
                                          oracle::predict_all_actions(*q.env_before));
  } else {
    in.advice = constraint_ ? oracle::constraint_advice(q.obs, ranges_)
                            : oracle::precise_advice(q.obs, *table_);
  }
  return in;
}

std::vector<Answer> SimulatedProvider::answer(const std::vector<Query>& queries, const EstimateFn&) {
  std::vector<Answer> out;
  out.reserve(queries.size());
  for (const Query& q : queries) out.push_back({label(q), "oracle"});
  return out;
}

json input_to_json(const oracle::GrowerInput& in) {
  if (in.kind == oracle::InputKind::kFeedback) return {{"kind", "feedback"}, {"feedback", in.feedback}};
  return {{"kind", "advice"}, {"advice", in.advice}};
}

void validate_advice(const oracle::Distribution& p) {
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw DataError("advice entries must be finite and non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) throw DataError("advice must sum to 1");
}

oracle::GrowerInput input_from_json(const json& j) {
  oracle::GrowerInput in;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "feedback") {
      in.kind = oracle::InputKind::kFeedback;
      const json& f = j.at("feedback");
      if (!f.is_number() || (f.get<double>() != 1.0 && f.get<double>() != -1.0)) {
        throw DataError("feedback must be +1 or -1");
      }
      in.feedback = f.get<double>() > 0 ? 1 : -1;
    } else if (kind == "advice") {
      in.kind = oracle::InputKind::kAdvice;
      const auto v = j.at("advice").get<std::vector<double>>();
      if (v.size() != env::kNumActions) throw DataError("advice must have 27 entries");
      std::copy(v.begin(), v.end(), in.advice.begin());
      validate_advice(in.advice);
    } else {
      throw DataError("unknown input kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed grower input: ") + e.what());
  }
  return in;
}

RecordingProvider::RecordingProvider(InputProvider& inner, const std::filesystem::path& path)
    : inner_(inner), out_(path, std::ios::app) {
  if (!out_) throw DataError("cannot write replay file " + path.string());
}

std::vector<Answer> RecordingProvider::answer(const std::vector<Query>& queries,
                                              const EstimateFn& estimate) {
  std::vector<Answer> answers = inner_.answer(queries, estimate);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    json line = {{"query_id", queries[i].id}, {"step", queries[i].step},
                 {"update", queries[i].update}, {"source", answers[i].source}};
    line["input"] = answers[i].input ? input_to_json(*answers[i].input) : json(nullptr);
    out_ << line.dump() << '\n';
  }
  out_.flush();
  return answers;
}

ReplayProvider::ReplayProvider(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open replay file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      Answer a;
      a.source = "replay";
      if (!j.at("input").is_null()) a.input = input_from_json(j.at("input"));
      answers_[j.at("step").get<std::uint64_t>()] = a;
    } catch (const json::exception& e) {
      throw DataError("replay file line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::vector<Answer> ReplayProvider::answer(const std::vector<Query>& queries, const EstimateFn&) {
  std::vector<Answer> out;
  for (const Query& q : queries) {
    const auto it = answers_.find(q.step);
    if (it == answers_.end()) {
      throw DataError("replay file has no answer for step " + std::to_string(q.step));
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace ghrl::trainer
