#include "carousel/tuning.hpp"

#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "carousel/evaluation.hpp"

namespace carousel {
namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

bool takes_seed(Family f) { return f == Family::FunkSVD || f == Family::NMF; }

using Scale = ParamRange::Scale;

}  // namespace

double ParamRange::sample(std::mt19937_64& rng) const {
  const double u = unit_draw(rng);
  double value = scale == Scale::LogUniform
                     ? std::exp(std::log(low) + u * (std::log(high) - std::log(low)))
                     : low + u * (high - low);
  if (integer) value = std::round(value);
  return std::clamp(value, low, high);
}

SearchSpace SearchSpace::defaults(Family family) {
  switch (family) {
    case Family::TopPopular:
      return {};
    case Family::ItemKNNHybrid:
      return {{{"top_k", 5, 1000, Scale::LogUniform, true},
               {"shrink", 0, 1000, Scale::Uniform, false},
               {"icm_weight", 0.01, 100, Scale::LogUniform, false}}};
    case Family::RP3beta:
      return {{{"top_k", 5, 1000, Scale::LogUniform, true},
               {"alpha", 0, 2, Scale::Uniform, false},
               {"beta", 0, 2, Scale::Uniform, false}}};
    case Family::EASE:
      return {{{"l2", 1, 1e5, Scale::LogUniform, false}}};
    case Family::FunkSVD:
      return {{{"factors", 8, 256, Scale::LogUniform, true},
               {"learn_rate", 1e-4, 1e-1, Scale::LogUniform, false},
               {"reg", 1e-5, 1e-1, Scale::LogUniform, false},
               {"epochs", 10, 300, Scale::LogUniform, true},
               {"negative_ratio", 0, 3, Scale::Uniform, false}}};
    case Family::NMF:
      return {{{"factors", 8, 256, Scale::LogUniform, true},
               {"iterations", 50, 500, Scale::LogUniform, true}}};
  }
  throw std::invalid_argument("unknown family");
}

void SearchSpace::validate() const {
  for (const auto& r : ranges) {
    if (!(r.low < r.high)) throw std::invalid_argument("range " + r.name + " needs low < high");
    if (r.scale == Scale::LogUniform && !(r.low > 0)) {
      throw std::invalid_argument("log-uniform range " + r.name + " needs low > 0");
    }
  }
}

double validation_score(const HyperParams& params, const DataSplit& split,
                        const ItemContentMatrix* icm, Index k) {
  const Model model = fit(params, split.train, icm);
  EvaluationConfig cfg;
  cfg.k = k;
  return evaluate_individual(model, split.train, split.validation, cfg).mean;
}

TrialLog random_search(Family family, const SearchSpace& space, int budget,
                       const DataSplit& split, const ItemContentMatrix* icm, std::uint64_t seed,
                       Index k) {
  if (budget < 1) throw std::invalid_argument("search budget must be >= 1");
  space.validate();
  TrialLog log;
  log.family = family;
  log.seed = seed;
  std::mt19937_64 rng(seed);

  for (int t = 0; t < budget; ++t) {
    Trial trial;
    for (const auto& r : space.ranges) trial.params[r.name] = r.sample(rng);
    if (takes_seed(family)) trial.params["seed"] = static_cast<double>(rng() >> 32);
    const auto start = std::chrono::steady_clock::now();
    try {
      trial.validation_ndcg = validation_score(params_from_map(family, trial.params), split, icm, k);
    } catch (const std::exception& e) {
      trial.validation_ndcg = 0.0;
      trial.error = e.what();
    }
    trial.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.trials.push_back(std::move(trial));
    if (log.trials.back().validation_ndcg > log.trials[log.best_index].validation_ndcg) {
      log.best_index = log.trials.size() - 1;
    }
  }
  return log;
}

void TrialLog::write_csv(std::ostream& out) const {
  std::set<std::string> names;
  for (const auto& t : trials) {
    for (const auto& [key, value] : t.params) names.insert(key);
  }
  out << "trial,validation_ndcg,train_seconds,error";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const Trial& t = trials[i];
    std::string error = t.error;
    for (auto& c : error) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << i << ',' << format_double(t.validation_ndcg) << ',' << format_double(t.train_seconds)
        << ',' << error;
    for (const auto& n : names) {
      out << ',';
      if (const auto it = t.params.find(n); it != t.params.end()) out << format_double(it->second);
    }
    out << '\n';
  }
}

void TrialLog::write_best_params(std::ostream& out) const {
  nlohmann::json j = nlohmann::json::object();
  j["family"] = std::string(family_name(family));
  for (const auto& [key, value] : best_params()) j["params"][key] = value;
  if (best_params().empty()) j["params"] = nlohmann::json::object();
  j["validation_ndcg"] = best_value();
  out << j.dump(2) << '\n';
}

ParamMap read_param_file(std::istream& in) {
  const nlohmann::json j = nlohmann::json::parse(in);
  const nlohmann::json& params = j.contains("params") ? j.at("params") : j;
  ParamMap out;
  for (const auto& [key, value] : params.items()) out[key] = value.get<double>();
  return out;
}

}  // namespace carousel
