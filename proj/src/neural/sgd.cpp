#include "sdistill/neural/sgd.hpp"

#include <cmath>
#include <numeric>

#include "sdistill/util/error.hpp"
#include "sdistill/util/rng.hpp"
#include "sdistill/util/text.hpp"

namespace sdistill::neural {

double TrainConfig::learning_rate_at(int epoch) const {
  const int steps = std::max(0, epoch - decay_start + 1);
  return learning_rate * std::pow(decay, steps);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw UsageError("decay must be in (0, 1]");
  if (decay_start < 0) throw UsageError("decay_start must be >= 0");
  if (!(clip_norm > 0.0)) throw UsageError("clip_norm must be positive");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (hidden == 0 || embedding == 0 || layers == 0) throw UsageError("model sizes must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
  if (!(init_scale >= 0.0)) throw UsageError("init_scale must be >= 0");
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {{"learning_rate", format_double(learning_rate)},
          {"decay", format_double(decay)},
          {"decay_start", std::to_string(decay_start)},
          {"clip_norm", format_double(clip_norm)},
          {"epochs", std::to_string(epochs)},
          {"seed", std::to_string(seed)},
          {"hidden", std::to_string(hidden)},
          {"embedding", std::to_string(embedding)},
          {"layers", std::to_string(layers)},
          {"dropout", format_double(dropout)},
          {"init_scale", format_double(init_scale)}};
}

TrainConfig TrainConfig::from_map(const std::map<std::string, std::string>& kv) {
  TrainConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "learning_rate") c.learning_rate = parse_double(v);
    else if (k == "decay") c.decay = parse_double(v);
    else if (k == "decay_start") c.decay_start = static_cast<int>(parse_int(v));
    else if (k == "clip_norm") c.clip_norm = parse_double(v);
    else if (k == "epochs") c.epochs = static_cast<int>(parse_int(v));
    else if (k == "seed") c.seed = parse_uint(v);
    else if (k == "hidden") c.hidden = static_cast<std::size_t>(parse_int(v));
    else if (k == "embedding") c.embedding = static_cast<std::size_t>(parse_int(v));
    else if (k == "layers") c.layers = static_cast<std::size_t>(parse_int(v));
    else if (k == "dropout") c.dropout = parse_double(v);
    else if (k == "init_scale") c.init_scale = parse_double(v);
    else throw UsageError("unknown training key '" + k + "'");
  }
  return c;
}

double sgd_step(ParameterSet& params, const TrainConfig& cfg, int epoch) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.count(); ++i) {
    for (double g : params.at(i).grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
  const double clip = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
  const double step = cfg.learning_rate_at(epoch) * clip;
  for (std::size_t i = 0; i < params.count(); ++i) {
    auto& p = params.at(i);
    auto v = p.value.data();
    auto g = p.grad.data();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= step * g[k];
    p.value.check_finite("parameter " + p.name);
  }
  return norm;
}

std::vector<double> train_sgd(ParameterSet& params, const TrainConfig& cfg, std::size_t examples,
                              const LossBuilder& build,
                              const std::function<void(int, double)>& on_epoch) {
  cfg.validate();
  std::vector<double> history;
  std::vector<std::size_t> order(examples);
  Rng dropout_rng(derive_seed(cfg.seed, "dropout"));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = examples; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    double total = 0.0;
    for (std::size_t idx : order) {
      Graph g;
      params.zero_grad();
      Var loss = build(g, idx, dropout_rng);
      total += g.scalar(loss);
      g.backward(loss);
      sgd_step(params, cfg, epoch);
    }
    const double mean = examples ? total / static_cast<double>(examples) : 0.0;
    if (!std::isfinite(mean)) throw NumericalError("training loss diverged");
    history.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  params.zero_grad();
  return history;
}

}  // namespace sdistill::neural
