#pragma once

#include <cstdint>
#include <functional>
#include <vector>
#include <map>
#include <string>

#include "sdistill/neural/graph.hpp"
#include "sdistill/neural/tensor.hpp"

namespace sdistill::neural {

// Optimisation and model-size settings shared by every trainable model.
// Defaults are desk-scale; the full-scale LSTM setting is hidden 250, two
// layers, dropout 0.2, lr 0.25 decayed by 0.92 per epoch after the tenth.
struct TrainConfig {
  double learning_rate = 0.25;
  double decay = 0.92;
  int decay_start = 10;  // first decayed epoch is decay_start (0-based)
  double clip_norm = 5.0;
  int epochs = 20;
  std::uint64_t seed = 1;
  std::size_t hidden = 64;
  std::size_t embedding = 32;
  std::size_t layers = 1;
  double dropout = 0.0;
  double init_scale = 0.1;

  // Learning rate used during 0-based epoch `epoch`:
  // lr0 * decay^max(0, epoch - decay_start + 1).
  double learning_rate_at(int epoch) const;
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  static TrainConfig from_map(const std::map<std::string, std::string>& kv);
};

// p <- p - lr(epoch) * clip(g) with global-norm clipping. Returns the
// pre-clipping gradient norm. Gradients are left untouched.
double sgd_step(ParameterSet& params, const TrainConfig& cfg, int epoch);

// Per-example SGD: each epoch visits the examples in an order shuffled from
// derive_seed(cfg.seed, "shuffle", epoch), builds the example's scalar loss on
// a fresh graph, backpropagates and steps. `rng` is the dropout stream.
// Returns the mean example loss of each epoch.
using LossBuilder = std::function<Var(Graph& g, std::size_t example, Rng& rng)>;
std::vector<double> train_sgd(ParameterSet& params, const TrainConfig& cfg, std::size_t examples,
                              const LossBuilder& build,
                              const std::function<void(int epoch, double loss)>& on_epoch = {});

}  // namespace sdistill::neural
