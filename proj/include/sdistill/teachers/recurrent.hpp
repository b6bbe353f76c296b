#pragma once

#include <string>
#include <vector>

#include "sdistill/neural/graph.hpp"
#include "sdistill/neural/sgd.hpp"
#include "sdistill/teachers/teacher.hpp"

namespace sdistill::teachers {

// Word-level LSTM language model. An R2L model is the same network trained on
// reversed sentences; its histories are read right to left.
class RecurrentLM : public Teacher {
 public:
  // Declares parameters and initialises them from derive_seed(cfg.seed, "init").
  RecurrentLM(std::size_t vocab_size, const neural::TrainConfig& cfg, Direction dir);

  // `corpus` is in natural (left-to-right) order for both directions.
  static RecurrentLM train(const std::vector<std::vector<TokenId>>& corpus, std::size_t vocab_size,
                           Direction dir, const neural::TrainConfig& cfg,
                           std::vector<double>* epoch_nll = nullptr);

  std::size_t vocab_size() const override { return vocab_size_; }
  Direction direction() const override { return dir_; }
  std::unique_ptr<Cursor> start() const override;

  // Summed NLL of `seq` (reading order) plus </s>, on graph `g`. Training uses
  // the per-sentence sum; epoch_nll reports the per-token mean.
  neural::Var build_loss(neural::Graph& g, std::span<const TokenId> seq, Rng& rng);

  neural::ParameterSet& params() { return params_; }
  const neural::ParameterSet& params() const { return params_; }
  const neural::TrainConfig& config() const { return cfg_; }

  void save(const std::string& path, const std::string& vocab_hash) const;
  static RecurrentLM load(const std::string& path, std::size_t vocab_size,
                          const std::string& vocab_hash);

 private:
  friend class RecurrentCursor;
  std::size_t vocab_size_;
  neural::TrainConfig cfg_;
  Direction dir_;
  neural::ParameterSet params_;
  std::vector<std::uint8_t> mask_;
};

}  // namespace sdistill::teachers
