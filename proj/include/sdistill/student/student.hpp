#pragma once

#include <string>
#include <vector>

#include "sdistill/distill/kd_io.hpp"
#include "sdistill/neural/graph.hpp"
#include "sdistill/neural/sgd.hpp"

namespace sdistill::student {

using corpus::TokenId;

// Bidirectional LSTM masked-LM. The encoding of position i is [h_fwd(i); h_bwd(i)],
// where both directions have read token i itself (the <mask> id at masked
// positions). Predictions are a softmax over the non-reserved vocabulary.
class StudentModel {
 public:
  StudentModel(std::size_t vocab_size, const neural::TrainConfig& cfg);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t width() const { return 2 * cfg_.hidden; }
  const neural::TrainConfig& config() const { return cfg_; }
  neural::ParameterSet& params() { return params_; }
  const neural::ParameterSet& params() const { return params_; }
  const std::vector<std::uint8_t>& output_mask() const { return mask_; }

  std::vector<std::vector<double>> encode(std::span<const TokenId> tokens) const;
  std::vector<double> logits(std::span<const double> encoding) const;
  std::vector<double> predict_masked(std::span<const TokenId> corrupted, std::size_t i) const;

  // Loss of one record: mean over its masked positions of the
  // cross-entropy against alpha * target + (1 - alpha) * onehot(truth).
  neural::Var build_loss(neural::Graph& g, const distill::KdRecord& record, double alpha);

  void save(const std::string& path, const std::string& vocab_hash) const;
  static StudentModel load(const std::string& path, std::size_t vocab_size,
                           const std::string& vocab_hash);

 private:
  std::size_t vocab_size_;
  neural::TrainConfig cfg_;
  neural::ParameterSet params_;
  std::vector<std::uint8_t> mask_;
};

// Trains on every record with at least one masked position. With alpha == 0
// the teacher targets are never read.
StudentModel train_student(const distill::KdDataset& data, std::size_t vocab_size, double alpha,
                           const neural::TrainConfig& cfg, std::vector<double>* epoch_loss = nullptr);

// Corrupts a raw corpus into a target-free dataset (mode none), one masking
// per sentence from derive_seed(seed, "corrupt", index).
distill::KdDataset plain_dataset(const std::vector<std::vector<TokenId>>& corpus, std::size_t vocab_size,
                                 const std::string& vocab_hash, std::uint64_t seed,
                                 const distill::CorruptionConfig& cc = {});

// Fraction of masked positions whose argmax prediction is the true token.
double masked_accuracy(const StudentModel& m, const distill::KdDataset& data);

}  // namespace sdistill::student
