#pragma once

#include <span>
#include <vector>

#include "sdistill/corpus/vocab.hpp"

namespace sdistill::distill {

// alpha * target + (1 - alpha) * onehot(truth).
std::vector<double> mixed_target(std::span<const double> target, corpus::TokenId truth, double alpha);

struct KdLoss {
  double loss = 0.0;
  std::vector<std::vector<double>> logit_grads;  // one per position
};

// Mean over positions of alpha * CE(target, softmax(logits)) +
// (1 - alpha) * CE(onehot(truth), softmax(logits)), with the softmax taken
// over `mask` (empty = all ids). The two cross-entropies are computed
// separately; the logit gradient is (softmax - mixed target) / positions.
KdLoss kd_loss(const std::vector<std::vector<double>>& logits,
               const std::vector<std::vector<double>>& targets,
               std::span<const corpus::TokenId> truths, double alpha,
               std::span<const std::uint8_t> mask = {});

}  // namespace sdistill::distill
