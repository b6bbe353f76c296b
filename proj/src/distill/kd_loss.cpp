#include "sdistill/distill/kd_loss.hpp"

#include <cmath>

#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"

namespace sdistill::distill {

namespace {
void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in [0, 1]");
}
}  // namespace

std::vector<double> mixed_target(std::span<const double> target, corpus::TokenId truth, double alpha) {
  check_alpha(alpha);
  if (truth >= target.size()) throw UsageError("true token outside the target vocabulary");
  std::vector<double> out(target.size());
  for (std::size_t w = 0; w < target.size(); ++w) out[w] = alpha * target[w];
  out[truth] += 1.0 - alpha;
  return out;
}

KdLoss kd_loss(const std::vector<std::vector<double>>& logits,
               const std::vector<std::vector<double>>& targets,
               std::span<const corpus::TokenId> truths, double alpha,
               std::span<const std::uint8_t> mask) {
  check_alpha(alpha);
  if (logits.size() != targets.size() || logits.size() != truths.size()) {
    throw UsageError("kd_loss: misaligned positions");
  }
  KdLoss out;
  const std::size_t n = logits.size();
  if (n == 0) return out;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& z = logits[k];
    if (targets[k].size() != z.size()) throw UsageError("kd_loss: target size mismatch");
    const double lse = neural::logsumexp(z, mask);
    double teacher_ce = 0.0;
    for (std::size_t w = 0; w < z.size(); ++w) {
      if (targets[k][w] == 0.0) continue;
      if (!mask.empty() && !mask[w]) throw UsageError("kd_loss: target mass on a masked-out id");
      teacher_ce -= targets[k][w] * (z[w] - lse);
    }
    const double truth_ce = -(z.at(truths[k]) - lse);
    out.loss += inv * (alpha * teacher_ce + (1.0 - alpha) * truth_ce);
    auto p = neural::softmax(z, mask);
    const auto mix = mixed_target(targets[k], truths[k], alpha);
    for (std::size_t w = 0; w < z.size(); ++w) p[w] = (p[w] - mix[w]) * inv;
    out.logit_grads.push_back(std::move(p));
  }
  return out;
}

}  // namespace sdistill::distill
