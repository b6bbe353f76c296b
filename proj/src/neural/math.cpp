#include "sdistill/neural/math.hpp"

#include <cmath>
#include <limits>

#include "sdistill/kernels/kernels.hpp"

namespace sdistill::neural {

double logsumexp(std::span<const double> v, std::span<const std::uint8_t> mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (v[i] > mx) mx = v[i];
  }
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    s += std::exp(v[i] - mx);
  }
  return mx + std::log(s);
}

void softmax(std::span<const double> logits, std::span<double> out,
             std::span<const std::uint8_t> mask) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    if (logits[i] > mx) mx = logits[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask.empty() && !mask[i]) {
      out[i] = 0.0;
      continue;
    }
    out[i] = std::exp(logits[i] - mx);
    s += out[i];
  }
  const double inv = 1.0 / s;
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] *= inv;
}

std::vector<double> softmax(std::span<const double> logits, std::span<const std::uint8_t> mask) {
  std::vector<double> out(logits.size());
  softmax(logits, out, mask);
  return out;
}

void affine(std::span<const double> w, std::span<const double> x, std::span<const double> b,
            std::span<double> out) {
  kernels::gemv(w, out.size(), x.size(), x, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
}

void LstmStep::forward(std::span<const double> w, std::span<const double> b, std::size_t hidden,
                       std::span<const double> xh, std::span<const double> c_prev,
                       std::span<double> gates, std::span<double> h_out, std::span<double> c_out,
                       std::span<double> tanh_c_out) {
  const std::size_t cols = xh.size();
  kernels::gemv(w, 4 * hidden, cols, xh, gates);
  for (std::size_t k = 0; k < 4 * hidden; ++k) gates[k] += b[k];
  for (std::size_t k = 0; k < hidden; ++k) {
    const double ig = sigmoid(gates[k]);
    const double fg = sigmoid(gates[hidden + k]);
    const double gg = std::tanh(gates[2 * hidden + k]);
    const double og = sigmoid(gates[3 * hidden + k]);
    gates[k] = ig;
    gates[hidden + k] = fg;
    gates[2 * hidden + k] = gg;
    gates[3 * hidden + k] = og;
    const double c = fg * c_prev[k] + ig * gg;
    c_out[k] = c;
    tanh_c_out[k] = std::tanh(c);
    h_out[k] = og * tanh_c_out[k];
  }
}

}  // namespace sdistill::neural
