#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>
#include <cmath>

namespace sdistill::neural {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Log-sum-exp over entries with mask[i] != 0 (all entries if mask is empty),
// summed in ascending index order. Returns -inf if nothing is allowed.
double logsumexp(std::span<const double> v, std::span<const std::uint8_t> mask = {});
// Softmax restricted to the mask; disallowed entries are exactly 0.
void softmax(std::span<const double> logits, std::span<double> out,
             std::span<const std::uint8_t> mask = {});
std::vector<double> softmax(std::span<const double> logits, std::span<const std::uint8_t> mask = {});

// out = W x + b with W of shape [out.size() x x.size()].
void affine(std::span<const double> w, std::span<const double> x, std::span<const double> b,
            std::span<double> out);

// One LSTM step shared by the training graph and the inference paths so both
// produce bit-identical values. Gate order in W/b rows: input, forget, cell, output.
//   w: [4H x (in + H)], b: [4H], xh: x then h (length in + H)
//   gates (out, 4H): activated i, f, g, o
struct LstmStep {
  static void forward(std::span<const double> w, std::span<const double> b, std::size_t hidden,
                      std::span<const double> xh, std::span<const double> c_prev,
                      std::span<double> gates, std::span<double> h_out, std::span<double> c_out,
                      std::span<double> tanh_c_out);
};

}  // namespace sdistill::neural
