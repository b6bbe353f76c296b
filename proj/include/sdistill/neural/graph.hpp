#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sdistill/neural/tensor.hpp"
#include "sdistill/util/rng.hpp"

namespace sdistill::neural {

struct Var {
  std::uint32_t id = 0;
};

struct LstmOut {
  Var h;
  Var c;
};

// Tape of forward operations with reverse-mode differentiation. Parameter
// gradients accumulate into Parameter::grad; every forward op checks that its
// result is finite.
class Graph {
 public:
  Graph();

  Var parameter(Parameter& p);
  Var constant(Shape shape, std::span<const double> values);
  Var zeros(std::size_t n);
  // Row `row` of a parameter table, as a column vector.
  Var lookup(Parameter& table, std::size_t row);

  Var matmul(Var a, Var b);
  // W x + b in one node.
  Var affine(Var w, Var x, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }
  Var slice(Var v, std::size_t offset, std::size_t length);
  Var tanh(Var v);
  Var sigmoid(Var v);
  Var scale(Var v, double s);
  // Sum of same-shape nodes.
  Var sum(std::span<const Var> parts);
  // Inverted dropout; identity when p == 0.
  Var dropout(Var v, double p, Rng& rng);
  LstmOut lstm_cell(Var x, Var h, Var c, Var w, Var b);
  // -sum_i target_i log softmax(logits)_i over allowed entries. Target may be
  // any distribution (soft targets) but must be zero where mask is 0.
  Var softmax_cross_entropy(Var logits, std::span<const double> target,
                            std::span<const std::uint8_t> mask = {});

  std::span<const double> value(Var v) const;
  double scalar(Var v) const { return value(v)[0]; }
  const Shape& shape(Var v) const { return nodes_[v.id].shape; }
  // Softmax probabilities cached by a softmax_cross_entropy node.
  std::span<const double> probabilities(Var ce) const;
  std::size_t size() const { return nodes_.size(); }

  // Backpropagates d loss / d loss = 1 through the recorded ops in reverse.
  void backward(Var loss);

 private:
  enum class Op : std::uint8_t {
    kParam, kConstant, kLookup, kMatmul, kAffine, kAdd, kMul, kConcat, kSlice, kTanh,
    kSigmoid, kScale, kSum, kDropout, kLstm, kSoftmaxCE
  };

  struct Node {
    Op op = Op::kConstant;
    Shape shape;
    bool needs_grad = false;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> aux;
    std::vector<std::uint32_t> inputs;
    Parameter* param = nullptr;
    std::size_t index = 0;
    double factor = 0.0;
  };

  Var push(Node node);
  std::span<double> grad_of(std::uint32_t id);
  void accumulate(std::uint32_t id, std::span<const double> g);
  std::span<const double> val(std::uint32_t id) const;
  void backward_node(std::uint32_t id);

  std::vector<Node> nodes_;
};

}  // namespace sdistill::neural
