#include "sdistill/neural/graph.hpp"

#include <cmath>

#include "sdistill/kernels/kernels.hpp"
#include "sdistill/neural/math.hpp"
#include "sdistill/util/error.hpp"

namespace sdistill::neural {
namespace {

void check_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericalError(std::string("non-finite result in ") + op);
  }
}

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw UsageError(std::string(op) + ": shape mismatch " + detail);
}

}  // namespace

Graph::Graph() { nodes_.reserve(256); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<const double> Graph::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  if (n.op == Op::kParam) return n.param->value.data();
  return n.value;
}

std::span<const double> Graph::value(Var v) const { return val(v.id); }

std::span<const double> Graph::probabilities(Var ce) const {
  const Node& n = nodes_[ce.id];
  if (n.op != Op::kSoftmaxCE) throw UsageError("probabilities() needs a softmax_cross_entropy node");
  return std::span<const double>(n.aux).first(n.aux.size() / 2);
}

Var Graph::parameter(Parameter& p) {
  Node n;
  n.op = Op::kParam;
  n.shape = p.value.shape();
  n.param = &p;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Graph::constant(Shape shape, std::span<const double> values) {
  if (values.size() != shape.size()) throw UsageError("constant: size mismatch");
  check_finite(values, "constant");
  Node n;
  n.op = Op::kConstant;
  n.shape = shape;
  n.value.assign(values.begin(), values.end());
  return push(std::move(n));
}

Var Graph::zeros(std::size_t size) {
  Node n;
  n.op = Op::kConstant;
  n.shape = {size, 1};
  n.value.assign(size, 0.0);
  return push(std::move(n));
}

Var Graph::lookup(Parameter& table, std::size_t row) {
  if (row >= table.value.shape().rows) throw UsageError("lookup: row out of range");
  Node n;
  n.op = Op::kLookup;
  n.shape = {table.value.shape().cols, 1};
  auto r = table.value.row(row);
  n.value.assign(r.begin(), r.end());
  n.param = &table;
  n.index = row;
  n.needs_grad = true;
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  const Shape sa = nodes_[a.id].shape, sb = nodes_[b.id].shape;
  require(sa.cols == sb.rows, "matmul", to_string(sa) + " x " + to_string(sb));
  Node n;
  n.op = Op::kMatmul;
  n.shape = {sa.rows, sb.cols};
  n.value.assign(n.shape.size(), 0.0);
  auto av = val(a.id), bv = val(b.id);
  if (sb.cols == 1) {
    kernels::gemv(av, sa.rows, sa.cols, bv, n.value);
  } else {
    for (std::size_t i = 0; i < sa.rows; ++i) {
      for (std::size_t k = 0; k < sa.cols; ++k) {
        const double aik = av[i * sa.cols + k];
        for (std::size_t j = 0; j < sb.cols; ++j) n.value[i * sb.cols + j] += aik * bv[k * sb.cols + j];
      }
    }
  }
  check_finite(n.value, "matmul");
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Var Graph::affine(Var w, Var x, Var b) {
  const Shape sw = nodes_[w.id].shape, sx = nodes_[x.id].shape, sb = nodes_[b.id].shape;
  require(sx.cols == 1 && sw.cols == sx.rows && sb.rows == sw.rows && sb.cols == 1, "affine",
          to_string(sw) + " " + to_string(sx) + " " + to_string(sb));
  Node n;
  n.op = Op::kAffine;
  n.shape = {sw.rows, 1};
  n.value.resize(sw.rows);
  kernels::gemv(val(w.id), sw.rows, sw.cols, val(x.id), n.value);
  auto bv = val(b.id);
  for (std::size_t i = 0; i < sw.rows; ++i) n.value[i] += bv[i];
  check_finite(n.value, "affine");
  n.inputs = {w.id, x.id, b.id};
  n.needs_grad = nodes_[w.id].needs_grad || nodes_[x.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  require(nodes_[a.id].shape == nodes_[b.id].shape, "add",
          to_string(nodes_[a.id].shape) + " + " + to_string(nodes_[b.id].shape));
  Node n;
  n.op = Op::kAdd;
  n.shape = nodes_[a.id].shape;
  auto av = val(a.id), bv = val(b.id);
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] + bv[i];
  check_finite(n.value, "add");
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  require(nodes_[a.id].shape == nodes_[b.id].shape, "mul",
          to_string(nodes_[a.id].shape) + " * " + to_string(nodes_[b.id].shape));
  Node n;
  n.op = Op::kMul;
  n.shape = nodes_[a.id].shape;
  auto av = val(a.id), bv = val(b.id);
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * bv[i];
  check_finite(n.value, "mul");
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

Var Graph::concat(std::span<const Var> parts) {
  Node n;
  n.op = Op::kConcat;
  std::size_t total = 0;
  for (Var p : parts) {
    require(nodes_[p.id].shape.cols == 1, "concat", "expects column vectors");
    total += nodes_[p.id].shape.rows;
  }
  n.shape = {total, 1};
  n.value.reserve(total);
  for (Var p : parts) {
    auto v = val(p.id);
    n.value.insert(n.value.end(), v.begin(), v.end());
    n.inputs.push_back(p.id);
    n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  return push(std::move(n));
}

Var Graph::slice(Var v, std::size_t offset, std::size_t length) {
  require(nodes_[v.id].shape.cols == 1 && offset + length <= nodes_[v.id].shape.rows, "slice",
          to_string(nodes_[v.id].shape));
  Node n;
  n.op = Op::kSlice;
  n.shape = {length, 1};
  auto src = val(v.id).subspan(offset, length);
  n.value.assign(src.begin(), src.end());
  n.inputs = {v.id};
  n.index = offset;
  n.needs_grad = nodes_[v.id].needs_grad;
  return push(std::move(n));
}

Var Graph::tanh(Var v) {
  Node n;
  n.op = Op::kTanh;
  n.shape = nodes_[v.id].shape;
  auto src = val(v.id);
  n.value.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) n.value[i] = std::tanh(src[i]);
  n.inputs = {v.id};
  n.needs_grad = nodes_[v.id].needs_grad;
  return push(std::move(n));
}

Var Graph::sigmoid(Var v) {
  Node n;
  n.op = Op::kSigmoid;
  n.shape = nodes_[v.id].shape;
  auto src = val(v.id);
  n.value.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) n.value[i] = neural::sigmoid(src[i]);
  n.inputs = {v.id};
  n.needs_grad = nodes_[v.id].needs_grad;
  return push(std::move(n));
}

Var Graph::scale(Var v, double s) {
  Node n;
  n.op = Op::kScale;
  n.shape = nodes_[v.id].shape;
  auto src = val(v.id);
  n.value.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) n.value[i] = s * src[i];
  check_finite(n.value, "scale");
  n.inputs = {v.id};
  n.factor = s;
  n.needs_grad = nodes_[v.id].needs_grad;
  return push(std::move(n));
}

Var Graph::sum(std::span<const Var> parts) {
  if (parts.empty()) throw UsageError("sum of no terms");
  Node n;
  n.op = Op::kSum;
  n.shape = nodes_[parts[0].id].shape;
  n.value.assign(n.shape.size(), 0.0);
  for (Var p : parts) {
    require(nodes_[p.id].shape == n.shape, "sum", to_string(nodes_[p.id].shape));
    auto v = val(p.id);
    for (std::size_t i = 0; i < v.size(); ++i) n.value[i] += v[i];
    n.inputs.push_back(p.id);
    n.needs_grad = n.needs_grad || nodes_[p.id].needs_grad;
  }
  check_finite(n.value, "sum");
  return push(std::move(n));
}

Var Graph::dropout(Var v, double p, Rng& rng) {
  if (p <= 0.0) return v;
  if (p >= 1.0) throw UsageError("dropout rate must be < 1");
  Node n;
  n.op = Op::kDropout;
  n.shape = nodes_[v.id].shape;
  auto src = val(v.id);
  n.value.resize(src.size());
  n.aux.resize(src.size());
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < src.size(); ++i) {
    n.aux[i] = rng.uniform() < p ? 0.0 : keep;
    n.value[i] = src[i] * n.aux[i];
  }
  n.inputs = {v.id};
  n.needs_grad = nodes_[v.id].needs_grad;
  return push(std::move(n));
}

LstmOut Graph::lstm_cell(Var x, Var h, Var c, Var w, Var b) {
  const std::size_t in = nodes_[x.id].shape.rows;
  const std::size_t hidden = nodes_[h.id].shape.rows;
  require(nodes_[c.id].shape.rows == hidden && nodes_[w.id].shape == Shape{4 * hidden, in + hidden} &&
              nodes_[b.id].shape == Shape{4 * hidden, 1},
          "lstm_cell", "x" + to_string(nodes_[x.id].shape) + " h" + to_string(nodes_[h.id].shape) +
                           " W" + to_string(nodes_[w.id].shape));
  Node n;
  n.op = Op::kLstm;
  n.shape = {2 * hidden, 1};
  n.value.resize(2 * hidden);
  // aux: [xh (in+H) | gates (4H) | tanh(c') (H)]
  n.aux.resize(in + hidden + 4 * hidden + hidden);
  auto xv = val(x.id), hv = val(h.id);
  std::copy(xv.begin(), xv.end(), n.aux.begin());
  std::copy(hv.begin(), hv.end(), n.aux.begin() + static_cast<std::ptrdiff_t>(in));
  std::span<double> aux(n.aux);
  std::span<double> out(n.value);
  LstmStep::forward(val(w.id), val(b.id), hidden, aux.first(in + hidden), val(c.id),
                    aux.subspan(in + hidden, 4 * hidden), out.first(hidden), out.subspan(hidden),
                    aux.subspan(in + 5 * hidden, hidden));
  check_finite(n.value, "lstm_cell");
  n.inputs = {x.id, h.id, c.id, w.id, b.id};
  n.needs_grad = nodes_[x.id].needs_grad || nodes_[h.id].needs_grad || nodes_[c.id].needs_grad ||
                 nodes_[w.id].needs_grad || nodes_[b.id].needs_grad;
  Var cell = push(std::move(n));
  return {slice(cell, 0, hidden), slice(cell, hidden, hidden)};
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const double> target,
                                 std::span<const std::uint8_t> mask) {
  const std::size_t k = nodes_[logits.id].shape.size();
  require(target.size() == k && (mask.empty() || mask.size() == k), "softmax_cross_entropy",
          "logits " + to_string(nodes_[logits.id].shape) + " target " + std::to_string(target.size()));
  Node n;
  n.op = Op::kSoftmaxCE;
  n.shape = {1, 1};
  n.aux.resize(2 * k);
  std::span<double> probs(n.aux.data(), k);
  auto z = val(logits.id);
  softmax(z, probs, mask);
  const double lse = logsumexp(z, mask);
  double loss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    n.aux[k + i] = target[i];
    if (target[i] == 0.0) continue;
    if (!mask.empty() && !mask[i]) {
      throw UsageError("softmax_cross_entropy: target mass on a masked entry");
    }
    loss -= target[i] * (z[i] - lse);
  }
  n.value = {loss};
  check_finite(n.value, "softmax_cross_entropy");
  n.inputs = {logits.id};
  n.needs_grad = nodes_[logits.id].needs_grad;
  return push(std::move(n));
}

std::span<double> Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.op == Op::kParam) return n.param->grad.data();
  if (n.grad.empty()) n.grad.assign(n.shape.size(), 0.0);
  return n.grad;
}

void Graph::accumulate(std::uint32_t id, std::span<const double> g) {
  if (!nodes_[id].needs_grad) return;
  auto dst = grad_of(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Graph::backward(Var loss) {
  if (nodes_[loss.id].shape.size() != 1) throw UsageError("backward: loss must be a scalar");
  for (auto& n : nodes_) n.grad.clear();
  grad_of(loss.id)[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kParam || n.grad.empty()) continue;
    backward_node(id);
  }
}

void Graph::backward_node(std::uint32_t id) {
  Node& n = nodes_[id];
  const std::vector<double>& g = n.grad;
  switch (n.op) {
    case Op::kParam:
    case Op::kConstant:
      break;
    case Op::kLookup: {
      auto row = n.param->grad.row(n.index);
      for (std::size_t i = 0; i < g.size(); ++i) row[i] += g[i];
      break;
    }
    case Op::kMatmul: {
      const std::uint32_t a = n.inputs[0], b = n.inputs[1];
      const Shape sa = nodes_[a].shape, sb = nodes_[b].shape;
      if (sb.cols == 1) {
        if (nodes_[a].needs_grad) kernels::ger_acc(grad_of(a), sa.rows, sa.cols, g, val(b));
        if (nodes_[b].needs_grad) kernels::gemv_t_acc(val(a), sa.rows, sa.cols, g, grad_of(b));
      } else {
        auto av = val(a), bv = val(b);
        if (nodes_[a].needs_grad) {
          auto ga = grad_of(a);
          for (std::size_t i = 0; i < sa.rows; ++i)
            for (std::size_t k = 0; k < sa.cols; ++k)
              for (std::size_t j = 0; j < sb.cols; ++j)
                ga[i * sa.cols + k] += g[i * sb.cols + j] * bv[k * sb.cols + j];
        }
        if (nodes_[b].needs_grad) {
          auto gb = grad_of(b);
          for (std::size_t i = 0; i < sa.rows; ++i)
            for (std::size_t k = 0; k < sa.cols; ++k)
              for (std::size_t j = 0; j < sb.cols; ++j)
                gb[k * sb.cols + j] += av[i * sa.cols + k] * g[i * sb.cols + j];
        }
      }
      break;
    }
    case Op::kAffine: {
      const std::uint32_t w = n.inputs[0], x = n.inputs[1], b = n.inputs[2];
      const Shape sw = nodes_[w].shape;
      if (nodes_[w].needs_grad) kernels::ger_acc(grad_of(w), sw.rows, sw.cols, g, val(x));
      if (nodes_[x].needs_grad) kernels::gemv_t_acc(val(w), sw.rows, sw.cols, g, grad_of(x));
      accumulate(b, g);
      break;
    }
    case Op::kAdd:
      accumulate(n.inputs[0], g);
      accumulate(n.inputs[1], g);
      break;
    case Op::kMul: {
      const std::uint32_t a = n.inputs[0], b = n.inputs[1];
      auto av = val(a), bv = val(b);
      if (nodes_[a].needs_grad) {
        auto ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (nodes_[b].needs_grad) {
        auto gb = grad_of(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::uint32_t in : n.inputs) {
        const std::size_t len = nodes_[in].shape.rows;
        accumulate(in, std::span<const double>(g).subspan(off, len));
        off += len;
      }
      break;
    }
    case Op::kSlice: {
      const std::uint32_t in = n.inputs[0];
      if (nodes_[in].needs_grad) {
        auto dst = grad_of(in);
        for (std::size_t i = 0; i < g.size(); ++i) dst[n.index + i] += g[i];
      }
      break;
    }
    case Op::kTanh: {
      auto dst = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      break;
    }
    case Op::kSigmoid: {
      auto dst = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      break;
    }
    case Op::kScale: {
      auto dst = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += n.factor * g[i];
      break;
    }
    case Op::kSum:
      for (std::uint32_t in : n.inputs) accumulate(in, g);
      break;
    case Op::kDropout: {
      auto dst = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * n.aux[i];
      break;
    }
    case Op::kLstm: {
      const std::uint32_t x = n.inputs[0], h = n.inputs[1], c = n.inputs[2], w = n.inputs[3],
                          b = n.inputs[4];
      const std::size_t hidden = n.shape.rows / 2;
      const std::size_t in = nodes_[x].shape.rows;
      std::span<const double> xh(n.aux.data(), in + hidden);
      std::span<const double> gates(n.aux.data() + in + hidden, 4 * hidden);
      std::span<const double> tanh_c(n.aux.data() + in + 5 * hidden, hidden);
      auto c_prev = val(c);
      std::vector<double> dz(4 * hidden);
      std::vector<double> dc_prev(hidden);
      for (std::size_t k = 0; k < hidden; ++k) {
        const double ig = gates[k], fg = gates[hidden + k], gg = gates[2 * hidden + k],
                     og = gates[3 * hidden + k];
        const double dh = g[k];
        const double dc = g[hidden + k] + dh * og * (1.0 - tanh_c[k] * tanh_c[k]);
        dz[k] = dc * gg * ig * (1.0 - ig);
        dz[hidden + k] = dc * c_prev[k] * fg * (1.0 - fg);
        dz[2 * hidden + k] = dc * ig * (1.0 - gg * gg);
        dz[3 * hidden + k] = dh * tanh_c[k] * og * (1.0 - og);
        dc_prev[k] = dc * fg;
      }
      if (nodes_[w].needs_grad) kernels::ger_acc(grad_of(w), 4 * hidden, in + hidden, dz, xh);
      accumulate(b, dz);
      accumulate(c, dc_prev);
      if (nodes_[x].needs_grad || nodes_[h].needs_grad) {
        std::vector<double> dxh(in + hidden, 0.0);
        kernels::gemv_t_acc(val(w), 4 * hidden, in + hidden, dz, dxh);
        accumulate(x, std::span<const double>(dxh).first(in));
        accumulate(h, std::span<const double>(dxh).subspan(in));
      }
      break;
    }
    case Op::kSoftmaxCE: {
      const std::size_t k = n.aux.size() / 2;
      const std::uint32_t in = n.inputs[0];
      auto dst = grad_of(in);
      for (std::size_t i = 0; i < k; ++i) dst[i] += g[0] * (n.aux[i] - n.aux[k + i]);
      break;
    }
  }
}

}  // namespace sdistill::neural
