#include "sdistill/neural/tensor.hpp"

#include <cmath>

#include "sdistill/util/error.hpp"

namespace sdistill::neural {

std::string to_string(const Shape& s) {
  return "[" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw UsageError("tensor data size " + std::to_string(data_.size()) + " does not match " +
                     to_string(shape_));
  }
}

void Tensor::check_finite(const std::string& what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) throw NumericalError("non-finite value in " + what);
  }
}

Parameter& ParameterSet::add(std::string name, Shape shape) {
  for (const auto& p : params_) {
    if (p->name == name) throw UsageError("duplicate parameter " + name);
  }
  params_.push_back(std::make_unique<Parameter>(Parameter{std::move(name), Tensor(shape), Tensor(shape)}));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw UsageError("no parameter named " + name);
}

const Parameter& ParameterSet::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw UsageError("no parameter named " + name);
}

void ParameterSet::init_uniform(Rng& rng, double scale) {
  for (auto& p : params_) {
    for (double& v : p->value.data()) v = rng.uniform(-scale, scale);
  }
}

void ParameterSet::fill(double v) {
  for (auto& p : params_) p->value.fill(v);
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

}  // namespace sdistill::neural
