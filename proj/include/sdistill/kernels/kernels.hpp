#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense float64 inner loops used by the neural core. Every kernel has a
// scalar reference implementation and, on x86-64, an AVX2/FMA variant. The
// variant is picked once from CPU features; SDISTILL_ISA=scalar in the
// environment forces the reference path.
namespace sdistill::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x, W row-major rows x cols.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y);
  // x_grad += W^T g
  void (*gemv_t_acc)(const double* w, std::size_t rows, std::size_t cols, const double* g,
                     double* x_grad);
  // w_grad += g x^T
  void (*ger_acc)(double* w_grad, std::size_t rows, std::size_t cols, const double* g,
                  const double* x);
};

const KernelTable& scalar_table();
#if defined(SDISTILL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool isa_supported(Isa isa);
Isa active_isa();
// Switches the process-wide kernel table. Not thread-safe; call before work starts.
void set_isa(Isa isa);
std::string_view isa_name(Isa isa);

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
                 std::span<const double> x, std::span<double> y) {
  active().gemv(w.data(), rows, cols, x.data(), y.data());
}
inline void gemv_t_acc(std::span<const double> w, std::size_t rows, std::size_t cols,
                       std::span<const double> g, std::span<double> x_grad) {
  active().gemv_t_acc(w.data(), rows, cols, g.data(), x_grad.data());
}
inline void ger_acc(std::span<double> w_grad, std::size_t rows, std::size_t cols,
                    std::span<const double> g, std::span<const double> x) {
  active().ger_acc(w_grad.data(), rows, cols, g.data(), x.data());
}

}  // namespace sdistill::kernels
