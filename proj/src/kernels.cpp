#include "msgw/kernels.hpp"

namespace msgw::kernels {

namespace scalar {

cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n) {
  cdouble acc(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += s * a[i] * b[i];
}

void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n) {
  // out[i] += w / (i*freq[i] - pole)
  for (std::size_t i = 0; i < n; ++i) {
    const double den = pole * pole + freq[i] * freq[i];
    const double re = (-pole * w.real() + freq[i] * w.imag()) / den;
    const double im = (-pole * w.imag() - freq[i] * w.real()) / den;
    out[i] += cdouble(re, im);
  }
}

}  // namespace scalar

namespace {

struct Dispatch {
  cdouble (*cdot)(const cdouble*, const cdouble*, std::size_t);
  void (*cmul_acc)(const cdouble*, const cdouble*, cdouble, cdouble*, std::size_t);
  void (*pole_acc)(const double*, double, cdouble, cdouble*, std::size_t);
  const char* name;
};

const Dispatch& dispatch() {
  static const Dispatch d = [] {
    if (has_avx2())
      return Dispatch{avx2::cdot, avx2::cmul_acc, avx2::pole_acc, "avx2"};
    return Dispatch{scalar::cdot, scalar::cmul_acc, scalar::pole_acc, "scalar"};
  }();
  return d;
}

}  // namespace

bool has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const char* active_impl() { return dispatch().name; }

cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n) {
  return dispatch().cdot(a, b, n);
}

void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n) {
  dispatch().cmul_acc(a, b, s, out, n);
}

void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n) {
  dispatch().pole_acc(freq, pole, w, out, n);
}

}  // namespace msgw::kernels
