#pragma once

// Low-level array kernels behind the Fourier transforms, the GW products and
// the Lehmann pole sums. Each kernel has a portable scalar reference
// implementation and an AVX2+FMA variant; the active one is picked once at
// runtime from CPU capabilities. SIMD reductions reassociate, so the variants
// agree to roundoff (equivalence-tested), not bitwise; within one machine the
// dispatch is stable and results are deterministic.

#include <complex>
#include <cstddef>

namespace msgw::kernels {

using cdouble = std::complex<double>;

// out = sum_i a[i] * b[i]  (no conjugation)
cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n);

// out[i] += s * a[i] * b[i]  (elementwise complex product, complex scale)
void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n);

// out[i] += w / (i*freq[i] - pole)  for a real pole and complex weight w.
void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n);

// Names of the implementations ("scalar", "avx2") — selected and available.
const char* active_impl();
bool has_avx2();

// Direct entry points used by the equivalence tests.
namespace scalar {
cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n);
void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n);
void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n);
void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n);
void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n);
}  // namespace avx2

}  // namespace msgw::kernels
