// AVX2+FMA variants of the array kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; it must not be entered unless the CPU
// reports AVX2 (the dispatcher in kernels.cpp guarantees that).

#include "msgw/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace msgw::kernels::avx2 {

namespace {

// Complex product of two lanes of interleaved complex doubles:
// [ar,ai,br,bi] x [cr,ci,dr,di] -> [ac, ad] as complex pairs.
inline __m256d cmul_pd(__m256d a, __m256d b) {
  __m256d b_re = _mm256_movedup_pd(b);         // [cr,cr,dr,dr]
  __m256d b_im = _mm256_permute_pd(b, 0xF);    // [ci,ci,di,di]
  __m256d a_sw = _mm256_permute_pd(a, 0x5);    // [ai,ar,bi,br]
  __m256d t = _mm256_mul_pd(a_sw, b_im);
  return _mm256_fmaddsub_pd(a, b_re, t);       // [ar*cr-ai*ci, ai*cr+ar*ci, ...]
}

}  // namespace

cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d va = _mm256_loadu_pd(pa + 2 * i);
    __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    acc = _mm256_add_pd(acc, cmul_pd(va, vb));
  }
  double lanes[4];
  _mm256_storeu_pd(lanes, acc);
  cdouble out(lanes[0] + lanes[2], lanes[1] + lanes[3]);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double* po = reinterpret_cast<double*>(out);
  const __m256d vs = _mm256_setr_pd(s.real(), s.imag(), s.real(), s.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    __m256d va = _mm256_loadu_pd(pa + 2 * i);
    __m256d vb = _mm256_loadu_pd(pb + 2 * i);
    __m256d prod = cmul_pd(cmul_pd(va, vb), vs);
    __m256d vo = _mm256_loadu_pd(po + 2 * i);
    _mm256_storeu_pd(po + 2 * i, _mm256_add_pd(vo, prod));
  }
  for (; i < n; ++i) out[i] += s * a[i] * b[i];
}

void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n) {
  double* po = reinterpret_cast<double*>(out);
  const __m256d vp2 = _mm256_set1_pd(pole * pole);
  const __m256d vwr = _mm256_set1_pd(w.real());
  const __m256d vwi = _mm256_set1_pd(w.imag());
  const __m256d vpwr = _mm256_set1_pd(-pole * w.real());
  const __m256d vpwi = _mm256_set1_pd(-pole * w.imag());
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d f = _mm256_loadu_pd(freq + i);
    __m256d den = _mm256_fmadd_pd(f, f, vp2);
    // re = (-pole*wr + f*wi)/den ; im = (-pole*wi - f*wr)/den
    __m256d re = _mm256_div_pd(_mm256_fmadd_pd(f, vwi, vpwr), den);
    __m256d im = _mm256_div_pd(_mm256_fnmadd_pd(f, vwr, vpwi), den);
    __m256d lo = _mm256_unpacklo_pd(re, im);  // [r0,i0,r2,i2]
    __m256d hi = _mm256_unpackhi_pd(re, im);  // [r1,i1,r3,i3]
    __m256d out01 = _mm256_permute2f128_pd(lo, hi, 0x20);
    __m256d out23 = _mm256_permute2f128_pd(lo, hi, 0x31);
    __m256d cur01 = _mm256_loadu_pd(po + 2 * i);
    __m256d cur23 = _mm256_loadu_pd(po + 2 * i + 4);
    _mm256_storeu_pd(po + 2 * i, _mm256_add_pd(cur01, out01));
    _mm256_storeu_pd(po + 2 * i + 4, _mm256_add_pd(cur23, out23));
  }
  for (; i < n; ++i) {
    const double den = pole * pole + freq[i] * freq[i];
    out[i] += cdouble((-pole * w.real() + freq[i] * w.imag()) / den,
                      (-pole * w.imag() - freq[i] * w.real()) / den);
  }
}

}  // namespace msgw::kernels::avx2

#else  // non-AVX2 build: satisfy the symbols by delegating to the scalar path.

namespace msgw::kernels::avx2 {

cdouble cdot(const cdouble* a, const cdouble* b, std::size_t n) {
  return scalar::cdot(a, b, n);
}
void cmul_acc(const cdouble* a, const cdouble* b, cdouble s, cdouble* out, std::size_t n) {
  scalar::cmul_acc(a, b, s, out, n);
}
void pole_acc(const double* freq, double pole, cdouble w, cdouble* out, std::size_t n) {
  scalar::pole_acc(freq, pole, w, out, n);
}

}  // namespace msgw::kernels::avx2

#endif
