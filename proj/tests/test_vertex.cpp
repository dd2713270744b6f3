#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "msgw/gf.hpp"
#include "msgw/hedin.hpp"
#include "msgw/vertex.hpp"

using namespace msgw;

namespace {

struct Setup {
  ImagTimeGF g_tau;
  ImagTimeGF w_dyn_tau;
  Matrix v;
  double beta = 2.0;
  int n_tau = 16;
};

// Free propagator (exact tau representation) plus the screened interaction
// it induces: realistic shapes for both vertex inputs.
Setup make_setup(Statistics st, double scale) {
  Setup s;
  Matrix h(2, 2);
  h << 0.4, -0.3, -0.3, 0.7;
  const double mu = st == Statistics::Fermion ? 0.2 : -0.1;
  const MatsubaraMesh mesh{s.beta, 16, st};
  const MatsubaraGF g = g0_matsubara(h, mu, mesh);
  s.g_tau = propagator_tau(g, h, mu, s.n_tau);

  s.v = Matrix(2, 2);
  s.v << 1.2, 0.6, 0.6, 1.2;
  s.v *= scale;
  const MatsubaraGF p = tau_to_matsubara(polarization_bubble_tau(s.g_tau), 8);
  const MatsubaraGF w = screened_interaction_dynamic(p, s.v);
  s.w_dyn_tau = matsubara_to_tau(w, s.n_tau, std::optional<CMatrix>(CMatrix::Zero(2, 2)));
  return s;
}

// Direct summation of the two vertex insertions, written straight from the
// defining contractions with the shared rectangle rule:
//   dP(1,2)     = + zeta int d3 d4 G(1,3) G(4,1) W(3,4) G(3,2) G(2,4)
//   dSigma(1,2) = +      int d3 d4 G(1,3) W(1,4) W(3,2) G(3,4) G(4,2)
// with W = z^2 (v delta + ~W_dyn), 1 = (x1, tau_j), 2 = (x2, 0).
//
// Equal-time grid points are an O(dtau) quadrature ambiguity of any such
// discretization; this oracle pins the same branch resolution the production
// kernel storage implies: time *differences* hitting zero stay on the 0^+
// branch, while arguments reaching the reference point 2 through a reflection
// (-t, and the paired +t it collapses against) resolve on the 0^- branch
// (zeta G(beta)). Everything else -- weights, wraps, charge factors, signs
// and the full x/tau contraction structure -- is summed independently here.
struct Brute {
  const Setup& s;
  double z2;
  int n;
  double zg, dt;

  Brute(const Setup& setup, double charge)
      : s(setup), z2(charge * charge), n(setup.n_tau),
        zg(zeta(setup.g_tau.parity)), dt(setup.beta / setup.n_tau) {}

  // Time difference in [-n, n]: negative arguments wrap with zeta, an exact
  // zero keeps the 0^+ branch.
  cdouble gd(int j, int r, int c) const {
    return j < 0 ? zg * s.g_tau.data[j + n](r, c) : s.g_tau.data[j](r, c);
  }
  // Reflected argument -t, t in [0, n]: always zeta G(beta - t), so an exact
  // zero lands on the 0^- branch.
  cdouble gr(int t, int r, int c) const { return zg * s.g_tau.data[n - t](r, c); }
  // Positive time paired with a reflection: 0^- at t = 0.
  cdouble gp(int t, int r, int c) const {
    return t == 0 ? zg * s.g_tau.data[n](r, c) : s.g_tau.data[t](r, c);
  }
  cdouble w(int m, int r, int c) const {
    return z2 * s.w_dyn_tau.data[m < 0 ? m + n : m](r, c);
  }

  ImagTimeGF dp() const {
    ImagTimeGF out{s.beta, n, Statistics::Boson, MatArray(n + 1, 2, 2)};
    for (int j = 0; j <= n; ++j)
      for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2) {
          cdouble acc(0.0, 0.0);
          for (int x3 = 0; x3 < 2; ++x3)
            for (int x4 = 0; x4 < 2; ++x4) {
              for (int j3 = 0; j3 < n; ++j3) {
                const cdouble ring =
                    gd(j - j3, x1, x3) * gd(j3, x3, x2) * gr(j3, x2, x4) * gd(j3 - j, x4, x1);
                acc += dt * z2 * s.v(x3, x4) * ring;  // W instantaneous: t4 = t3
                for (int j4 = 0; j4 < n; ++j4)
                  acc += dt * dt * w(j3 - j4, x3, x4) * gd(j - j3, x1, x3) * gd(j3, x3, x2) *
                         gr(j4, x2, x4) * gd(j4 - j, x4, x1);
              }
            }
          out.data[j](x1, x2) = zg * acc;
        }
    return out;
  }

  ImagTimeGF dsigma() const {
    ImagTimeGF out{s.beta, n, s.g_tau.parity, MatArray(n + 1, 2, 2)};
    for (int j = 0; j <= n; ++j)
      for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2) {
          cdouble acc(0.0, 0.0);
          for (int x3 = 0; x3 < 2; ++x3)
            for (int x4 = 0; x4 < 2; ++x4) {
              // both W instantaneous: t3 = 0, t4 = tau_j
              acc += z2 * s.v(x1, x4) * z2 * s.v(x3, x2) * gd(j, x1, x3) * gd(-j, x3, x4) *
                     gp(j, x4, x2);
              // W(1,4) instantaneous, W(3,2) dynamic: t4 = tau_j
              for (int j3 = 0; j3 < n; ++j3)
                acc += dt * z2 * s.v(x1, x4) * w(j3, x3, x2) * gd(j - j3, x1, x3) *
                       gd(j3 - j, x3, x4) * gp(j, x4, x2);
              // W(1,4) dynamic, W(3,2) instantaneous: t3 = 0
              for (int j4 = 0; j4 < n; ++j4)
                acc += dt * w(j - j4, x1, x4) * z2 * s.v(x3, x2) * gd(j, x1, x3) *
                       gd(-j4, x3, x4) * gp(j4, x4, x2);
              // both dynamic
              for (int j3 = 0; j3 < n; ++j3)
                for (int j4 = 0; j4 < n; ++j4)
                  acc += dt * dt * w(j - j4, x1, x4) * w(j3, x3, x2) * gd(j - j3, x1, x3) *
                         gd(j3 - j4, x3, x4) * gp(j4, x4, x2);
            }
          out.data[j](x1, x2) = acc;
        }
    return out;
  }
};

double max_diff(const ImagTimeGF& a, const ImagTimeGF& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.data.size(); ++i)
    m = std::max(m, (a.data[i] - b.data[i]).cwiseAbs().maxCoeff());
  return m;
}

bool bitwise_equal(const ImagTimeGF& a, const ImagTimeGF& b) {
  if (!a.data.same_shape(b.data)) return false;
  for (Eigen::Index i = 0; i < a.data.size() * a.data.rows() * a.data.cols(); ++i)
    if (a.data.data()[i] != b.data.data()[i]) return false;
  return true;
}

}  // namespace

TEST_CASE("vertex insertions match a direct summation of the contractions") {
  for (Statistics st : {Statistics::Fermion, Statistics::Boson}) {
    CAPTURE(static_cast<int>(st));
    const Setup s = make_setup(st, 0.8);
    const double charge = st == Statistics::Fermion ? -1.0 : 1.0;
    const Brute brute(s, charge);
    const VertexKernel gamma = gamma_first_order(s.g_tau, s.w_dyn_tau, s.v, charge);
    REQUIRE(!gamma.identity);

    const ImagTimeGF p_full = polarization_vertex(s.g_tau, gamma);
    const ImagTimeGF p_gw = polarization_bubble_tau(s.g_tau);
    ImagTimeGF dp = p_full;
    for (Eigen::Index i = 0; i < dp.data.size(); ++i) dp.data[i] -= p_gw.data[i];
    CHECK(max_diff(dp, brute.dp()) < 1e-12);

    const ImagTimeGF s_full = self_energy_vertex(s.g_tau, s.w_dyn_tau, s.v, charge, gamma);
    const ImagTimeGF s_gw = self_energy_gw_tau(s.g_tau, s.w_dyn_tau, charge);
    ImagTimeGF ds = s_full;
    for (Eigen::Index i = 0; i < ds.data.size(); ++i) ds.data[i] -= s_gw.data[i];
    CHECK(max_diff(ds, brute.dsigma()) < 1e-12);
  }
}

TEST_CASE("vertex corrections scale linearly in P and bilinearly in Sigma") {
  const Setup s1 = make_setup(Statistics::Fermion, 1.0);
  Setup s2 = s1;
  s2.v *= 2.0;
  for (Eigen::Index i = 0; i < s2.w_dyn_tau.data.size(); ++i) s2.w_dyn_tau.data[i] *= 2.0;

  const VertexKernel g1 = gamma_first_order(s1.g_tau, s1.w_dyn_tau, s1.v, -1.0);
  const VertexKernel g2 = gamma_first_order(s2.g_tau, s2.w_dyn_tau, s2.v, -1.0);

  const ImagTimeGF bubble = polarization_bubble_tau(s1.g_tau);
  ImagTimeGF dp1 = polarization_vertex(s1.g_tau, g1);
  ImagTimeGF dp2 = polarization_vertex(s2.g_tau, g2);
  for (Eigen::Index i = 0; i < dp1.data.size(); ++i) {
    dp1.data[i] -= bubble.data[i];
    dp2.data[i] -= bubble.data[i];
    dp1.data[i] = 2.0 * CMatrix(dp1.data[i]) - CMatrix(dp2.data[i]);
  }
  CHECK(dp1.data.max_abs() < 1e-12);

  const ImagTimeGF sgw1 = self_energy_gw_tau(s1.g_tau, s1.w_dyn_tau, -1.0);
  const ImagTimeGF sgw2 = self_energy_gw_tau(s2.g_tau, s2.w_dyn_tau, -1.0);
  ImagTimeGF ds1 = self_energy_vertex(s1.g_tau, s1.w_dyn_tau, s1.v, -1.0, g1);
  ImagTimeGF ds2 = self_energy_vertex(s2.g_tau, s2.w_dyn_tau, s2.v, -1.0, g2);
  for (Eigen::Index i = 0; i < ds1.data.size(); ++i) {
    ds1.data[i] -= sgw1.data[i];
    ds2.data[i] -= sgw2.data[i];
    ds1.data[i] = 4.0 * CMatrix(ds1.data[i]) - CMatrix(ds2.data[i]);
  }
  CHECK(ds1.data.max_abs() < 1e-11);
}

TEST_CASE("zero interaction delegates to the plain gw path bitwise") {
  const Setup s = make_setup(Statistics::Fermion, 1.0);
  ImagTimeGF w0 = s.w_dyn_tau;
  for (Eigen::Index i = 0; i < w0.data.size(); ++i) w0.data[i].setZero();
  const Matrix v0 = Matrix::Zero(2, 2);

  const VertexKernel gamma = gamma_first_order(s.g_tau, w0, v0, -1.0);
  CHECK(gamma.identity);
  CHECK(bitwise_equal(polarization_vertex(s.g_tau, gamma), polarization_bubble_tau(s.g_tau)));
  CHECK(bitwise_equal(self_energy_vertex(s.g_tau, w0, v0, -1.0, gamma),
                      self_energy_gw_tau(s.g_tau, w0, -1.0)));
}

TEST_CASE("vertex guards reject oversized or mismatched inputs") {
  const Setup s = make_setup(Statistics::Fermion, 1.0);

  // Too many sites.
  ImagTimeGF big{s.beta, 8, Statistics::Fermion, MatArray(9, 5, 5)};
  ImagTimeGF bigw{s.beta, 8, Statistics::Boson, MatArray(9, 5, 5)};
  bigw.data.at(0, 0, 0) = 1.0;
  CHECK_THROWS_AS(gamma_first_order(big, bigw, Matrix::Ones(5, 5), -1.0), ConfigError);

  // Too fine a tau grid for the O(n_tau^3) contraction.
  ImagTimeGF fine{s.beta, 128, Statistics::Fermion, MatArray(129, 2, 2)};
  ImagTimeGF finew{s.beta, 128, Statistics::Boson, MatArray(129, 2, 2)};
  finew.data.at(0, 0, 0) = 1.0;
  CHECK_THROWS_AS(gamma_first_order(fine, finew, s.v, -1.0), ConfigError);

  // Mismatched grids / wrong parity of W.
  ImagTimeGF other{s.beta, 8, Statistics::Fermion, MatArray(9, 2, 2)};
  CHECK_THROWS_AS(gamma_first_order(s.g_tau, other, s.v, -1.0), ConfigError);
  ImagTimeGF wf = s.w_dyn_tau;
  wf.parity = Statistics::Fermion;
  CHECK_THROWS_AS(gamma_first_order(s.g_tau, wf, s.v, -1.0), ConfigError);

  // Kernel built for one grid refuses another propagator.
  const VertexKernel gamma = gamma_first_order(s.g_tau, s.w_dyn_tau, s.v, -1.0);
  ImagTimeGF shrunk{s.beta, 8, Statistics::Fermion, MatArray(9, 2, 2)};
  CHECK_THROWS_AS(polarization_vertex(shrunk, gamma), ConfigError);
  CHECK_THROWS_AS(self_energy_vertex(shrunk, s.w_dyn_tau, s.v, -1.0, gamma), ConfigError);
}
