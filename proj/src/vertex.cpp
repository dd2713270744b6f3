#include "msgw/vertex.hpp"

#include <cmath>

#include "msgw/hedin.hpp"

namespace msgw {
namespace {

void check_pair(const ImagTimeGF& g, const ImagTimeGF& w) {
  if (g.n_tau != w.n_tau || std::abs(g.beta - w.beta) > 1e-12 * std::max(1.0, g.beta))
    throw ConfigError("vertex inputs must share one tau grid");
  if (w.parity != Statistics::Boson)
    throw ConfigError("the screened interaction must be bosonic");
}

}  // namespace

VertexKernel gamma_first_order(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                               const Matrix& v, double charge) {
  check_pair(g_tau, w_dyn_tau);
  const int nb = static_cast<int>(g_tau.data.rows());
  const int n = g_tau.n_tau;
  if (v.rows() != nb || v.cols() != nb) throw ConfigError("interaction matrix size mismatch");

  VertexKernel k;
  k.beta = g_tau.beta;
  k.n_tau = n;
  k.nb = nb;
  k.parity = g_tau.parity;
  const double z2 = charge * charge;
  k.v_inst = z2 * v;

  const bool v_zero = (v.array() == 0.0).all();
  if (v_zero && w_dyn_tau.data.max_abs() == 0.0) {
    k.identity = true;
    return k;
  }
  if (nb > kVertexMaxSites) throw ConfigError("vertex corrections support at most 4 sites");
  if (n > kVertexMaxTau) throw ConfigError("vertex corrections support at most 64 tau intervals");
  k.identity = false;

  const double zg = zeta(g_tau.parity);
  // w at tau difference m in [-n, n], periodic.
  auto wd = [&](int m, int a, int b) -> cdouble {
    return w_dyn_tau.data[m < 0 ? m + n : m](a, b);
  };

  k.inst = MatArray(nb * nb * nb, n + 1, 1);
  k.dyn = MatArray(nb * nb * nb, n + 1, n + 1);
  for (int a = 0; a < nb; ++a) {
    for (int b = 0; b < nb; ++b) {
      for (int c = 0; c < nb; ++c) {
        auto inst = k.inst[(a * nb + b) * nb + c];
        auto dyn = k.dyn[(a * nb + b) * nb + c];
        for (int j1 = 0; j1 <= n; ++j1) {
          // G(c,b;-tau) = zeta G(c,b;beta-tau)
          inst(j1, 0) = -k.v_inst(a, b) * g_tau.data[j1](a, c) * zg * g_tau.data[n - j1](c, b);
          for (int j2 = 0; j2 <= n; ++j2)
            dyn(j1, j2) = -z2 * wd(j1 - j2, a, b) * g_tau.data[j1](a, c) *
                          zg * g_tau.data[n - j2](c, b);
        }
      }
    }
  }
  return k;
}

ImagTimeGF polarization_vertex(const ImagTimeGF& g_tau, const VertexKernel& gamma) {
  if (gamma.identity) return polarization_bubble_tau(g_tau);
  const int nb = gamma.nb;
  const int n = gamma.n_tau;
  if (static_cast<int>(g_tau.data.rows()) != nb || g_tau.n_tau != n ||
      g_tau.parity != gamma.parity)
    throw ConfigError("propagator does not match the vertex kernel");

  const double zg = zeta(g_tau.parity);
  const double dt = g_tau.beta / n;
  auto gw = [&](int j, int r, int c) -> cdouble {
    return j < 0 ? zg * g_tau.data[j + n](r, c) : g_tau.data[j](r, c);
  };

  ImagTimeGF p = polarization_bubble_tau(g_tau);
  CVector a(n), b(n);
  for (int j = 0; j <= n; ++j) {
    for (int x1 = 0; x1 < nb; ++x1) {
      for (int x2 = 0; x2 < nb; ++x2) {
        cdouble acc(0.0, 0.0);
        for (int x3 = 0; x3 < nb; ++x3) {
          for (int x3p = 0; x3p < nb; ++x3p) {
            for (int j3 = 0; j3 < n; ++j3) {
              a(j3) = gw(j - j3, x1, x3);
              b(j3) = gw(j3 - j, x3p, x1);
            }
            const auto inst = gamma.inst[(x3 * nb + x3p) * nb + x2];
            const auto dyn = gamma.dyn[(x3 * nb + x3p) * nb + x2];
            cdouble s_inst(0.0, 0.0);
            for (int j3 = 0; j3 < n; ++j3) s_inst += a(j3) * b(j3) * inst(j3, 0);
            acc += dt * s_inst;
            acc += dt * dt * (a.transpose() * dyn.topLeftCorner(n, n) * b)(0, 0);
          }
        }
        p.data[j](x1, x2) += -zg * acc;
      }
    }
  }
  return p;
}

ImagTimeGF self_energy_vertex(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                              const Matrix& v, double charge, const VertexKernel& gamma) {
  if (gamma.identity) return self_energy_gw_tau(g_tau, w_dyn_tau, charge);
  check_pair(g_tau, w_dyn_tau);
  const int nb = gamma.nb;
  const int n = gamma.n_tau;
  if (static_cast<int>(g_tau.data.rows()) != nb || g_tau.n_tau != n ||
      g_tau.parity != gamma.parity)
    throw ConfigError("propagator does not match the vertex kernel");

  const double zg = zeta(g_tau.parity);
  const double dt = g_tau.beta / n;
  const double z2 = charge * charge;
  auto gw = [&](int j, int r, int c) -> cdouble {
    return j < 0 ? zg * g_tau.data[j + n](r, c) : g_tau.data[j](r, c);
  };
  auto wd = [&](int m, int r, int c) -> cdouble {
    return w_dyn_tau.data[m < 0 ? m + n : m](r, c);
  };
  // dGamma(3,2;4) with both time arguments wrapped into [0, n]:
  // inst part is periodic in its collapsed time, dyn picks up zeta per wrap.
  auto ginst = [&](int xa, int xb, int xc, int m) -> cdouble {
    return gamma.inst[(xa * nb + xb) * nb + xc](m < 0 ? m + n : m, 0);
  };
  auto gdyn = [&](int xa, int xb, int xc, int ja, int jb) -> cdouble {
    double s = 1.0;
    if (ja < 0) { ja += n; s *= zg; }
    if (jb < 0) { jb += n; s *= zg; }
    return s * gamma.dyn[(xa * nb + xb) * nb + xc](ja, jb);
  };

  ImagTimeGF s = self_energy_gw_tau(g_tau, w_dyn_tau, charge);
  for (int j = 0; j <= n; ++j) {
    for (int x1 = 0; x1 < nb; ++x1) {
      for (int x2 = 0; x2 < nb; ++x2) {
        cdouble acc(0.0, 0.0);
        for (int x3 = 0; x3 < nb; ++x3) {
          for (int x4 = 0; x4 < nb; ++x4) {
            // W(1,4) instantaneous: tau4 = tau_j.
            const double vi = gamma.v_inst(x1, x4);
            if (vi != 0.0) {
              cdouble t = g_tau.data[j](x1, x3) * ginst(x3, x2, x4, -j);
              cdouble t_dyn(0.0, 0.0);
              for (int j3 = 0; j3 < n; ++j3)
                t_dyn += gw(j - j3, x1, x3) * gdyn(x3, x2, x4, j3 - j, -j);
              acc += vi * (t + dt * t_dyn);
            }
            // W(1,4) dynamic: integral over tau4.
            cdouble t_i(0.0, 0.0), t_d(0.0, 0.0);
            for (int j4 = 0; j4 < n; ++j4) {
              const cdouble w14 = z2 * wd(j - j4, x1, x4);
              t_i += w14 * ginst(x3, x2, x4, -j4);
              cdouble inner(0.0, 0.0);
              for (int j3 = 0; j3 < n; ++j3)
                inner += gw(j - j3, x1, x3) * gdyn(x3, x2, x4, j3 - j4, -j4);
              t_d += w14 * inner;
            }
            acc += dt * g_tau.data[j](x1, x3) * t_i + dt * dt * t_d;
          }
        }
        s.data[j](x1, x2) += -acc;
      }
    }
  }
  return s;
}

}  // namespace msgw
