#pragma once

// First-order vertex correction on the imaginary-time grid. The vertex of a
// species obeys Gamma(1,2;3) = delta(1,2) delta(1,3) + (dSigma/dG) G G Gamma;
// truncating after one iteration of the GW self-energy gives
//   Gamma1(1,2;3) = delta(1,2) delta(1,3) - W(1,2) G(1,3) G(3,2),
// with W = charge^2 (v delta(t1-t2) + ~W_dyn) the species' own screened
// interaction. The correction is stored on (tau, tau) pairs with the third
// time at the origin (time-translation invariance); the instantaneous part
// of W is kept separate so its delta function collapses one time integral
// analytically instead of being sampled.
//
// Inserting Gamma1 into P = -zeta G G Gamma and Sigma = -G W Gamma yields
//   dP(1,2)     = + zeta  int d3 d4  G(1,3) G(4,1) W(3,4) G(3,2) G(2,4),
//   dSigma(1,2) = +       int d3 d4  G(1,3) W(1,4) W(3,2) G(3,4) G(4,2),
// which these routines evaluate with the rectangle rule shared with the
// Matsubara transforms. A kernel whose W vanishes identically is flagged as
// the identity and both insertions delegate to the plain GW routines, so a
// zero W reproduces GW results bit for bit.

#include "msgw/gf.hpp"

namespace msgw {

// Cost/memory guard for the O(n_tau^3 nb^4) contractions.
constexpr int kVertexMaxSites = 4;
constexpr int kVertexMaxTau = 64;

struct VertexKernel {
  bool identity = true;
  double beta = 0.0;
  int n_tau = 0;
  int nb = 0;
  Statistics parity = Statistics::Fermion;  // statistics of the species' G
  Matrix v_inst;   // charge^2 v, instantaneous part of W
  // Correction -W(1,2) G(1,3) G(3,2) with 3 = (x3, 0):
  // inst[(x1*nb+x2)*nb+x3] is (n_tau+1) x 1 over the collapsed time t1 = t2,
  // carrying -v_inst(x1,x2) G(x1,x3;t) G(x3,x2;-t);
  // dyn[(x1*nb+x2)*nb+x3] is (n_tau+1) x (n_tau+1) over (t1, t2), carrying
  // -charge^2 ~W_dyn(x1,x2;t1-t2) G(x1,x3;t1) G(x3,x2;-t2).
  MatArray inst;
  MatArray dyn;
};

// Builds Gamma1 from the species propagator, the bare interaction v and the
// dynamic part of the charge-reduced screened interaction (both on the
// shared tau grid); the species' W is charge^2 (v delta + ~W_dyn). Returns
// an identity kernel when W is identically zero. Throws ConfigError when
// nb > kVertexMaxSites or n_tau > kVertexMaxTau.
VertexKernel gamma_first_order(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                               const Matrix& v, double charge);

// P = bubble + dP. Identity kernels return polarization_bubble_tau(g_tau)
// bitwise.
ImagTimeGF polarization_vertex(const ImagTimeGF& g_tau, const VertexKernel& gamma);

// Sigma_dyn = GW term + dSigma. Identity kernels return
// self_energy_gw_tau(g_tau, w_dyn_tau, charge) bitwise. The instantaneous
// exchange (Gamma = delta delta part of the bare W) is not included here.
ImagTimeGF self_energy_vertex(const ImagTimeGF& g_tau, const ImagTimeGF& w_dyn_tau,
                              const Matrix& v, double charge, const VertexKernel& gamma);

}  // namespace msgw
