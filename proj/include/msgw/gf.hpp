#pragma once

// Finite-temperature Green's-function containers and transforms.
//
// Conventions: G(i,j;tau) = -<T psi_i(tau) psi_j^+(0)> on 0 < tau < beta,
// G(tau+beta) = zeta G(tau) with zeta = -1 (fermion) / +1 (boson), and
// G(i omega_n) = int_0^beta dtau e^{i omega_n tau} G(tau) on the matching
// Matsubara mesh (omega_n = (2n+1)pi/beta fermionic, nu_n = 2n pi/beta
// bosonic). Equal-time products take tau -> 0^-, i.e. the density matrix is
// rho(i,j) = <psi_j^+ psi_i> = -G(i,j;beta^-).

#include <optional>

#include "msgw/types.hpp"

namespace msgw {

struct MatsubaraMesh {
  double beta = 1.0;
  int n_freq = 0;  // indices n = -n_freq .. n_freq-1
  Statistics parity = Statistics::Fermion;

  int n_points() const { return 2 * n_freq; }
  // Matsubara frequency for storage index idx in [0, 2 n_freq).
  double freq(int idx) const {
    const int n = idx - n_freq;
    const double pi = 3.14159265358979323846;
    return parity == Statistics::Fermion ? (2 * n + 1) * pi / beta : 2 * n * pi / beta;
  }
  // Storage index of -omega(idx), or -1 if outside the mesh.
  int mirror(int idx) const {
    const int m = parity == Statistics::Fermion ? 2 * n_freq - 1 - idx : 2 * n_freq - idx;
    return (m >= 0 && m < 2 * n_freq) ? m : -1;
  }
  bool operator==(const MatsubaraMesh& o) const {
    return beta == o.beta && n_freq == o.n_freq && parity == o.parity;
  }
};

struct MatsubaraGF {
  MatsubaraMesh mesh;
  MatArray data;  // one n_sites x n_sites matrix per frequency index
};

struct ImagTimeGF {
  double beta = 1.0;
  int n_tau = 0;  // grid tau_j = j beta / n_tau, j = 0..n_tau (both endpoints stored)
  Statistics parity = Statistics::Fermion;
  MatArray data;

  double tau(int j) const { return beta * j / n_tau; }
};

// Phase tables e^{-i omega_n tau_j} shared by the transforms. Arguments are
// reduced with exact integer arithmetic so the endpoint phases are exact
// (e^{-i omega beta} = -/+ 1) and no precision is lost at large n*j.
struct FourierTable {
  MatsubaraMesh mesh;
  int n_tau = 0;
  std::vector<double> freqs;   // omega(idx), 2 n_freq entries
  std::vector<cdouble> fwd;    // [j * 2n_freq + idx] = e^{-i omega_idx tau_j}, j = 0..n_tau
  std::vector<cdouble> bwd;    // [idx * n_tau + j] = e^{+i omega_idx tau_j}, j = 0..n_tau-1
};

FourierTable make_fourier_table(const MatsubaraMesh& mesh, int n_tau);

// Self-adjoint eigendecomposition of a real symmetric matrix.
struct EigenSystem {
  Vector eval;
  Matrix evec;
};
EigenSystem diagonalize_symmetric(const Matrix& h);

// Fermi / Bose occupation of a level at xi = eps - mu (overflow-safe).
// Bosonic occupation requires xi > 0.
double occupation(double xi, Statistics s, double beta);

// Site densities of the free propagator [(i w + mu) I - h]^-1, via
// occupations of the eigenmodes. Exact (no mesh truncation).
Vector free_density(const Matrix& h, double mu, Statistics s, double beta);

// Free propagator G0(i omega) = [(i omega + mu) I - h0]^-1, assembled from
// the eigendecomposition of h0. On a bosonic mesh a mu equal to an
// eigenvalue of h0 makes the nu_0 = 0 slice singular -> NumericalError.
MatsubaraGF g0_matsubara(const Matrix& h0, double mu, const MatsubaraMesh& mesh);

// Frequency -> imaginary time with analytic handling of the leading
// c1-tail: fermionic T(i w) = 1/(i w) with image -1/2, bosonic
// T(i nu) = 1/(i nu - xi0), xi0 = 1/beta, with image
// -e^{-xi0 tau} (1 + n_B(xi0)). Propagators have c1 = I (the default);
// kernels such as P and the dynamic part of W pass c1 = 0.
ImagTimeGF matsubara_to_tau(const MatsubaraGF& g, int n_tau,
                            const std::optional<CMatrix>& c1 = std::nullopt,
                            const FourierTable* table = nullptr);

// Imaginary time -> frequency, the exact discrete inverse of the above
// (rectangle rule on j = 0..n_tau-1; requires 2 n_freq <= n_tau). The c1
// coefficient is read off the stored endpoints, which reproduces I for
// propagators and 0 for kernels.
MatsubaraGF tau_to_matsubara(const ImagTimeGF& g, int n_freq,
                             const FourierTable* table = nullptr);

// High-accuracy tau representation of an interacting propagator: the
// one-body reference G_ref = [(i w + mu) I - h_ref]^-1 is evaluated
// analytically in tau and only the 1/w^3 remainder G - G_ref is summed over
// the mesh. Exact when the dynamic self-energy vanishes.
ImagTimeGF propagator_tau(const MatsubaraGF& g, const Matrix& h_ref, double mu,
                          int n_tau, const FourierTable* table = nullptr);

// Densities via the tau -> 0^- limit: n_i = -G(i,i;beta^-).
Vector density_from_gf(const ImagTimeGF& g);
Matrix density_matrix_from_gf(const ImagTimeGF& g);

// Same limit taken directly from the frequency data with the analytic
// one-body reference (exact for a free propagator).
Vector density_from_gf(const MatsubaraGF& g, const Matrix& h_ref, double mu);
Matrix density_matrix_from_gf(const MatsubaraGF& g, const Matrix& h_ref, double mu);

// max-norm residual of the KMS endpoint relation
// G(0^+) - zeta G(beta^-) + jump * I = 0 (jump = 1 for propagators, whose
// equal-time (anti)commutator is the identity; 0 for bosonic kernels).
double kms_residual(const ImagTimeGF& g, double jump = 1.0);

// || i w_max G(i w_max) - I ||_max at the largest frequency on the mesh.
double tail_residual(const MatsubaraGF& g);

// max over n of || conj(G(i w_n)) - G(-i w_n) ||_max (reality in tau).
double reality_residual(const MatsubaraGF& g);

}  // namespace msgw
