#include "msgw/gf.hpp"

#include <cmath>

#include "msgw/kernels.hpp"

namespace msgw {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Scalar tail basis: T(i omega) subtracted in frequency, t(tau) added back in
// time. Fermionic: 1/(i w) <-> -1/2. Bosonic: 1/(i nu - xi0) with xi0 = 1/beta
// <-> -e^{-xi0 tau} (1 + n_B(xi0)); the shifted pole avoids nu_0 = 0.
cdouble tail_freq(double w, Statistics parity, double beta) {
  if (parity == Statistics::Fermion) return 1.0 / cdouble(0.0, w);
  const double xi0 = 1.0 / beta;
  return 1.0 / cdouble(-xi0, w);
}

double tail_tau(double tau, Statistics parity, double beta) {
  if (parity == Statistics::Fermion) return -0.5;
  const double xi0 = 1.0 / beta;
  return -std::exp(-xi0 * tau) / (1.0 - std::exp(-beta * xi0));
}

// c1 from the stored endpoints: fermion -(G(0)+G(beta)), boson G(beta)-G(0).
CMatrix endpoint_c1(const ImagTimeGF& g) {
  const CMatrix g0 = g.data[0];
  const CMatrix gb = g.data[g.n_tau];
  return g.parity == Statistics::Fermion ? CMatrix(-(g0 + gb)) : CMatrix(gb - g0);
}

// Stable single-level tau propagator -e^{-xi tau} (1 -/+ n(xi)) ... written
// in the overflow-free form valid for either sign of xi (fermions) or xi > 0
// (bosons).
double level_tau(double xi, double tau, double beta, Statistics s) {
  if (s == Statistics::Fermion) {
    if (xi >= 0.0) return -std::exp(-xi * tau) / (1.0 + std::exp(-beta * xi));
    return -std::exp(xi * (beta - tau)) / (1.0 + std::exp(beta * xi));
  }
  if (!(xi > 0.0))
    throw NumericalError("bosonic propagator requires mu below the one-body spectrum");
  return -std::exp(-xi * tau) / (1.0 - std::exp(-beta * xi));
}

}  // namespace

FourierTable make_fourier_table(const MatsubaraMesh& mesh, int n_tau) {
  if (n_tau < 1) throw ConfigError("n_tau must be positive");
  FourierTable t;
  t.mesh = mesh;
  t.n_tau = n_tau;
  const int nf2 = mesh.n_points();
  t.freqs.resize(nf2);
  for (int idx = 0; idx < nf2; ++idx) t.freqs[idx] = mesh.freq(idx);

  // omega_n tau_j = pi k / n_tau with k = (2n+1) j (fermions) or 2 n j
  // (bosons); reduce k mod 2 n_tau exactly before touching floating point.
  const auto phase = [&](int idx, int j) {
    const long long n = idx - mesh.n_freq;
    const long long k_raw = (mesh.parity == Statistics::Fermion ? 2 * n + 1 : 2 * n) *
                            static_cast<long long>(j);
    const long long period = 2LL * n_tau;
    const long long k = ((k_raw % period) + period) % period;
    if (k == 0) return cdouble(1.0, 0.0);
    if (k == n_tau) return cdouble(-1.0, 0.0);  // sin(pi) != 0 in floating point
    const double angle = -kPi * static_cast<double>(k) / n_tau;
    return cdouble(std::cos(angle), std::sin(angle));
  };

  t.fwd.resize(static_cast<size_t>(n_tau + 1) * nf2);
  for (int j = 0; j <= n_tau; ++j)
    for (int idx = 0; idx < nf2; ++idx)
      t.fwd[static_cast<size_t>(j) * nf2 + idx] = phase(idx, j);

  t.bwd.resize(static_cast<size_t>(nf2) * n_tau);
  for (int idx = 0; idx < nf2; ++idx)
    for (int j = 0; j < n_tau; ++j)
      t.bwd[static_cast<size_t>(idx) * n_tau + j] = std::conj(phase(idx, j));
  return t;
}

EigenSystem diagonalize_symmetric(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw NumericalError("symmetric eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double occupation(double xi, Statistics s, double beta) {
  if (s == Statistics::Fermion) {
    if (xi >= 0.0) {
      const double e = std::exp(-beta * xi);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(beta * xi));
  }
  if (!(xi > 0.0))
    throw NumericalError("bosonic occupation requires mu below the one-body spectrum");
  return 1.0 / std::expm1(beta * xi);
}

Vector free_density(const Matrix& h, double mu, Statistics s, double beta) {
  const EigenSystem es = diagonalize_symmetric(h);
  Vector n = Vector::Zero(h.rows());
  for (Eigen::Index a = 0; a < es.eval.size(); ++a) {
    const double occ = occupation(es.eval[a] - mu, s, beta);
    n += occ * es.evec.col(a).cwiseAbs2();
  }
  return n;
}

MatsubaraGF g0_matsubara(const Matrix& h0, double mu, const MatsubaraMesh& mesh) {
  const Eigen::Index n = h0.rows();
  const EigenSystem es = diagonalize_symmetric(h0);

  if (mesh.parity == Statistics::Boson) {
    const double scale = std::max(1.0, es.eval.cwiseAbs().maxCoeff());
    for (Eigen::Index a = 0; a < n; ++a)
      if (std::abs(es.eval[a] - mu) < 1e-14 * scale)
        throw NumericalError("singular bosonic propagator: mu coincides with an eigenvalue at nu_0 = 0");
  }

  MatsubaraGF g;
  g.mesh = mesh;
  g.data = MatArray(mesh.n_points(), n, n);
  CVector pole(n);
  for (int idx = 0; idx < mesh.n_points(); ++idx) {
    const cdouble z(mu, mesh.freq(idx));
    for (Eigen::Index a = 0; a < n; ++a) pole[a] = 1.0 / (z - es.eval[a]);
    g.data[idx] = es.evec.cast<cdouble>() * pole.asDiagonal() *
                  es.evec.transpose().cast<cdouble>();
  }
  return g;
}

ImagTimeGF matsubara_to_tau(const MatsubaraGF& g, int n_tau,
                            const std::optional<CMatrix>& c1_opt,
                            const FourierTable* table) {
  const Eigen::Index nb = g.data.rows();
  const int nf2 = g.mesh.n_points();
  if (g.data.size() != nf2) throw ConfigError("Matsubara data does not match its mesh");

  FourierTable local;
  if (!table) {
    local = make_fourier_table(g.mesh, n_tau);
    table = &local;
  } else if (!(table->mesh == g.mesh) || table->n_tau != n_tau) {
    throw ConfigError("Fourier table does not match the requested transform");
  }

  const CMatrix c1 = c1_opt ? *c1_opt : CMatrix(CMatrix::Identity(nb, nb));
  if (c1.rows() != nb || c1.cols() != nb) throw ConfigError("c1 has wrong shape");

  const double beta = g.mesh.beta;
  // Pack tail-subtracted coefficients contiguously per matrix entry.
  MatArray coef(nb * nb, nf2, 1);
  for (int idx = 0; idx < nf2; ++idx) {
    const cdouble tw = tail_freq(table->freqs[idx], g.mesh.parity, beta);
    for (Eigen::Index c = 0; c < nb; ++c)
      for (Eigen::Index r = 0; r < nb; ++r)
        coef.at(r * nb + c, idx, 0) = g.data.at(idx, r, c) - c1(r, c) * tw;
  }

  ImagTimeGF out;
  out.beta = beta;
  out.n_tau = n_tau;
  out.parity = g.mesh.parity;
  out.data = MatArray(n_tau + 1, nb, nb);
  for (int j = 0; j <= n_tau; ++j) {
    const cdouble* ph = &table->fwd[static_cast<size_t>(j) * nf2];
    const double tt = tail_tau(out.tau(j), g.mesh.parity, beta);
    for (Eigen::Index r = 0; r < nb; ++r)
      for (Eigen::Index c = 0; c < nb; ++c)
        out.data.at(j, r, c) =
            kernels::cdot(coef.slice_data(r * nb + c), ph, nf2) / beta + c1(r, c) * tt;
  }
  return out;
}

MatsubaraGF tau_to_matsubara(const ImagTimeGF& g, int n_freq, const FourierTable* table) {
  const Eigen::Index nb = g.data.rows();
  if (g.data.size() != g.n_tau + 1) throw ConfigError("tau data does not match its grid");
  if (2 * n_freq > g.n_tau)
    throw ConfigError("tau grid too coarse for the requested frequency count (need 2 n_freq <= n_tau)");

  MatsubaraMesh mesh{g.beta, n_freq, g.parity};
  FourierTable local;
  if (!table) {
    local = make_fourier_table(mesh, g.n_tau);
    table = &local;
  } else if (!(table->mesh == mesh) || table->n_tau != g.n_tau) {
    throw ConfigError("Fourier table does not match the requested transform");
  }

  const CMatrix c1 = endpoint_c1(g);
  const double beta = g.beta;
  const int nt = g.n_tau;

  // Tail-subtracted samples on j = 0..n_tau-1, contiguous per entry.
  MatArray samp(nb * nb, nt, 1);
  for (int j = 0; j < nt; ++j) {
    const double tt = tail_tau(g.tau(j), g.parity, beta);
    for (Eigen::Index c = 0; c < nb; ++c)
      for (Eigen::Index r = 0; r < nb; ++r)
        samp.at(r * nb + c, j, 0) = g.data.at(j, r, c) - c1(r, c) * tt;
  }

  MatsubaraGF out;
  out.mesh = mesh;
  out.data = MatArray(mesh.n_points(), nb, nb);
  const double wq = beta / nt;  // rectangle-rule weight
  for (int idx = 0; idx < mesh.n_points(); ++idx) {
    const cdouble* ph = &table->bwd[static_cast<size_t>(idx) * nt];
    const cdouble tw = tail_freq(table->freqs[idx], g.parity, beta);
    for (Eigen::Index r = 0; r < nb; ++r)
      for (Eigen::Index c = 0; c < nb; ++c)
        out.data.at(idx, r, c) =
            wq * kernels::cdot(samp.slice_data(r * nb + c), ph, nt) + c1(r, c) * tw;
  }
  return out;
}

ImagTimeGF propagator_tau(const MatsubaraGF& g, const Matrix& h_ref, double mu,
                          int n_tau, const FourierTable* table) {
  const Eigen::Index nb = g.data.rows();
  if (h_ref.rows() != nb || h_ref.cols() != nb)
    throw ConfigError("reference Hamiltonian has wrong shape");
  const int nf2 = g.mesh.n_points();

  FourierTable local;
  if (!table) {
    local = make_fourier_table(g.mesh, n_tau);
    table = &local;
  } else if (!(table->mesh == g.mesh) || table->n_tau != n_tau) {
    throw ConfigError("Fourier table does not match the requested transform");
  }

  const EigenSystem es = diagonalize_symmetric(h_ref);
  const double beta = g.mesh.beta;
  const Statistics s = g.mesh.parity;

  // Remainder G - G_ref on the mesh (decays like 1/w^3), packed per entry.
  MatArray coef(nb * nb, nf2, 1);
  CVector pole(nb);
  for (int idx = 0; idx < nf2; ++idx) {
    const cdouble z(mu, table->freqs[idx]);
    for (Eigen::Index a = 0; a < nb; ++a) pole[a] = 1.0 / (z - es.eval[a]);
    const CMatrix gref = es.evec.cast<cdouble>() * pole.asDiagonal() *
                         es.evec.transpose().cast<cdouble>();
    for (Eigen::Index c = 0; c < nb; ++c)
      for (Eigen::Index r = 0; r < nb; ++r)
        coef.at(r * nb + c, idx, 0) = g.data.at(idx, r, c) - gref(r, c);
  }

  ImagTimeGF out;
  out.beta = beta;
  out.n_tau = n_tau;
  out.parity = s;
  out.data = MatArray(n_tau + 1, nb, nb);
  Vector wa(nb);
  for (int j = 0; j <= n_tau; ++j) {
    const double tau = out.tau(j);
    for (Eigen::Index a = 0; a < nb; ++a)
      wa[a] = level_tau(es.eval[a] - mu, tau, beta, s);
    const Matrix gref_tau = es.evec * wa.asDiagonal() * es.evec.transpose();
    const cdouble* ph = &table->fwd[static_cast<size_t>(j) * nf2];
    for (Eigen::Index r = 0; r < nb; ++r)
      for (Eigen::Index c = 0; c < nb; ++c)
        out.data.at(j, r, c) =
            gref_tau(r, c) + kernels::cdot(coef.slice_data(r * nb + c), ph, nf2) / beta;
  }
  return out;
}

Vector density_from_gf(const ImagTimeGF& g) {
  Vector n(g.data.rows());
  for (Eigen::Index i = 0; i < n.size(); ++i)
    n[i] = -g.data.at(g.n_tau, i, i).real();
  return n;
}

Matrix density_matrix_from_gf(const ImagTimeGF& g) {
  return -g.data[g.n_tau].real();
}

Matrix density_matrix_from_gf(const MatsubaraGF& g, const Matrix& h_ref, double mu) {
  const Eigen::Index nb = g.data.rows();
  if (h_ref.rows() != nb || h_ref.cols() != nb)
    throw ConfigError("reference Hamiltonian has wrong shape");
  const EigenSystem es = diagonalize_symmetric(h_ref);
  const double beta = g.mesh.beta;
  const Statistics s = g.mesh.parity;

  // rho_ref from occupations; remainder summed over the mesh. The series of
  // G - G_ref converges absolutely (1/w^3) and e^{-i w beta} = zeta exactly.
  Vector occ(nb);
  for (Eigen::Index a = 0; a < nb; ++a)
    occ[a] = occupation(es.eval[a] - mu, s, beta);
  Matrix rho = es.evec * occ.asDiagonal() * es.evec.transpose();

  CMatrix corr = CMatrix::Zero(nb, nb);
  CVector pole(nb);
  for (int idx = 0; idx < g.mesh.n_points(); ++idx) {
    const cdouble z(mu, g.mesh.freq(idx));
    for (Eigen::Index a = 0; a < nb; ++a) pole[a] = 1.0 / (z - es.eval[a]);
    corr += g.data[idx];
    corr -= es.evec.cast<cdouble>() * pole.asDiagonal() * es.evec.transpose().cast<cdouble>();
  }
  // n = -G(beta^-); G(beta) = G_ref(beta) + zeta/beta * sum(G - G_ref).
  rho -= (zeta(s) / beta) * corr.real();
  return rho;
}

Vector density_from_gf(const MatsubaraGF& g, const Matrix& h_ref, double mu) {
  return density_matrix_from_gf(g, h_ref, mu).diagonal();
}

double kms_residual(const ImagTimeGF& g, double jump) {
  const Eigen::Index nb = g.data.rows();
  const CMatrix r = g.data[0] - zeta(g.parity) * g.data[g.n_tau] +
                    jump * CMatrix::Identity(nb, nb);
  return r.cwiseAbs().maxCoeff();
}

double tail_residual(const MatsubaraGF& g) {
  const int idx = g.mesh.n_points() - 1;
  const Eigen::Index nb = g.data.rows();
  const CMatrix r = cdouble(0.0, g.mesh.freq(idx)) * g.data[idx] - CMatrix::Identity(nb, nb);
  return r.cwiseAbs().maxCoeff();
}

double reality_residual(const MatsubaraGF& g) {
  double worst = 0.0;
  for (int idx = 0; idx < g.mesh.n_points(); ++idx) {
    const int m = g.mesh.mirror(idx);
    if (m < 0) continue;
    const CMatrix r = g.data[idx].conjugate() - CMatrix(g.data[m]);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace msgw
