#pragma once

// Brute-force finite-temperature reference: the many-body Hamiltonian is
// assembled in the occupation-number basis (fermions as bit masks with
// Jordan-Wigner signs inside a species, bosons with a per-site occupation
// cap; different species commute), block-diagonalized per particle-number
// sector, and queried through Lehmann sums. Everything here is exact in the
// truncated space and serves as the oracle the iterative solver is tested
// against.

#include <map>
#include <optional>

#include "msgw/gf.hpp"
#include "msgw/model.hpp"

namespace msgw {

struct OracleOptions {
  int boson_cap = 8;           // max occupation per site for bosonic species
  long long dim_cap = 20000;   // refuse larger Fock dimensions
};

// Per-species occupation basis with integer state codes: fermion codes are
// site bit masks, boson codes are base-(cap+1) digit strings. Codes double
// as basis indices because every code in [0, dim) is a valid state.
struct SpeciesBasis {
  Statistics statistics = Statistics::Fermion;
  int n_sites = 0;
  int cap = 1;  // occupation limit per site (1 for fermions)
  long long dim = 0;

  int occ(long long code, int site) const;
  int number(long long code) const;
  // a_site |code> = amp |code'>; nullopt if the state is annihilated.
  std::optional<std::pair<long long, double>> annihilate(long long code, int site) const;
  // a^+_site |code>; nullopt when annihilated or outside the cap.
  std::optional<std::pair<long long, double>> create(long long code, int site) const;
};

struct FockSpace {
  std::vector<SpeciesBasis> species;
  std::vector<long long> stride;  // composite code = sum_k local_k * stride[k]
  long long dim = 0;

  long long local_code(long long composite, int k) const {
    return (composite / stride[k]) % species[k].dim;
  }
  // Sectors keyed by the per-species particle-number tuple, each listing its
  // composite codes in ascending order (deterministic).
  std::map<std::vector<int>, std::vector<long long>> sectors;
};

FockSpace build_fock_space(const ModelSystem& model, const OracleOptions& opts);

struct Sector {
  std::vector<int> numbers;
  std::vector<long long> states;
  Vector eval;   // eigenvalues, ascending
  Matrix evec;   // columns = eigenstates in the sector basis
  // Precomputed mu-independent observables per eigenstate:
  std::vector<Matrix> site_density;       // [k] is (dim x n_sites)
  std::vector<std::vector<Matrix>> rho;   // [e][k] is <psi^+_j psi_i> (n x n)
};

struct EDSpectrum {
  std::vector<Sector> sectors;
  std::map<std::vector<int>, int> sector_index;
  double e_min = 0.0;  // global ground-state energy (weight shifting)
};

// Sector-wise assembly + dense diagonalization. The Hamiltonian is
// one-body hopping within each species plus density-density interactions
// ((1/2) sum_ij v_kk (n_i n_j - delta_ij n_i) within a species, each
// unordered species pair once with weight Z_k Z_k' v across species).
EDSpectrum diagonalize(const FockSpace& space, const ModelSystem& model);

// Full dense matrix for invariants and small-system tests.
Matrix build_dense_hamiltonian(const FockSpace& space, const ModelSystem& model);

struct Observables {
  std::vector<Vector> density;      // per species, per site
  std::vector<Matrix> rho;          // per species density matrix <psi^+_j psi_i>
  std::vector<double> n_total;      // <N_k>
  double energy = 0.0;              // <H>
  double log_z = 0.0;               // ln Z relative to nothing (absolute)
};

Observables exact_observables(const FockSpace& space, const EDSpectrum& spec,
                              const ModelSystem& model, const std::vector<double>& mu);

// Per-species chemical potentials tuned so <N_k> hits each species'
// particle_count within tol (alternating bisections; the spectrum is
// mu-independent so only the thermal weights are recomputed).
std::vector<double> tune_mu(const FockSpace& space, const EDSpectrum& spec,
                            const ModelSystem& model, double tol);

struct LehmannGF {
  MatsubaraGF g;
  CMatrix tau0;      // G(0^+)
  CMatrix taubeta;   // G(beta^-)
};

// Species propagator from the Lehmann representation,
//   G_ij(i w) = (1/Z) sum_{m,n} <m|psi_i|n><n|psi_j^+|m>
//               (e^{-beta E~_m} - zeta e^{-beta E~_n}) / (i w - (E~_n - E~_m)),
// E~ = E - sum_k mu_k N_k. The bosonic nu_0 = 0 point uses the stable
// degenerate-pole form w_m expm1(-beta d)/d (-> -beta w_m as d -> 0).
LehmannGF lehmann_green(const FockSpace& space, const EDSpectrum& spec,
                        const ModelSystem& model, int k, const std::vector<double>& mu,
                        const MatsubaraMesh& mesh);

// Central finite-difference static density response at fixed mu:
// X_k(i,j) = d<n_k(i)>/dF_k(j), one matrix per species (the species' own
// one-body potential is perturbed, which for a free system equals the
// polarization P_k at nu_0).
std::vector<Matrix> static_response_fd(const ModelSystem& model, const OracleOptions& opts,
                                       const std::vector<double>& mu, double step = 1e-4);

}  // namespace msgw
