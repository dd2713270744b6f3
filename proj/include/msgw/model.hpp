#pragma once

// Model definition: a 1D lattice shared by several field species (electrons
// and nuclei on the same footing), a softened Coulomb interaction, optional
// external one-body fields, and an inverse temperature. Units are atomic
// (Hartree): hbar = 1 and e^2/(4 pi eps0) = 1, so the only species parameters
// are mass, charge and statistics.

#include <string>
#include <vector>

#include "msgw/types.hpp"

namespace msgw {

enum class Boundary { Open, Periodic };

struct SpeciesSpec {
  std::string name;
  double mass = 1.0;            // m_k > 0
  double charge = -1.0;         // Z_k != 0 (electron: -1)
  Statistics statistics = Statistics::Fermion;
  double particle_count = 1.0;  // target <N_k> for the chemical-potential search
  bool is_electron = false;
};

struct LatticeSpec {
  int n_sites = 0;
  std::vector<double> positions;  // strictly increasing
  Boundary boundary = Boundary::Open;
  double softening = 1.0;         // a in 1/sqrt(dx^2 + a^2)
  double coupling_scale = 1.0;    // lambda, multiplies the whole interaction
};

// Per-site external potentials: phi couples through the species charge,
// f[k] couples directly to species k. Empty vectors mean zero fields.
struct ExternalFields {
  Vector phi;
  std::vector<Vector> f;
};

struct ModelSystem {
  std::vector<SpeciesSpec> species;
  LatticeSpec lattice;
  Matrix coulomb;  // build_coulomb(lattice), cached
  ExternalFields fields;
  double beta = 1.0;
};

// Uniform lattice spacing; throws ConfigError if the spacing is not uniform.
// A single-site lattice has no spacing and returns 0.
double lattice_spacing(const LatticeSpec& lattice);

// v[i][j] = lambda / sqrt((x_i - x_j)^2 + a^2). Periodic lattices use the
// minimum-image distance on the ring of length n_sites * h. A zero coupling
// scale short-circuits to the zero matrix; otherwise a = 0 is rejected
// because the self term diverges.
Matrix build_coulomb(const LatticeSpec& lattice);

// Central-difference kinetic energy -(1/2m) d^2/dx^2: diagonal 1/(m h^2),
// nearest-neighbor off-diagonal -1/(2 m h^2), wrap entries accumulated for
// periodic boundaries (so periodic row sums vanish). A single site has no
// derivative information and gets a zero matrix.
Matrix build_kinetic(const LatticeSpec& lattice, const SpeciesSpec& species);

// h0_k = kinetic + diag(Z_k * phi + f_k).
Matrix build_onebody(const ModelSystem& model, int k);

// Z_k * Z_k' * v -- the charge-scaled interaction between two species.
Matrix scaled_interaction(const Matrix& v, const SpeciesSpec& a, const SpeciesSpec& b);

// Full structural validation (site counts, ordering, species parameters,
// field lengths, beta). Throws ConfigError on the first violation.
void validate_model(const ModelSystem& model);

// Convenience assembly: validates, fills the cached Coulomb matrix, and
// zero-fills absent external fields.
ModelSystem make_model(std::vector<SpeciesSpec> species, LatticeSpec lattice,
                       double beta, ExternalFields fields = {});

}  // namespace msgw
