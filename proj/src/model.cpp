#include "msgw/model.hpp"

#include <cmath>
#include <set>

namespace msgw {

double lattice_spacing(const LatticeSpec& lattice) {
  const auto& x = lattice.positions;
  if (x.size() < 2) return 0.0;
  const double h = x[1] - x[0];
  for (size_t i = 1; i + 1 < x.size(); ++i) {
    if (std::abs((x[i + 1] - x[i]) - h) > 1e-12 * std::max(1.0, std::abs(h)))
      throw ConfigError("lattice positions are not uniformly spaced");
  }
  return h;
}

Matrix build_coulomb(const LatticeSpec& lattice) {
  const int n = lattice.n_sites;
  const auto& x = lattice.positions;
  if (n <= 0 || static_cast<int>(x.size()) != n)
    throw ConfigError("lattice has inconsistent site count");
  for (int i = 0; i + 1 < n; ++i)
    if (!(x[i] < x[i + 1]))
      throw ConfigError("lattice positions must be strictly increasing");

  Matrix v = Matrix::Zero(n, n);
  if (lattice.coupling_scale == 0.0) return v;

  const double a = lattice.softening;
  if (!(a > 0.0))
    throw ConfigError("soft-Coulomb softening must be positive (the on-site term diverges at a = 0)");

  double ring = 0.0;
  if (lattice.boundary == Boundary::Periodic && n > 1)
    ring = (x[n - 1] - x[0]) + lattice_spacing(lattice);

  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double d = std::abs(x[i] - x[j]);
      if (ring > 0.0) d = std::min(d, ring - d);
      const double val = lattice.coupling_scale / std::sqrt(d * d + a * a);
      v(i, j) = val;
      v(j, i) = val;
    }
  }
  return v;
}

Matrix build_kinetic(const LatticeSpec& lattice, const SpeciesSpec& species) {
  const int n = lattice.n_sites;
  if (n <= 0 || static_cast<int>(lattice.positions.size()) != n)
    throw ConfigError("lattice has inconsistent site count");
  if (!(species.mass > 0.0)) throw ConfigError("species mass must be positive");

  Matrix t = Matrix::Zero(n, n);
  if (n == 1) return t;

  const double h = lattice_spacing(lattice);
  const double diag = 1.0 / (species.mass * h * h);
  const double hop = -0.5 * diag;
  for (int i = 0; i < n; ++i) t(i, i) = diag;
  for (int i = 0; i + 1 < n; ++i) {
    t(i, i + 1) += hop;
    t(i + 1, i) += hop;
  }
  if (lattice.boundary == Boundary::Periodic) {
    // Wrap bond; for n = 2 this doubles the single bond so row sums vanish.
    t(0, n - 1) += hop;
    t(n - 1, 0) += hop;
  }
  return t;
}

Matrix build_onebody(const ModelSystem& model, int k) {
  if (k < 0 || k >= static_cast<int>(model.species.size()))
    throw ConfigError("species index out of range");
  const auto& sp = model.species[k];
  Matrix h0 = build_kinetic(model.lattice, sp);
  const int n = model.lattice.n_sites;
  if (model.fields.phi.size() > 0)
    h0.diagonal() += sp.charge * model.fields.phi;
  if (static_cast<int>(model.fields.f.size()) > k && model.fields.f[k].size() > 0)
    h0.diagonal() += model.fields.f[k];
  (void)n;
  return h0;
}

Matrix scaled_interaction(const Matrix& v, const SpeciesSpec& a, const SpeciesSpec& b) {
  return (a.charge * b.charge) * v;
}

void validate_model(const ModelSystem& model) {
  if (!(model.beta > 0.0)) throw ConfigError("beta must be positive");
  const int n = model.lattice.n_sites;
  if (n <= 0) throw ConfigError("lattice needs at least one site");
  if (static_cast<int>(model.lattice.positions.size()) != n)
    throw ConfigError("lattice position list does not match n_sites");
  for (int i = 0; i + 1 < n; ++i)
    if (!(model.lattice.positions[i] < model.lattice.positions[i + 1]))
      throw ConfigError("lattice positions must be strictly increasing (duplicates rejected)");
  if (model.lattice.softening < 0.0) throw ConfigError("softening must be non-negative");
  if (model.lattice.coupling_scale < 0.0) throw ConfigError("coupling_scale must be non-negative");

  if (model.species.empty()) throw ConfigError("at least one species is required");
  std::set<std::string> names;
  for (const auto& sp : model.species) {
    if (sp.name.empty()) throw ConfigError("species name must be non-empty");
    if (!names.insert(sp.name).second)
      throw ConfigError("duplicate species name: " + sp.name);
    if (!(sp.mass > 0.0)) throw ConfigError("species mass must be positive: " + sp.name);
    if (sp.charge == 0.0) throw ConfigError("species charge must be nonzero: " + sp.name);
    if (sp.particle_count < 0.0)
      throw ConfigError("species particle count must be non-negative: " + sp.name);
  }

  if (model.fields.phi.size() > 0 && model.fields.phi.size() != n)
    throw ConfigError("external field phi has wrong length");
  if (!model.fields.f.empty() && model.fields.f.size() != model.species.size())
    throw ConfigError("per-species field list must match the species list");
  for (const auto& f : model.fields.f)
    if (f.size() > 0 && f.size() != n)
      throw ConfigError("per-species external field has wrong length");
}

ModelSystem make_model(std::vector<SpeciesSpec> species, LatticeSpec lattice,
                       double beta, ExternalFields fields) {
  ModelSystem m;
  m.species = std::move(species);
  m.lattice = std::move(lattice);
  m.fields = std::move(fields);
  m.beta = beta;
  validate_model(m);
  if (m.fields.phi.size() == 0) m.fields.phi = Vector::Zero(m.lattice.n_sites);
  if (m.fields.f.empty())
    m.fields.f.assign(m.species.size(), Vector::Zero(m.lattice.n_sites));
  else
    for (auto& f : m.fields.f)
      if (f.size() == 0) f = Vector::Zero(m.lattice.n_sites);
  m.coulomb = build_coulomb(m.lattice);
  return m;
}

}  // namespace msgw
