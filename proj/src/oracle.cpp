#include "msgw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/Dense>

#include "msgw/kernels.hpp"

namespace msgw {
namespace {

// Thermal weights below this (relative to the shifted ground state) are
// dropped from Lehmann sums; the induced error is ~1e-16 per pole.
constexpr double kWeightCut = 1e-16;

long long ipow(long long base, int exp) {
  long long r = 1;
  for (int t = 0; t < exp; ++t) r *= base;
  return r;
}

struct Terms {
  std::vector<Matrix> onebody;               // kinetic + Z phi + F
  std::vector<Matrix> vsame;                 // Z_k^2 v
  std::vector<std::vector<Matrix>> vcross;   // [a][b], a < b: Z_a Z_b v
};

Terms make_terms(const ModelSystem& model) {
  Terms t;
  const int ns = static_cast<int>(model.species.size());
  t.onebody.reserve(ns);
  t.vsame.reserve(ns);
  t.vcross.assign(ns, {});
  for (int k = 0; k < ns; ++k) {
    t.onebody.push_back(build_onebody(model, k));
    t.vsame.push_back(scaled_interaction(model.coulomb, model.species[k], model.species[k]));
    t.vcross[k].assign(ns, Matrix());
    for (int kp = k + 1; kp < ns; ++kp)
      t.vcross[k][kp] = scaled_interaction(model.coulomb, model.species[k], model.species[kp]);
  }
  return t;
}

void decode_occ(const FockSpace& space, long long code, std::vector<std::vector<int>>& occ) {
  const int ns = static_cast<int>(space.species.size());
  occ.resize(ns);
  for (int k = 0; k < ns; ++k) {
    const SpeciesBasis& b = space.species[k];
    long long local = space.local_code(code, k);
    occ[k].resize(b.n_sites);
    for (int i = 0; i < b.n_sites; ++i) {
      occ[k][i] = static_cast<int>(local % (b.cap + 1));
      local /= (b.cap + 1);
    }
  }
}

double diag_energy(const Terms& t, const std::vector<std::vector<int>>& occ) {
  double e = 0.0;
  const int ns = static_cast<int>(t.onebody.size());
  for (int k = 0; k < ns; ++k) {
    const int n = static_cast<int>(occ[k].size());
    for (int i = 0; i < n; ++i) {
      if (occ[k][i] == 0) continue;
      e += t.onebody[k](i, i) * occ[k][i];
      for (int j = 0; j < n; ++j) {
        const double vij = t.vsame[k](i, j);
        if (vij == 0.0) continue;
        e += 0.5 * vij * (static_cast<double>(occ[k][i]) * occ[k][j] - (i == j ? occ[k][i] : 0));
      }
    }
    for (int kp = k + 1; kp < ns; ++kp) {
      const Matrix& v = t.vcross[k][kp];
      for (int i = 0; i < n; ++i) {
        if (occ[k][i] == 0) continue;
        for (int j = 0; j < static_cast<int>(occ[kp].size()); ++j) {
          if (occ[kp][j] != 0) e += v(i, j) * occ[k][i] * occ[kp][j];
        }
      }
    }
  }
  return e;
}

// Calls emit(target_code, amplitude) for every one-body hop D_k(i,j) a^+_i a_j
// (i != j) acting on |code>.
template <typename Emit>
void apply_hops(const FockSpace& space, const Terms& t, long long code, Emit&& emit) {
  const int ns = static_cast<int>(space.species.size());
  for (int k = 0; k < ns; ++k) {
    const SpeciesBasis& b = space.species[k];
    const long long local = space.local_code(code, k);
    const Matrix& d = t.onebody[k];
    for (int j = 0; j < b.n_sites; ++j) {
      auto ann = b.annihilate(local, j);
      if (!ann) continue;
      for (int i = 0; i < b.n_sites; ++i) {
        if (i == j || d(i, j) == 0.0) continue;
        auto cre = b.create(ann->first, i);
        if (!cre) continue;
        const long long target = code + (cre->first - local) * space.stride[k];
        emit(target, d(i, j) * ann->second * cre->second);
      }
    }
  }
}

int position_of(const std::vector<long long>& states, long long code) {
  auto it = std::lower_bound(states.begin(), states.end(), code);
  return static_cast<int>(it - states.begin());
}

// Log-sum-exp over sector Boltzmann sums; used by tune_mu so each candidate
// chemical potential costs O(#sectors).
struct SectorBoltz {
  std::vector<double> log_sum;              // ln sum_e exp(-beta E_e)
  std::vector<std::vector<int>> numbers;
};

SectorBoltz sector_boltz(const EDSpectrum& spec, double beta) {
  SectorBoltz sb;
  for (const Sector& s : spec.sectors) {
    const double m = -beta * s.eval(0);
    double acc = 0.0;
    for (int e = 0; e < s.eval.size(); ++e) acc += std::exp(-beta * s.eval(e) - m);
    sb.log_sum.push_back(m + std::log(acc));
    sb.numbers.push_back(s.numbers);
  }
  return sb;
}

std::vector<double> mean_numbers(const SectorBoltz& sb, double beta, const std::vector<double>& mu) {
  const int ns = static_cast<int>(mu.size());
  std::vector<double> ell(sb.log_sum.size());
  double top = -std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < sb.log_sum.size(); ++s) {
    double shift = 0.0;
    for (int k = 0; k < ns; ++k) shift += mu[k] * sb.numbers[s][k];
    ell[s] = sb.log_sum[s] + beta * shift;
    top = std::max(top, ell[s]);
  }
  double z = 0.0;
  std::vector<double> n(ns, 0.0);
  for (size_t s = 0; s < sb.log_sum.size(); ++s) {
    const double w = std::exp(ell[s] - top);
    z += w;
    for (int k = 0; k < ns; ++k) n[k] += w * sb.numbers[s][k];
  }
  for (int k = 0; k < ns; ++k) n[k] /= z;
  return n;
}

}  // namespace

int SpeciesBasis::occ(long long code, int site) const {
  return static_cast<int>((code / ipow(cap + 1, site)) % (cap + 1));
}

int SpeciesBasis::number(long long code) const {
  int n = 0;
  for (int i = 0; i < n_sites; ++i) {
    n += static_cast<int>(code % (cap + 1));
    code /= (cap + 1);
  }
  return n;
}

std::optional<std::pair<long long, double>> SpeciesBasis::annihilate(long long code, int site) const {
  if (statistics == Statistics::Fermion) {
    const long long bit = 1LL << site;
    if (!(code & bit)) return std::nullopt;
    const int below = __builtin_popcountll(code & (bit - 1));
    return std::make_pair(code & ~bit, (below & 1) ? -1.0 : 1.0);
  }
  const long long p = ipow(cap + 1, site);
  const int d = static_cast<int>((code / p) % (cap + 1));
  if (d == 0) return std::nullopt;
  return std::make_pair(code - p, std::sqrt(static_cast<double>(d)));
}

std::optional<std::pair<long long, double>> SpeciesBasis::create(long long code, int site) const {
  if (statistics == Statistics::Fermion) {
    const long long bit = 1LL << site;
    if (code & bit) return std::nullopt;
    const int below = __builtin_popcountll(code & (bit - 1));
    return std::make_pair(code | bit, (below & 1) ? -1.0 : 1.0);
  }
  const long long p = ipow(cap + 1, site);
  const int d = static_cast<int>((code / p) % (cap + 1));
  if (d == cap) return std::nullopt;  // truncated space: raising past the cap projects to zero
  return std::make_pair(code + p, std::sqrt(static_cast<double>(d + 1)));
}

FockSpace build_fock_space(const ModelSystem& model, const OracleOptions& opts) {
  if (opts.boson_cap < 1) throw ConfigError("oracle boson_cap must be >= 1");
  if (opts.dim_cap < 1) throw ConfigError("oracle dim_cap must be >= 1");
  FockSpace space;
  long long dim = 1;
  for (const SpeciesSpec& sp : model.species) {
    SpeciesBasis b;
    b.statistics = sp.statistics;
    b.n_sites = model.lattice.n_sites;
    b.cap = (sp.statistics == Statistics::Fermion) ? 1 : opts.boson_cap;
    if (b.n_sites > 16) throw ConfigError("oracle supports at most 16 sites");
    b.dim = ipow(b.cap + 1, b.n_sites);
    space.stride.push_back(dim);
    if (dim > opts.dim_cap / b.dim + 1) throw ConfigError("oracle Fock dimension exceeds dim_cap");
    dim *= b.dim;
    space.species.push_back(b);
  }
  if (dim > opts.dim_cap) {
    throw ConfigError("oracle Fock dimension " + std::to_string(dim) + " exceeds dim_cap " +
                      std::to_string(opts.dim_cap));
  }
  space.dim = dim;
  const int ns = static_cast<int>(space.species.size());
  std::vector<int> numbers(ns);
  for (long long code = 0; code < dim; ++code) {
    for (int k = 0; k < ns; ++k) numbers[k] = space.species[k].number(space.local_code(code, k));
    space.sectors[numbers].push_back(code);  // codes ascend, so each list is sorted
  }
  return space;
}

Matrix build_dense_hamiltonian(const FockSpace& space, const ModelSystem& model) {
  const Terms terms = make_terms(model);
  Matrix h = Matrix::Zero(space.dim, space.dim);
  std::vector<std::vector<int>> occ;
  for (long long s = 0; s < space.dim; ++s) {
    decode_occ(space, s, occ);
    h(s, s) += diag_energy(terms, occ);
    apply_hops(space, terms, s, [&](long long t, double v) { h(t, s) += v; });
  }
  return h;
}

EDSpectrum diagonalize(const FockSpace& space, const ModelSystem& model) {
  const Terms terms = make_terms(model);
  const int ns = static_cast<int>(space.species.size());
  EDSpectrum spec;
  spec.e_min = std::numeric_limits<double>::infinity();
  std::vector<std::vector<int>> occ;
  for (const auto& [numbers, states] : space.sectors) {
    Sector sec;
    sec.numbers = numbers;
    sec.states = states;
    const int dim = static_cast<int>(states.size());
    Matrix h = Matrix::Zero(dim, dim);
    std::vector<Matrix> basis_occ(ns);  // occupations of each basis state
    for (int k = 0; k < ns; ++k) basis_occ[k].setZero(dim, space.species[k].n_sites);
    for (int c = 0; c < dim; ++c) {
      decode_occ(space, states[c], occ);
      h(c, c) += diag_energy(terms, occ);
      for (int k = 0; k < ns; ++k)
        for (int i = 0; i < space.species[k].n_sites; ++i) basis_occ[k](c, i) = occ[k][i];
      apply_hops(space, terms, states[c],
                 [&](long long t, double v) { h(position_of(states, t), c) += v; });
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    sec.eval = es.eigenvalues();
    sec.evec = es.eigenvectors();
    spec.e_min = std::min(spec.e_min, sec.eval(0));

    const Matrix weight = sec.evec.array().square().matrix().transpose();  // (eig x basis)
    sec.site_density.resize(ns);
    for (int k = 0; k < ns; ++k) sec.site_density[k] = weight * basis_occ[k];

    // <e| psi^+_j psi_i |e> per eigenstate and species.
    sec.rho.assign(dim, std::vector<Matrix>(ns));
    for (int e = 0; e < dim; ++e)
      for (int k = 0; k < ns; ++k)
        sec.rho[e][k].setZero(space.species[k].n_sites, space.species[k].n_sites);
    for (int k = 0; k < ns; ++k) {
      const SpeciesBasis& b = space.species[k];
      for (int i = 0; i < b.n_sites; ++i) {
        for (int j = 0; j < b.n_sites; ++j) {
          Matrix op = Matrix::Zero(dim, dim);
          for (int c = 0; c < dim; ++c) {
            const long long local = space.local_code(states[c], k);
            auto ann = b.annihilate(local, i);
            if (!ann) continue;
            auto cre = b.create(ann->first, j);
            if (!cre) continue;
            const long long target = states[c] + (cre->first - local) * space.stride[k];
            op(position_of(states, target), c) = ann->second * cre->second;
          }
          const Matrix r = sec.evec.transpose() * op * sec.evec;
          for (int e = 0; e < dim; ++e) sec.rho[e][k](i, j) = r(e, e);
        }
      }
    }
    spec.sector_index[numbers] = static_cast<int>(spec.sectors.size());
    spec.sectors.push_back(std::move(sec));
  }
  return spec;
}

Observables exact_observables(const FockSpace& space, const EDSpectrum& spec,
                              const ModelSystem& model, const std::vector<double>& mu) {
  const int ns = static_cast<int>(space.species.size());
  const double beta = model.beta;
  double emin_tilde = std::numeric_limits<double>::infinity();
  for (const Sector& s : spec.sectors) {
    double shift = 0.0;
    for (int k = 0; k < ns; ++k) shift += mu[k] * s.numbers[k];
    emin_tilde = std::min(emin_tilde, s.eval(0) - shift);
  }
  Observables obs;
  obs.density.resize(ns);
  obs.rho.resize(ns);
  obs.n_total.assign(ns, 0.0);
  for (int k = 0; k < ns; ++k) {
    obs.density[k] = Vector::Zero(space.species[k].n_sites);
    obs.rho[k] = Matrix::Zero(space.species[k].n_sites, space.species[k].n_sites);
  }
  double z = 0.0;
  for (const Sector& s : spec.sectors) {
    double shift = 0.0;
    for (int k = 0; k < ns; ++k) shift += mu[k] * s.numbers[k];
    for (int e = 0; e < s.eval.size(); ++e) {
      const double w = std::exp(-beta * (s.eval(e) - shift - emin_tilde));
      if (w < kWeightCut) continue;
      z += w;
      obs.energy += w * s.eval(e);
      for (int k = 0; k < ns; ++k) {
        obs.n_total[k] += w * s.numbers[k];
        obs.density[k] += w * s.site_density[k].row(e).transpose();
        obs.rho[k] += w * s.rho[e][k];
      }
    }
  }
  obs.energy /= z;
  for (int k = 0; k < ns; ++k) {
    obs.n_total[k] /= z;
    obs.density[k] /= z;
    obs.rho[k] /= z;
  }
  obs.log_z = std::log(z) - beta * emin_tilde;
  return obs;
}

std::vector<double> tune_mu(const FockSpace& space, const EDSpectrum& spec,
                            const ModelSystem& model, double tol) {
  const int ns = static_cast<int>(space.species.size());
  const SectorBoltz sb = sector_boltz(spec, model.beta);
  std::vector<double> target(ns), mu(ns, 0.0);
  for (int k = 0; k < ns; ++k) {
    target[k] = model.species[k].particle_count;
    const double capacity = static_cast<double>(space.species[k].cap) * space.species[k].n_sites;
    if (target[k] <= 0.0 || target[k] >= capacity) {
      throw ConfigError("particle count for species '" + model.species[k].name +
                        "' must lie strictly between 0 and " + std::to_string(capacity));
    }
  }
  auto n_of = [&](int k) { return mean_numbers(sb, model.beta, mu)[k]; };
  for (int round = 0; round < 200; ++round) {
    bool done = true;
    for (int k = 0; k < ns; ++k) {
      if (std::abs(n_of(k) - target[k]) <= tol) continue;
      done = false;
      double lo = mu[k] - 1.0, hi = mu[k] + 1.0, width = 1.0;
      auto eval_at = [&](double m) {
        mu[k] = m;
        return n_of(k);
      };
      for (int t = 0; t < 200 && eval_at(lo) > target[k]; ++t) lo -= (width *= 2.0);
      width = 1.0;
      for (int t = 0; t < 200 && eval_at(hi) < target[k]; ++t) hi += (width *= 2.0);
      for (int t = 0; t < 200; ++t) {
        const double mid = 0.5 * (lo + hi);
        if (eval_at(mid) < target[k]) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) break;
      }
      mu[k] = 0.5 * (lo + hi);
    }
    if (done) return mu;
  }
  throw NumericalError("chemical-potential tuning did not converge");
}

LehmannGF lehmann_green(const FockSpace& space, const EDSpectrum& spec,
                        const ModelSystem& model, int k, const std::vector<double>& mu,
                        const MatsubaraMesh& mesh) {
  const SpeciesBasis& b = space.species[k];
  const int nb = b.n_sites;
  const int ns = static_cast<int>(space.species.size());
  const int nf2 = mesh.n_points();
  const double beta = model.beta;
  const double zeta_k = zeta(model.species[k].statistics);
  if (mesh.parity != model.species[k].statistics)
    throw ConfigError("Matsubara mesh parity does not match the species statistics");
  if (std::abs(mesh.beta - beta) > 1e-12 * std::max(1.0, beta))
    throw ConfigError("Matsubara mesh beta does not match the model");

  std::vector<double> tilde_min(spec.sectors.size());
  double emin_tilde = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < spec.sectors.size(); ++s) {
    double shift = 0.0;
    for (int kk = 0; kk < ns; ++kk) shift += mu[kk] * spec.sectors[s].numbers[kk];
    tilde_min[s] = spec.sectors[s].eval(0) - shift;
    emin_tilde = std::min(emin_tilde, tilde_min[s]);
  }
  double z = 0.0;
  for (size_t s = 0; s < spec.sectors.size(); ++s) {
    for (int e = 0; e < spec.sectors[s].eval.size(); ++e)
      z += std::exp(-beta * (spec.sectors[s].eval(e) - (spec.sectors[s].eval(0) - tilde_min[s]) - emin_tilde));
  }

  Vector freqs(nf2);
  for (int idx = 0; idx < nf2; ++idx) freqs(idx) = mesh.freq(idx);
  const int izero = (mesh.parity == Statistics::Boson) ? mesh.n_freq : -1;

  MatArray buf(nb * nb, nf2, 1);
  CMatrix tau0 = CMatrix::Zero(nb, nb), taubeta = CMatrix::Zero(nb, nb);

  std::vector<Matrix> m_op(nb);
  for (size_t si = 0; si < spec.sectors.size(); ++si) {
    const Sector& low = spec.sectors[si];
    std::vector<int> up_numbers = low.numbers;
    up_numbers[k] += 1;
    auto it = spec.sector_index.find(up_numbers);
    if (it == spec.sector_index.end()) continue;
    const Sector& high = spec.sectors[it->second];
    const double wlow_max = std::exp(-beta * (tilde_min[si] - emin_tilde));
    const double whigh_max = std::exp(-beta * (tilde_min[it->second] - emin_tilde));
    if (wlow_max < kWeightCut && whigh_max < kWeightCut) continue;

    const int dlo = static_cast<int>(low.states.size());
    const int dhi = static_cast<int>(high.states.size());
    for (int i = 0; i < nb; ++i) {
      Matrix r = Matrix::Zero(dlo, dhi);
      for (int c = 0; c < dhi; ++c) {
        const long long local = space.local_code(high.states[c], k);
        auto ann = b.annihilate(local, i);
        if (!ann) continue;
        const long long target = high.states[c] + (ann->first - local) * space.stride[k];
        r(position_of(low.states, target), c) = ann->second;
      }
      m_op[i] = low.evec.transpose() * r * high.evec;  // <m| psi_i |n>
    }

    const double shift_lo = low.eval(0) - tilde_min[si];
    const double shift_hi = high.eval(0) - tilde_min[it->second];
    for (int m = 0; m < dlo; ++m) {
      const double em = low.eval(m) - shift_lo;
      const double wm = std::exp(-beta * (em - emin_tilde));
      for (int n = 0; n < dhi; ++n) {
        const double en = high.eval(n) - shift_hi;
        const double wn = std::exp(-beta * (en - emin_tilde));
        if (wm < kWeightCut && wn < kWeightCut) continue;
        const double delta = en - em;
        const double pole_weight = (wm - zeta_k * wn) / z;
        for (int i = 0; i < nb; ++i) {
          for (int j = 0; j < nb; ++j) {
            const double amp = m_op[i](m, n) * m_op[j](m, n);
            if (amp == 0.0) continue;
            cdouble* out = buf.slice_data(i * nb + j);
            if (izero < 0) {
              kernels::pole_acc(freqs.data(), delta, amp * pole_weight, out, nf2);
            } else {
              kernels::pole_acc(freqs.data(), delta, amp * pole_weight, out, izero);
              kernels::pole_acc(freqs.data() + izero + 1, delta, amp * pole_weight,
                                out + izero + 1, nf2 - izero - 1);
              const double v0 = (delta == 0.0) ? -beta * wm : wm * std::expm1(-beta * delta) / delta;
              out[izero] += amp * v0 / z;
            }
            tau0(i, j) -= amp * wm / z;
            taubeta(i, j) -= amp * wn / z;
          }
        }
      }
    }
  }

  LehmannGF out{MatsubaraGF{mesh, MatArray(nf2, nb, nb)}, std::move(tau0), std::move(taubeta)};
  for (int idx = 0; idx < nf2; ++idx)
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) out.g.data[idx](i, j) = buf.at(i * nb + j, idx, 0);
  return out;
}

std::vector<Matrix> static_response_fd(const ModelSystem& model, const OracleOptions& opts,
                                       const std::vector<double>& mu, double step) {
  const int ns = static_cast<int>(model.species.size());
  const int n = model.lattice.n_sites;
  const FockSpace space = build_fock_space(model, opts);
  std::vector<Matrix> response(ns);
  for (int k = 0; k < ns; ++k) {
    response[k].setZero(n, n);
    for (int j = 0; j < n; ++j) {
      Vector dplus, dminus;
      for (int sign : {+1, -1}) {
        ModelSystem pert = model;
        pert.fields.f[k](j) += sign * step;
        const EDSpectrum spec = diagonalize(space, pert);
        const Vector d = exact_observables(space, spec, pert, mu).density[k];
        (sign > 0 ? dplus : dminus) = d;
      }
      response[k].col(j) = (dplus - dminus) / (2.0 * step);
    }
  }
  return response;
}

}  // namespace msgw
