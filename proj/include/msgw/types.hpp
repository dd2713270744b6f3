#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msgw {

using cdouble = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

// Quantum statistics of a field species. zeta() is the sign picked up when
// exchanging two identical particles; it also fixes the Matsubara parity of
// every function attached to the species.
enum class Statistics { Fermion, Boson };

inline double zeta(Statistics s) { return s == Statistics::Fermion ? -1.0 : 1.0; }

// Base of all errors thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid input: malformed configs, inconsistent lattices, mesh mismatches,
// requests outside supported sizes. CLI maps these to exit code 1.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Numerical failure during a run: singular propagators, screening
// instabilities, unreachable fillings. CLI maps these to exit code 2.
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(what) {}
};

// Contiguous array of same-shaped complex matrices (one slice per frequency
// or per imaginary-time point). Backed by a single allocation so the hot
// kernels can run over raw complex data; Eigen maps are handed out per slice.
class MatArray {
 public:
  MatArray() = default;
  MatArray(Eigen::Index n_slices, Eigen::Index rows, Eigen::Index cols)
      : n_(n_slices), rows_(rows), cols_(cols),
        data_(static_cast<size_t>(n_slices * rows * cols), cdouble(0.0, 0.0)) {}

  Eigen::Index size() const { return n_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  Eigen::Map<CMatrix> operator[](Eigen::Index i) {
    return Eigen::Map<CMatrix>(data_.data() + i * rows_ * cols_, rows_, cols_);
  }
  Eigen::Map<const CMatrix> operator[](Eigen::Index i) const {
    return Eigen::Map<const CMatrix>(data_.data() + i * rows_ * cols_, rows_, cols_);
  }

  cdouble* slice_data(Eigen::Index i) { return data_.data() + i * rows_ * cols_; }
  const cdouble* slice_data(Eigen::Index i) const { return data_.data() + i * rows_ * cols_; }

  cdouble* data() { return data_.data(); }
  const cdouble* data() const { return data_.data(); }

  // Entry (r,c) of slice i; column-major within a slice like Eigen.
  cdouble& at(Eigen::Index i, Eigen::Index r, Eigen::Index c) {
    return data_[static_cast<size_t>((i * cols_ + c) * rows_ + r)];
  }
  const cdouble& at(Eigen::Index i, Eigen::Index r, Eigen::Index c) const {
    return data_[static_cast<size_t>((i * cols_ + c) * rows_ + r)];
  }

  double max_abs() const {
    double m = 0.0;
    for (const cdouble& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  bool same_shape(const MatArray& o) const {
    return n_ == o.n_ && rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  Eigen::Index n_ = 0, rows_ = 0, cols_ = 0;
  std::vector<cdouble> data_;
};

}  // namespace msgw
