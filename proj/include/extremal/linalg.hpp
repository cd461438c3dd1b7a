#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "extremal/error.hpp"

namespace extremal {

// Small dense symmetric matrix, row-major.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  SymMatrix(std::initializer_list<std::initializer_list<double>> rows) : dim_(rows.size()), data_() {
    data_.reserve(dim_ * dim_);
    for (const auto& row : rows) {
      if (row.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "matrix rows must be square");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * dim_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  bool is_symmetric(double tol = 0.0) const {
    for (std::size_t i = 0; i < dim_; ++i) {
      for (std::size_t j = i + 1; j < dim_; ++j) {
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
      }
    }
    return true;
  }

  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim_ != b.dim_) throw Error(ErrorCode::kDimensionMismatch, "matrix dimensions differ");
    SymMatrix out(a.dim_);
    for (std::size_t i = 0; i < a.data_.size(); ++i) out.data_[i] = a.data_[i] - b.data_[i];
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline std::vector<double> symmetric_eigenvalues(SymMatrix a, double tol = 1e-14, int max_sweeps = 100) {
  const std::size_t n = a.dim();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) off += a(i, j) * a(i, j);
        scale += a(i, j) * a(i, j);
      }
    }
    if (off <= tol * tol * scale || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace extremal
