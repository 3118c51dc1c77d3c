#pragma once

#include <initializer_list>
#include <vector>

#include <Eigen/Core>

namespace varbench {

// Configured upper bound on the ambient dimension; every algorithm in the
// library is dense O(d^3).
inline constexpr int kMaxDim = 8;

inline constexpr double kSymmetryTol = 1e-10;
inline constexpr double kSolveResidualTol = 1e-8;

// Dense real vector with finite entries and d >= 1.
class FeatureVector {
 public:
  FeatureVector() = default;
  explicit FeatureVector(Eigen::VectorXd v);
  FeatureVector(std::initializer_list<double> values);

  static FeatureVector zeros(int d);
  static FeatureVector unit(int d, int axis);

  int dim() const { return static_cast<int>(v_.size()); }
  double operator[](int i) const { return v_[i]; }
  const Eigen::VectorXd& vec() const { return v_; }

  double norm() const { return v_.norm(); }
  double dot(const FeatureVector& other) const;

  friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
    return a.v_.size() == b.v_.size() && a.v_ == b.v_;
  }

 private:
  Eigen::VectorXd v_;
};

FeatureVector operator-(const FeatureVector& a, const FeatureVector& b);

// Symmetric positive-definite matrix. Construction from arbitrary data
// checks symmetry (relative 1e-10) and positive definiteness (Cholesky plus
// a smallest-eigenvalue check); SingularMatrixError on failure.
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd m);

  static SpdMatrix identity(int d, double scale = 1.0);
  static SpdMatrix diagonal(std::initializer_list<double> diag);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double min_eigenvalue() const;
  double trace() const { return m_.trace(); }

 private:
  struct Trusted {};
  SpdMatrix(Eigen::MatrixXd m, Trusted) : m_(std::move(m)) {}
  friend SpdMatrix rank_one_update(const SpdMatrix&, const FeatureVector&, double);
  friend SpdMatrix spd_from_trusted(Eigen::MatrixXd);

  Eigen::MatrixXd m_;
};

// Wraps a matrix known to be SPD by construction (sum of an SPD matrix and
// PSD terms). Symmetrizes bitwise; skips the factorization check.
SpdMatrix spd_from_trusted(Eigen::MatrixXd m);

// x^T M x.
double weighted_norm_sq(const FeatureVector& x, const SpdMatrix& m);

// x^T M^{-1} x via a Cholesky solve; never forms M^{-1}.
double inv_weighted_norm_sq(const FeatureVector& x, const SpdMatrix& m);

// M + w x x^T for w >= 0; the result is bitwise symmetric.
SpdMatrix rank_one_update(const SpdMatrix& m, const FeatureVector& x, double w);

// Natural-log determinant from the Cholesky diagonal.
double log_det(const SpdMatrix& m);

// Smallest eigenvalue of a symmetric matrix (self-adjoint eigensolver).
double symmetric_min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace varbench
