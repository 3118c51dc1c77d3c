#include "varbench/linalg.h"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "varbench/error.h"

namespace varbench {

namespace {

void require_finite(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    VARBENCH_REQUIRE(std::isfinite(v[i]), "FeatureVector entries must be finite");
  }
}

void require_same_dim(int a, int b) {
  if (a != b) {
    throw ContractViolation("dimension mismatch: " + std::to_string(a) + " vs " +
                            std::to_string(b));
  }
}

}  // namespace

FeatureVector::FeatureVector(Eigen::VectorXd v) : v_(std::move(v)) {
  VARBENCH_REQUIRE(v_.size() >= 1, "FeatureVector needs d >= 1");
  require_finite(v_);
}

FeatureVector::FeatureVector(std::initializer_list<double> values)
    : v_(static_cast<Eigen::Index>(values.size())) {
  Eigen::Index i = 0;
  for (double x : values) v_[i++] = x;
  VARBENCH_REQUIRE(v_.size() >= 1, "FeatureVector needs d >= 1");
  require_finite(v_);
}

FeatureVector FeatureVector::zeros(int d) { return FeatureVector(Eigen::VectorXd::Zero(d)); }

FeatureVector FeatureVector::unit(int d, int axis) {
  VARBENCH_REQUIRE(axis >= 0 && axis < d, "unit vector axis out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  v[axis] = 1.0;
  return FeatureVector(std::move(v));
}

double FeatureVector::dot(const FeatureVector& other) const {
  require_same_dim(dim(), other.dim());
  return v_.dot(other.v_);
}

FeatureVector operator-(const FeatureVector& a, const FeatureVector& b) {
  require_same_dim(a.dim(), b.dim());
  return FeatureVector(a.vec() - b.vec());
}

SpdMatrix::SpdMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
  VARBENCH_REQUIRE(m_.rows() == m_.cols() && m_.rows() >= 1, "SpdMatrix must be square, d >= 1");
  const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
  if (!m_.allFinite()) throw SingularMatrixError("SpdMatrix has non-finite entries");
  if ((m_ - m_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw ContractViolation("SpdMatrix input is not symmetric");
  }
  m_ = 0.5 * (m_ + m_.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(m_);
  if (llt.info() != Eigen::Success || !(symmetric_min_eigenvalue(m_) > 0.0)) {
    throw SingularMatrixError("matrix is not positive definite");
  }
}

SpdMatrix SpdMatrix::identity(int d, double scale) {
  VARBENCH_REQUIRE(scale > 0.0, "identity scale must be positive");
  return SpdMatrix(Eigen::MatrixXd::Identity(d, d) * scale, Trusted{});
}

SpdMatrix SpdMatrix::diagonal(std::initializer_list<double> diag) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(diag.size()));
  Eigen::Index i = 0;
  for (double x : diag) v[i++] = x;
  return SpdMatrix(Eigen::MatrixXd(v.asDiagonal()));
}

double SpdMatrix::min_eigenvalue() const { return symmetric_min_eigenvalue(m_); }

SpdMatrix spd_from_trusted(Eigen::MatrixXd m) {
  const Eigen::Index d = m.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) m(j, i) = m(i, j);
  }
  return SpdMatrix(std::move(m), SpdMatrix::Trusted{});
}

double weighted_norm_sq(const FeatureVector& x, const SpdMatrix& m) {
  require_same_dim(x.dim(), m.dim());
  const double value = x.vec().dot(m.mat() * x.vec());
  return value < 0.0 ? 0.0 : value;
}

double inv_weighted_norm_sq(const FeatureVector& x, const SpdMatrix& m) {
  require_same_dim(x.dim(), m.dim());
  Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success) throw SingularMatrixError("Cholesky factorization failed");
  const Eigen::VectorXd z = llt.solve(x.vec());
  const double resid = (m.mat() * z - x.vec()).norm();
  if (!(resid <= kSolveResidualTol * x.vec().norm())) {
    throw SingularMatrixError("solve residual " + std::to_string(resid) + " exceeds tolerance");
  }
  const double value = x.vec().dot(z);
  return value < 0.0 ? 0.0 : value;
}

SpdMatrix rank_one_update(const SpdMatrix& m, const FeatureVector& x, double w) {
  require_same_dim(x.dim(), m.dim());
  VARBENCH_REQUIRE(std::isfinite(w) && w >= 0.0, "rank_one_update weight must be finite and >= 0");
  Eigen::MatrixXd out = m.mat();
  const Eigen::VectorXd& v = x.vec();
  const Eigen::Index d = out.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      out(i, j) += w * v[i] * v[j];
      out(j, i) = out(i, j);
    }
  }
  return SpdMatrix(std::move(out), SpdMatrix::Trusted{});
}

double log_det(const SpdMatrix& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success) throw SingularMatrixError("log_det of a non-PD matrix");
  const auto& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) sum += std::log(l(i, i));
  return 2.0 * sum;
}

double symmetric_min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace varbench
