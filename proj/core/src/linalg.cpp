// SPDX-License-Identifier: Apache-2.0
#include "maee/linalg.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

namespace maee {

RVec Apv::stacked() const {
  RVec v(2 * positions_.size());
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    v(2 * i) = positions_[i].x;
    v(2 * i + 1) = positions_[i].y;
  }
  return v;
}

Apv Apv::from_stacked(const RVec& v) {
  if (v.size() % 2 != 0) throw DimensionError("stacked APV must have even length");
  std::vector<Position> p(static_cast<std::size_t>(v.size() / 2));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = {v(2 * i), v(2 * i + 1)};
  return Apv(std::move(p));
}

double Apv::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions_.size(); ++i)
    for (std::size_t j = i + 1; j < positions_.size(); ++j)
      best = std::min(best, std::hypot(positions_[i].x - positions_[j].x,
                                       positions_[i].y - positions_[j].y));
  return best;
}

bool Apv::in_region(double side) const {
  const double h = side / 2.0;
  return std::all_of(positions_.begin(), positions_.end(), [h](const Position& p) {
    return p.x >= -h && p.x <= h && p.y >= -h && p.y <= h;
  });
}

bool Apv::feasible(double side, double min_dist, double tol) const {
  return in_region(side) && min_pairwise_distance() >= min_dist - tol;
}

namespace linalg {

double hermitian_defect(const CMat& a) {
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

CMat symmetrize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

CMat psd_sqrt(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(symmetrize(a));
  RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double logdet_hermitian(const CMat& a) {
  const double defect = hermitian_defect(a);
  if (defect > 1e-6) {
    std::ostringstream os;
    os << "log-det argument is not Hermitian (defect " << defect << ")";
    throw NumericalError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const RVec& ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() <= 0.0) {
    std::ostringstream os;
    os << "log-det argument is not positive definite (eigenvalues " << ev.transpose() << ")";
    throw NumericalError(os.str());
  }
  return ev.array().log().sum();
}

double logdet_chol(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() == Eigen::Success) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) s += std::log(llt.matrixLLT()(i, i).real());
    return 2.0 * s;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseMax(1e-14).array().log().sum();
}

CMat checked_inverse(const CMat& a, const char* what) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + " is not square");
  Eigen::PartialPivLU<CMat> lu(a);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    std::ostringstream os;
    os << what << " is singular (reciprocal condition estimate " << rc << ")";
    throw NumericalError(os.str());
  }
  return lu.inverse();
}

}  // namespace linalg
}  // namespace maee
