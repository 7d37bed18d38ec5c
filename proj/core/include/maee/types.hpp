// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace maee {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or scenario parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Conformability violations between matrices / position vectors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Singular or indefinite matrices, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A constraint set with no feasible point.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// 2-D antenna coordinate in units of the carrier wavelength.
struct Position {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

/// Antenna position vector: one coordinate per antenna on one side of the link.
/// Regions are squares of side X centered at the origin, i.e. [-X/2, X/2]^2.
class Apv {
 public:
  Apv() = default;
  explicit Apv(std::vector<Position> positions) : positions_(std::move(positions)) {}

  std::size_t size() const { return positions_.size(); }
  const Position& operator[](std::size_t i) const { return positions_[i]; }
  Position& operator[](std::size_t i) { return positions_[i]; }
  const std::vector<Position>& positions() const { return positions_; }

  /// Stacked coordinates (x_1, y_1, x_2, y_2, ...).
  RVec stacked() const;
  static Apv from_stacked(const RVec& v);

  double min_pairwise_distance() const;
  bool in_region(double side) const;
  /// Region membership (exact) and pairwise distance >= min_dist - tol.
  bool feasible(double side, double min_dist, double tol = 1e-9) const;

  friend bool operator==(const Apv&, const Apv&) = default;

 private:
  std::vector<Position> positions_;
};

/// Elevation / azimuth pair of one propagation path.
struct PathAngles {
  double theta = 0.0;
  double phi = 0.0;
};

}  // namespace maee
