#pragma once

#include "fallball/jacobian.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <limits>
#include <vector>

namespace fallball {

/// Spectral form of the least expansion coefficient. Extremal vectors of
/// Q(Mv)/Q(v) solve M^T P M v = lambda P v with P = [[0, I], [I, 0]], so
/// sigma^2 is the smallest real eigenvalue >= 1 of W = P M^T P M. The tolerance
/// accepts eigenvalues that rounding pushed slightly below 1.
template <typename Scalar>
Scalar least_expansion_squared(const MatrixX<Scalar>& m, const Scalar& tol) {
  const Eigen::Index dim = m.rows();
  const Eigen::Index d = dim / 2;
  MatrixX<Scalar> pm(dim, dim);
  pm.topRows(d) = m.bottomRows(d);
  pm.bottomRows(d) = m.topRows(d);
  const MatrixX<Scalar> w_rows = m.transpose() * pm;  // M^T P M
  MatrixX<Scalar> w(dim, dim);
  w.topRows(d) = w_rows.bottomRows(d);
  w.bottomRows(d) = w_rows.topRows(d);
  Eigen::EigenSolver<MatrixX<Scalar>> es(w, false);
  using std::abs;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  bool found = false;
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Scalar re = es.eigenvalues()[k].real();
    const Scalar im = es.eigenvalues()[k].imag();
    if (abs(im) > tol * (Scalar(1) + abs(re))) continue;
    if (re < Scalar(1) - tol) continue;
    if (!found || re < best) best = re;
    found = true;
  }
  return found ? best : Scalar(std::numeric_limits<double>::quiet_NaN());
}

/// Exact sigma of a double matrix, evaluated in extended precision.
double least_expansion(const Matrix& m);

struct SigmaProfile {
  std::vector<double> log_sigma;  ///< log sigma of the cocycle over the first k+1 events
  int precision_bits = 53;
};

/// log sigma of every prefix cocycle of [begin, end), computed in a working
/// precision large enough for the final product.
SigmaProfile least_expansion_profile(const MassConfig& cfg, const EventLog& log, std::size_t begin,
                                     std::size_t end);

/// log sigma of the cocycle over [begin, end) (backward = the C' coefficient of
/// its inverse), in adaptive precision.
double log_least_expansion(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end,
                           bool backward = false);

struct SigmaOptions {
  int starts = 64;
  int iterations = 4000;
  double tol = 1e-12;           ///< stop when a descent step gains less than this
  double monotone_tol = 1e-12;  ///< allowed Q decrease relative to |v|^2
  double boundary_push = 1e-9;  ///< offset of boundary mesh points into the cone
  std::uint64_t seed = 0;
};

struct SigmaEstimate {
  double value = 0.0;
  Vector witness;  ///< unit vector attaining the value
  int starts = 0;
  std::uint64_t seed = 0;
};

/// Multi-start projective descent on log Q(Mv) - log Q(v) over Q(v) > 0,
/// plus a boundary mesh pushed slightly into the cone. Throws NotMonotone if
/// any evaluated vector has Q(Mv) < Q(v).
SigmaEstimate sigma_estimate(const Matrix& m, const SigmaOptions& opts = {});

/// Same over the complementary cone Q(v) < 0, for a backward cocycle.
SigmaEstimate sigma_prime_estimate(const Matrix& backward, const SigmaOptions& opts = {});

/// Inverse of the cocycle over [begin, end): the backward derivative at the end point.
Matrix backward_cocycle(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end);

}  // namespace fallball
