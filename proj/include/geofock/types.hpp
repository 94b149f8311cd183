#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geofock {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

enum class Statistics { fermion, boson };

inline std::string_view to_string(Statistics s) {
  return s == Statistics::fermion ? "fermion" : "boson";
}

/// Violated precondition of an operation (bad sizes, out-of-range parameters).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its target (non-convergence, truncation
/// error above tolerance).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw PreconditionError(what);
}

/// Binomial coefficient as a double; exact for the sizes used here.
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

/// Largest deviation of M from Hermiticity, max |M - M*|.
inline double hermiticity_defect(const CMat& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Sum of singular values.
double trace_norm(const CMat& m);

/// Largest singular value.
double operator_norm(const CMat& m);

}  // namespace geofock
