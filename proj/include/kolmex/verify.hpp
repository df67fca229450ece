#pragma once

#include <string>
#include <vector>

namespace kolmex {

/// One identity or property check with its worst observed residual (or fitted
/// slope, for decay checks) and the threshold it was held against.
struct CheckResult {
  std::string suite;
  std::string name;
  bool pass = false;
  double observed = 0.0;
  std::string criterion;  // human-readable bound, e.g. "< 1e-12"
};

/// Group law, dilation, matrix-exponential and covariance homogeneity checks.
std::vector<CheckResult> verify_geometry();
/// Gaussian kernel symmetry and polynomial identities at random points.
std::vector<CheckResult> verify_kernel();
/// Canonical-form bounds for L_n, the hand-expanded L_1 stencil, and
/// constant-coefficient vanishing.
std::vector<CheckResult> verify_algebra();
/// Intrinsic Taylor remainder decay along dilated approaches.
std::vector<CheckResult> verify_taylor();

/// suite in {geometry, kernel, algebra, taylor, all}; throws
/// std::invalid_argument otherwise.
std::vector<CheckResult> verify_suite(const std::string& suite);

}  // namespace kolmex
