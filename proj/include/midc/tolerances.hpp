#pragma once

namespace midc {

/// Numerical thresholds shared by every module.
struct Tolerances {
  // ||M - M^T|| <= symmetry * max(1, ||M||)
  double symmetry = 1e-10;
  // eigenvalues >= -psd * max(1, ||M||)
  double psd = 1e-10;
  // smallest eigenvalue > pd for strict positive definiteness
  double pd = 1e-12;
  // singular values below rank * sigma_max * max(rows, cols) count as zero
  double rank = 1e-12;
  // sigma_min > invertibility * sigma_max
  double invertibility = 1e-12;
  // eigenvalue clamp used by square roots and pseudo-determinants
  double clamp = 1e-12;
};

inline constexpr Tolerances kTol{};

}  // namespace midc
