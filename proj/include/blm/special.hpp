#pragma once
// Scalar kernels shared by the count-model likelihoods: the dual-input
// log-gamma and the harmonic/geometric tail sums, each in an exact form and
// a fitted closed form for the backend that trades accuracy for speed.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace blm {

// Selects how likelihood derivatives are evaluated: exact per-row sums,
// exact sums over compressed counts, or fitted closed-form tail kernels.
enum class Backend { Direct, Sklar, Approximate };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::Direct: return "direct";
    case Backend::Sklar: return "sklar";
    case Backend::Approximate: return "approx";
  }
  return "?";
}

// Constants of the fitted tail kernels, transcribed verbatim in one place.
namespace fitted {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;
inline constexpr double euler_e = 2.71828182845904523536;
// logistic window of the harmonic kernel
inline constexpr double width_pow_coeff = 0.072;
inline constexpr double width_pow_exp = 1.27;
inline constexpr double width_recip_coeff = 0.1677;
inline constexpr double width_const = 0.835;
inline constexpr double center_shift = euler_e / 10.0;
// oscillatory correction of the harmonic kernel
inline constexpr double amp_coeff = 0.1068;
inline constexpr double amp_pow = 0.8224;
inline constexpr double amp_recip_num = 4.986;
inline constexpr double amp_recip_shift = 6.408;
inline constexpr double amp_const = 0.7751;
inline constexpr double v_coeff = 3.764;
inline constexpr double v_rate = pi / 6.0;
inline constexpr double v_pow = 1.06;
inline constexpr double v_const = 1.59;
inline constexpr double cos_phase = 1.5 * pi;
inline constexpr double cos_swing = 4.0 * pi;
// geometric kernel
inline constexpr double basel = pi * pi / 6.0;
inline constexpr double half_pi = pi / 2.0;
// exact evaluation is kept below this (inclusive) upper index
inline constexpr std::uint64_t geometric_exact_cutoff = 200;
}  // namespace fitted

// lnGamma(a, b) = sum_{i=0}^{b-1} ln(a+i); the empty sum (b == 0) is 0.
// Summed directly: for the small offsets count data produces this is cheap,
// and it keeps full precision when a is tiny (lgamma differences do not).
inline double dual_log_gamma(double a, std::uint64_t b) {
  if (!(a > 0.0))
    throw std::invalid_argument("dual_log_gamma: base must be positive");
  double s = 0.0;
  for (std::uint64_t i = 0; i < b; ++i) s += std::log(a + static_cast<double>(i));
  return s;
}

// sum_{n=0}^{upper} 1/(theta+n), inclusive upper.
inline double harmonic_tail_exact(double theta, std::uint64_t upper) {
  if (!(theta > 0.0))
    throw std::invalid_argument("harmonic_tail_exact: theta must be positive");
  double s = 0.0;
  for (std::uint64_t n = 0; n <= upper; ++n) s += 1.0 / (theta + static_cast<double>(n));
  return s;
}

// sum_{n=0}^{upper} 1/(theta+n)^2, inclusive upper.
inline double geometric_tail_exact(double theta, std::uint64_t upper) {
  if (!(theta > 0.0))
    throw std::invalid_argument("geometric_tail_exact: theta must be positive");
  double s = 0.0;
  for (std::uint64_t n = 0; n <= upper; ++n) {
    const double d = theta + static_cast<double>(n);
    s += 1.0 / (d * d);
  }
  return s;
}

// Fitted closed form for the harmonic tail: 1/theta plus a logistic window
// that turns on the harmonic-number plateau, plus a damped oscillatory
// correction. upper == 0 falls back to the exact value.
inline double harmonic_tail_approx(double theta, std::uint64_t upper) {
  if (!(theta > 0.0))
    throw std::invalid_argument("harmonic_tail_approx: theta must be positive");
  if (upper == 0) return 1.0 / theta;
  namespace f = fitted;
  const double n = static_cast<double>(upper);
  const double ln_n = std::log(n);
  const double plateau = ln_n + f::euler_gamma + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n);
  const double width = f::width_pow_coeff * std::pow(ln_n, f::width_pow_exp) +
                       f::width_recip_coeff / (1.0 + ln_n) + f::width_const;
  const double center = std::log(theta) - 0.5 * ln_n + f::center_shift;
  const double amp = f::amp_coeff * (std::pow(ln_n, f::amp_pow) +
                                     f::amp_recip_num / (ln_n + f::amp_recip_shift)) -
                     f::amp_const;
  const double vfac = f::v_coeff * std::exp(-f::v_rate * std::pow(ln_n + 1.0, f::v_pow)) +
                      f::v_const;
  const double logistic = 1.0 / (1.0 + std::exp(center / width));
  const double swing = 1.0 / (1.0 + std::exp(center / (vfac * width)));
  return 1.0 / theta + plateau * logistic +
         amp * std::cos(f::cos_phase - f::cos_swing * swing);
}

// Fitted closed form for the geometric tail; exact below the cutoff where
// direct summation is cheaper than the fit is accurate.
inline double geometric_tail_approx(double theta, std::uint64_t upper) {
  if (!(theta > 0.0))
    throw std::invalid_argument("geometric_tail_approx: theta must be positive");
  if (upper <= fitted::geometric_exact_cutoff) return geometric_tail_exact(theta, upper);
  return 1.0 / (theta * theta) +
         fitted::basel / (1.0 + fitted::half_pi * std::exp(theta));
}

}  // namespace blm
