#pragma once
// Count-distribution models: multinomial, Dirichlet-multinomial (DM), and
// Beta-Liouville-multinomial (BLM). Log-likelihoods drop data-only constants
// (they cancel in optimization); gradients and Hessians come in three
// interchangeable backends. Hessians are block structured — every block is
// diag(h) + c * ones*ones^T — which the optimizer inverts analytically.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "blm/counts.hpp"
#include "blm/special.hpp"

namespace blm {

// Above this parameter value the fitted tail kernels are replaced by exact
// sums; each replacement is counted as a fallback event.
inline constexpr double kApproxThetaMax = 1000.0;

// Beta-Liouville-multinomial parameters: one Liouville weight per category
// 1..D plus the Beta pair (alpha, beta) that splits mass between the first D
// categories and the last one. Gradient/Hessian order: [alpha_d..., alpha, beta].
struct BlmParams {
  std::vector<double> alpha_d;
  double alpha = 1.0;
  double beta = 1.0;

  std::size_t categories() const { return alpha_d.size() + 1; }
  double sum_alpha_d() const {
    double s = 0.0;
    for (double a : alpha_d) s += a;
    return s;
  }
  void validate() const {
    if (alpha_d.empty())
      throw std::invalid_argument("BlmParams: need at least one Liouville weight");
    for (double a : alpha_d)
      if (!(a > 0.0)) throw std::invalid_argument("BlmParams: weights must be positive");
    if (!(alpha > 0.0) || !(beta > 0.0))
      throw std::invalid_argument("BlmParams: Beta weights must be positive");
  }
};

// Dirichlet-multinomial parameters: one weight per category.
struct DmParams {
  std::vector<double> alpha;

  std::size_t categories() const { return alpha.size(); }
  double sum() const {
    double s = 0.0;
    for (double a : alpha) s += a;
    return s;
  }
  void validate() const {
    if (alpha.size() < 2)
      throw std::invalid_argument("DmParams: need at least 2 categories");
    for (double a : alpha)
      if (!(a > 0.0)) throw std::invalid_argument("DmParams: weights must be positive");
  }
};

struct MultinomialParams {
  std::vector<double> p;

  void validate(double tol = 1e-8) const {
    if (p.size() < 2)
      throw std::invalid_argument("MultinomialParams: need at least 2 categories");
    double s = 0.0;
    for (double v : p) {
      if (!(v >= 0.0) || !(v <= 1.0))
        throw std::invalid_argument("MultinomialParams: probabilities must lie in [0,1]");
      s += v;
    }
    if (std::abs(s - 1.0) > tol)
      throw std::invalid_argument("MultinomialParams: probabilities must sum to 1");
  }
};

// One Hessian block of the form diag(h) + c * ones*ones^T.
struct BlockHess {
  std::vector<double> h;
  double c = 0.0;
};

// Gradient plus block-structured Hessian of one model at one point.
// For BLM, cat_block is the D x D Liouville block and mix_block the 2 x 2
// (alpha, beta) block; for DM, cat_block covers all D+1 weights and
// mix_block is empty.
struct GradHess {
  std::vector<double> gradient;
  BlockHess cat_block;
  BlockHess mix_block;
  std::uint64_t approx_fallbacks = 0;
};

namespace detail {

// sum_{i=0}^{count-1} 1/(theta+i): first derivative of dual_log_gamma in theta.
inline double harm_points(double theta, std::uint64_t count, Backend b,
                          std::uint64_t& fallbacks) {
  if (count == 0) return 0.0;
  if (b == Backend::Approximate) {
    if (theta > kApproxThetaMax) {
      ++fallbacks;
      return harmonic_tail_exact(theta, count - 1);
    }
    return harmonic_tail_approx(theta, count - 1);
  }
  return harmonic_tail_exact(theta, count - 1);
}

// sum_{i=0}^{count-1} 1/(theta+i)^2: negated second derivative.
inline double geom_points(double theta, std::uint64_t count, Backend b,
                          std::uint64_t& fallbacks) {
  if (count == 0) return 0.0;
  if (b == Backend::Approximate) {
    if (theta > kApproxThetaMax) {
      ++fallbacks;
      return geometric_tail_exact(theta, count - 1);
    }
    return geometric_tail_approx(theta, count - 1);
  }
  return geometric_tail_exact(theta, count - 1);
}

inline void check_dims(std::size_t param_cats, std::size_t data_cats, const char* who) {
  if (param_cats != data_cats)
    throw std::invalid_argument(std::string(who) + ": parameter/data category mismatch");
}

// sum_z w[z] * ln(theta + z)
inline double level_log_sum(double theta, std::span<const std::uint32_t> w) {
  double s = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z)
    s += w[z] * std::log(theta + static_cast<double>(z));
  return s;
}
// sum_z w[z] / (theta + z)
inline double level_harm_sum(double theta, std::span<const std::uint32_t> w) {
  double s = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z)
    s += w[z] / (theta + static_cast<double>(z));
  return s;
}
// sum_z w[z] / (theta + z)^2
inline double level_geom_sum(double theta, std::span<const std::uint32_t> w) {
  double s = 0.0;
  for (std::size_t z = 0; z < w.size(); ++z) {
    const double d = theta + static_cast<double>(z);
    s += w[z] / (d * d);
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Multinomial

// sum_d x_d ln p_d; -inf when a zero-probability category has a count.
inline double multinomial_log_likelihood(const MultinomialParams& params,
                                         std::span<const std::uint32_t> x) {
  params.validate();
  if (x.size() != params.p.size())
    throw std::invalid_argument("multinomial_log_likelihood: dimension mismatch");
  double ll = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] == 0) continue;
    if (params.p[d] <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += x[d] * std::log(params.p[d]);
  }
  return ll;
}

// ln of the multinomial coefficient M! / prod_d x_d!.
inline double log_multinomial_coefficient(std::span<const std::uint32_t> x) {
  std::uint64_t m = 0;
  for (auto v : x) m += v;
  double s = dual_log_gamma(1.0, m);
  for (auto v : x) s -= dual_log_gamma(1.0, v);
  return s;
}

// ---------------------------------------------------------------------------
// Beta-Liouville-multinomial

inline double blm_log_likelihood(const BlmParams& params, const CompressedCounts& cc) {
  params.validate();
  detail::check_dims(params.categories(), cc.categories, "blm_log_likelihood");
  const std::size_t d_cats = params.alpha_d.size();
  double ll = 0.0;
  for (std::size_t d = 0; d < d_cats; ++d)
    ll += detail::level_log_sum(params.alpha_d[d], cc.u[d]);
  ll -= detail::level_log_sum(params.sum_alpha_d(), cc.v_partial);
  ll += detail::level_log_sum(params.alpha, cc.v_partial);
  ll += detail::level_log_sum(params.beta, cc.u[d_cats]);
  ll -= detail::level_log_sum(params.alpha + params.beta, cc.v_full);
  return ll;
}

inline double blm_log_likelihood(const BlmParams& params, const CountMatrix& x,
                                 Backend backend = Backend::Direct) {
  params.validate();
  detail::check_dims(params.categories(), x.categories(), "blm_log_likelihood");
  if (backend == Backend::Sklar) return blm_log_likelihood(params, build_compressed(x));
  // The Approximate backend approximates derivatives only; the value itself
  // is always exact.
  const std::size_t d_cats = params.alpha_d.size();
  const double sum_ad = params.sum_alpha_d();
  double ll = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t d = 0; d < d_cats; ++d)
      ll += dual_log_gamma(params.alpha_d[d], x(n, d));
    const std::uint64_t partial = x.partial_row_sum(n);
    const std::uint64_t full = x.full_row_sum(n);
    ll -= dual_log_gamma(sum_ad, partial);
    ll += dual_log_gamma(params.alpha, partial);
    ll += dual_log_gamma(params.beta, x(n, d_cats));
    ll -= dual_log_gamma(params.alpha + params.beta, full);
  }
  return ll;
}

inline GradHess blm_grad_hess(const BlmParams& params, const CompressedCounts& cc) {
  params.validate();
  detail::check_dims(params.categories(), cc.categories, "blm_grad_hess");
  const std::size_t d_cats = params.alpha_d.size();
  const double sum_ad = params.sum_alpha_d();
  const double ab = params.alpha + params.beta;

  GradHess gh;
  gh.gradient.assign(d_cats + 2, 0.0);
  gh.cat_block.h.assign(d_cats, 0.0);
  gh.mix_block.h.assign(2, 0.0);

  const double shared_partial = detail::level_harm_sum(sum_ad, cc.v_partial);
  const double shared_full = detail::level_harm_sum(ab, cc.v_full);
  for (std::size_t d = 0; d < d_cats; ++d) {
    gh.gradient[d] = detail::level_harm_sum(params.alpha_d[d], cc.u[d]) - shared_partial;
    gh.cat_block.h[d] = -detail::level_geom_sum(params.alpha_d[d], cc.u[d]);
  }
  gh.cat_block.c = detail::level_geom_sum(sum_ad, cc.v_partial);
  gh.gradient[d_cats] = detail::level_harm_sum(params.alpha, cc.v_partial) - shared_full;
  gh.gradient[d_cats + 1] = detail::level_harm_sum(params.beta, cc.u[d_cats]) - shared_full;
  gh.mix_block.h[0] = -detail::level_geom_sum(params.alpha, cc.v_partial);
  gh.mix_block.h[1] = -detail::level_geom_sum(params.beta, cc.u[d_cats]);
  gh.mix_block.c = detail::level_geom_sum(ab, cc.v_full);
  return gh;
}

inline GradHess blm_grad_hess(const BlmParams& params, const CountMatrix& x,
                              Backend backend = Backend::Direct) {
  params.validate();
  detail::check_dims(params.categories(), x.categories(), "blm_grad_hess");
  if (backend == Backend::Sklar) return blm_grad_hess(params, build_compressed(x));
  const std::size_t d_cats = params.alpha_d.size();
  const double sum_ad = params.sum_alpha_d();
  const double ab = params.alpha + params.beta;

  GradHess gh;
  gh.gradient.assign(d_cats + 2, 0.0);
  gh.cat_block.h.assign(d_cats, 0.0);
  gh.mix_block.h.assign(2, 0.0);
  auto& fb = gh.approx_fallbacks;

  double shared_partial = 0.0, shared_full = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const std::uint64_t partial = x.partial_row_sum(n);
    const std::uint64_t full = x.full_row_sum(n);
    const std::uint64_t last = x(n, d_cats);
    for (std::size_t d = 0; d < d_cats; ++d) {
      const std::uint64_t k = x(n, d);
      if (k == 0) continue;
      gh.gradient[d] += detail::harm_points(params.alpha_d[d], k, backend, fb);
      gh.cat_block.h[d] -= detail::geom_points(params.alpha_d[d], k, backend, fb);
    }
    shared_partial += detail::harm_points(sum_ad, partial, backend, fb);
    shared_full += detail::harm_points(ab, full, backend, fb);
    gh.cat_block.c += detail::geom_points(sum_ad, partial, backend, fb);
    gh.gradient[d_cats] += detail::harm_points(params.alpha, partial, backend, fb);
    gh.gradient[d_cats + 1] += detail::harm_points(params.beta, last, backend, fb);
    gh.mix_block.h[0] -= detail::geom_points(params.alpha, partial, backend, fb);
    gh.mix_block.h[1] -= detail::geom_points(params.beta, last, backend, fb);
    gh.mix_block.c += detail::geom_points(ab, full, backend, fb);
  }
  for (std::size_t d = 0; d < d_cats; ++d) gh.gradient[d] -= shared_partial;
  gh.gradient[d_cats] -= shared_full;
  gh.gradient[d_cats + 1] -= shared_full;
  return gh;
}

// ---------------------------------------------------------------------------
// Dirichlet-multinomial

inline double dm_log_likelihood(const DmParams& params, const CompressedCounts& cc) {
  params.validate();
  detail::check_dims(params.categories(), cc.categories, "dm_log_likelihood");
  double ll = 0.0;
  for (std::size_t d = 0; d < params.alpha.size(); ++d)
    ll += detail::level_log_sum(params.alpha[d], cc.u[d]);
  ll -= detail::level_log_sum(params.sum(), cc.v_full);
  return ll;
}

inline double dm_log_likelihood(const DmParams& params, const CountMatrix& x,
                                Backend backend = Backend::Direct) {
  params.validate();
  detail::check_dims(params.categories(), x.categories(), "dm_log_likelihood");
  if (backend == Backend::Sklar) return dm_log_likelihood(params, build_compressed(x));
  const double sum_a = params.sum();
  double ll = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t d = 0; d < params.alpha.size(); ++d)
      ll += dual_log_gamma(params.alpha[d], x(n, d));
    ll -= dual_log_gamma(sum_a, x.full_row_sum(n));
  }
  return ll;
}

inline GradHess dm_grad_hess(const DmParams& params, const CompressedCounts& cc) {
  params.validate();
  detail::check_dims(params.categories(), cc.categories, "dm_grad_hess");
  const std::size_t cats = params.alpha.size();
  GradHess gh;
  gh.gradient.assign(cats, 0.0);
  gh.cat_block.h.assign(cats, 0.0);
  const double shared = detail::level_harm_sum(params.sum(), cc.v_full);
  for (std::size_t d = 0; d < cats; ++d) {
    gh.gradient[d] = detail::level_harm_sum(params.alpha[d], cc.u[d]) - shared;
    gh.cat_block.h[d] = -detail::level_geom_sum(params.alpha[d], cc.u[d]);
  }
  gh.cat_block.c = detail::level_geom_sum(params.sum(), cc.v_full);
  return gh;
}

inline GradHess dm_grad_hess(const DmParams& params, const CountMatrix& x,
                             Backend backend = Backend::Direct) {
  params.validate();
  detail::check_dims(params.categories(), x.categories(), "dm_grad_hess");
  if (backend == Backend::Sklar) return dm_grad_hess(params, build_compressed(x));
  const std::size_t cats = params.alpha.size();
  const double sum_a = params.sum();
  GradHess gh;
  gh.gradient.assign(cats, 0.0);
  gh.cat_block.h.assign(cats, 0.0);
  auto& fb = gh.approx_fallbacks;
  double shared = 0.0;
  for (std::size_t n = 0; n < x.rows(); ++n) {
    for (std::size_t d = 0; d < cats; ++d) {
      const std::uint64_t k = x(n, d);
      if (k == 0) continue;
      gh.gradient[d] += detail::harm_points(params.alpha[d], k, backend, fb);
      gh.cat_block.h[d] -= detail::geom_points(params.alpha[d], k, backend, fb);
    }
    const std::uint64_t full = x.full_row_sum(n);
    shared += detail::harm_points(sum_a, full, backend, fb);
    gh.cat_block.c += detail::geom_points(sum_a, full, backend, fb);
  }
  for (std::size_t d = 0; d < cats; ++d) gh.gradient[d] -= shared;
  return gh;
}

}  // namespace blm
