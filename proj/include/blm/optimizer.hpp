#pragma once
// Newton-Raphson fitting for the DM and BLM models. The Hessian blocks all
// have the form diag(h) + c * ones*ones^T, so inversion is analytic
// (Sherman-Morrison), definiteness can be decided exactly from (h, c), and a
// failed definiteness check is repaired by inflating selected parameters.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blm/counts.hpp"
#include "blm/models.hpp"
#include "blm/special.hpp"

namespace blm {

enum class ModelKind { DirichletMultinomial, BetaLiouville };
enum class InitStrategy { AllOnes, MomentMatched };
enum class Termination { GradConverged, LLConverged, MaxIters, RidgeDetected };

inline const char* to_string(ModelKind m) {
  return m == ModelKind::DirichletMultinomial ? "dm" : "blm";
}
inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::GradConverged: return "GradConverged";
    case Termination::LLConverged: return "LLConverged";
    case Termination::MaxIters: return "MaxIters";
    case Termination::RidgeDetected: return "RidgeDetected";
  }
  return "?";
}

struct FitConfig {
  Backend backend = Backend::Direct;
  InitStrategy init = InitStrategy::MomentMatched;
  int max_iterations = 500;
  double grad_tolerance = 1e-6;
  double ll_rel_tolerance = 1e-10;
  double guard_epsilon = 1e-3;
  int max_halvings = 30;
  int max_guard_rounds = 60;
  // A fit whose smallest relevant weight exceeds this is on the
  // equidispersion ridge (the likelihood keeps improving toward the
  // multinomial limit at infinity).
  double ridge_param_threshold = 1e6;
};

// One definiteness repair: which block was adjusted (1 = the 2x2
// mixing block, 2 = the per-category block) and the increment applied.
struct GuardEvent {
  int condition = 0;
  double epsilon = 0.0;
};

struct FitReport {
  ModelKind model = ModelKind::BetaLiouville;
  Backend backend = Backend::Direct;
  BlmParams blm;  // set when model == BetaLiouville
  DmParams dm;    // set when model == DirichletMultinomial
  std::vector<double> ll_trace;     // value at the start point, then after each accepted step
  std::vector<double> ratio_trace;  // beta/alpha after each accepted step (BLM only)
  std::vector<GuardEvent> guard_events;
  std::uint64_t approx_fallback_events = 0;
  Termination termination = Termination::MaxIters;
  int iterations = 0;

  double final_ll() const { return ll_trace.empty() ? 0.0 : ll_trace.back(); }
};

// ---------------------------------------------------------------------------
// Structured inversion

// Inverse of diag(h) + c * ones*ones^T held in factored form:
//   inv = diag(1/h) - (1/h)(1/h)^T / (1/c + sum_d 1/h_d),
// with the rank-one part absent when c == 0.
class StructuredInverse {
 public:
  StructuredInverse(std::vector<double> inv_h, double rank1_scale)
      : inv_h_(std::move(inv_h)), rank1_scale_(rank1_scale) {}

  std::vector<double> apply(std::span<const double> g) const {
    if (g.size() != inv_h_.size())
      throw std::invalid_argument("StructuredInverse: dimension mismatch");
    double dot = 0.0;
    for (std::size_t d = 0; d < g.size(); ++d) dot += g[d] * inv_h_[d];
    std::vector<double> out(g.size());
    for (std::size_t d = 0; d < g.size(); ++d)
      out[d] = g[d] * inv_h_[d] - rank1_scale_ * dot * inv_h_[d];
    return out;
  }

  const std::vector<double>& diag_inverse() const { return inv_h_; }
  double rank1_scale() const { return rank1_scale_; }

 private:
  std::vector<double> inv_h_;
  double rank1_scale_;  // 1 / (1/c + sum 1/h); 0 when c == 0
};

// Empty result signals a singular configuration (a zero diagonal entry or a
// vanishing Sherman-Morrison denominator); the caller is expected to repair
// the block (definiteness guard) before stepping.
inline std::optional<StructuredInverse> invert_structured(std::span<const double> h,
                                                          double c) {
  if (h.empty()) return std::nullopt;
  std::vector<double> inv(h.size());
  double sum_inv = 0.0, sum_abs = 0.0;
  for (std::size_t d = 0; d < h.size(); ++d) {
    if (h[d] == 0.0 || !std::isfinite(h[d])) return std::nullopt;
    inv[d] = 1.0 / h[d];
    sum_inv += inv[d];
    sum_abs += std::abs(inv[d]);
  }
  if (!std::isfinite(c)) return std::nullopt;
  if (c == 0.0) return StructuredInverse(std::move(inv), 0.0);
  const double denom = 1.0 / c + sum_inv;
  const double scale_mag = std::abs(1.0 / c) + sum_abs;
  if (!std::isfinite(denom) || std::abs(denom) <= 1e-12 * scale_mag) return std::nullopt;
  return StructuredInverse(std::move(inv), 1.0 / denom);
}

// ---------------------------------------------------------------------------
// Definiteness guard

namespace detail {

// diag(-a) + c * ones*ones^T (a_d = -h_d > 0, c >= 0) is negative definite
// iff every a_d > 0 and c * sum_d 1/a_d < 1. The per-block pivot checks from
// the likelihood's curvature analysis (a_alpha > c, a_min > c) are necessary
// but not sufficient, so the guard decides on the exact condition.
inline bool block_negative_definite(std::span<const double> h, double c) {
  double sum_inv_a = 0.0;
  for (double hd : h) {
    const double a = -hd;
    if (!(a > 0.0)) return false;
    sum_inv_a += 1.0 / a;
  }
  if (c < 0.0) return false;
  return c * sum_inv_a < 1.0;
}

inline constexpr const char* kNoCurvatureMsg =
    "fit: Hessian could not be made negative definite (degenerate data; "
    "a category with no counts cannot support an interior optimum)";

// Ascent direction for one Hessian block when the guard could not certify
// definiteness. A negative definite block keeps its exact Newton direction;
// otherwise the gradient is preconditioned by the diagonal curvature alone.
// diag(h) is negative definite whenever every -h_d > 0, so that direction is
// always uphill and the backtracking search keeps the trace monotone while
// the iterates climb toward the multinomial limit in the direction the data
// dictates. Returns false when some diagonal entry carries no curvature (a
// category with no counts), which no step can repair.
inline bool damped_block_direction(std::span<const double> h, double c,
                                   std::span<const double> g,
                                   std::span<double> out) {
  if (block_negative_definite(h, c)) {
    if (auto inv = invert_structured(h, c)) {
      auto delta = inv->apply(g);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = -delta[i];
      return true;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(-h[i] > 0.0)) return false;
    out[i] = g[i] / -h[i];
  }
  return true;
}

}  // namespace detail

struct GuardOutcome {
  bool ok_initially = true;  // both blocks negative definite at the input point
  bool ok = true;            // ... at the (possibly adjusted) output point
  BlmParams blm;
  DmParams dm;
  std::vector<GuardEvent> events;
  std::uint64_t approx_fallbacks = 0;
};

namespace detail {

// Shared guard loop. eval(params) must return the GradHess at params.
template <typename Params, typename Eval, typename Adjust>
GuardOutcome guard_loop(Params params, Eval eval, Adjust adjust, double epsilon,
                        int max_rounds, bool has_mix_block, std::size_t skip_cat_block,
                        GradHess* last_gh) {
  GuardOutcome out;
  double eps = epsilon;
  for (int round = 0;; ++round) {
    GradHess gh = eval(params);
    out.approx_fallbacks += gh.approx_fallbacks;
    int violated = 0;  // 1 = mix block, 2 = category block
    if (has_mix_block && !block_negative_definite(gh.mix_block.h, gh.mix_block.c))
      violated = 1;
    else if (skip_cat_block == 0 &&
             !block_negative_definite(gh.cat_block.h, gh.cat_block.c))
      violated = 2;
    if (violated == 0) {
      if (round == 0) out.ok_initially = true;
      out.ok = true;
      if (last_gh) *last_gh = std::move(gh);
      break;
    }
    out.ok_initially = false;
    if (round >= max_rounds) {
      out.ok = false;
      if (last_gh) *last_gh = std::move(gh);
      break;
    }
    adjust(params, gh, violated, eps);
    out.events.push_back({violated, eps});
    eps *= 2.0;
  }
  if constexpr (std::is_same_v<Params, BlmParams>) out.blm = std::move(params);
  else out.dm = std::move(params);
  return out;
}

inline void blm_guard_adjust(BlmParams& p, const GradHess& gh, int violated, double eps) {
  if (violated == 1) {
    // Strengthen the weaker curvature side by inflating the opposite
    // parameter: growing beta shrinks the shared coupling term without
    // touching alpha's own curvature, and vice versa.
    const double a_alpha = -gh.mix_block.h[0];
    const double a_beta = -gh.mix_block.h[1];
    if (a_alpha <= a_beta) p.beta += eps;
    else p.alpha += eps;
  } else {
    // Inflate every weight except the one with the weakest curvature: that
    // raises the sum (shrinking the coupling term) while leaving the
    // weakest pivot's own curvature untouched.
    std::size_t weakest = 0;
    for (std::size_t d = 1; d < p.alpha_d.size(); ++d)
      if (-gh.cat_block.h[d] < -gh.cat_block.h[weakest]) weakest = d;
    for (std::size_t d = 0; d < p.alpha_d.size(); ++d)
      if (d != weakest) p.alpha_d[d] += eps;
  }
}

inline void dm_guard_adjust(DmParams& p, const GradHess& gh, int /*violated*/, double eps) {
  std::size_t weakest = 0;
  for (std::size_t d = 1; d < p.alpha.size(); ++d)
    if (-gh.cat_block.h[d] < -gh.cat_block.h[weakest]) weakest = d;
  for (std::size_t d = 0; d < p.alpha.size(); ++d)
    if (d != weakest) p.alpha[d] += eps;
}

}  // namespace detail

// Checks both Hessian blocks for negative definiteness at `params` and, on
// failure, inflates parameters (doubling the increment each round) until the
// blocks are negative definite or max_rounds is exhausted. With a single
// Liouville weight the category block carries no information (the
// likelihood does not depend on it) and is skipped.
template <typename Data>
GuardOutcome check_guard(const BlmParams& params, const Data& data,
                         double epsilon = 1e-3, Backend backend = Backend::Direct,
                         int max_rounds = 60, GradHess* last_gh = nullptr) {
  params.validate();
  auto eval = [&](const BlmParams& p) {
    if constexpr (std::is_same_v<Data, CompressedCounts>) return blm_grad_hess(p, data);
    else return blm_grad_hess(p, data, backend);
  };
  const std::size_t skip_cat = params.alpha_d.size() == 1 ? 1 : 0;
  return detail::guard_loop(params, eval, detail::blm_guard_adjust, epsilon,
                            max_rounds, true, skip_cat, last_gh);
}

template <typename Data>
GuardOutcome check_guard(const DmParams& params, const Data& data,
                         double epsilon = 1e-3, Backend backend = Backend::Direct,
                         int max_rounds = 60, GradHess* last_gh = nullptr) {
  params.validate();
  auto eval = [&](const DmParams& p) {
    if constexpr (std::is_same_v<Data, CompressedCounts>) return dm_grad_hess(p, data);
    else return dm_grad_hess(p, data, backend);
  };
  return detail::guard_loop(params, eval, detail::dm_guard_adjust, epsilon,
                            max_rounds, false, 0, last_gh);
}

// ---------------------------------------------------------------------------
// Fitting

namespace detail {

inline std::vector<double> column_means(const CountMatrix& x) {
  std::vector<double> m(x.categories(), 0.0);
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.categories(); ++d) m[d] += x(n, d);
  for (auto& v : m) v /= static_cast<double>(x.rows());
  return m;
}

inline double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::abs(x) > m ? std::abs(x) : m;
  return m;
}

// Generic Newton loop shared by the DM and BLM fitters, parameterized over
// a small model adapter (see BlmAdapter / DmAdapter below).
template <typename Adapter>
FitReport newton_fit(Adapter& model, const FitConfig& cfg) {
  FitReport& rep = model.report();
  double ll = model.log_likelihood();
  if (!std::isfinite(ll))
    throw std::runtime_error("fit: non-finite log-likelihood at the start point");

  int ridge_run = 0;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // Repair definiteness before differentiating the step from this point.
    GradHess gh;
    const bool certified = model.run_guard(cfg, &gh);
    if (!certified) {
      // The repair diverged. Near the equidispersion ridge the definiteness
      // conditions fail at every magnitude (the critical pivot ratio tends
      // to one from above), so no finite increment can satisfy them. The
      // attempted adjustments are discarded: continue from the honest point
      // with damped steps and let the ridge detectors or the likelihood
      // plateau end the climb. Data with no usable curvature still aborts,
      // inside fallback_step.
      gh = model.grad_hess_current();
    }
    if (!model.guard_was_noop()) ll = model.log_likelihood();
    if (rep.ll_trace.empty()) rep.ll_trace.push_back(ll);

    if (model.ridge_magnitude(cfg)) {
      rep.termination = Termination::RidgeDetected;
      return model.finish();
    }
    if (inf_norm(gh.gradient) <= cfg.grad_tolerance) {
      rep.termination = model.relabel_ridge(cfg, Termination::GradConverged);
      return model.finish();
    }

    std::vector<double> step =
        certified ? model.newton_step(gh) : model.fallback_step(gh);
    // Backtracking: halve until the likelihood does not decrease and every
    // parameter stays positive.
    double t = 1.0;
    double new_ll = ll;
    bool accepted = false;
    for (int half = 0; half <= cfg.max_halvings; ++half, t *= 0.5) {
      if (!model.try_step(step, t)) continue;  // positivity violated
      new_ll = model.log_likelihood_candidate();
      if (std::isfinite(new_ll) && new_ll >= ll) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No admissible non-decreasing step exists at this scale: converged.
      rep.termination = model.relabel_ridge(cfg, Termination::LLConverged);
      return model.finish();
    }
    model.commit_step();
    ++rep.iterations;
    rep.ll_trace.push_back(new_ll);
    model.record_ratio();

    if (model.ridge_pattern(&ridge_run)) {
      rep.termination = Termination::RidgeDetected;
      return model.finish();
    }
    const bool ll_converged = std::abs(new_ll - ll) <= cfg.ll_rel_tolerance * (1.0 + std::abs(ll));
    ll = new_ll;
    if (ll_converged) {
      rep.termination = model.relabel_ridge(cfg, Termination::LLConverged);
      return model.finish();
    }
  }
  rep.termination = Termination::MaxIters;
  model.relabel_ridge_final(cfg);
  return model.finish();
}

}  // namespace detail

// Fits the BLM model by guarded Newton-Raphson.
inline FitReport fit_blm(const CountMatrix& x, const FitConfig& cfg = {}) {
  if (x.rows() == 0 || x.total() == 0)
    throw std::invalid_argument("fit_blm: data has no counts");
  const std::size_t d_cats = x.categories() - 1;

  struct BlmAdapter {
    const CountMatrix& x;
    const FitConfig& cfg;
    std::optional<CompressedCounts> cc;
    BlmParams cur, cand;
    FitReport rep;
    bool guard_noop = true;
    double prev_alpha = 0.0, prev_beta = 0.0;

    FitReport& report() { return rep; }

    double ll_at(const BlmParams& p) const {
      return cc ? blm_log_likelihood(p, *cc) : blm_log_likelihood(p, x, cfg.backend);
    }
    double log_likelihood() const { return ll_at(cur); }
    double log_likelihood_candidate() const { return ll_at(cand); }

    bool run_guard(const FitConfig& c, GradHess* gh) {
      GuardOutcome g = cc ? check_guard(cur, *cc, c.guard_epsilon, c.backend,
                                        c.max_guard_rounds, gh)
                          : check_guard(cur, x, c.guard_epsilon, c.backend,
                                        c.max_guard_rounds, gh);
      rep.approx_fallback_events += g.approx_fallbacks;
      for (auto& e : g.events) rep.guard_events.push_back(e);
      if (g.ok) {
        guard_noop = g.events.empty();
        cur = std::move(g.blm);
      } else {
        // A failed repair is not progress: keep the honest iterate.
        guard_noop = true;
      }
      return g.ok;
    }
    bool guard_was_noop() const { return guard_noop; }

    GradHess grad_hess_current() {
      GradHess gh = cc ? blm_grad_hess(cur, *cc) : blm_grad_hess(cur, x, cfg.backend);
      rep.approx_fallback_events += gh.approx_fallbacks;
      return gh;
    }

    std::vector<double> fallback_step(const GradHess& gh) const {
      const std::size_t dc = cur.alpha_d.size();
      std::vector<double> step(dc + 2, 0.0);
      if (dc > 1 &&
          !detail::damped_block_direction(gh.cat_block.h, gh.cat_block.c,
                                          std::span(gh.gradient).first(dc),
                                          std::span(step).first(dc)))
        throw std::runtime_error(detail::kNoCurvatureMsg);
      const double gmix[2] = {gh.gradient[dc], gh.gradient[dc + 1]};
      if (!detail::damped_block_direction(gh.mix_block.h, gh.mix_block.c,
                                          std::span(gmix, 2),
                                          std::span(step).subspan(dc, 2)))
        throw std::runtime_error(detail::kNoCurvatureMsg);
      return step;
    }

    std::vector<double> newton_step(const GradHess& gh) {
      const std::size_t dc = cur.alpha_d.size();
      std::vector<double> step(dc + 2, 0.0);
      if (dc > 1) {
        auto inv = invert_structured(gh.cat_block.h, gh.cat_block.c);
        if (!inv) throw std::runtime_error("fit: singular category block after guard");
        auto delta = inv->apply(std::span(gh.gradient).first(dc));
        for (std::size_t d = 0; d < dc; ++d) step[d] = -delta[d];
      }
      // With one Liouville weight the likelihood is invariant in it: its
      // gradient is identically zero and the block stays untouched.
      auto inv2 = invert_structured(gh.mix_block.h, gh.mix_block.c);
      if (!inv2) throw std::runtime_error("fit: singular mixing block after guard");
      const double gmix[2] = {gh.gradient[dc], gh.gradient[dc + 1]};
      auto delta2 = inv2->apply(std::span(gmix, 2));
      step[dc] = -delta2[0];
      step[dc + 1] = -delta2[1];
      return step;
    }

    bool try_step(const std::vector<double>& step, double t) {
      cand = cur;
      const std::size_t dc = cur.alpha_d.size();
      for (std::size_t d = 0; d < dc; ++d) {
        cand.alpha_d[d] = cur.alpha_d[d] + t * step[d];
        if (!(cand.alpha_d[d] > 0.0)) return false;
      }
      cand.alpha = cur.alpha + t * step[dc];
      cand.beta = cur.beta + t * step[dc + 1];
      return cand.alpha > 0.0 && cand.beta > 0.0;
    }
    void commit_step() {
      prev_alpha = cur.alpha;
      prev_beta = cur.beta;
      cur = cand;
    }
    void record_ratio() { rep.ratio_trace.push_back(cur.beta / cur.alpha); }

    bool ridge_magnitude(const FitConfig& c) const {
      return std::min(cur.alpha, cur.beta) > c.ridge_param_threshold;
    }
    bool ridge_pattern(int* run) const {
      if (prev_alpha <= 0.0) return false;
      const bool grew = cur.alpha > 10.0 * prev_alpha && cur.beta > 10.0 * prev_beta;
      const double r_prev = prev_beta / prev_alpha;
      const double r_cur = cur.beta / cur.alpha;
      const bool stable = std::abs(r_cur - r_prev) <= 0.01 * std::abs(r_prev);
      *run = (grew && stable) ? *run + 1 : 0;
      return *run >= 5;
    }
    Termination relabel_ridge(const FitConfig& c, Termination t) const {
      return ridge_magnitude(c) ? Termination::RidgeDetected : t;
    }
    void relabel_ridge_final(const FitConfig& c) {
      if (ridge_magnitude(c)) rep.termination = Termination::RidgeDetected;
    }

    FitReport finish() {
      rep.blm = cur;
      return std::move(rep);
    }
  };

  BlmAdapter a{x, cfg, std::nullopt, {}, {}, {}, true, 0.0, 0.0};
  a.rep.model = ModelKind::BetaLiouville;
  a.rep.backend = cfg.backend;
  if (cfg.backend == Backend::Sklar) a.cc = build_compressed(x);

  a.cur.alpha = 1.0;
  a.cur.beta = 1.0;
  a.cur.alpha_d.assign(d_cats, 1.0);
  if (cfg.init == InitStrategy::MomentMatched) {
    auto m = detail::column_means(x);
    double s = 0.0;
    for (std::size_t d = 0; d < d_cats; ++d) s += m[d];
    if (s > 0.0)
      for (std::size_t d = 0; d < d_cats; ++d)
        a.cur.alpha_d[d] = std::max(static_cast<double>(d_cats) * m[d] / s, 1e-3);
  }
  return detail::newton_fit(a, cfg);
}

// Fits the DM model by guarded Newton-Raphson.
inline FitReport fit_dm(const CountMatrix& x, const FitConfig& cfg = {}) {
  if (x.rows() == 0 || x.total() == 0)
    throw std::invalid_argument("fit_dm: data has no counts");
  const std::size_t cats = x.categories();

  struct DmAdapter {
    const CountMatrix& x;
    const FitConfig& cfg;
    std::optional<CompressedCounts> cc;
    DmParams cur, cand;
    FitReport rep;
    bool guard_noop = true;

    FitReport& report() { return rep; }
    double ll_at(const DmParams& p) const {
      return cc ? dm_log_likelihood(p, *cc) : dm_log_likelihood(p, x, cfg.backend);
    }
    double log_likelihood() const { return ll_at(cur); }
    double log_likelihood_candidate() const { return ll_at(cand); }

    bool run_guard(const FitConfig& c, GradHess* gh) {
      GuardOutcome g = cc ? check_guard(cur, *cc, c.guard_epsilon, c.backend,
                                        c.max_guard_rounds, gh)
                          : check_guard(cur, x, c.guard_epsilon, c.backend,
                                        c.max_guard_rounds, gh);
      rep.approx_fallback_events += g.approx_fallbacks;
      for (auto& e : g.events) rep.guard_events.push_back(e);
      if (g.ok) {
        guard_noop = g.events.empty();
        cur = std::move(g.dm);
      } else {
        // A failed repair is not progress: keep the honest iterate.
        guard_noop = true;
      }
      return g.ok;
    }
    bool guard_was_noop() const { return guard_noop; }

    GradHess grad_hess_current() {
      GradHess gh = cc ? dm_grad_hess(cur, *cc) : dm_grad_hess(cur, x, cfg.backend);
      rep.approx_fallback_events += gh.approx_fallbacks;
      return gh;
    }

    std::vector<double> fallback_step(const GradHess& gh) const {
      std::vector<double> step(cur.alpha.size(), 0.0);
      if (!detail::damped_block_direction(gh.cat_block.h, gh.cat_block.c,
                                          gh.gradient, step))
        throw std::runtime_error(detail::kNoCurvatureMsg);
      return step;
    }

    std::vector<double> newton_step(const GradHess& gh) {
      auto inv = invert_structured(gh.cat_block.h, gh.cat_block.c);
      if (!inv) throw std::runtime_error("fit: singular weight block after guard");
      auto delta = inv->apply(gh.gradient);
      for (auto& v : delta) v = -v;
      return delta;
    }
    bool try_step(const std::vector<double>& step, double t) {
      cand = cur;
      for (std::size_t d = 0; d < cur.alpha.size(); ++d) {
        cand.alpha[d] = cur.alpha[d] + t * step[d];
        if (!(cand.alpha[d] > 0.0)) return false;
      }
      return true;
    }
    void commit_step() { cur = cand; }
    void record_ratio() {}

    bool ridge_magnitude(const FitConfig& c) const {
      double mn = cur.alpha[0];
      for (double v : cur.alpha) mn = v < mn ? v : mn;
      return mn > c.ridge_param_threshold;
    }
    bool ridge_pattern(int*) const { return false; }
    Termination relabel_ridge(const FitConfig& c, Termination t) const {
      return ridge_magnitude(c) ? Termination::RidgeDetected : t;
    }
    void relabel_ridge_final(const FitConfig& c) {
      if (ridge_magnitude(c)) rep.termination = Termination::RidgeDetected;
    }
    FitReport finish() {
      rep.dm = cur;
      return std::move(rep);
    }
  };

  DmAdapter a{x, cfg, std::nullopt, {}, {}, {}, true};
  a.rep.model = ModelKind::DirichletMultinomial;
  a.rep.backend = cfg.backend;
  if (cfg.backend == Backend::Sklar) a.cc = build_compressed(x);

  a.cur.alpha.assign(cats, 1.0);
  if (cfg.init == InitStrategy::MomentMatched) {
    auto m = detail::column_means(x);
    double s = 0.0;
    for (double v : m) s += v;
    if (s > 0.0)
      for (std::size_t d = 0; d < cats; ++d)
        a.cur.alpha[d] = std::max(static_cast<double>(cats) * m[d] / s, 1e-3);
  }
  return detail::newton_fit(a, cfg);
}

inline FitReport fit(ModelKind model, const CountMatrix& x, const FitConfig& cfg = {}) {
  return model == ModelKind::BetaLiouville ? fit_blm(x, cfg) : fit_dm(x, cfg);
}

}  // namespace blm
