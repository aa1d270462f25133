#pragma once
// Count-vector classifiers built on the three models. Inner-product methods
// reduce every model to a point on the probability simplex and score
// argmax_c sum_d x_d ln p_dc; marginal methods score the full fitted
// compound likelihood of each class. Ties resolve to the lowest class index.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blm/counts.hpp"
#include "blm/models.hpp"
#include "blm/optimizer.hpp"

namespace blm {

enum class Method {
  MultinomialNB,
  DmNB,
  BlmNB,
  DmMarginal,
  BlmMarginal,
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::MultinomialNB: return "mnb";
    case Method::DmNB: return "dm-nb";
    case Method::BlmNB: return "blm-nb";
    case Method::DmMarginal: return "dm-marginal";
    case Method::BlmMarginal: return "blm-marginal";
  }
  return "?";
}

inline bool is_inner_product(Method m) {
  return m == Method::MultinomialNB || m == Method::DmNB || m == Method::BlmNB;
}

struct ClassifierModel {
  Method method = Method::MultinomialNB;
  std::vector<std::string> labels;
  // Per-class simplex points (inner-product methods).
  std::vector<std::vector<double>> simplex;
  // Per-class fitted parameters (marginal methods).
  std::vector<DmParams> dm;
  std::vector<BlmParams> blm;
};

// ---------------------------------------------------------------------------
// Projections onto the simplex

// DM mean direction: p_d = alpha_d / sum(alpha).
inline std::vector<double> project_dm(const DmParams& params) {
  params.validate();
  const double s = params.sum();
  std::vector<double> p(params.alpha.size());
  for (std::size_t d = 0; d < p.size(); ++d) p[d] = params.alpha[d] / s;
  return p;
}

// BLM mean direction: the Beta pair splits mass between the first D
// categories and the last; the Liouville weights split the first-D share.
inline std::vector<double> project_blm(const BlmParams& params) {
  params.validate();
  const double share = params.alpha / (params.alpha + params.beta);
  const double s = params.sum_alpha_d();
  std::vector<double> p(params.categories());
  for (std::size_t d = 0; d + 1 < p.size(); ++d)
    p[d] = share * params.alpha_d[d] / s;
  p.back() = params.beta / (params.alpha + params.beta);
  return p;
}

// ---------------------------------------------------------------------------
// Training

// Closed-form smoothed multinomial estimate from aggregated class counts:
// p_d = (pseudo + colsum_d) / sum_e (pseudo + colsum_e).
inline std::vector<double> multinomial_nb_estimate(const CountMatrix& x, double pseudo) {
  if (pseudo < 0.0)
    throw std::invalid_argument("multinomial_nb_estimate: pseudo-count must be >= 0");
  std::vector<double> col(x.categories(), pseudo);
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.categories(); ++d) col[d] += x(n, d);
  double total = 0.0;
  for (double v : col) total += v;
  if (total <= 0.0)
    throw std::invalid_argument("multinomial_nb_estimate: class has no counts and no smoothing");
  for (auto& v : col) v /= total;
  return col;
}

namespace detail {

// Smoothing for the fitted models: one appended pseudo-observation of
// round(pseudo) per category, which shifts the aggregated counts exactly as
// the closed-form smoothing does (for integer pseudo) while keeping the
// data in row form for the fitters.
inline CountMatrix with_pseudo_row(const CountMatrix& x, double pseudo) {
  if (pseudo < 0.0)
    throw std::invalid_argument("with_pseudo_row: pseudo-count must be >= 0");
  const auto k = static_cast<std::uint32_t>(std::llround(pseudo));
  if (k == 0) return x;
  std::vector<std::uint32_t> flat;
  flat.reserve((x.rows() + 1) * x.categories());
  for (std::size_t n = 0; n < x.rows(); ++n)
    for (std::size_t d = 0; d < x.categories(); ++d) flat.push_back(x(n, d));
  flat.insert(flat.end(), x.categories(), k);
  return CountMatrix(x.rows() + 1, x.categories(), std::move(flat));
}

}  // namespace detail

// Trains one classifier over per-class count matrices. All five methods use
// the same smoothing mechanism (pseudo-count per category added to the
// class's training counts; default 1).
inline ClassifierModel train_classifier(Method method,
                                        const std::vector<std::string>& labels,
                                        const std::vector<CountMatrix>& per_class,
                                        double pseudo = 1.0,
                                        const FitConfig& cfg = {}) {
  if (per_class.empty())
    throw std::invalid_argument("train_classifier: need at least one class");
  if (labels.size() != per_class.size())
    throw std::invalid_argument("train_classifier: one label per class required");
  const std::size_t cats = per_class.front().categories();
  for (const auto& x : per_class) {
    if (x.categories() != cats)
      throw std::invalid_argument("train_classifier: classes disagree on category count");
    if (x.rows() == 0)
      throw std::invalid_argument("train_classifier: empty training class");
  }

  ClassifierModel model;
  model.method = method;
  model.labels = labels;
  for (const auto& x : per_class) {
    switch (method) {
      case Method::MultinomialNB:
        model.simplex.push_back(multinomial_nb_estimate(x, pseudo));
        break;
      case Method::DmNB: {
        FitReport r = fit_dm(detail::with_pseudo_row(x, pseudo), cfg);
        model.simplex.push_back(project_dm(r.dm));
        break;
      }
      case Method::BlmNB: {
        FitReport r = fit_blm(detail::with_pseudo_row(x, pseudo), cfg);
        model.simplex.push_back(project_blm(r.blm));
        break;
      }
      case Method::DmMarginal: {
        FitReport r = fit_dm(detail::with_pseudo_row(x, pseudo), cfg);
        model.dm.push_back(std::move(r.dm));
        break;
      }
      case Method::BlmMarginal: {
        FitReport r = fit_blm(detail::with_pseudo_row(x, pseudo), cfg);
        model.blm.push_back(std::move(r.blm));
        break;
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Marginal (compound) likelihoods of a single count vector, constants kept:
// these are genuine log-pmfs and normalize over the outcome space.

inline double marginal_log_likelihood_dm(const DmParams& params,
                                         std::span<const std::uint32_t> x) {
  params.validate();
  if (x.size() != params.alpha.size())
    throw std::invalid_argument("marginal_log_likelihood_dm: dimension mismatch");
  std::uint64_t m = 0;
  for (auto v : x) m += v;
  double ll = dual_log_gamma(1.0, m) - dual_log_gamma(params.sum(), m);
  for (std::size_t d = 0; d < x.size(); ++d)
    ll += dual_log_gamma(params.alpha[d], x[d]) - dual_log_gamma(1.0, x[d]);
  return ll;
}

inline double marginal_log_likelihood_blm(const BlmParams& params,
                                          std::span<const std::uint32_t> x) {
  params.validate();
  if (x.size() != params.categories())
    throw std::invalid_argument("marginal_log_likelihood_blm: dimension mismatch");
  const std::size_t d_cats = params.alpha_d.size();
  std::uint64_t partial = 0;
  for (std::size_t d = 0; d < d_cats; ++d) partial += x[d];
  const std::uint64_t last = x[d_cats];
  const std::uint64_t m = partial + last;

  double ll = dual_log_gamma(1.0, m);
  for (std::size_t d = 0; d < x.size(); ++d) ll -= dual_log_gamma(1.0, x[d]);
  for (std::size_t d = 0; d < d_cats; ++d)
    ll += dual_log_gamma(params.alpha_d[d], x[d]);
  ll -= dual_log_gamma(params.sum_alpha_d(), partial);
  ll += dual_log_gamma(params.alpha, partial);
  ll += dual_log_gamma(params.beta, last);
  ll -= dual_log_gamma(params.alpha + params.beta, m);
  return ll;
}

// ---------------------------------------------------------------------------
// Prediction

namespace detail {

// sum_d x_d ln p_d with 0 * ln 0 = 0 and a hard -inf for impossible counts.
inline double inner_product_score(std::span<const double> p,
                                  std::span<const std::uint32_t> x) {
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] == 0) continue;
    if (p[d] <= 0.0) return -std::numeric_limits<double>::infinity();
    s += x[d] * std::log(p[d]);
  }
  return s;
}

template <typename Score>
std::vector<std::size_t> argmax_rows(const CountMatrix& x, std::size_t classes,
                                     Score score) {
  std::vector<std::size_t> out(x.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    std::size_t best = 0;
    double best_score = score(0, x.row(n));
    for (std::size_t c = 1; c < classes; ++c) {
      const double s = score(c, x.row(n));
      if (s > best_score) {  // strict: ties keep the lowest class index
        best_score = s;
        best = c;
      }
    }
    out[n] = best;
  }
  return out;
}

}  // namespace detail

inline std::vector<std::size_t> classify_inner_product(const ClassifierModel& model,
                                                       const CountMatrix& x) {
  if (!is_inner_product(model.method))
    throw std::invalid_argument("classify_inner_product: model has no simplex form");
  if (model.simplex.empty() || model.simplex.front().size() != x.categories())
    throw std::invalid_argument("classify_inner_product: category mismatch");
  return detail::argmax_rows(x, model.simplex.size(), [&](std::size_t c, auto row) {
    return detail::inner_product_score(model.simplex[c], row);
  });
}

inline std::vector<std::size_t> classify_marginal(const ClassifierModel& model,
                                                  const CountMatrix& x) {
  if (model.method == Method::DmMarginal) {
    if (model.dm.empty() || model.dm.front().categories() != x.categories())
      throw std::invalid_argument("classify_marginal: category mismatch");
    return detail::argmax_rows(x, model.dm.size(), [&](std::size_t c, auto row) {
      return marginal_log_likelihood_dm(model.dm[c], row);
    });
  }
  if (model.method == Method::BlmMarginal) {
    if (model.blm.empty() || model.blm.front().categories() != x.categories())
      throw std::invalid_argument("classify_marginal: category mismatch");
    return detail::argmax_rows(x, model.blm.size(), [&](std::size_t c, auto row) {
      return marginal_log_likelihood_blm(model.blm[c], row);
    });
  }
  throw std::invalid_argument("classify_marginal: model has no marginal form");
}

inline std::vector<std::size_t> classify(const ClassifierModel& model,
                                         const CountMatrix& x) {
  return is_inner_product(model.method) ? classify_inner_product(model, x)
                                        : classify_marginal(model, x);
}

}  // namespace blm
