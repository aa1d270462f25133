#pragma once
// Evaluation and benchmarking: one-vs-rest classification metrics with
// micro-pooled summaries, wall-clock timing of a single guarded Newton step
// per backend, and the classifier power analysis over the simulation grid.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "blm/classify.hpp"
#include "blm/counts.hpp"
#include "blm/models.hpp"
#include "blm/optimizer.hpp"
#include "blm/simulate.hpp"

namespace blm {

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;    // tp / (tp + fp)
  double recall = 0.0;       // tp / (tp + fn)
  double specificity = 0.0;  // tn / (tn + fp)
  double f1 = 0.0;
  double accuracy = 0.0;     // one-vs-rest: (tp + tn) / total
};

struct MetricsReport {
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;           // plain pooled accuracy
  double micro_precision = 0.0;    // pooled over per-class tp/fp/fn
  double micro_recall = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;           // mean of per-class F1
  double macro_ovr_accuracy = 0.0; // mean of per-class one-vs-rest accuracies
};

namespace detail {
inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }
}  // namespace detail

// One-vs-rest metrics per class plus micro-pooled summaries. For
// single-label prediction the micro precision, recall, and F1 all collapse
// to the plain accuracy (every error is one FP and one FN).
inline MetricsReport compute_metrics(std::span<const std::size_t> truth,
                                     std::span<const std::size_t> predicted,
                                     std::size_t num_classes) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("compute_metrics: truth/prediction length mismatch");
  if (truth.empty())
    throw std::invalid_argument("compute_metrics: no observations");
  if (num_classes == 0)
    throw std::invalid_argument("compute_metrics: need at least one class");

  MetricsReport rep;
  rep.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes)
      throw std::invalid_argument("compute_metrics: class index out of range");
    ++rep.confusion[truth[i]][predicted[i]];
  }

  const std::size_t total = truth.size();
  std::size_t diag = 0;
  std::size_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  rep.per_class.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& m = rep.per_class[c];
    m.tp = rep.confusion[c][c];
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (k == c) continue;
      m.fn += rep.confusion[c][k];
      m.fp += rep.confusion[k][c];
    }
    m.tn = total - m.tp - m.fp - m.fn;
    m.precision = detail::ratio_or_zero(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fp));
    m.recall = detail::ratio_or_zero(static_cast<double>(m.tp), static_cast<double>(m.tp + m.fn));
    m.specificity = detail::ratio_or_zero(static_cast<double>(m.tn), static_cast<double>(m.tn + m.fp));
    m.f1 = detail::ratio_or_zero(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(total);
    diag += m.tp;
    pooled_tp += m.tp;
    pooled_fp += m.fp;
    pooled_fn += m.fn;
    rep.macro_f1 += m.f1;
    rep.macro_ovr_accuracy += m.accuracy;
  }
  rep.macro_f1 /= static_cast<double>(num_classes);
  rep.macro_ovr_accuracy /= static_cast<double>(num_classes);
  rep.accuracy = static_cast<double>(diag) / static_cast<double>(total);
  rep.micro_precision = detail::ratio_or_zero(static_cast<double>(pooled_tp),
                                              static_cast<double>(pooled_tp + pooled_fp));
  rep.micro_recall = detail::ratio_or_zero(static_cast<double>(pooled_tp),
                                           static_cast<double>(pooled_tp + pooled_fn));
  rep.micro_f1 = detail::ratio_or_zero(2.0 * rep.micro_precision * rep.micro_recall,
                                       rep.micro_precision + rep.micro_recall);
  return rep;
}

// ---------------------------------------------------------------------------
// Newton-step benchmark

struct BenchRecord {
  ModelKind model = ModelKind::BetaLiouville;
  Backend backend = Backend::Direct;
  std::size_t n = 0;
  std::uint32_t m = 0;
  std::size_t categories = 0;
  int bootstrap = 0;
  double step_seconds = 0.0;   // one guarded Newton step on raw counts
  double build_seconds = 0.0;  // compression build portion (Sklar only)
};

namespace detail {

inline bool block_negative_definite_probe(const GradHess& gh) {
  bool ok = block_negative_definite(gh.cat_block.h, gh.cat_block.c);
  if (!gh.mix_block.h.empty())
    ok = block_negative_definite(gh.mix_block.h, gh.mix_block.c) && ok;
  return ok;
}

// One guarded Newton step from `params`: derivative evaluation, the
// definiteness verdicts, the structured solves, and the parameter update.
// Returns false if a block was singular (the step is then skipped).
inline bool timed_blm_step(BlmParams& params, const CountMatrix& x, Backend backend,
                           const CompressedCounts* cc) {
  GradHess gh = cc ? blm_grad_hess(params, *cc) : blm_grad_hess(params, x, backend);
  const std::size_t dc = params.alpha_d.size();
  bool nd = block_negative_definite_probe(gh);
  auto inv_cat = invert_structured(gh.cat_block.h, gh.cat_block.c);
  auto inv_mix = invert_structured(gh.mix_block.h, gh.mix_block.c);
  if (!inv_cat || !inv_mix) return nd;
  auto d1 = inv_cat->apply(std::span(gh.gradient).first(dc));
  const double gmix[2] = {gh.gradient[dc], gh.gradient[dc + 1]};
  auto d2 = inv_mix->apply(std::span<const double>(gmix, 2));
  for (std::size_t d = 0; d < dc; ++d)
    params.alpha_d[d] = std::max(params.alpha_d[d] - d1[d], 1e-8);
  params.alpha = std::max(params.alpha - d2[0], 1e-8);
  params.beta = std::max(params.beta - d2[1], 1e-8);
  return nd;
}

inline bool timed_dm_step(DmParams& params, const CountMatrix& x, Backend backend,
                          const CompressedCounts* cc) {
  GradHess gh = cc ? dm_grad_hess(params, *cc) : dm_grad_hess(params, x, backend);
  const bool nd = block_negative_definite(gh.cat_block.h, gh.cat_block.c);
  auto inv = invert_structured(gh.cat_block.h, gh.cat_block.c);
  if (!inv) return nd;
  auto delta = inv->apply(gh.gradient);
  for (std::size_t d = 0; d < params.alpha.size(); ++d)
    params.alpha[d] = std::max(params.alpha[d] - delta[d], 1e-8);
  return nd;
}

}  // namespace detail

// Times one guarded Newton step per bootstrap on freshly sampled data of the
// given shape. Data generation and initialization are outside the timed
// region. For the Sklar backend the timed step consumes raw counts like the
// other backends do, so it includes building the compressed statistics; that
// build portion is also reported on its own as build_seconds. Steps shorter
// than min_duration seconds are repeated and averaged for timer stability.
inline std::vector<BenchRecord> bench_newton_step(ModelKind model, Backend backend,
                                                  std::size_t n, std::uint32_t m,
                                                  std::size_t categories,
                                                  int bootstraps = 5,
                                                  std::uint64_t seed = 20240501,
                                                  double min_duration = 0.02) {
  if (n == 0 || m == 0 || categories < 2 || bootstraps < 1)
    throw std::invalid_argument("bench_newton_step: degenerate shape");
  using clock = std::chrono::steady_clock;
  std::vector<BenchRecord> out;

  for (int b = 0; b < bootstraps; ++b) {
    Rng rng(mix_seed(seed, {static_cast<std::uint64_t>(b)}));
    // Near-uniform simplex with mild jitter (exponential spacings).
    MultinomialParams p;
    p.p.resize(categories);
    double s = 0.0;
    for (auto& v : p.p) {
      v = -std::log(1.0 - rng.uniform());
      s += v;
    }
    for (auto& v : p.p) v /= s;
    const CountMatrix x = sample_multinomial(p, m, n, rng);

    BlmParams blm0;
    DmParams dm0;
    if (model == ModelKind::BetaLiouville) {
      blm0.alpha_d.assign(categories - 1, 1.0);
      blm0.alpha = 1.0;
      blm0.beta = 1.0;
    } else {
      dm0.alpha.assign(categories, 1.0);
    }

    // Calibrate repetitions so the measured region is at least min_duration.
    std::size_t reps = 1;
    double step_sec = 0.0, build_sec = 0.0;
    for (;;) {
      double build_total = 0.0;
      const auto t0 = clock::now();
      for (std::size_t r = 0; r < reps; ++r) {
        CompressedCounts cc;
        const CompressedCounts* ccp = nullptr;
        if (backend == Backend::Sklar) {
          const auto b0 = clock::now();
          cc = build_compressed(x);
          build_total += std::chrono::duration<double>(clock::now() - b0).count();
          ccp = &cc;
        }
        if (model == ModelKind::BetaLiouville) {
          BlmParams params = blm0;
          detail::timed_blm_step(params, x, backend, ccp);
        } else {
          DmParams params = dm0;
          detail::timed_dm_step(params, x, backend, ccp);
        }
      }
      const double total = std::chrono::duration<double>(clock::now() - t0).count();
      if (total >= min_duration || reps >= (1u << 20)) {
        step_sec = total / static_cast<double>(reps);
        build_sec = build_total / static_cast<double>(reps);
        break;
      }
      const double scale = total > 0.0 ? min_duration / total : 16.0;
      reps = std::max(reps * 2, static_cast<std::size_t>(static_cast<double>(reps) * scale * 1.25));
    }
    out.push_back({model, backend, n, m, categories, b, step_sec, build_sec});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Power analysis

struct PowerRow {
  double sigma = 0.0;
  std::uint32_t m = 0;
  std::size_t n = 0;
  std::size_t replicate = 0;
  Method method = Method::MultinomialNB;
  std::size_t class_index = 0;
  std::string class_label;
  ClassMetrics metrics;            // one-vs-rest for this class
  double pooled_accuracy = 0.0;    // cell-level plain accuracy
  double pooled_micro_f1 = 0.0;    // cell-level micro F1
  double macro_ovr_accuracy = 0.0; // cell-level mean one-vs-rest accuracy
};

// Trains and evaluates each method on every cell of the grid; emits one row
// per (cell, method, class). Classes are balanced by construction, so the
// pooled numbers summarize a cell fairly.
inline std::vector<PowerRow> run_power_analysis(const SimGrid& grid,
                                                const std::vector<Method>& methods,
                                                SimSource source = SimSource::Multinomial,
                                                const McmcConfig& mcmc = {1000, 10},
                                                const FitConfig& fit_cfg = {},
                                                double pseudo = 1.0) {
  if (methods.empty())
    throw std::invalid_argument("run_power_analysis: no methods requested");
  std::vector<PowerRow> rows;
  build_power_grid(grid, source, [&](CellDataset&& cell) {
    // Stack the per-class test sets once per cell.
    std::vector<std::uint32_t> flat;
    std::vector<std::size_t> truth;
    const std::size_t cats = cell.test.front().categories();
    for (std::size_t c = 0; c < cell.test.size(); ++c)
      for (std::size_t r = 0; r < cell.test[c].rows(); ++r) {
        auto row = cell.test[c].row(r);
        flat.insert(flat.end(), row.begin(), row.end());
        truth.push_back(c);
      }
    const CountMatrix test_x(truth.size(), cats, std::move(flat));

    for (Method method : methods) {
      const ClassifierModel model =
          train_classifier(method, cell.labels, cell.train, pseudo, fit_cfg);
      const auto pred = classify(model, test_x);
      const MetricsReport rep = compute_metrics(truth, pred, cell.labels.size());
      for (std::size_t c = 0; c < cell.labels.size(); ++c) {
        PowerRow row;
        row.sigma = cell.sigma;
        row.m = cell.m;
        row.n = cell.n;
        row.replicate = cell.replicate;
        row.method = method;
        row.class_index = c;
        row.class_label = cell.labels[c];
        row.metrics = rep.per_class[c];
        row.pooled_accuracy = rep.accuracy;
        row.pooled_micro_f1 = rep.micro_f1;
        row.macro_ovr_accuracy = rep.macro_ovr_accuracy;
        rows.push_back(std::move(row));
      }
    }
  }, mcmc);
  return rows;
}

}  // namespace blm
