// Acceptance gate for the count-model toolkit. Each numbered check is an
// end-to-end numerical or statistical property of the library, verified
// against independent oracles (lgamma identities, finite differences, dense
// eigenvalue/linear-algebra solves, exhaustive enumeration, long-run
// sampling). The binary prints one line per check —
//   ACCEPTANCE <k> PASS|FAIL|SKIP: <detail>
// — and exits nonzero if any executed check fails. An optional integer
// argument runs a single check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "blm/classify.hpp"
#include "blm/corpus.hpp"
#include "blm/counts.hpp"
#include "blm/evalbench.hpp"
#include "blm/models.hpp"
#include "blm/optimizer.hpp"
#include "blm/simulate.hpp"
#include "blm/special.hpp"
#include "oracles.hpp"

namespace {

using json = nlohmann::ordered_json;
using oracle::rel_close;

struct Outcome {
  enum class Status { Pass, Fail, Skip };
  Status status = Status::Fail;
  std::string detail;

  static Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
  static Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
  static Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Shared generator for the backend-equivalence and derivative checks:
// small random count matrices with bounded entries plus log-uniform
// positive parameters.
struct Instance {
  blm::CountMatrix x;
  blm::BlmParams blm;
  blm::DmParams dm;
};

Instance random_instance(blm::Rng& rng) {
  Instance inst{oracle::random_counts(rng, 8, 5, 6), {}, {}};
  inst.blm = oracle::random_blm_params(rng, inst.x.categories() - 1);
  inst.dm = oracle::random_dm_params(rng, inst.x.categories());
  return inst;
}

// ---------------------------------------------------------------------------
// 1. Backend equivalence: raw-count and compressed-count evaluation agree.

Outcome criterion_1() {
  blm::Rng rng(blm::mix_seed(11, {1}));
  const double tol = 1e-10;
  double worst = 0.0;
  auto close = [&](double a, double b) {
    worst = std::max(worst, std::abs(a - b) / (1.0 + std::abs(a)));
    return rel_close(a, b, tol);
  };
  auto blocks_close = [&](const blm::GradHess& a, const blm::GradHess& b) {
    if (a.gradient.size() != b.gradient.size()) return false;
    for (std::size_t i = 0; i < a.gradient.size(); ++i)
      if (!close(a.gradient[i], b.gradient[i])) return false;
    for (std::size_t i = 0; i < a.cat_block.h.size(); ++i)
      if (!close(a.cat_block.h[i], b.cat_block.h[i])) return false;
    if (!close(a.cat_block.c, b.cat_block.c)) return false;
    for (std::size_t i = 0; i < a.mix_block.h.size(); ++i)
      if (!close(a.mix_block.h[i], b.mix_block.h[i])) return false;
    return close(a.mix_block.c, b.mix_block.c);
  };

  for (int t = 0; t < 200; ++t) {
    const Instance inst = random_instance(rng);
    const blm::CompressedCounts cc = blm::build_compressed(inst.x);

    if (!close(blm::blm_log_likelihood(inst.blm, inst.x, blm::Backend::Direct),
               blm::blm_log_likelihood(inst.blm, cc)))
      return Outcome::fail("instance " + std::to_string(t) +
                           ": compound log-likelihood mismatch between backends");
    if (!blocks_close(blm::blm_grad_hess(inst.blm, inst.x, blm::Backend::Direct),
                      blm::blm_grad_hess(inst.blm, cc)))
      return Outcome::fail("instance " + std::to_string(t) +
                           ": compound derivative mismatch between backends");

    if (!close(blm::dm_log_likelihood(inst.dm, inst.x, blm::Backend::Direct),
               blm::dm_log_likelihood(inst.dm, cc)))
      return Outcome::fail("instance " + std::to_string(t) +
                           ": Dirichlet log-likelihood mismatch between backends");
    if (!blocks_close(blm::dm_grad_hess(inst.dm, inst.x, blm::Backend::Direct),
                      blm::dm_grad_hess(inst.dm, cc)))
      return Outcome::fail("instance " + std::to_string(t) +
                           ": Dirichlet derivative mismatch between backends");
  }
  return Outcome::pass(
      "200 instances, both model families: log-likelihood, gradient, and "
      "Hessian entries agree across backends (worst rel. dev. " +
      fmt(worst) + ", tol 1e-10)");
}

// ---------------------------------------------------------------------------
// 2. Derivative correctness against central finite differences.

Outcome criterion_2() {
  blm::Rng rng(blm::mix_seed(11, {2}));
  double worst_g = 0.0, worst_h = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Instance inst = random_instance(rng);
    const std::size_t cats = inst.x.categories();

    {  // Compound family (D+2 parameters).
      const auto theta = oracle::flatten(inst.blm);
      const oracle::ScalarFn ll = [&](const std::vector<double>& v) {
        return blm::blm_log_likelihood(oracle::unflatten_blm(v), inst.x,
                                       blm::Backend::Direct);
      };
      const oracle::VectorFn grad = [&](const std::vector<double>& v) {
        return blm::blm_grad_hess(oracle::unflatten_blm(v), inst.x,
                                  blm::Backend::Direct)
            .gradient;
      };
      const auto gh = blm::blm_grad_hess(inst.blm, inst.x, blm::Backend::Direct);
      const auto fd_g = oracle::fd_gradient(ll, theta);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        worst_g = std::max(worst_g, std::abs(gh.gradient[i] - fd_g[i]) /
                                        (1.0 + std::abs(gh.gradient[i])));
        if (!rel_close(gh.gradient[i], fd_g[i], 1e-5))
          return Outcome::fail("compound gradient entry " + std::to_string(i) +
                               " off at instance " + std::to_string(t));
      }
      const Eigen::MatrixXd dense = oracle::dense_blm_hessian(gh);
      const Eigen::MatrixXd fd_h = oracle::fd_hessian(grad, theta);
      for (Eigen::Index i = 0; i < dense.rows(); ++i)
        for (Eigen::Index j = 0; j < dense.cols(); ++j) {
          worst_h = std::max(worst_h, std::abs(dense(i, j) - fd_h(i, j)) /
                                          (1.0 + std::abs(dense(i, j))));
          if (!rel_close(dense(i, j), fd_h(i, j), 1e-4))
            return Outcome::fail("compound Hessian entry off at instance " +
                                 std::to_string(t));
        }
    }

    {  // Dirichlet family (D+1 parameters).
      const auto theta = oracle::flatten(inst.dm);
      const oracle::ScalarFn ll = [&](const std::vector<double>& v) {
        return blm::dm_log_likelihood(oracle::unflatten_dm(v), inst.x,
                                      blm::Backend::Direct);
      };
      const oracle::VectorFn grad = [&](const std::vector<double>& v) {
        return blm::dm_grad_hess(oracle::unflatten_dm(v), inst.x,
                                 blm::Backend::Direct)
            .gradient;
      };
      const auto gh = blm::dm_grad_hess(inst.dm, inst.x, blm::Backend::Direct);
      const auto fd_g = oracle::fd_gradient(ll, theta);
      for (std::size_t i = 0; i < cats; ++i)
        if (!rel_close(gh.gradient[i], fd_g[i], 1e-5))
          return Outcome::fail("Dirichlet gradient entry off at instance " +
                               std::to_string(t));
      const Eigen::MatrixXd dense = oracle::dense_dm_hessian(gh);
      const Eigen::MatrixXd fd_h = oracle::fd_hessian(grad, theta);
      for (Eigen::Index i = 0; i < dense.rows(); ++i)
        for (Eigen::Index j = 0; j < dense.cols(); ++j)
          if (!rel_close(dense(i, j), fd_h(i, j), 1e-4))
            return Outcome::fail("Dirichlet Hessian entry off at instance " +
                                 std::to_string(t));
    }
  }
  return Outcome::pass(
      "200 instances, both model families: analytic gradients within 1e-5 and "
      "Hessians within 1e-4 of finite differences (worst grad dev. " +
      fmt(worst_g) + ", worst Hessian dev. " + fmt(worst_h) + ")");
}

// ---------------------------------------------------------------------------
// 3. Structured inversion against a dense solve.

Outcome criterion_3() {
  blm::Rng rng(blm::mix_seed(11, {3}));
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const std::size_t k =
        1 + static_cast<std::size_t>(rng.uniform() * 50.0);  // D <= 50
    std::vector<double> h(k);
    for (auto& v : h) v = -std::exp((rng.uniform() - 0.5) * 6.0);
    double c = std::exp((rng.uniform() - 0.5) * 6.0);
    if (rng.uniform() < 0.5) c = -c;
    if (rng.uniform() < 0.1) c = 0.0;

    const auto inv = blm::invert_structured(h, c);
    if (!inv) continue;  // near-singular draw; replace it

    Eigen::MatrixXd dense = Eigen::MatrixXd::Constant(
        static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k), c);
    for (std::size_t i = 0; i < k; ++i)
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += h[i];

    std::vector<double> v(k);
    for (auto& e : v) e = (rng.uniform() - 0.5) * 4.0;
    const auto got = inv->apply(v);
    const Eigen::VectorXd rhs =
        Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(k));
    const Eigen::VectorXd want = dense.colPivHouseholderQr().solve(rhs);
    for (std::size_t i = 0; i < k; ++i) {
      const double w = want(static_cast<Eigen::Index>(i));
      worst = std::max(worst, std::abs(got[i] - w) / (1.0 + std::abs(got[i])));
      if (!rel_close(got[i], w, 1e-10))
        return Outcome::fail("structured solve disagrees with dense solve (k=" +
                             std::to_string(k) + ")");
    }
    ++done;
  }
  return Outcome::pass(
      "100 random diagonal-plus-rank-one systems up to 50 weights: structured "
      "solve matches the dense solve (worst rel. dev. " + fmt(worst) +
      ", tol 1e-10)");
}

// ---------------------------------------------------------------------------
// 4. Definiteness guard on certified-indefinite points.

Outcome criterion_4() {
  blm::Rng rng(blm::mix_seed(11, {4}));
  // Mixed-magnitude weights frequently violate the rank-one pivot bound.
  auto mixed = [&](std::size_t count) {
    std::vector<double> w(count);
    for (auto& v : w)
      v = rng.uniform() < 0.5 ? oracle::random_param(rng, 0.02, 0.2)
                              : oracle::random_param(rng, 20.0, 200.0);
    return w;
  };

  // Points whose indefiniteness persists at every magnitude (data on the
  // equidispersion ridge pins the critical pivot ratio above one) cannot be
  // repaired by upward increments; the fitter handles those via damped steps
  // and ridge detection instead. Such points must still be FLAGGED here, and
  // when the repair gives up, the dense oracle must confirm the final
  // adjusted point is indeed still indefinite; they do not count toward the
  // repaired quota.
  int repaired = 0, blm_count = 0, dm_count = 0, beyond_repair = 0;
  for (int attempt = 0; attempt < 4000 && repaired < 12; ++attempt) {
    const blm::CountMatrix x = oracle::random_counts(rng, 4, 5, 5);
    if (attempt % 2 == 0) {
      if (x.categories() < 3) continue;  // need >= 2 Liouville weights
      blm::BlmParams theta;
      theta.alpha_d = mixed(x.categories() - 1);
      const auto mix = mixed(2);
      theta.alpha = mix[0];
      theta.beta = mix[1];
      const auto gh = blm::blm_grad_hess(theta, x, blm::Backend::Direct);
      if (oracle::max_eigenvalue(oracle::dense_blm_hessian(gh)) <= 1e-8)
        continue;  // not certified indefinite by the dense oracle
      const auto out = blm::check_guard(theta, x);
      if (out.ok_initially)
        return Outcome::fail("guard missed a certified-indefinite compound point");
      const auto post = blm::blm_grad_hess(out.blm, x, blm::Backend::Direct);
      const Eigen::MatrixXd post_h = oracle::dense_blm_hessian(post);
      const double post_eig = oracle::max_eigenvalue(post_h);
      if (!out.ok) {
        // The oracle must not find the abandoned point comfortably negative
        // definite. (Within rounding of singular is the expected ridge
        // signature: the eigensolver's sign there is noise and the exact
        // pivot test inside the guard is the reliable arbiter.)
        if (post_eig < -1e-6 * post_h.cwiseAbs().maxCoeff())
          return Outcome::fail(
              "guard reported an unrepairable compound point, but the oracle "
              "finds its final adjustment negative definite");
        ++beyond_repair;
        continue;
      }
      if (!(post_eig < 0.0))
        return Outcome::fail("adjusted compound point is not negative definite");
      ++repaired;
      ++blm_count;
    } else {
      blm::DmParams theta{mixed(x.categories())};
      const auto gh = blm::dm_grad_hess(theta, x, blm::Backend::Direct);
      if (oracle::max_eigenvalue(oracle::dense_dm_hessian(gh)) <= 1e-8) continue;
      const auto out = blm::check_guard(theta, x);
      if (out.ok_initially)
        return Outcome::fail("guard missed a certified-indefinite Dirichlet point");
      const auto post = blm::dm_grad_hess(out.dm, x, blm::Backend::Direct);
      const Eigen::MatrixXd post_h = oracle::dense_dm_hessian(post);
      const double post_eig = oracle::max_eigenvalue(post_h);
      if (!out.ok) {
        if (post_eig < -1e-6 * post_h.cwiseAbs().maxCoeff())
          return Outcome::fail(
              "guard reported an unrepairable Dirichlet point, but the oracle "
              "finds its final adjustment negative definite");
        ++beyond_repair;
        continue;
      }
      if (!(post_eig < 0.0))
        return Outcome::fail("adjusted Dirichlet point is not negative definite");
      ++repaired;
      ++dm_count;
    }
  }
  if (repaired < 10)
    return Outcome::fail("search produced only " + std::to_string(repaired) +
                         " repaired certified-indefinite points (need >= 10)");
  return Outcome::pass(
      std::to_string(repaired) + " eigenvalue-certified indefinite points (" +
      std::to_string(blm_count) + " compound, " + std::to_string(dm_count) +
      " Dirichlet): every one flagged and repaired to max eigenvalue < 0; " +
      std::to_string(beyond_repair) +
      " ridge-pinned points flagged but confirmed beyond increment repair");
}

// ---------------------------------------------------------------------------
// 5. Marginal distributions sum to one over the whole outcome space.

void enumerate_outcomes(std::uint32_t m, std::size_t cats,
                        const std::function<void(const std::vector<std::uint32_t>&)>& fn) {
  std::vector<std::uint32_t> cur(cats, 0);
  std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t pos,
                                                            std::uint32_t left) {
    if (pos + 1 == cats) {
      cur[pos] = left;
      fn(cur);
      return;
    }
    for (std::uint32_t v = 0; v <= left; ++v) {
      cur[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, m);
}

Outcome criterion_5() {
  blm::Rng rng(blm::mix_seed(11, {5}));
  const std::vector<std::pair<std::size_t, std::uint32_t>> shapes = {
      {2, 5}, {3, 3}, {3, 4}};
  double worst = 0.0;
  for (const auto& [cats, m] : shapes)
    for (int rep = 0; rep < 20; ++rep) {
      const auto dm = oracle::random_dm_params(rng, cats);
      const auto bl = oracle::random_blm_params(rng, cats - 1);
      double sum_dm = 0.0, sum_blm = 0.0;
      enumerate_outcomes(m, cats, [&](const std::vector<std::uint32_t>& x) {
        sum_dm += std::exp(blm::marginal_log_likelihood_dm(dm, x));
        sum_blm += std::exp(blm::marginal_log_likelihood_blm(bl, x));
      });
      worst = std::max({worst, std::abs(sum_dm - 1.0), std::abs(sum_blm - 1.0)});
      if (std::abs(sum_dm - 1.0) > 1e-9 || std::abs(sum_blm - 1.0) > 1e-9)
        return Outcome::fail("marginal mass " + fmt(sum_dm) + " / " + fmt(sum_blm) +
                             " at " + std::to_string(cats) + " categories, M=" +
                             std::to_string(m));
    }
  return Outcome::pass(
      "both marginals sum to 1 over every outcome space (3 shapes x 20 "
      "parameter draws, worst |mass-1| " + fmt(worst) + ", tol 1e-9)");
}

// ---------------------------------------------------------------------------
// 6. Sampler correctness against exhaustive enumeration.

Outcome criterion_6() {
  const blm::BlmParams theta{{1.2, 0.8}, 1.7, 0.9};
  const blm::MultinomialParams proposal{{0.4, 0.3, 0.3}};
  const std::uint32_t m = 3;
  std::map<std::vector<std::uint32_t>, double> target;
  enumerate_outcomes(m, 3, [&](const std::vector<std::uint32_t>& x) {
    target[x] = std::exp(blm::marginal_log_likelihood_blm(theta, x));
  });

  blm::Rng rng(blm::mix_seed(11, {6}));
  const std::size_t rows = 1000000;
  const auto sample = blm::mcmc_blm_sample(theta, proposal, m, rows, rng, {1000, 1});
  std::map<std::vector<std::uint32_t>, std::size_t> freq;
  for (std::size_t n = 0; n < sample.rows(); ++n) {
    auto row = sample.row(n);
    ++freq[std::vector<std::uint32_t>(row.begin(), row.end())];
  }
  double worst = 0.0;
  for (const auto& [x, p] : target) {
    const double observed = static_cast<double>(freq[x]) / static_cast<double>(rows);
    worst = std::max(worst, std::abs(observed - p));
  }
  if (worst > 0.01)
    return Outcome::fail("sampler frequency deviates " + fmt(worst) +
                         " from enumerated probability (tol 0.01)");
  return Outcome::pass("10^6-row chain matches enumerated probabilities on all " +
                       std::to_string(target.size()) +
                       " outcomes (max |dev| " + fmt(worst) + ", tol 0.01)");
}

// ---------------------------------------------------------------------------
// 7. Classifier power at the published operating point.

Outcome criterion_7() {
  blm::SimGrid grid;  // all five default sigma values
  grid.draws = {136};
  grid.observations = {26};
  grid.replicates = 5;
  const std::vector<blm::Method> methods = {
      blm::Method::MultinomialNB, blm::Method::DmNB, blm::Method::BlmNB};
  const auto rows = blm::run_power_analysis(grid, methods);

  // One pooled-F1 sample per (sigma, method, replicate); median over the
  // replicates must clear 0.90 for every sigma and method.
  std::map<std::pair<double, blm::Method>, std::vector<double>> cells;
  for (const auto& r : rows)
    if (r.class_index == 0)
      cells[{r.sigma, r.method}].push_back(r.pooled_micro_f1);
  double worst = 1.0;
  std::pair<double, std::string> worst_at{0.0, ""};
  for (auto& [key, f1s] : cells) {
    if (f1s.size() != grid.replicates)
      return Outcome::fail("expected one pooled F1 per replicate");
    std::sort(f1s.begin(), f1s.end());
    const double med = f1s[f1s.size() / 2];
    if (med < worst) {
      worst = med;
      worst_at = {key.first, blm::to_string(key.second)};
    }
    if (!(med > 0.90))
      return Outcome::fail("median pooled F1 " + fmt(med) + " at sigma " +
                           fmt(key.first) + " for " + blm::to_string(key.second) +
                           " (need > 0.90)");
  }
  return Outcome::pass(
      "median pooled F1 > 0.90 for every sigma and inner-product method at 26 "
      "observations x 136 draws (weakest: " + fmt(worst) + " at sigma " +
      fmt(worst_at.first) + ", " + worst_at.second + ")");
}

// ---------------------------------------------------------------------------
// 8. Relative step-time trend across category counts.

Outcome criterion_8() {
  auto median_step = [](blm::Backend backend, std::size_t d) {
    std::vector<double> t;
    for (const auto& r : blm::bench_newton_step(blm::ModelKind::BetaLiouville,
                                                backend, 100, 500, d, 5,
                                                20240501, 0.02))
      t.push_back(r.step_seconds);
    std::sort(t.begin(), t.end());
    return t[t.size() / 2];
  };
  std::vector<double> ratios;
  for (const std::size_t d : {100, 500, 2000}) {
    const double direct = median_step(blm::Backend::Direct, d);
    const double sklar = median_step(blm::Backend::Sklar, d);
    if (!(direct > 0.0 && sklar > 0.0)) return Outcome::fail("non-positive timing");
    ratios.push_back(sklar / direct);
  }
  if (!(ratios[0] < ratios[1] && ratios[1] < ratios[2]))
    return Outcome::fail(
        "compressed/raw step-time ratio not strictly increasing across 100, "
        "500, 2000 categories: " + fmt(ratios[0]) + ", " + fmt(ratios[1]) +
        ", " + fmt(ratios[2]));
  return Outcome::pass(
      "compressed/raw median step-time ratio rises with the category count "
      "(100: " + fmt(ratios[0]) + ", 500: " + fmt(ratios[1]) + ", 2000: " +
      fmt(ratios[2]) + ")");
}

// ---------------------------------------------------------------------------
// 9. Published-corpus classification scores (needs local datasets).

Outcome criterion_9() {
  const std::string dir = BLM_TEST_DATA_DIR;
  struct Dataset {
    std::string name, train, test;
    double mnb_acc, mnb_f1;        // +/- 1.0 points
    double nb_acc, nb_f1;          // Dirichlet/compound inner product, +/- 1.5
  };
  const std::vector<Dataset> sets = {
      {"r8", dir + "/r8_train.txt", dir + "/r8_test.txt", 99.2, 96.7, 98.7, 94.8},
      {"webkb", dir + "/webkb_train.txt", dir + "/webkb_test.txt", 92.0, 84.1,
       93.0, 86.0},
  };
  for (const auto& s : sets)
    if (!std::filesystem::exists(s.train) || !std::filesystem::exists(s.test))
      return Outcome::skip(
          "reference corpora not present (expected e.g. " + s.train +
          "); supply r8_train/test.txt and webkb_train/test.txt under " + dir +
          " to enable this check");

  std::string summary;
  for (const auto& s : sets) {
    const auto pair = blm::ingest_corpus(s.train, s.test);
    const auto per_class = pair.train.per_class_matrices();
    const auto test_x = pair.test.matrix();
    auto evaluate = [&](blm::Method method) {
      const auto model = blm::train_classifier(method, pair.train.class_labels,
                                               per_class, 1.0, {});
      const auto pred = blm::classify(model, test_x);
      const auto rep = blm::compute_metrics(pair.test.doc_class, pred,
                                            pair.test.class_labels.size());
      return std::pair<double, double>{rep.accuracy * 100.0, rep.macro_f1 * 100.0};
    };

    const auto [mnb_acc, mnb_f1] = evaluate(blm::Method::MultinomialNB);
    if (std::abs(mnb_acc - s.mnb_acc) > 1.0 || std::abs(mnb_f1 - s.mnb_f1) > 1.0)
      return Outcome::fail(s.name + " multinomial scores " + fmt(mnb_acc) + "/" +
                           fmt(mnb_f1) + " outside +/-1.0 of " + fmt(s.mnb_acc) +
                           "/" + fmt(s.mnb_f1));
    for (const auto method : {blm::Method::DmNB, blm::Method::BlmNB}) {
      const auto [acc, f1] = evaluate(method);
      if (std::abs(acc - s.nb_acc) > 1.5 || std::abs(f1 - s.nb_f1) > 1.5)
        return Outcome::fail(s.name + " " + blm::to_string(method) + " scores " +
                             fmt(acc) + "/" + fmt(f1) + " outside +/-1.5 of " +
                             fmt(s.nb_acc) + "/" + fmt(s.nb_f1));
    }
    summary += s.name + " ok; ";
  }
  // Cited compound-marginal reference point.
  const auto pair = blm::ingest_corpus(sets[1].train, sets[1].test);
  const auto model = blm::train_classifier(blm::Method::BlmMarginal,
                                           pair.train.class_labels,
                                           pair.train.per_class_matrices(), 1.0, {});
  const auto pred = blm::classify(model, pair.test.matrix());
  const auto rep = blm::compute_metrics(pair.test.doc_class, pred,
                                        pair.test.class_labels.size());
  if (std::abs(rep.accuracy * 100.0 - 93.2) > 1.5 ||
      std::abs(rep.macro_f1 * 100.0 - 86.3) > 1.5)
    return Outcome::fail("webkb compound-marginal scores outside +/-1.5");
  return Outcome::pass(summary + "compound-marginal reference point ok");
}

// ---------------------------------------------------------------------------
// 10. Ridge behavior on data with zero overdispersion.

Outcome criterion_10() {
  const blm::MultinomialParams p{{0.3, 0.25, 0.2, 0.15, 0.1}};
  blm::Rng rng(blm::mix_seed(11, {10}));
  const blm::CountMatrix x = blm::sample_multinomial(p, 200, 500, rng);

  blm::FitConfig cfg;
  // The gradient tolerance is tightened far below the default so the run
  // keeps climbing the flat direction instead of declaring convergence
  // before the diverging-magnitude signature is measurable.
  cfg.grad_tolerance = 1e-12;
  cfg.ll_rel_tolerance = 1e-16;
  const blm::FitReport rep = blm::fit_blm(x, cfg);

  if (rep.termination != blm::Termination::RidgeDetected &&
      rep.termination != blm::Termination::MaxIters)
    return Outcome::fail(std::string("unexpected termination ") +
                         blm::to_string(rep.termination));
  for (double v : rep.blm.alpha_d)
    if (!std::isfinite(v)) return Outcome::fail("non-finite weight after fit");
  if (!std::isfinite(rep.blm.alpha) || !std::isfinite(rep.blm.beta) ||
      !std::isfinite(rep.final_ll()))
    return Outcome::fail("non-finite scalar after fit");

  if (rep.ratio_trace.size() < 5)
    return Outcome::fail("fewer than 5 recorded mixing-ratio values");
  const auto tail = std::vector<double>(rep.ratio_trace.end() - 5,
                                        rep.ratio_trace.end());
  const double lo = *std::min_element(tail.begin(), tail.end());
  const double hi = *std::max_element(tail.begin(), tail.end());
  if (!(lo > 0.0) || (hi - lo) / lo > 0.01)
    return Outcome::fail("mixing ratio drifts " + fmt((hi - lo) / lo * 100.0) +
                         "% over the final 5 iterations (need <= 1%)");
  return Outcome::pass(std::string("terminated ") + blm::to_string(rep.termination) +
                       " with finite parameters; mixing ratio stable within " +
                       fmt((hi - lo) / lo * 100.0) + "% over the final 5 iterations");
}

// ---------------------------------------------------------------------------
// 11. Tail-approximation error regression.

Outcome criterion_11() {
  const std::vector<double> thetas = {0.01, 0.1, 1.0, 10.0};
  const std::vector<std::uint64_t> uppers = {500, 5000, 50000};
  json measured = json::array();
  for (double theta : thetas)
    for (std::uint64_t upper : uppers) {
      const double h_exact = blm::harmonic_tail_exact(theta, upper);
      const double g_exact = blm::geometric_tail_exact(theta, upper);
      const double h_err =
          std::abs(blm::harmonic_tail_approx(theta, upper) - h_exact) /
          std::abs(h_exact);
      const double g_err =
          std::abs(blm::geometric_tail_approx(theta, upper) - g_exact) /
          std::abs(g_exact);
      measured.push_back({{"theta", theta},
                          {"upper", upper},
                          {"harmonic_rel_err", h_err},
                          {"geometric_rel_err", g_err}});
    }

  const std::string path = std::string(BLM_TEST_DATA_DIR) + "/approx_regression.json";
  if (!std::filesystem::exists(path)) {
    std::filesystem::create_directories(BLM_TEST_DATA_DIR);
    std::ofstream out(path);
    if (!out) return Outcome::fail("cannot write regression file " + path);
    json file;
    file["description"] =
        "Frozen relative errors of the finite-sum tail approximations against "
        "exact summation. Regenerate by deleting this file and rerunning the "
        "acceptance binary.";
    file["grid"] = measured;
    out << file.dump(2) << "\n";
    return Outcome::pass("froze " + std::to_string(measured.size()) +
                         " approximation errors into " + path);
  }

  std::ifstream in(path);
  if (!in) return Outcome::fail("cannot read regression file " + path);
  json frozen;
  in >> frozen;
  if (!frozen.contains("grid") || frozen["grid"].size() != measured.size())
    return Outcome::fail("regression file shape mismatch; delete " + path +
                         " to re-freeze");
  double worst = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    for (const char* key : {"harmonic_rel_err", "geometric_rel_err"}) {
      const double now = measured[i][key].get<double>();
      const double ref = frozen["grid"][i][key].get<double>();
      const double drift = std::abs(now - ref);
      if (ref > 0.0) worst = std::max(worst, drift / ref);
      if (drift > 0.10 * ref + 1e-18)
        return Outcome::fail(std::string(key) + " drifted to " + fmt(now) +
                             " from frozen " + fmt(ref) + " at grid point " +
                             std::to_string(i));
    }
  }
  return Outcome::pass("all " + std::to_string(measured.size() * 2) +
                       " approximation errors within 10% of frozen values "
                       "(max drift " + fmt(worst * 100.0) + "%)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, Outcome (*)()>> criteria = {
      {1, criterion_1}, {2, criterion_2},  {3, criterion_3},  {4, criterion_4},
      {5, criterion_5}, {6, criterion_6},  {7, criterion_7},  {8, criterion_8},
      {9, criterion_9}, {10, criterion_10}, {11, criterion_11},
  };
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 11) {
      std::cerr << "usage: " << argv[0] << " [criterion 1-11]\n";
      return 2;
    }
  }

  bool ok = true;
  for (const auto& [num, fn] : criteria) {
    if (only != 0 && num != only) continue;
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = Outcome::fail(std::string("exception: ") + e.what());
    }
    const char* tag = out.status == Outcome::Status::Pass ? "PASS"
                      : out.status == Outcome::Status::Skip ? "SKIP"
                                                            : "FAIL";
    std::cout << "ACCEPTANCE " << num << " " << tag << ": " << out.detail
              << std::endl;
    if (out.status == Outcome::Status::Fail) ok = false;
  }
  return ok ? 0 : 1;
}
