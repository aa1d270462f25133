#pragma once
// Deterministic count-data simulation: a seed-stable RNG, truncated-normal
// simplex construction, exact multinomial sampling, a Metropolis-Hastings
// sampler whose stationary law is the BLM compound distribution, and the
// overlapping-class grid used for classifier power analysis.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "blm/classify.hpp"
#include "blm/counts.hpp"
#include "blm/models.hpp"

namespace blm {

// splitmix64 step; chains to derive independent substream seeds from
// (master seed, coordinates) without overlapping the main generator.
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
  auto step = [](std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = seed;
  std::uint64_t out = step(state);
  for (std::uint64_t c : coords) {
    state ^= c + 0x9e3779b97f4a7c15ULL + (out << 6) + (out >> 2);
    out = step(state);
  }
  return out;
}

// mt19937_64 (bit-exact across platforms by the standard) with hand-rolled
// real transforms, since the standard library's distributions are not
// implementation-portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (the second deviate is cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simplex construction and multinomial sampling

// Builds a category distribution by drawing `draws` values from
// Normal(center, sigma), rounding to integers, discarding anything outside
// 1..categories, and normalizing the retained tallies.
inline MultinomialParams make_class_multinomial(double center, double sigma, Rng& rng,
                                                std::size_t categories = 100,
                                                std::size_t draws = 2000) {
  if (categories < 2)
    throw std::invalid_argument("make_class_multinomial: need at least 2 categories");
  if (sigma < 0.0)
    throw std::invalid_argument("make_class_multinomial: sigma must be >= 0");
  std::vector<std::uint64_t> tally(categories, 0);
  std::uint64_t kept = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto v = std::llround(rng.normal(center, sigma));
    if (v >= 1 && v <= static_cast<long long>(categories)) {
      ++tally[static_cast<std::size_t>(v - 1)];
      ++kept;
    }
  }
  if (kept == 0)
    throw std::domain_error("make_class_multinomial: no draws landed inside the category range");
  MultinomialParams p;
  p.p.resize(categories);
  for (std::size_t d = 0; d < categories; ++d)
    p.p[d] = static_cast<double>(tally[d]) / static_cast<double>(kept);
  return p;
}

namespace detail {

inline std::vector<double> cumulative(const std::vector<double>& p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (std::size_t d = 0; d < p.size(); ++d) {
    acc += p[d];
    c[d] = acc;
  }
  c.back() = 1.0;  // guard against round-off at the top
  return c;
}

inline void sample_multinomial_row(const std::vector<double>& cum, std::uint32_t m,
                                   Rng& rng, std::vector<std::uint32_t>& row) {
  std::fill(row.begin(), row.end(), 0u);
  for (std::uint32_t i = 0; i < m; ++i) {
    const double u = rng.uniform();
    std::size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cum[mid]) hi = mid;
      else lo = mid + 1;
    }
    ++row[lo];
  }
}

}  // namespace detail

// N independent rows of exactly M draws each from a fixed category
// distribution (inverse-CDF sampling; zero-probability categories are never
// drawn).
inline CountMatrix sample_multinomial(const MultinomialParams& params, std::uint32_t m,
                                      std::size_t n, Rng& rng) {
  params.validate();
  const std::size_t cats = params.p.size();
  const auto cum = detail::cumulative(params.p);
  std::vector<std::uint32_t> flat(n * cats);
  std::vector<std::uint32_t> row(cats);
  for (std::size_t i = 0; i < n; ++i) {
    detail::sample_multinomial_row(cum, m, rng, row);
    std::copy(row.begin(), row.end(), flat.begin() + i * cats);
  }
  return CountMatrix(n, cats, std::move(flat));
}

// ---------------------------------------------------------------------------
// MCMC sampling from the BLM compound distribution

struct McmcConfig {
  std::uint64_t burn_in = 1000;
  std::uint64_t thinning = 1;
};

// Importance weight of the independence sampler in log space:
// target log-pmf (BLM marginal) minus proposal log-pmf (full multinomial,
// coefficient included — the coefficients do not cancel against the
// marginal). A proposed move x -> x' is accepted with probability
// min(1, exp(w(x') - w(x))); identical states always accept.
inline double mcmc_log_weight(const BlmParams& theta, const MultinomialParams& proposal,
                              std::span<const std::uint32_t> x) {
  return marginal_log_likelihood_blm(theta, x) -
         multinomial_log_likelihood(proposal, x) - log_multinomial_coefficient(x);
}

// Metropolis-Hastings independence sampler targeting the BLM marginal with a
// fixed multinomial proposal over the same M-draw outcome space.
inline CountMatrix mcmc_blm_sample(const BlmParams& theta, const MultinomialParams& proposal,
                                   std::uint32_t m, std::size_t n_rows, Rng& rng,
                                   const McmcConfig& cfg = {}) {
  theta.validate();
  proposal.validate();
  if (proposal.p.size() != theta.categories())
    throw std::invalid_argument("mcmc_blm_sample: proposal/parameter dimension mismatch");
  for (double p : proposal.p)
    if (!(p > 0.0))
      throw std::invalid_argument(
          "mcmc_blm_sample: proposal must be strictly positive everywhere the "
          "target has mass (the chain would be reducible)");
  if (cfg.thinning == 0)
    throw std::invalid_argument("mcmc_blm_sample: thinning must be >= 1");

  const std::size_t cats = theta.categories();
  const auto cum = detail::cumulative(proposal.p);

  // ln k! table makes the per-step coefficient O(categories) instead of O(M).
  std::vector<double> logfact(static_cast<std::size_t>(m) + 1, 0.0);
  for (std::size_t k = 1; k < logfact.size(); ++k)
    logfact[k] = logfact[k - 1] + std::log(static_cast<double>(k));
  auto log_weight = [&](const std::vector<std::uint32_t>& x) {
    double coef = logfact[m];
    for (auto v : x) coef -= logfact[v];
    return marginal_log_likelihood_blm(theta, x) -
           multinomial_log_likelihood(proposal, x) - coef;
  };

  std::vector<std::uint32_t> state(cats), candidate(cats);
  detail::sample_multinomial_row(cum, m, rng, state);
  double state_w = log_weight(state);

  std::vector<std::uint32_t> flat;
  flat.reserve(n_rows * cats);
  auto advance = [&]() {
    detail::sample_multinomial_row(cum, m, rng, candidate);
    const double cand_w = log_weight(candidate);
    const double u = rng.uniform();
    if (u <= 0.0 || std::log(u) <= cand_w - state_w) {
      state.swap(candidate);
      state_w = cand_w;
    }
  };
  for (std::uint64_t i = 0; i < cfg.burn_in; ++i) advance();
  for (std::size_t emitted = 0; emitted < n_rows; ++emitted) {
    if (emitted > 0)
      for (std::uint64_t i = 0; i < cfg.thinning; ++i) advance();
    flat.insert(flat.end(), state.begin(), state.end());
  }
  return CountMatrix(n_rows, cats, std::move(flat));
}

// ---------------------------------------------------------------------------
// Power-analysis grid

enum class SimSource { Multinomial, BlmMcmc };

inline const char* to_string(SimSource s) {
  return s == SimSource::Multinomial ? "multinomial" : "blm-mcmc";
}

struct SimGrid {
  std::size_t categories = 100;
  std::vector<double> centers = {1.0, 33.0, 66.0, 100.0};
  std::vector<double> sigmas = {10.0, 22.0, 35.0, 48.0, 60.0};
  std::vector<std::uint32_t> draws = {15, 136, 258, 379, 500};
  std::vector<std::size_t> observations = {2, 26, 51, 76, 100};
  std::size_t replicates = 5;
  std::size_t test_rows = 200;
  std::size_t shape_draws = 2000;  // normal draws per class simplex
  double concentration = 10.0;     // BLM-source total weight
  std::uint64_t seed = 98424481;
};

// One grid cell: per-class train/test matrices plus the generating simplexes.
struct CellDataset {
  double sigma = 0.0;
  std::uint32_t m = 0;
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t cell_seed = 0;
  std::vector<std::string> labels;
  std::vector<MultinomialParams> generators;
  std::vector<CountMatrix> train;
  std::vector<CountMatrix> test;
};

namespace detail {

inline MultinomialParams laplace_smooth(const MultinomialParams& p, double strength = 1.0) {
  MultinomialParams out;
  out.p.resize(p.p.size());
  const double denom = 1.0 + strength;  // p sums to 1
  const double add = strength / static_cast<double>(p.p.size());
  for (std::size_t d = 0; d < p.p.size(); ++d) out.p[d] = (p.p[d] + add) / denom;
  return out;
}

// Maps a class simplex to BLM parameters with the given total weight. The
// simplex is smoothed first: the mapping and the MCMC proposal both need
// strictly positive mass in every category.
inline BlmParams blm_from_simplex(const MultinomialParams& p, double concentration) {
  const MultinomialParams q = laplace_smooth(p);
  BlmParams theta;
  const std::size_t cats = q.p.size();
  theta.alpha_d.resize(cats - 1);
  double partial = 0.0;
  for (std::size_t d = 0; d + 1 < cats; ++d) partial += q.p[d];
  for (std::size_t d = 0; d + 1 < cats; ++d)
    theta.alpha_d[d] = concentration * q.p[d];
  theta.alpha = concentration * partial;
  theta.beta = concentration * q.p[cats - 1];
  return theta;
}

}  // namespace detail

// Streams every cell of the grid (sigma x M x N x replicate) to `sink` in a
// fixed order. All randomness derives from the grid seed and the cell
// coordinates, so any sub-grid reproduces the full grid's cells bit-exactly.
inline void build_power_grid(const SimGrid& grid, SimSource source,
                             const std::function<void(CellDataset&&)>& sink,
                             const McmcConfig& mcmc = {1000, 10}) {
  if (grid.centers.empty() || grid.sigmas.empty() || grid.draws.empty() ||
      grid.observations.empty() || grid.replicates == 0)
    throw std::invalid_argument("build_power_grid: empty grid axis");

  for (std::size_t si = 0; si < grid.sigmas.size(); ++si)
    for (std::size_t mi = 0; mi < grid.draws.size(); ++mi)
      for (std::size_t ni = 0; ni < grid.observations.size(); ++ni)
        for (std::size_t rep = 0; rep < grid.replicates; ++rep) {
          CellDataset cell;
          cell.sigma = grid.sigmas[si];
          cell.m = grid.draws[mi];
          cell.n = grid.observations[ni];
          cell.replicate = rep;
          // Seeded by the axis *values*, not indices, so restricted grids
          // regenerate identical cells.
          cell.cell_seed = mix_seed(grid.seed,
                                    {static_cast<std::uint64_t>(cell.sigma * 1000.0),
                                     cell.m, cell.n, rep});
          for (std::size_t c = 0; c < grid.centers.size(); ++c) {
            cell.labels.push_back("class" + std::to_string(c + 1));
            Rng shape_rng(mix_seed(cell.cell_seed, {c, 0}));
            MultinomialParams p = make_class_multinomial(
                grid.centers[c], cell.sigma, shape_rng, grid.categories, grid.shape_draws);
            Rng train_rng(mix_seed(cell.cell_seed, {c, 1}));
            Rng test_rng(mix_seed(cell.cell_seed, {c, 2}));
            if (source == SimSource::Multinomial) {
              cell.train.push_back(sample_multinomial(p, cell.m, cell.n, train_rng));
              cell.test.push_back(sample_multinomial(p, cell.m, grid.test_rows, test_rng));
            } else {
              const BlmParams theta = detail::blm_from_simplex(p, grid.concentration);
              const MultinomialParams proposal = detail::laplace_smooth(p);
              cell.train.push_back(
                  mcmc_blm_sample(theta, proposal, cell.m, cell.n, train_rng, mcmc));
              cell.test.push_back(
                  mcmc_blm_sample(theta, proposal, cell.m, grid.test_rows, test_rng, mcmc));
            }
            cell.generators.push_back(std::move(p));
          }
          sink(std::move(cell));
        }
}

}  // namespace blm
