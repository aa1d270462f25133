// Command-line front end: corpus ingestion, model fitting, classification,
// count-data simulation, classifier power analysis, and Newton-step
// benchmarking. Every subcommand accepts --seed, --output, and
// --format {csv|json}; failures print one machine-parseable line
// `error:<category>: <message>` to stderr and exit nonzero.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "blm/classify.hpp"
#include "blm/corpus.hpp"
#include "blm/counts.hpp"
#include "blm/evalbench.hpp"
#include "blm/models.hpp"
#include "blm/optimizer.hpp"
#include "blm/simulate.hpp"
#include "blm/special.hpp"

using json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

// Error taxonomy: category name and process exit code. The one-line stderr
// format `error:<category>: <message>` is part of the CLI contract.
enum class ErrCat { Usage = 2, Io = 3, Format = 4, Data = 5, Numeric = 6 };

struct CliError : std::runtime_error {
  ErrCat cat;
  CliError(ErrCat c, const std::string& msg) : std::runtime_error(msg), cat(c) {}
};

const char* cat_name(ErrCat c) {
  switch (c) {
    case ErrCat::Usage: return "usage";
    case ErrCat::Io: return "io";
    case ErrCat::Format: return "format";
    case ErrCat::Data: return "data";
    case ErrCat::Numeric: return "numeric";
  }
  return "error";
}

[[noreturn]] void fail(ErrCat c, const std::string& msg) {
  throw CliError(c, msg);
}

// Full-precision, locale-independent double for CSV cells.
std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared option plumbing

struct CommonOpts {
  std::uint64_t seed = 98424481;
  std::string output;  // empty = stdout
  std::string format;  // "csv" or "json"; subcommand sets its default
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& c, const std::string& default_format) {
  c.format = default_format;
  c.seed_opt = cmd->add_option("--seed", c.seed, "Master random seed");
  cmd->add_option("--output", c.output, "Write the result here instead of stdout");
  cmd->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
}

void write_output(const CommonOpts& c, const std::string& text) {
  if (c.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.output);
  if (!out) fail(ErrCat::Io, "cannot open output file: " + c.output);
  out << text;
  if (!out) fail(ErrCat::Io, "failed writing output file: " + c.output);
}

blm::Backend parse_backend(const std::string& s) {
  if (s == "direct") return blm::Backend::Direct;
  if (s == "sklar") return blm::Backend::Sklar;
  if (s == "approx") return blm::Backend::Approximate;
  fail(ErrCat::Usage, "unknown backend: " + s);
}

blm::Method parse_method(const std::string& s) {
  if (s == "mnb") return blm::Method::MultinomialNB;
  if (s == "dm-nb") return blm::Method::DmNB;
  if (s == "blm-nb") return blm::Method::BlmNB;
  if (s == "dm-marginal") return blm::Method::DmMarginal;
  if (s == "blm-marginal") return blm::Method::BlmMarginal;
  fail(ErrCat::Usage, "unknown method: " + s);
}

// Corpus loading with the error taxonomy applied: missing file -> io,
// malformed content -> format.
blm::Corpus load_training(const std::string& path) {
  if (!std::filesystem::exists(path))
    fail(ErrCat::Io, "cannot open corpus file: " + path);
  try {
    return blm::ingest_training(path);
  } catch (const std::runtime_error& e) {
    fail(ErrCat::Format, e.what());
  }
}

blm::Corpus load_against(const std::string& path, const blm::Corpus& ref) {
  if (!std::filesystem::exists(path))
    fail(ErrCat::Io, "cannot open corpus file: " + path);
  try {
    return blm::ingest_against(path, ref);
  } catch (const std::runtime_error& e) {
    fail(ErrCat::Format, e.what());
  }
}

blm::Corpus apply_last_category(const blm::Corpus& c, const std::string& token) {
  try {
    return blm::with_last_token(c, token);
  } catch (const std::runtime_error& e) {
    fail(ErrCat::Data, e.what());
  }
}

// ---------------------------------------------------------------------------
// Grid specification: flat key=value file plus flags; flags win.

struct GridOpts {
  std::string spec_file;
  std::vector<double> sigmas;
  std::vector<std::uint32_t> draws;
  std::vector<std::size_t> observations;
  std::vector<double> centers;
  std::size_t replicates = 0;   // 0 = unset
  std::size_t categories = 0;
  std::size_t test_rows = 0;
  std::size_t shape_draws = 0;
  double concentration = -1.0;  // <0 = unset
  std::uint64_t burn_in = static_cast<std::uint64_t>(-1);
  std::uint64_t thinning = 0;
};

void add_grid_options(CLI::App* cmd, GridOpts& g) {
  cmd->add_option("--grid-spec", g.spec_file,
                  "key=value grid file (flags override file values)");
  cmd->add_option("--sigmas", g.sigmas, "Class-shape standard deviations")->delimiter(',');
  cmd->add_option("--draws", g.draws, "Per-observation totals M")->delimiter(',');
  cmd->add_option("--observations", g.observations, "Training rows N per class")
      ->delimiter(',');
  cmd->add_option("--centers", g.centers, "Class center categories")->delimiter(',');
  cmd->add_option("--replicates", g.replicates, "Replicates per cell");
  cmd->add_option("--categories", g.categories, "Number of count categories");
  cmd->add_option("--test-rows", g.test_rows, "Test rows per class");
  cmd->add_option("--shape-draws", g.shape_draws, "Normal draws per class shape");
  cmd->add_option("--concentration", g.concentration,
                  "Total weight of the compound source's parameter mapping");
  cmd->add_option("--burn-in", g.burn_in, "MCMC burn-in steps");
  cmd->add_option("--thinning", g.thinning, "MCMC thinning interval");
}

template <typename T>
std::vector<T> parse_list(const std::string& value, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      if constexpr (std::is_floating_point_v<T>)
        out.push_back(std::stod(item));
      else
        out.push_back(static_cast<T>(std::stoull(item)));
    } catch (const std::exception&) {
      fail(ErrCat::Format, "grid spec: bad value for " + key + ": " + item);
    }
  }
  if (out.empty()) fail(ErrCat::Format, "grid spec: empty value for " + key);
  return out;
}

// Builds the simulation grid from defaults, then the spec file, then flags.
blm::SimGrid resolve_grid(const GridOpts& g, const CommonOpts& common,
                          blm::McmcConfig* mcmc) {
  blm::SimGrid grid;
  blm::McmcConfig mc{1000, 10};

  if (!g.spec_file.empty()) {
    std::ifstream in(g.spec_file);
    if (!in) fail(ErrCat::Io, "cannot open grid spec: " + g.spec_file);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      // trim
      const auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      const auto e = line.find_last_not_of(" \t");
      line = line.substr(b, e - b + 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrCat::Format, g.spec_file + ":" + std::to_string(line_no) +
                                 ": expected key=value");
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      if (key == "sigmas") grid.sigmas = parse_list<double>(value, key);
      else if (key == "draws") grid.draws = parse_list<std::uint32_t>(value, key);
      else if (key == "observations") grid.observations = parse_list<std::size_t>(value, key);
      else if (key == "centers") grid.centers = parse_list<double>(value, key);
      else if (key == "replicates") grid.replicates = parse_list<std::size_t>(value, key)[0];
      else if (key == "categories") grid.categories = parse_list<std::size_t>(value, key)[0];
      else if (key == "test-rows") grid.test_rows = parse_list<std::size_t>(value, key)[0];
      else if (key == "shape-draws") grid.shape_draws = parse_list<std::size_t>(value, key)[0];
      else if (key == "concentration") grid.concentration = parse_list<double>(value, key)[0];
      else if (key == "burn-in") mc.burn_in = parse_list<std::uint64_t>(value, key)[0];
      else if (key == "thinning") mc.thinning = parse_list<std::uint64_t>(value, key)[0];
      else if (key == "seed") grid.seed = parse_list<std::uint64_t>(value, key)[0];
      else
        fail(ErrCat::Format, g.spec_file + ":" + std::to_string(line_no) +
                                 ": unknown grid key: " + key);
    }
  }

  if (!g.sigmas.empty()) grid.sigmas = g.sigmas;
  if (!g.draws.empty()) grid.draws = g.draws;
  if (!g.observations.empty()) grid.observations = g.observations;
  if (!g.centers.empty()) grid.centers = g.centers;
  if (g.replicates != 0) grid.replicates = g.replicates;
  if (g.categories != 0) grid.categories = g.categories;
  if (g.test_rows != 0) grid.test_rows = g.test_rows;
  if (g.shape_draws != 0) grid.shape_draws = g.shape_draws;
  if (g.concentration >= 0.0) grid.concentration = g.concentration;
  if (g.burn_in != static_cast<std::uint64_t>(-1)) mc.burn_in = g.burn_in;
  if (g.thinning != 0) mc.thinning = g.thinning;
  // An explicit --seed beats the spec file; otherwise a file seed stands.
  if (g.spec_file.empty() || (common.seed_opt && common.seed_opt->count() > 0))
    grid.seed = common.seed;

  if (mcmc) *mcmc = mc;
  return grid;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  CommonOpts common;
  std::string dist;
  std::string backend = "direct";
  std::string train;
  std::string last_category;
  std::string init = "moment";
  double tol = 1e-6;
  double ll_tol = 1e-10;
  int max_iters = 500;
  double guard_eps = 1e-3;
  double pseudo = 0.0;
};

json fit_report_json(const blm::FitReport& rep, const std::vector<std::string>& vocab) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "fit";
  j["model"] = blm::to_string(rep.model);
  j["backend"] = blm::to_string(rep.backend);
  j["termination"] = blm::to_string(rep.termination);
  j["iterations"] = rep.iterations;
  j["log_likelihood"] = rep.final_ll();
  j["ll_trace"] = rep.ll_trace;
  if (rep.model == blm::ModelKind::BetaLiouville) {
    j["ratio_trace"] = rep.ratio_trace;
    j["params"] = {{"alpha_d", rep.blm.alpha_d},
                   {"alpha", rep.blm.alpha},
                   {"beta", rep.blm.beta}};
  } else {
    j["params"] = {{"alpha", rep.dm.alpha}};
  }
  json events = json::array();
  for (const auto& e : rep.guard_events)
    events.push_back({{"condition", e.condition}, {"epsilon", e.epsilon}});
  j["guard_events"] = events;
  j["approx_fallback_events"] = rep.approx_fallback_events;
  j["vocabulary"] = vocab;
  return j;
}

// Long-format CSV (`key,index,value`) used for fit output: one row per
// scalar field, one row per vector entry.
std::string fit_report_csv(const json& j) {
  std::ostringstream out;
  out << "key,index,value\n";
  auto scalar = [&](const std::string& key, const json& v) {
    out << key << ",," << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
  };
  auto vec = [&](const std::string& key, const json& arr) {
    for (std::size_t i = 0; i < arr.size(); ++i)
      out << key << "," << i << ","
          << (arr[i].is_number_float() ? fmt_double(arr[i].get<double>()) : arr[i].dump())
          << "\n";
  };
  scalar("model", j["model"]);
  scalar("backend", j["backend"]);
  scalar("termination", j["termination"]);
  scalar("iterations", j["iterations"]);
  out << "log_likelihood,," << fmt_double(j["log_likelihood"].get<double>()) << "\n";
  vec("ll_trace", j["ll_trace"]);
  if (j.contains("ratio_trace")) vec("ratio_trace", j["ratio_trace"]);
  for (auto& [key, value] : j["params"].items()) {
    if (value.is_array()) vec(key, value);
    else out << key << ",," << fmt_double(value.get<double>()) << "\n";
  }
  scalar("approx_fallback_events", j["approx_fallback_events"]);
  for (std::size_t i = 0; i < j["guard_events"].size(); ++i)
    out << "guard_event_condition," << i << ","
        << j["guard_events"][i]["condition"].dump() << "\n";
  return out.str();
}

void run_fit(const FitOpts& o) {
  blm::Corpus corpus = load_training(o.train);
  if (!o.last_category.empty()) corpus = apply_last_category(corpus, o.last_category);
  const blm::CountMatrix x = corpus.matrix();

  json j;
  if (o.dist == "multinomial") {
    const auto p = blm::multinomial_nb_estimate(x, o.pseudo);
    blm::MultinomialParams params{p};
    double ll = 0.0;
    for (std::size_t n = 0; n < x.rows(); ++n)
      ll += blm::multinomial_log_likelihood(params, x.row(n));
    j["schema_version"] = kSchemaVersion;
    j["command"] = "fit";
    j["model"] = "multinomial";
    j["backend"] = o.backend;
    j["termination"] = "ClosedForm";
    j["iterations"] = 0;
    j["log_likelihood"] = ll;
    j["ll_trace"] = json::array({ll});
    j["params"] = {{"p", p}};
    j["guard_events"] = json::array();
    j["approx_fallback_events"] = 0;
    j["vocabulary"] = corpus.vocabulary;
  } else {
    blm::FitConfig cfg;
    cfg.backend = parse_backend(o.backend);
    cfg.init = o.init == "all-ones" ? blm::InitStrategy::AllOnes
                                    : blm::InitStrategy::MomentMatched;
    cfg.grad_tolerance = o.tol;
    cfg.ll_rel_tolerance = o.ll_tol;
    cfg.max_iterations = o.max_iters;
    cfg.guard_epsilon = o.guard_eps;
    const blm::ModelKind kind = o.dist == "blm" ? blm::ModelKind::BetaLiouville
                                                : blm::ModelKind::DirichletMultinomial;
    const blm::CountMatrix data =
        o.pseudo > 0.0 ? blm::detail::with_pseudo_row(x, o.pseudo) : x;
    const blm::FitReport rep = blm::fit(kind, data, cfg);
    j = fit_report_json(rep, corpus.vocabulary);
  }
  write_output(o.common, o.common.format == "json" ? j.dump(2) + "\n"
                                                   : fit_report_csv(j));
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyOpts {
  CommonOpts common;
  std::string method;
  std::string backend = "direct";
  std::string train, test;
  std::string last_category;
  std::string predictions_file;
  double pseudo = 1.0;
};

json metrics_json(const blm::MetricsReport& rep, const std::vector<std::string>& labels) {
  json m;
  m["accuracy"] = rep.accuracy;
  m["micro_precision"] = rep.micro_precision;
  m["micro_recall"] = rep.micro_recall;
  m["micro_f1"] = rep.micro_f1;
  m["macro_f1"] = rep.macro_f1;
  m["macro_ovr_accuracy"] = rep.macro_ovr_accuracy;
  json per = json::array();
  for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
    const auto& pc = rep.per_class[c];
    per.push_back({{"label", c < labels.size() ? labels[c] : std::to_string(c)},
                   {"tp", pc.tp},
                   {"fp", pc.fp},
                   {"fn", pc.fn},
                   {"tn", pc.tn},
                   {"precision", pc.precision},
                   {"recall", pc.recall},
                   {"specificity", pc.specificity},
                   {"f1", pc.f1},
                   {"ovr_accuracy", pc.accuracy}});
  }
  m["per_class"] = per;
  m["confusion"] = rep.confusion;
  return m;
}

// Long-format CSV (`scope,label,metric,value`): per-class rows, then pooled
// and macro summaries.
std::string metrics_csv(const blm::MetricsReport& rep,
                        const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "scope,label,metric,value\n";
  for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
    const auto& pc = rep.per_class[c];
    const std::string label = c < labels.size() ? labels[c] : std::to_string(c);
    out << "class," << label << ",tp," << pc.tp << "\n";
    out << "class," << label << ",fp," << pc.fp << "\n";
    out << "class," << label << ",fn," << pc.fn << "\n";
    out << "class," << label << ",tn," << pc.tn << "\n";
    out << "class," << label << ",precision," << fmt_double(pc.precision) << "\n";
    out << "class," << label << ",recall," << fmt_double(pc.recall) << "\n";
    out << "class," << label << ",specificity," << fmt_double(pc.specificity) << "\n";
    out << "class," << label << ",f1," << fmt_double(pc.f1) << "\n";
    out << "class," << label << ",ovr_accuracy," << fmt_double(pc.accuracy) << "\n";
  }
  out << "pooled,,accuracy," << fmt_double(rep.accuracy) << "\n";
  out << "pooled,,micro_precision," << fmt_double(rep.micro_precision) << "\n";
  out << "pooled,,micro_recall," << fmt_double(rep.micro_recall) << "\n";
  out << "pooled,,micro_f1," << fmt_double(rep.micro_f1) << "\n";
  out << "macro,,f1," << fmt_double(rep.macro_f1) << "\n";
  out << "macro,,ovr_accuracy," << fmt_double(rep.macro_ovr_accuracy) << "\n";
  return out.str();
}

void run_classify(const ClassifyOpts& o) {
  blm::Corpus train = load_training(o.train);
  blm::Corpus test = load_against(o.test, train);
  if (!o.last_category.empty()) {
    train = apply_last_category(train, o.last_category);
    test = apply_last_category(test, o.last_category);
  }

  blm::FitConfig cfg;
  cfg.backend = parse_backend(o.backend);
  const blm::Method method = parse_method(o.method);

  blm::ClassifierModel model;
  try {
    model = blm::train_classifier(method, train.class_labels,
                                  train.per_class_matrices(), o.pseudo, cfg);
  } catch (const std::invalid_argument& e) {
    fail(ErrCat::Data, e.what());
  } catch (const std::runtime_error& e) {
    fail(ErrCat::Numeric, e.what());
  }

  const blm::CountMatrix test_x = test.matrix();
  const std::vector<std::size_t> pred = blm::classify(model, test_x);
  // Unseen test labels extend the class list, so metrics cover every label.
  const std::size_t num_classes = test.class_labels.size();
  const blm::MetricsReport rep =
      blm::compute_metrics(test.doc_class, pred, num_classes);

  if (!o.predictions_file.empty()) {
    std::ofstream pf(o.predictions_file);
    if (!pf) fail(ErrCat::Io, "cannot open predictions file: " + o.predictions_file);
    pf << "doc,truth,predicted\n";
    for (std::size_t i = 0; i < pred.size(); ++i)
      pf << i << "," << test.class_labels[test.doc_class[i]] << ","
         << test.class_labels[pred[i]] << "\n";
  }

  if (o.common.format == "json") {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "classify";
    j["method"] = o.method;
    j["labels"] = test.class_labels;
    json preds = json::array();
    for (std::size_t i = 0; i < pred.size(); ++i)
      preds.push_back({{"doc", i},
                       {"truth", test.class_labels[test.doc_class[i]]},
                       {"predicted", test.class_labels[pred[i]]}});
    j["predictions"] = preds;
    j["metrics"] = metrics_json(rep, test.class_labels);
    write_output(o.common, j.dump(2) + "\n");
  } else {
    write_output(o.common, metrics_csv(rep, test.class_labels));
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  CommonOpts common;
  std::string mode = "multinomial";
  GridOpts grid;
  std::string out_dir = ".";
};

std::string cell_tag(const blm::CellDataset& cell) {
  std::ostringstream tag;
  tag << "s" << cell.sigma << "_m" << cell.m << "_n" << cell.n << "_r"
      << cell.replicate;
  return tag.str();
}

// One corpus line per row: label, tab, then each category's token repeated
// count times (tokens are t1..tK in category order).
void write_corpus_file(const std::string& path, const std::vector<std::string>& labels,
                       const std::vector<blm::CountMatrix>& per_class) {
  std::ofstream out(path);
  if (!out) fail(ErrCat::Io, "cannot open output file: " + path);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    const auto& x = per_class[c];
    for (std::size_t n = 0; n < x.rows(); ++n) {
      out << labels[c] << '\t';
      bool first = true;
      for (std::size_t d = 0; d < x.categories(); ++d)
        for (std::uint32_t k = 0; k < x(n, d); ++k) {
          if (!first) out << ' ';
          out << 't' << (d + 1);
          first = false;
        }
      out << '\n';
    }
  }
  if (!out) fail(ErrCat::Io, "failed writing output file: " + path);
}

void run_simulate(const SimulateOpts& o) {
  blm::McmcConfig mcmc;
  const blm::SimGrid grid = resolve_grid(o.grid, o.common, &mcmc);
  const blm::SimSource source = o.mode == "blm-mcmc" ? blm::SimSource::BlmMcmc
                                                     : blm::SimSource::Multinomial;
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) fail(ErrCat::Io, "cannot create output directory: " + o.out_dir);

  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["command"] = "simulate";
  manifest["mode"] = o.mode;
  manifest["seed"] = grid.seed;
  json cells = json::array();
  std::ostringstream csv;
  csv << "sigma,m,n,replicate,cell_seed,train_file,test_file,meta_file\n";

  blm::build_power_grid(grid, source, [&](blm::CellDataset&& cell) {
    const std::string tag = cell_tag(cell);
    const auto dir = std::filesystem::path(o.out_dir);
    const std::string train_file = (dir / ("train_" + tag + ".txt")).string();
    const std::string test_file = (dir / ("test_" + tag + ".txt")).string();
    const std::string meta_file = (dir / ("meta_" + tag + ".json")).string();
    write_corpus_file(train_file, cell.labels, cell.train);
    write_corpus_file(test_file, cell.labels, cell.test);

    json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["mode"] = o.mode;
    meta["grid_seed"] = grid.seed;
    meta["cell"] = {{"sigma", cell.sigma}, {"m", cell.m},     {"n", cell.n},
                    {"replicate", cell.replicate}, {"cell_seed", cell.cell_seed}};
    meta["categories"] = grid.categories;
    meta["test_rows"] = grid.test_rows;
    meta["labels"] = cell.labels;
    json gens = json::array();
    for (const auto& g : cell.generators) gens.push_back(g.p);
    meta["generators"] = gens;
    if (source == blm::SimSource::BlmMcmc) {
      meta["concentration"] = grid.concentration;
      meta["burn_in"] = mcmc.burn_in;
      meta["thinning"] = mcmc.thinning;
      json thetas = json::array();
      for (const auto& g : cell.generators) {
        const blm::BlmParams t = blm::detail::blm_from_simplex(g, grid.concentration);
        thetas.push_back({{"alpha_d", t.alpha_d}, {"alpha", t.alpha}, {"beta", t.beta}});
      }
      meta["class_params"] = thetas;
    }
    meta["files"] = {{"train", train_file}, {"test", test_file}};
    std::ofstream mf(meta_file);
    if (!mf) fail(ErrCat::Io, "cannot open output file: " + meta_file);
    mf << meta.dump(2) << "\n";

    cells.push_back({{"sigma", cell.sigma},
                     {"m", cell.m},
                     {"n", cell.n},
                     {"replicate", cell.replicate},
                     {"cell_seed", cell.cell_seed},
                     {"train_file", train_file},
                     {"test_file", test_file},
                     {"meta_file", meta_file}});
    csv << cell.sigma << "," << cell.m << "," << cell.n << "," << cell.replicate
        << "," << cell.cell_seed << "," << train_file << "," << test_file << ","
        << meta_file << "\n";
  }, mcmc);

  manifest["cells"] = cells;
  write_output(o.common, o.common.format == "json" ? manifest.dump(2) + "\n"
                                                   : csv.str());
}

// ---------------------------------------------------------------------------
// power

struct PowerOpts {
  CommonOpts common;
  GridOpts grid;
  std::vector<std::string> methods;
  std::string source = "multinomial";
  std::string backend = "direct";
  double pseudo = 1.0;
};

void run_power(const PowerOpts& o) {
  blm::McmcConfig mcmc;
  const blm::SimGrid grid = resolve_grid(o.grid, o.common, &mcmc);
  std::vector<blm::Method> methods;
  for (const auto& m : o.methods) methods.push_back(parse_method(m));
  if (methods.empty()) fail(ErrCat::Usage, "power: --methods must name at least one method");
  blm::FitConfig cfg;
  cfg.backend = parse_backend(o.backend);
  const blm::SimSource source = o.source == "blm-mcmc" ? blm::SimSource::BlmMcmc
                                                       : blm::SimSource::Multinomial;
  const auto rows = blm::run_power_analysis(grid, methods, source, mcmc, cfg, o.pseudo);

  if (o.common.format == "json") {
    json arr = json::array();
    for (const auto& r : rows)
      arr.push_back({{"sigma", r.sigma},
                     {"m", r.m},
                     {"n", r.n},
                     {"replicate", r.replicate},
                     {"method", blm::to_string(r.method)},
                     {"class_index", r.class_index},
                     {"class_label", r.class_label},
                     {"tp", r.metrics.tp},
                     {"fp", r.metrics.fp},
                     {"fn", r.metrics.fn},
                     {"tn", r.metrics.tn},
                     {"precision", r.metrics.precision},
                     {"recall", r.metrics.recall},
                     {"specificity", r.metrics.specificity},
                     {"f1", r.metrics.f1},
                     {"ovr_accuracy", r.metrics.accuracy},
                     {"pooled_accuracy", r.pooled_accuracy},
                     {"pooled_micro_f1", r.pooled_micro_f1},
                     {"macro_ovr_accuracy", r.macro_ovr_accuracy}});
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "power";
    j["rows"] = arr;
    write_output(o.common, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "sigma,m,n,replicate,method,class_index,class_label,tp,fp,fn,tn,"
           "precision,recall,specificity,f1,ovr_accuracy,pooled_accuracy,"
           "pooled_micro_f1,macro_ovr_accuracy\n";
    for (const auto& r : rows)
      out << r.sigma << "," << r.m << "," << r.n << "," << r.replicate << ","
          << blm::to_string(r.method) << "," << r.class_index << ","
          << r.class_label << "," << r.metrics.tp << "," << r.metrics.fp << ","
          << r.metrics.fn << "," << r.metrics.tn << ","
          << fmt_double(r.metrics.precision) << "," << fmt_double(r.metrics.recall)
          << "," << fmt_double(r.metrics.specificity) << ","
          << fmt_double(r.metrics.f1) << "," << fmt_double(r.metrics.accuracy)
          << "," << fmt_double(r.pooled_accuracy) << ","
          << fmt_double(r.pooled_micro_f1) << ","
          << fmt_double(r.macro_ovr_accuracy) << "\n";
    write_output(o.common, out.str());
  }
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  CommonOpts common;
  std::string dist = "blm";
  std::string backend = "direct";
  std::string sweep;
  std::vector<std::uint64_t> values;
  std::size_t n = 100;
  std::uint32_t m = 500;
  std::size_t d = 100;
  int bootstraps = 5;
  double min_duration = 0.02;
};

void run_bench(const BenchOpts& o) {
  if (o.sweep != "n" && o.sweep != "m" && o.sweep != "d")
    fail(ErrCat::Usage, "bench: --sweep must be one of n|m|d");
  if (o.values.empty()) fail(ErrCat::Usage, "bench: --values must be non-empty");
  const blm::ModelKind kind = o.dist == "dm" ? blm::ModelKind::DirichletMultinomial
                                             : blm::ModelKind::BetaLiouville;
  const blm::Backend backend = parse_backend(o.backend);

  std::vector<blm::BenchRecord> records;
  for (std::uint64_t v : o.values) {
    const std::size_t n = o.sweep == "n" ? static_cast<std::size_t>(v) : o.n;
    const std::uint32_t m = o.sweep == "m" ? static_cast<std::uint32_t>(v) : o.m;
    const std::size_t d = o.sweep == "d" ? static_cast<std::size_t>(v) : o.d;
    auto batch = blm::bench_newton_step(kind, backend, n, m, d, o.bootstraps,
                                        o.common.seed, o.min_duration);
    records.insert(records.end(), batch.begin(), batch.end());
  }

  if (o.common.format == "json") {
    json arr = json::array();
    for (const auto& r : records)
      arr.push_back({{"model", blm::to_string(r.model)},
                     {"backend", blm::to_string(r.backend)},
                     {"n", r.n},
                     {"m", r.m},
                     {"categories", r.categories},
                     {"bootstrap", r.bootstrap},
                     {"step_seconds", r.step_seconds},
                     {"build_seconds", r.build_seconds}});
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "bench";
    j["rows"] = arr;
    write_output(o.common, j.dump(2) + "\n");
  } else {
    std::ostringstream out;
    out << "model,backend,n,m,categories,bootstrap,step_seconds,build_seconds\n";
    for (const auto& r : records)
      out << blm::to_string(r.model) << "," << blm::to_string(r.backend) << ","
          << r.n << "," << r.m << "," << r.categories << "," << r.bootstrap << ","
          << fmt_double(r.step_seconds) << "," << fmt_double(r.build_seconds)
          << "\n";
    write_output(o.common, out.str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-model estimation toolkit: multinomial, Dirichlet-multinomial, "
               "and Beta-Liouville-multinomial fitting, classification, simulation, "
               "and benchmarks"};
  app.require_subcommand(1);

  FitOpts fit_o;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one distribution to a corpus");
  fit_cmd->add_option("--dist", fit_o.dist, "Distribution to fit")
      ->required()
      ->check(CLI::IsMember({"multinomial", "dm", "blm"}));
  fit_cmd->add_option("--backend", fit_o.backend, "Derivative evaluation backend")
      ->check(CLI::IsMember({"direct", "sklar", "approx"}));
  fit_cmd->add_option("--train", fit_o.train, "Training corpus file")->required();
  fit_cmd->add_option("--tol", fit_o.tol, "Gradient infinity-norm tolerance");
  fit_cmd->add_option("--ll-tol", fit_o.ll_tol, "Relative log-likelihood tolerance");
  fit_cmd->add_option("--max-iters", fit_o.max_iters, "Newton iteration cap");
  fit_cmd->add_option("--guard-eps", fit_o.guard_eps, "Definiteness repair increment");
  fit_cmd->add_option("--init", fit_o.init, "Initialization strategy")
      ->check(CLI::IsMember({"all-ones", "moment"}));
  fit_cmd->add_option("--pseudo", fit_o.pseudo, "Pseudo-count smoothing (default 0)");
  fit_cmd->add_option("--last-category", fit_o.last_category,
                      "Token treated as the final category");
  add_common(fit_cmd, fit_o.common, "json");

  ClassifyOpts cls_o;
  auto* cls_cmd = app.add_subcommand("classify", "Train on one corpus, predict another");
  cls_cmd->add_option("--method", cls_o.method, "Classification method")
      ->required()
      ->check(CLI::IsMember({"mnb", "dm-nb", "blm-nb", "dm-marginal", "blm-marginal"}));
  cls_cmd->add_option("--backend", cls_o.backend, "Derivative evaluation backend")
      ->check(CLI::IsMember({"direct", "sklar", "approx"}));
  cls_cmd->add_option("--train", cls_o.train, "Training corpus file")->required();
  cls_cmd->add_option("--test", cls_o.test, "Test corpus file")->required();
  cls_cmd->add_option("--pseudo", cls_o.pseudo, "Pseudo-count smoothing (default 1)");
  cls_cmd->add_option("--last-category", cls_o.last_category,
                      "Token treated as the final category");
  cls_cmd->add_option("--predictions", cls_o.predictions_file,
                      "Also write a per-document prediction CSV here");
  add_common(cls_cmd, cls_o.common, "json");

  SimulateOpts sim_o;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate labeled count corpora");
  sim_cmd->add_option("--mode", sim_o.mode, "Generating process")
      ->check(CLI::IsMember({"multinomial", "blm-mcmc"}));
  sim_cmd->add_option("--out-dir", sim_o.out_dir, "Directory for corpus/metadata files");
  add_grid_options(sim_cmd, sim_o.grid);
  add_common(sim_cmd, sim_o.common, "json");

  PowerOpts pow_o;
  auto* pow_cmd = app.add_subcommand("power", "Classifier power analysis over a grid");
  pow_cmd->add_option("--methods", pow_o.methods, "Methods to evaluate")
      ->required()
      ->delimiter(',');
  pow_cmd->add_option("--source", pow_o.source, "Generating process")
      ->check(CLI::IsMember({"multinomial", "blm-mcmc"}));
  pow_cmd->add_option("--backend", pow_o.backend, "Backend for model fitting")
      ->check(CLI::IsMember({"direct", "sklar", "approx"}));
  pow_cmd->add_option("--pseudo", pow_o.pseudo, "Pseudo-count smoothing");
  add_grid_options(pow_cmd, pow_o.grid);
  add_common(pow_cmd, pow_o.common, "csv");

  BenchOpts ben_o;
  auto* ben_cmd = app.add_subcommand("bench", "Time one Newton step per backend");
  ben_cmd->add_option("--dist", ben_o.dist, "Distribution")
      ->check(CLI::IsMember({"dm", "blm"}));
  ben_cmd->add_option("--backend", ben_o.backend, "Derivative evaluation backend")
      ->check(CLI::IsMember({"direct", "sklar", "approx"}));
  ben_cmd->add_option("--sweep", ben_o.sweep, "Axis to sweep")->required();
  ben_cmd->add_option("--values", ben_o.values, "Swept axis values")
      ->required()
      ->delimiter(',');
  ben_cmd->add_option("--n", ben_o.n, "Observations (fixed unless swept)");
  ben_cmd->add_option("--m", ben_o.m, "Draws per observation (fixed unless swept)");
  ben_cmd->add_option("--d", ben_o.d, "Categories (fixed unless swept)");
  ben_cmd->add_option("--bootstraps", ben_o.bootstraps, "Bootstraps per configuration");
  ben_cmd->add_option("--min-duration", ben_o.min_duration,
                      "Minimum measured seconds per timing sample");
  add_common(ben_cmd, ben_o.common, "csv");

  try {
    app.parse(argc, argv);
    if (*fit_cmd) run_fit(fit_o);
    else if (*cls_cmd) run_classify(cls_o);
    else if (*sim_cmd) run_simulate(sim_o);
    else if (*pow_cmd) run_power(pow_o);
    else if (*ben_cmd) run_bench(ben_o);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error:usage: " << e.what() << "\n";
    return static_cast<int>(ErrCat::Usage);
  } catch (const CliError& e) {
    std::cerr << "error:" << cat_name(e.cat) << ": " << e.what() << "\n";
    return static_cast<int>(e.cat);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error:data: " << e.what() << "\n";
    return static_cast<int>(ErrCat::Data);
  } catch (const std::domain_error& e) {
    std::cerr << "error:numeric: " << e.what() << "\n";
    return static_cast<int>(ErrCat::Numeric);
  } catch (const std::runtime_error& e) {
    std::cerr << "error:numeric: " << e.what() << "\n";
    return static_cast<int>(ErrCat::Numeric);
  }
  return 0;
}
