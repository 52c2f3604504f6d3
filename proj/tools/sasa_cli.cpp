// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sasa_cli.cpp
 * @brief  Command-line front end: gen-data, train, eval, export-structure.
 *
 * Exit codes: 0 success, 1 runtime error, 2 invalid input or config.
 * SASA_LOG=error|info|debug sets stderr verbosity (default info).
 */
#include <sasa/sasa.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <future>
#include <iostream>

namespace fs = std::filesystem;
using sasa::InvalidInput;
using sasa::io::json;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sasa");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char *env = std::getenv("SASA_LOG")) {
    const std::string level = env;
    if (level == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else if (level != "info") {
      spdlog::warn("ignoring unknown SASA_LOG value '{}'", level);
    }
  }
}

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs {
  std::string graph, domain_src, domain_tgt, out;
  std::size_t n = 1000, n_test = 500, length = 24;
  std::uint64_t seed = 0;
};

void write_dataset(const fs::path &dir, const std::string &name,
                   const std::vector<sasa::TimeSeriesSample> &data,
                   const sasa::synth::CausalGraphSpec &g, const sasa::synth::DomainSpec &d,
                   std::uint64_t seed, sasa::Domain domain, const std::string &split,
                   std::size_t length) {
  const auto path = dir / (name + ".ndjson");
  sasa::io::write_ndjson(path, data);
  sasa::io::DatasetMeta meta;
  meta.variables = g.variables;
  meta.length = length;
  meta.task = g.label.task;
  meta.count = data.size();
  meta.domain = domain;
  meta.split = split;
  meta.graph = g;
  meta.domain_spec = d;
  meta.seed = seed;
  sasa::io::detail::write_text(sasa::io::meta_path(path),
                               sasa::io::to_json(meta).dump(2) + "\n");
  spdlog::info("wrote {} ({} samples)", path.string(), data.size());
}

int cmd_gen_data(const GenArgs &a) {
  auto graph = a.graph.empty() ? sasa::synth::default_benchmark_graph()
                               : sasa::io::graph_from_json(sasa::io::detail::parse_file(a.graph));
  auto src = a.domain_src.empty()
                 ? sasa::synth::default_source_domain()
                 : sasa::io::domain_from_json(sasa::io::detail::parse_file(a.domain_src));
  auto tgt = a.domain_tgt.empty()
                 ? sasa::synth::default_target_domain()
                 : sasa::io::domain_from_json(sasa::io::detail::parse_file(a.domain_tgt));
  graph.validate();
  src.validate(graph);
  tgt.validate(graph);
  if (a.n == 0 || a.n_test == 0) {
    throw InvalidInput("gen-data: --n and --n-test must be positive");
  }

  const fs::path out = a.out;
  fs::create_directories(out);
  // one independent stream per file
  const std::uint64_t seeds[4] = {a.seed * 4 + 0, a.seed * 4 + 1, a.seed * 4 + 2,
                                  a.seed * 4 + 3};
  using sasa::Domain;
  using sasa::synth::generate;
  write_dataset(out, "source_train",
                generate(graph, src, a.n, a.length, seeds[0], Domain::source), graph, src,
                seeds[0], Domain::source, "train", a.length);
  write_dataset(out, "source_test",
                generate(graph, src, a.n_test, a.length, seeds[1], Domain::source), graph,
                src, seeds[1], Domain::source, "test", a.length);
  write_dataset(out, "target_train",
                generate(graph, tgt, a.n, a.length, seeds[2], Domain::target), graph, tgt,
                seeds[2], Domain::target, "train", a.length);
  write_dataset(out, "target_test",
                generate(graph, tgt, a.n_test, a.length, seeds[3], Domain::target), graph,
                tgt, seeds[3], Domain::target, "test", a.length);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config, ablation;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 1;
};

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<double> metric;
  sasa::model::TrainReport report;
};

RunOutcome run_one(const sasa::model::ModelConfig &c, const sasa::model::Dataset &src,
                   const sasa::model::Dataset &tgt, const sasa::model::Dataset &test,
                   const fs::path &dir) {
  fs::create_directories(dir);
  auto result = sasa::model::train(src, tgt, c, &test, [&](const auto &e) {
    spdlog::info("seed {} epoch {}: L_y={:.5f} L_alpha={:.5f} L_beta={:.5f} {}={:.4f} ({:.1f}s)",
                 c.seed, e.epoch, e.label_loss, e.alpha_loss, e.beta_loss,
                 sasa::model::metric_name(c.task), e.target_metric.value_or(0.0), e.seconds);
  });
  sasa::io::save_snapshot(dir / "params.json", result.params, c);
  sasa::io::detail::write_text(dir / "report.csv", sasa::io::report_csv(result.report));
  RunOutcome o{c.seed, std::nullopt, result.report};
  if (!result.report.epochs.empty()) {
    o.metric = result.report.epochs.back().target_metric;
  }
  json summary;
  summary["config"] = sasa::io::to_json(c);
  summary["metric"] = result.report.metric;
  summary["target_test"] = o.metric ? json(*o.metric) : json(nullptr);
  summary["report"] = sasa::io::report_to_json(result.report);
  sasa::io::detail::write_text(dir / "summary.json", summary.dump(2) + "\n");
  return o;
}

sasa::model::Dataset load_dataset(const fs::path &p, const sasa::model::ModelConfig &c) {
  auto d = sasa::io::read_ndjson(p);
  if (d.empty()) {
    throw InvalidInput(p.string() + ": empty dataset");
  }
  if (d.front().variables != c.variables || d.front().length != c.length) {
    throw InvalidInput(p.string() + ": samples are " + std::to_string(d.front().variables) +
                       "x" + std::to_string(d.front().length) + ", config expects " +
                       std::to_string(c.variables) + "x" + std::to_string(c.length));
  }
  return d;
}

int cmd_train(const TrainArgs &a) {
  auto run = sasa::io::load_run_config(a.config);
  auto &c = run.model;
  if (!a.ablation.empty()) {
    c.ablation = sasa::io::parse_ablation(a.ablation);
  }
  if (a.seed) {
    c.seed = *a.seed;
  }
  if (a.seeds == 0) {
    throw InvalidInput("train: --seeds must be at least 1");
  }
  c.validate();
  const auto src = load_dataset(run.source_train, c);
  const auto tgt = load_dataset(run.target_train, c);
  const auto test = load_dataset(run.target_test, c);
  spdlog::info("training {} ({}) on {} source / {} target samples",
               sasa::io::to_string(c.architecture), sasa::io::to_string(c.ablation),
               src.size(), tgt.size());

  std::vector<RunOutcome> outcomes;
  if (a.seeds == 1) {
    outcomes.push_back(run_one(c, src, tgt, test, run.out_dir));
  } else {
    std::vector<std::future<RunOutcome>> jobs;
    for (std::size_t k = 0; k < a.seeds; ++k) {
      auto ck = c;
      ck.seed = c.seed + k;
      jobs.push_back(std::async(std::launch::async, run_one, ck, std::cref(src),
                                std::cref(tgt), std::cref(test),
                                run.out_dir / ("seed_" + std::to_string(ck.seed))));
    }
    for (auto &j : jobs) {
      outcomes.push_back(j.get());
    }
    json per_seed = json::array();
    std::vector<double> values;
    for (const auto &o : outcomes) {
      per_seed.push_back({{"seed", o.seed},
                          {"target_test", o.metric ? json(*o.metric) : json(nullptr)}});
      if (o.metric) values.push_back(*o.metric);
    }
    json summary;
    summary["config"] = sasa::io::to_json(c);
    summary["metric"] = sasa::model::metric_name(c.task);
    summary["per_seed"] = std::move(per_seed);
    summary["mean"] = values.empty() ? json(nullptr) : json(sasa::eval::mean(values));
    fs::create_directories(run.out_dir);
    sasa::io::detail::write_text(run.out_dir / "summary.json", summary.dump(2) + "\n");
  }
  for (const auto &o : outcomes) {
    spdlog::info("seed {}: target {} = {}", o.seed, sasa::model::metric_name(c.task),
                 o.metric ? std::to_string(*o.metric) : "n/a");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval and export-structure

int cmd_eval(const std::string &params, const std::string &data) {
  auto snap = sasa::io::load_snapshot(params);
  const auto d = load_dataset(data, snap.config);
  auto r = sasa::model::evaluate(d, snap.params, snap.config);
  json j;
  j["metric"] = r.metric;
  j["value"] = r.value;
  j["count"] = r.count;
  j["per_seed"] = r.per_seed;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_export_structure(const std::string &params, const std::string &data,
                         const std::string &domain, const std::string &out) {
  auto snap = sasa::io::load_snapshot(params);
  const auto tag = sasa::io::parse_domain(domain);
  const auto d = load_dataset(data, snap.config);
  for (const auto &s : d) {
    if (s.domain != tag) {
      throw InvalidInput("export-structure: sample " + s.id + " is not from the " + domain +
                         " domain");
    }
  }
  auto m = sasa::model::mean_structure(d, snap.params, snap.config);
  const fs::path path = out;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  sasa::io::detail::write_text(path, sasa::io::structure_csv(m));
  spdlog::info("wrote {}x{} structure matrix to {}", m.variables, m.variables, out);
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  setup_logging();
  CLI::App app{"Sparse associative structure alignment for time-series domain adaptation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto *g = app.add_subcommand("gen-data", "Generate the synthetic source/target benchmark");
  g->add_option("--graph", gen.graph, "Causal graph spec (JSON)")->check(CLI::ExistingFile);
  g->add_option("--domain-src", gen.domain_src, "Source domain spec (JSON)")
      ->check(CLI::ExistingFile);
  g->add_option("--domain-tgt", gen.domain_tgt, "Target domain spec (JSON)")
      ->check(CLI::ExistingFile);
  g->add_option("--n", gen.n, "Training samples per domain")->capture_default_str();
  g->add_option("--n-test", gen.n_test, "Test samples per domain")->capture_default_str();
  g->add_option("--len", gen.length, "Series length N")->capture_default_str();
  g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto *t = app.add_subcommand("train", "Train a model from a run config");
  t->add_option("--config", tr.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--ablation", tr.ablation, "full|no_alpha|no_beta|source_only")
      ->check(CLI::IsMember({"full", "no_alpha", "no_beta", "source_only"}));
  t->add_option("--seed", tr.seed, "Override the config seed");
  t->add_option("--seeds", tr.seeds, "Number of consecutive seeds to run")->capture_default_str();

  std::string params, data, domain, out;
  auto *e = app.add_subcommand("eval", "Score a parameter snapshot on a dataset");
  e->add_option("--params", params, "Parameter snapshot")->required()->check(CLI::ExistingFile);
  e->add_option("--data", data, "NDJSON dataset")->required()->check(CLI::ExistingFile);

  auto *x = app.add_subcommand("export-structure", "Write the mean structure matrix as CSV");
  x->add_option("--params", params, "Parameter snapshot")->required()->check(CLI::ExistingFile);
  x->add_option("--data", data, "NDJSON dataset")->required()->check(CLI::ExistingFile);
  x->add_option("--domain", domain, "source|target")
      ->required()
      ->check(CLI::IsMember({"source", "target"}));
  x->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError &ex) {
    app.exit(ex);
    return 2;
  }

  try {
    if (g->parsed()) return cmd_gen_data(gen);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_eval(params, data);
    if (x->parsed()) return cmd_export_structure(params, data, domain, out);
  } catch (const InvalidInput &ex) {
    spdlog::error("{}", ex.what());
    return 2;
  } catch (const std::exception &ex) {
    spdlog::error("{}", ex.what());
    return 1;
  }
  return 1;
}
