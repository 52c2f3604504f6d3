// SPDX-License-Identifier: Apache-2.0
/**
 * @file   io.hpp
 * @brief  On-disk formats: NDJSON datasets with a .meta.json sidecar,
 *         generator specs, run configs, parameter snapshots, training
 *         reports and structure-matrix CSVs.
 *
 * Dataset line:
 *   {"id": "...", "series": [[x^1_1..x^1_N], ..., [x^M_1..x^M_N]],
 *    "label": number|null, "domain": "source"|"target"}
 */
#pragma once

#include <sasa/model.hpp>
#include <sasa/structure.hpp>
#include <sasa/synthdata.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sasa::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// enum names

inline Domain parse_domain(const std::string &s) {
  if (s == "source") return Domain::source;
  if (s == "target") return Domain::target;
  throw InvalidInput("unknown domain '" + s + "'");
}

inline Task parse_task(const std::string &s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw InvalidInput("unknown task '" + s + "'");
}

inline model::Ablation parse_ablation(const std::string &s) {
  using model::Ablation;
  if (s == "full") return Ablation::full;
  if (s == "no_alpha") return Ablation::no_alpha;
  if (s == "no_beta") return Ablation::no_beta;
  if (s == "source_only") return Ablation::source_only;
  throw InvalidInput("unknown ablation '" + s + "'");
}

inline const char *to_string(model::Ablation a) {
  switch (a) {
  case model::Ablation::full: return "full";
  case model::Ablation::no_alpha: return "no_alpha";
  case model::Ablation::no_beta: return "no_beta";
  case model::Ablation::source_only: return "source_only";
  }
  return "full";
}

inline alignment::Norm parse_norm(const std::string &s) {
  if (s == "l2") return alignment::Norm::l2;
  if (s == "squared_l2") return alignment::Norm::squared_l2;
  throw InvalidInput("unknown alignment_norm '" + s + "'");
}

inline const char *to_string(alignment::Norm n) {
  return n == alignment::Norm::l2 ? "l2" : "squared_l2";
}

inline structure::InterScore parse_inter_score(const std::string &s) {
  if (s == "lagged") return structure::InterScore::lagged;
  if (s == "plain") return structure::InterScore::plain;
  throw InvalidInput("unknown inter_score '" + s + "'");
}

inline const char *to_string(structure::InterScore s) {
  return s == structure::InterScore::lagged ? "lagged" : "plain";
}

inline model::Architecture parse_architecture(const std::string &s) {
  if (s == "sasa") return model::Architecture::sasa;
  if (s == "lstm_s2t") return model::Architecture::lstm_s2t;
  throw InvalidInput("unknown architecture '" + s + "'");
}

inline const char *to_string(model::Architecture a) {
  return a == model::Architecture::sasa ? "sasa" : "lstm_s2t";
}

// ---------------------------------------------------------------------------
// helpers

namespace detail {

inline void reject_unknown_keys(const json &j, std::initializer_list<const char *> known,
                                const std::string &what) {
  if (!j.is_object()) {
    throw InvalidInput(what + ": expected a JSON object");
  }
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto &[k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw InvalidInput(what + ": unknown key '" + k + "'");
    }
  }
}

template <typename T>
T get(const json &j, const char *key, const std::string &what) {
  if (!j.contains(key)) {
    throw InvalidInput(what + ": missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw InvalidInput(what + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json &j, const char *key, T fallback, const std::string &what) {
  return j.contains(key) ? get<T>(j, key, what) : fallback;
}

inline json parse_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

inline void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

} // namespace detail

// ---------------------------------------------------------------------------
// samples and datasets

inline json to_json(const TimeSeriesSample &s) {
  json series = json::array();
  for (std::size_t i = 0; i < s.variables; ++i) {
    auto row = s.variable(i);
    series.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  json j;
  j["id"] = s.id;
  j["series"] = std::move(series);
  j["label"] = s.label ? json(*s.label) : json(nullptr);
  j["domain"] = to_string(s.domain);
  return j;
}

inline TimeSeriesSample sample_from_json(const json &j, const std::string &where) {
  detail::reject_unknown_keys(j, {"id", "series", "label", "domain"}, where);
  TimeSeriesSample s;
  s.id = detail::get<std::string>(j, "id", where);
  const auto &series = j.at("series");
  if (!series.is_array() || series.empty()) {
    throw InvalidInput(where + ": series must be a non-empty array of arrays");
  }
  s.variables = series.size();
  s.length = series[0].is_array() ? series[0].size() : 0;
  for (const auto &row : series) {
    if (!row.is_array() || row.size() != s.length) {
      throw InvalidInput(where + ": ragged series");
    }
    for (const auto &v : row) {
      if (!v.is_number()) {
        throw InvalidInput(where + ": series values must be numbers");
      }
      s.series.push_back(v.get<double>());
    }
  }
  const auto &label = j.at("label");
  if (label.is_number()) {
    s.label = label.get<double>();
  } else if (!label.is_null()) {
    throw InvalidInput(where + ": label must be a number or null");
  }
  s.domain = parse_domain(detail::get<std::string>(j, "domain", where));
  s.validate();
  return s;
}

inline void write_ndjson(const fs::path &path, const std::vector<TimeSeriesSample> &data) {
  std::string text;
  for (const auto &s : data) {
    text += to_json(s).dump();
    text += '\n';
  }
  detail::write_text(path, text);
}

inline std::vector<TimeSeriesSample> read_ndjson(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open dataset " + path.string());
  }
  std::vector<TimeSeriesSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const std::string where = path.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::exception &e) {
      throw InvalidInput(where + ": " + e.what());
    }
    out.push_back(sample_from_json(j, where));
    if (out.back().variables != out.front().variables ||
        out.back().length != out.front().length) {
      throw InvalidInput(where + ": sample shape differs from the first sample");
    }
  }
  return out;
}

inline fs::path meta_path(const fs::path &dataset) {
  auto p = dataset;
  p.replace_extension(".meta.json");
  return p;
}

// ---------------------------------------------------------------------------
// generator specs

inline json to_json(const synth::CausalGraphSpec &g) {
  json edges = json::array();
  for (const auto &e : g.edges) {
    edges.push_back({{"parent", e.parent}, {"child", e.child},
                     {"weight", e.weight}, {"base_lag", e.base_lag}});
  }
  json j;
  j["variables"] = g.variables;
  j["edges"] = std::move(edges);
  j["noise_std"] = g.noise_std;
  j["child_noise_std"] = g.child_noise();
  j["root_ar"] = g.root_ar;
  j["label_rule"] = {{"variables", g.label.variables},
                     {"weights", g.label.weights},
                     {"bias", g.label.bias},
                     {"task", to_string(g.label.task)},
                     {"horizon", g.label.horizon}};
  return j;
}

inline synth::CausalGraphSpec graph_from_json(const json &j) {
  const std::string what = "graph spec";
  detail::reject_unknown_keys(
      j, {"variables", "edges", "noise_std", "child_noise_std", "root_ar", "label_rule"},
      what);
  synth::CausalGraphSpec g;
  g.variables = detail::get<std::size_t>(j, "variables", what);
  for (const auto &e : detail::get<json>(j, "edges", what)) {
    detail::reject_unknown_keys(e, {"parent", "child", "weight", "base_lag"}, what + " edge");
    g.edges.push_back({detail::get<std::size_t>(e, "parent", what),
                       detail::get<std::size_t>(e, "child", what),
                       detail::get<double>(e, "weight", what),
                       detail::get<int>(e, "base_lag", what)});
  }
  g.noise_std = detail::get_or<double>(j, "noise_std", 1.0, what);
  g.child_noise_std = detail::get_or<double>(j, "child_noise_std", -1.0, what);
  g.root_ar = detail::get_or<double>(j, "root_ar", 0.6, what);
  const auto lr = detail::get<json>(j, "label_rule", what);
  detail::reject_unknown_keys(lr, {"variables", "weights", "bias", "task", "horizon"},
                              what + " label_rule");
  g.label.variables = detail::get<std::vector<std::size_t>>(lr, "variables", what);
  g.label.weights = detail::get<std::vector<double>>(lr, "weights", what);
  g.label.bias = detail::get_or<double>(lr, "bias", 0.0, what);
  g.label.task = parse_task(detail::get_or<std::string>(lr, "task", "classification", what));
  g.label.horizon = detail::get_or<std::size_t>(lr, "horizon", 0, what);
  g.validate();
  return g;
}

inline json to_json(const synth::DomainSpec &d) {
  json j;
  j["lag_shift"] = d.lag_shift;
  j["offset"] = {d.offset_min, d.offset_max};
  j["noise_scale"] = d.noise_scale;
  return j;
}

inline synth::DomainSpec domain_from_json(const json &j) {
  const std::string what = "domain spec";
  detail::reject_unknown_keys(j, {"lag_shift", "offset", "noise_scale"}, what);
  synth::DomainSpec d;
  d.lag_shift = detail::get_or<int>(j, "lag_shift", 0, what);
  auto off = detail::get_or<std::vector<int>>(j, "offset", {0, 0}, what);
  if (off.size() != 2) {
    throw InvalidInput(what + ": offset must be [min, max]");
  }
  d.offset_min = off[0];
  d.offset_max = off[1];
  d.noise_scale = detail::get_or<double>(j, "noise_scale", 1.0, what);
  return d;
}

struct DatasetMeta {
  std::size_t variables = 0;
  std::size_t length = 0;
  Task task = Task::classification;
  std::size_t count = 0;
  std::optional<Domain> domain;
  std::optional<std::string> split;
  std::optional<synth::CausalGraphSpec> graph;
  std::optional<synth::DomainSpec> domain_spec;
  std::optional<std::uint64_t> seed;
};

inline json to_json(const DatasetMeta &m) {
  json j;
  j["M"] = m.variables;
  j["N"] = m.length;
  j["task"] = to_string(m.task);
  j["count"] = m.count;
  if (m.domain) j["domain"] = to_string(*m.domain);
  if (m.split) j["split"] = *m.split;
  if (m.graph) j["graph"] = to_json(*m.graph);
  if (m.domain_spec) j["domain_spec"] = to_json(*m.domain_spec);
  if (m.seed) j["seed"] = *m.seed;
  return j;
}

inline DatasetMeta meta_from_json(const json &j) {
  const std::string what = "dataset meta";
  detail::reject_unknown_keys(
      j, {"M", "N", "task", "count", "domain", "split", "graph", "domain_spec", "seed"}, what);
  DatasetMeta m;
  m.variables = detail::get<std::size_t>(j, "M", what);
  m.length = detail::get<std::size_t>(j, "N", what);
  m.task = parse_task(detail::get<std::string>(j, "task", what));
  m.count = detail::get_or<std::size_t>(j, "count", 0, what);
  if (j.contains("domain")) m.domain = parse_domain(j.at("domain").get<std::string>());
  if (j.contains("split")) m.split = j.at("split").get<std::string>();
  if (j.contains("graph")) m.graph = graph_from_json(j.at("graph"));
  if (j.contains("domain_spec")) m.domain_spec = domain_from_json(j.at("domain_spec"));
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
  return m;
}

// ---------------------------------------------------------------------------
// model config and run config

inline json to_json(const model::ModelConfig &c) {
  json j;
  j["M"] = c.variables;
  j["N"] = c.length;
  j["d_h"] = c.hidden;
  j["task"] = to_string(c.task);
  j["omega"] = c.omega;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["seed"] = c.seed;
  j["ablation"] = to_string(c.ablation);
  j["alignment_norm"] = to_string(c.alignment_norm);
  j["inter_score"] = to_string(c.inter_score);
  j["architecture"] = to_string(c.architecture);
  j["eval_batch_size"] = c.eval_batch_size;
  return j;
}

#define SASA_MODEL_CONFIG_KEYS                                                   \
  "M", "N", "d_h", "task", "omega", "lr", "batch_size", "epochs", "seed",        \
      "ablation", "alignment_norm", "inter_score", "architecture",               \
      "eval_batch_size"

namespace detail {

inline model::ModelConfig model_config_fields(const json &j, const std::string &what) {
  model::ModelConfig c;
  c.variables = get<std::size_t>(j, "M", what);
  c.length = get<std::size_t>(j, "N", what);
  c.hidden = get_or<std::size_t>(j, "d_h", c.hidden, what);
  c.task = parse_task(get_or<std::string>(j, "task", "classification", what));
  c.omega = get_or<double>(j, "omega", c.omega, what);
  c.lr = get_or<double>(j, "lr", c.lr, what);
  c.batch_size = get_or<std::size_t>(j, "batch_size", c.batch_size, what);
  c.epochs = get_or<std::size_t>(j, "epochs", c.epochs, what);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, what);
  c.ablation = parse_ablation(get_or<std::string>(j, "ablation", "full", what));
  c.alignment_norm = parse_norm(get_or<std::string>(j, "alignment_norm", "l2", what));
  c.inter_score = parse_inter_score(get_or<std::string>(j, "inter_score", "lagged", what));
  c.architecture = parse_architecture(get_or<std::string>(j, "architecture", "sasa", what));
  c.eval_batch_size = get_or<std::size_t>(j, "eval_batch_size", c.eval_batch_size, what);
  c.validate();
  return c;
}

} // namespace detail

inline model::ModelConfig model_config_from_json(const json &j) {
  detail::reject_unknown_keys(j, {SASA_MODEL_CONFIG_KEYS}, "model config");
  return detail::model_config_fields(j, "model config");
}

struct RunConfig {
  model::ModelConfig model;
  fs::path source_train;
  fs::path target_train;
  fs::path target_test;
  fs::path out_dir;
};

/// Strict: unknown keys are rejected and every input path must exist.
/// Relative paths resolve against @p base.
inline RunConfig run_config_from_json(const json &j, const fs::path &base = {}) {
  const std::string what = "run config";
  detail::reject_unknown_keys(j,
                              {SASA_MODEL_CONFIG_KEYS, "source_train", "target_train",
                               "target_test", "out_dir"},
                              what);
  RunConfig r;
  r.model = detail::model_config_fields(j, what);
  auto resolve = [&](const char *key) {
    fs::path p = detail::get<std::string>(j, key, what);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  r.source_train = resolve("source_train");
  r.target_train = resolve("target_train");
  r.target_test = resolve("target_test");
  r.out_dir = resolve("out_dir");
  for (const auto &p : {r.source_train, r.target_train, r.target_test}) {
    if (!fs::exists(p)) {
      throw InvalidInput(what + ": " + p.string() + " does not exist");
    }
  }
  return r;
}

inline RunConfig load_run_config(const fs::path &path) {
  return run_config_from_json(detail::parse_file(path), path.parent_path());
}

#undef SASA_MODEL_CONFIG_KEYS

// ---------------------------------------------------------------------------
// parameter snapshots

inline json snapshot_to_json(const model::ModelParams &p, const model::ModelConfig &c) {
  json params;
  const auto names = p.names();
  const auto tensors = p.tensors();
  for (std::size_t k = 0; k < names.size(); ++k) {
    params[names[k]] = {
        {"shape", {tensors[k].rows(), tensors[k].cols()}},
        {"values", std::vector<double>(tensors[k].values().begin(), tensors[k].values().end())}};
  }
  json j;
  j["config"] = to_json(c);
  j["param_count"] = model::count_params(p);
  j["params"] = std::move(params);
  return j;
}

struct Snapshot {
  model::ModelConfig config;
  model::ModelParams params;
};

inline Snapshot snapshot_from_json(const json &j) {
  const std::string what = "params snapshot";
  detail::reject_unknown_keys(j, {"config", "param_count", "params"}, what);
  Snapshot s;
  s.config = model_config_from_json(detail::get<json>(j, "config", what));
  s.params = model::ModelParams::zeros(s.config);
  const auto &stored = detail::get<json>(j, "params", what);
  const auto names = s.params.names();
  auto tensors = s.params.tensors();
  if (stored.size() != names.size()) {
    throw InvalidInput(what + ": expected " + std::to_string(names.size()) +
                       " tensors, found " + std::to_string(stored.size()));
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!stored.contains(names[k])) {
      throw InvalidInput(what + ": missing tensor " + names[k]);
    }
    const auto &t = stored.at(names[k]);
    auto shape = detail::get<std::vector<std::size_t>>(t, "shape", what);
    auto values = detail::get<std::vector<double>>(t, "values", what);
    if (shape.size() != 2 || shape[0] != tensors[k].rows() ||
        shape[1] != tensors[k].cols() || values.size() != tensors[k].size()) {
      throw InvalidInput(what + ": tensor " + names[k] + " has the wrong shape");
    }
    std::copy(values.begin(), values.end(), tensors[k].values().begin());
  }
  return s;
}

inline void save_snapshot(const fs::path &path, const model::ModelParams &p,
                          const model::ModelConfig &c) {
  detail::write_text(path, snapshot_to_json(p, c).dump() + "\n");
}

inline Snapshot load_snapshot(const fs::path &path) {
  return snapshot_from_json(detail::parse_file(path));
}

// ---------------------------------------------------------------------------
// reports

/// Fixed columns: epoch,L_y,L_alpha,L_beta,total,target_metric. Wall-clock
/// time is left out so the file is reproducible byte for byte.
inline std::string report_csv(const model::TrainReport &r) {
  std::string out = "epoch,L_y,L_alpha,L_beta,total,target_metric\n";
  for (const auto &e : r.epochs) {
    out += std::to_string(e.epoch) + "," + detail::format_number(e.label_loss) + "," +
           detail::format_number(e.alpha_loss) + "," +
           detail::format_number(e.beta_loss) + "," +
           detail::format_number(e.total_loss) + "," +
           (e.target_metric ? detail::format_number(*e.target_metric) : std::string()) +
           "\n";
  }
  return out;
}

inline json to_json(const structure::StructureMatrix &m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.variables; ++i) {
    rows.push_back(std::vector<double>(m.a.begin() + static_cast<std::ptrdiff_t>(i * m.variables),
                                       m.a.begin() + static_cast<std::ptrdiff_t>((i + 1) * m.variables)));
  }
  return rows;
}

inline json report_to_json(const model::TrainReport &r) {
  json epochs = json::array();
  for (const auto &e : r.epochs) {
    json row;
    row["epoch"] = e.epoch;
    row["L_y"] = e.label_loss;
    row["L_alpha"] = e.alpha_loss;
    row["L_beta"] = e.beta_loss;
    row["total"] = e.total_loss;
    row["target_metric"] = e.target_metric ? json(*e.target_metric) : json(nullptr);
    row["seconds"] = e.seconds;
    epochs.push_back(std::move(row));
  }
  json j;
  j["metric"] = r.metric;
  j["epochs"] = std::move(epochs);
  if (r.source_structure) j["source_structure"] = to_json(*r.source_structure);
  if (r.target_structure) j["target_structure"] = to_json(*r.target_structure);
  return j;
}

/// M x M matrix, header row of variable indices; row i is the target
/// variable, column j the source variable.
inline std::string structure_csv(const structure::StructureMatrix &m) {
  std::string out = "variable";
  for (std::size_t j = 0; j < m.variables; ++j) {
    out += "," + std::to_string(j);
  }
  out += "\n";
  for (std::size_t i = 0; i < m.variables; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < m.variables; ++j) {
      out += "," + detail::format_number(m(i, j));
    }
    out += "\n";
  }
  return out;
}

inline structure::StructureMatrix parse_structure_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) {
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  structure::StructureMatrix m{rows.size(), {}};
  for (const auto &r : rows) {
    if (r.size() != m.variables) {
      throw InvalidInput("structure csv: not square");
    }
    m.a.insert(m.a.end(), r.begin(), r.end());
  }
  return m;
}

} // namespace sasa::io
