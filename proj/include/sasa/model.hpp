// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  End-to-end structure-alignment model: forward pass, objective,
 *         training loop, ablations and the plain-LSTM source-only baseline.
 */
#pragma once

#include <sasa/alignment.hpp>
#include <sasa/diffnum/adam.hpp>
#include <sasa/diffnum/ops.hpp>
#include <sasa/eval.hpp>
#include <sasa/segmenter.hpp>
#include <sasa/structure.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sasa::model {

using diffnum::Tensor;
using Dataset = std::vector<TimeSeriesSample>;

enum class Ablation {
  full,        ///< L_y + omega (L_alpha + L_beta)
  no_alpha,    ///< drops L_alpha
  no_beta,     ///< drops L_beta
  source_only, ///< drops both; target batches are never consumed
};

enum class Architecture {
  sasa,     ///< segment bank + sparse attention + predictor
  lstm_s2t, ///< one shared LSTM over all variables + predictor
};

struct ModelConfig {
  std::size_t variables = 0;
  std::size_t length = 0;
  std::size_t hidden = 16;
  Task task = Task::classification;
  double omega = 1.0;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::full;
  alignment::Norm alignment_norm = alignment::Norm::l2;
  structure::InterScore inter_score = structure::InterScore::lagged;
  Architecture architecture = Architecture::sasa;
  /// Chunk size for prediction; fixed so results never depend on callers.
  std::size_t eval_batch_size = 64;

  bool uses_target() const {
    return architecture == Architecture::sasa && ablation != Ablation::source_only;
  }

  void validate() const {
    if (variables < 1 || length < 1 || hidden < 1) {
      throw InvalidInput("config: M, N and d_h must be positive");
    }
    if (batch_size < 1 || eval_batch_size < 1) {
      throw InvalidInput("config: batch sizes must be >= 1");
    }
    if (!(omega >= 0.0) || !std::isfinite(omega)) {
      throw InvalidInput("config: omega must be >= 0");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
      throw InvalidInput("config: lr must be positive");
    }
  }
};

/// One hidden layer: in -> d_h (tanh) -> 1.
struct PredictorParams {
  Tensor w1;
  Tensor b1;
  Tensor w2;
  Tensor b2;

  std::vector<Tensor> tensors() const { return {w1, b1, w2, b2}; }

  template <typename Rng>
  static PredictorParams init(std::size_t in, std::size_t hidden, Rng &rng) {
    auto draw = [&](std::size_t fan_in, diffnum::Shape s) {
      const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> u(-a, a);
      std::vector<double> v(s.size());
      for (auto &x : v) {
        x = u(rng);
      }
      return Tensor::parameter(s, std::move(v));
    };
    return {draw(in, {in, hidden}), draw(in, {1, hidden}),
            draw(hidden, {hidden, 1}), draw(hidden, {1, 1})};
  }

  static PredictorParams zeros(std::size_t in, std::size_t hidden) {
    return {Tensor::zeros({in, hidden}, true), Tensor::zeros({1, hidden}, true),
            Tensor::zeros({hidden, 1}, true), Tensor::zeros({1, 1}, true)};
  }

  /// X is B x in; returns B x 1 raw outputs.
  Tensor apply(const Tensor &x) const {
    using namespace diffnum;
    Tensor ones = Tensor::full({x.rows(), 1}, 1.0);
    Tensor hidden = diffnum::tanh(matmul(x, w1) + matmul(ones, b1));
    return matmul(hidden, w2) + matmul(ones, b2);
  }
};

struct ModelParams {
  /// M scalar-input blocks for sasa; one M-input block for lstm_s2t.
  std::vector<segmenter::LstmParams> lstm;
  /// Undefined tensors for lstm_s2t.
  structure::ProjectionParams proj;
  PredictorParams predictor;

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    for (const auto &b : lstm) {
      for (auto &t : b.tensors()) {
        out.push_back(t);
      }
    }
    if (proj.w_query.defined()) {
      for (auto &t : proj.tensors()) {
        out.push_back(t);
      }
    }
    for (auto &t : predictor.tensors()) {
      out.push_back(t);
    }
    return out;
  }

  /// Names aligned with tensors().
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < lstm.size(); ++i) {
      for (const char *n : {"w_input", "w_hidden", "bias"}) {
        out.push_back("lstm." + std::to_string(i) + "." + n);
      }
    }
    if (proj.w_query.defined()) {
      for (const char *n : {"proj.w_query", "proj.w_key", "proj.w_value"}) {
        out.emplace_back(n);
      }
    }
    for (const char *n : {"predictor.w1", "predictor.b1", "predictor.w2", "predictor.b2"}) {
      out.emplace_back(n);
    }
    return out;
  }

  static std::size_t predictor_inputs(const ModelConfig &c) {
    return c.architecture == Architecture::sasa ? 2 * c.variables * c.hidden
                                                : c.hidden;
  }

  static ModelParams init(const ModelConfig &c) {
    c.validate();
    std::mt19937_64 rng(c.seed);
    ModelParams p;
    if (c.architecture == Architecture::sasa) {
      for (std::size_t i = 0; i < c.variables; ++i) {
        p.lstm.push_back(segmenter::LstmParams::init(1, c.hidden, rng));
      }
      p.proj = structure::ProjectionParams::init(c.hidden, rng);
    } else {
      p.lstm.push_back(segmenter::LstmParams::init(c.variables, c.hidden, rng));
    }
    p.predictor = PredictorParams::init(predictor_inputs(c), c.hidden, rng);
    return p;
  }

  static ModelParams zeros(const ModelConfig &c) {
    c.validate();
    ModelParams p;
    if (c.architecture == Architecture::sasa) {
      for (std::size_t i = 0; i < c.variables; ++i) {
        p.lstm.push_back(segmenter::LstmParams::zeros(1, c.hidden));
      }
      p.proj = structure::ProjectionParams::zeros(c.hidden);
    } else {
      p.lstm.push_back(segmenter::LstmParams::zeros(c.variables, c.hidden));
    }
    p.predictor = PredictorParams::zeros(predictor_inputs(c), c.hidden);
    return p;
  }

  /// Independent copy with the same values.
  ModelParams clone() const {
    auto copy = [](const Tensor &t) {
      return Tensor::parameter(t.shape(), {t.values().begin(), t.values().end()});
    };
    ModelParams p;
    for (const auto &b : lstm) {
      p.lstm.push_back({copy(b.w_input), copy(b.w_hidden), copy(b.bias)});
    }
    if (proj.w_query.defined()) {
      p.proj = {copy(proj.w_query), copy(proj.w_key), copy(proj.w_value)};
    }
    p.predictor = {copy(predictor.w1), copy(predictor.b1), copy(predictor.w2),
                   copy(predictor.b2)};
    return p;
  }
};

/// Exact number of trainable scalars.
inline std::size_t count_params(const ModelParams &p) {
  std::size_t n = 0;
  for (const auto &t : p.tensors()) {
    n += t.size();
  }
  return n;
}

/// Closed form of count_params for a config; independent of N.
inline std::size_t expected_param_count(const ModelConfig &c) {
  const std::size_t d = c.hidden, M = c.variables;
  const std::size_t in = ModelParams::predictor_inputs(c);
  const std::size_t predictor = in * d + d + d + 1;
  if (c.architecture == Architecture::sasa) {
    return M * 4 * d * (d + 2) + 3 * d * d + predictor;
  }
  return 4 * d * (M + d + 1) + predictor;
}

struct BatchOutput {
  Tensor predictions;                   ///< B x 1, probabilities or values
  alignment::BatchWeights weights;      ///< empty for lstm_s2t
  std::vector<Tensor> representations;  ///< per sample H, M x 2d (sasa)
  Tensor features;                      ///< B x predictor inputs
};

namespace detail {

inline void check_batch(const std::vector<const TimeSeriesSample *> &batch,
                        const ModelConfig &c) {
  if (batch.empty()) {
    throw InvalidInput("forward: empty batch");
  }
  for (const auto *s : batch) {
    if (s->variables != c.variables || s->length != c.length) {
      throw InvalidInput("forward: sample " + s->id + " is " +
                         std::to_string(s->variables) + "x" +
                         std::to_string(s->length) + ", model expects " +
                         std::to_string(c.variables) + "x" +
                         std::to_string(c.length));
    }
  }
}

inline Tensor baseline_features(const std::vector<const TimeSeriesSample *> &batch,
                                 const ModelParams &p, const ModelConfig &c) {
  const std::size_t B = batch.size(), M = c.variables, d = c.hidden;
  segmenter::LstmState state{Tensor::zeros({B, d}), Tensor::zeros({B, d})};
  for (std::size_t t = 0; t < c.length; ++t) {
    std::vector<double> x(B * M);
    for (std::size_t s = 0; s < B; ++s) {
      for (std::size_t i = 0; i < M; ++i) {
        x[s * M + i] = batch[s]->at(i, t);
      }
    }
    state = segmenter::lstm_step(Tensor::constant({B, M}, std::move(x)), state,
                                 p.lstm[0]);
  }
  return state.h;
}

} // namespace detail

/// Forward pass over a batch: summarize -> intra attention -> inter
/// attention -> representation -> predictor.
inline BatchOutput forward_batch(const std::vector<const TimeSeriesSample *> &batch,
                                 const ModelParams &p, const ModelConfig &c) {
  using namespace diffnum;
  detail::check_batch(batch, c);
  BatchOutput out;
  out.weights.variables = c.variables;
  out.weights.length = c.length;
  out.weights.domain = batch[0]->domain;
  if (c.architecture == Architecture::lstm_s2t) {
    out.features = detail::baseline_features(batch, p, c);
  } else {
    if (p.lstm.size() != c.variables) {
      throw InvalidInput("forward: parameter set does not match M");
    }
    auto banks = segmenter::summarize_batch(batch, p.lstm);
    std::vector<Tensor> flat;
    flat.reserve(batch.size());
    for (const auto &bank : banks) {
      auto intra = structure::intra_attention(bank, p.proj);
      auto inter = structure::inter_attention(intra.z_rows, bank, c.inter_score);
      auto rep = structure::build_representation(intra.z_rows, inter.u_rows);
      out.weights.alpha.push_back(intra.alpha);
      if (c.variables > 1) {
        out.weights.beta.push_back(inter.beta);
      }
      out.representations.push_back(rep.per_variable);
      flat.push_back(rep.flat);
    }
    out.features = flat.size() == 1 ? flat[0] : concat_rows(flat);
  }
  Tensor raw = p.predictor.apply(out.features);
  out.predictions = c.task == Task::classification ? sigmoid(raw) : raw;
  return out;
}

struct SampleOutput {
  double prediction = 0.0;
  Tensor alpha;          ///< M x N
  Tensor beta;           ///< M x (M-1)N, undefined when M == 1
  Tensor representation; ///< M x 2d
};

inline SampleOutput forward(const TimeSeriesSample &sample, const ModelParams &p,
                            const ModelConfig &c) {
  auto out = forward_batch({&sample}, p, c);
  SampleOutput s;
  s.prediction = out.predictions.item();
  if (!out.weights.alpha.empty()) {
    s.alpha = out.weights.alpha[0];
    s.representation = out.representations[0];
  }
  if (!out.weights.beta.empty()) {
    s.beta = out.weights.beta[0];
  }
  return s;
}

/// Cross-entropy (classification) or RMSE (regression) over the batch.
inline Tensor label_loss(const Tensor &pred,
                         const std::vector<const TimeSeriesSample *> &batch,
                         Task task) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto *s : batch) {
    if (!s->label) {
      throw InvalidInput("label_loss: sample " + s->id + " has no label");
    }
    y.push_back(*s->label);
  }
  return task == Task::classification ? diffnum::binary_cross_entropy(pred, y)
                                      : diffnum::root_mean_squared_error(pred, y);
}

struct LossTerms {
  Tensor total;
  Tensor label;
  Tensor alpha; ///< zero scalar when not part of the objective
  Tensor beta;  ///< zero scalar when not part of the objective
};

/// L = L_y + omega (L_alpha + L_beta) with ablated terms removed. L_y uses
/// source labels only; target labels are never read.
inline LossTerms total_loss(const std::vector<const TimeSeriesSample *> &src,
                            const std::vector<const TimeSeriesSample *> &tgt,
                            const ModelParams &p, const ModelConfig &c) {
  using namespace diffnum;
  if (src.empty()) {
    throw InvalidInput("total_loss: empty source batch");
  }
  auto src_out = forward_batch(src, p, c);
  LossTerms terms;
  terms.label = label_loss(src_out.predictions, src, c.task);
  terms.alpha = Tensor::scalar(0.0);
  terms.beta = Tensor::scalar(0.0);
  terms.total = terms.label;
  if (!c.uses_target()) {
    return terms;
  }
  if (tgt.empty()) {
    throw InvalidInput("total_loss: empty target batch");
  }
  auto tgt_out = forward_batch(tgt, p, c);
  std::vector<Tensor> align;
  if (c.ablation != Ablation::no_alpha) {
    terms.alpha = alignment::alpha_alignment_loss(src_out.weights, tgt_out.weights,
                                                  c.alignment_norm);
    align.push_back(terms.alpha);
  }
  if (c.ablation != Ablation::no_beta) {
    terms.beta = alignment::beta_alignment_loss(src_out.weights, tgt_out.weights,
                                                c.alignment_norm);
    align.push_back(terms.beta);
  }
  if (!align.empty()) {
    Tensor a = align.size() == 1 ? align[0] : add(align[0], align[1]);
    terms.total = add(terms.label, scale(a, c.omega));
  }
  return terms;
}

/// Predictions for a whole dataset in fixed eval_batch_size chunks.
inline std::vector<double> predict(const Dataset &data, const ModelParams &p,
                                   const ModelConfig &c) {
  std::vector<double> out;
  out.reserve(data.size());
  for (std::size_t lo = 0; lo < data.size(); lo += c.eval_batch_size) {
    const std::size_t hi = std::min(data.size(), lo + c.eval_batch_size);
    std::vector<const TimeSeriesSample *> batch;
    for (std::size_t k = lo; k < hi; ++k) {
      batch.push_back(&data[k]);
    }
    auto res = forward_batch(batch, p, c);
    for (double v : res.predictions.values()) {
      out.push_back(v);
    }
  }
  return out;
}

inline std::string metric_name(Task t) {
  return t == Task::classification ? "auc" : "rmse";
}

/// AUC or RMSE of the model on a labeled dataset.
inline eval::MetricReport evaluate(const Dataset &data, const ModelParams &p,
                                   const ModelConfig &c) {
  if (data.empty()) {
    throw InvalidInput("evaluate: empty dataset");
  }
  std::vector<double> labels;
  for (const auto &s : data) {
    if (!s.label) {
      throw InvalidInput("evaluate: sample " + s.id + " has no label");
    }
    labels.push_back(*s.label);
  }
  auto preds = predict(data, p, c);
  eval::MetricReport r;
  r.metric = metric_name(c.task);
  r.count = data.size();
  r.value = c.task == Task::classification ? eval::auc(preds, labels)
                                           : eval::rmse(preds, labels);
  return r;
}

/// Mean aggregated inter-variable structure over a dataset.
inline structure::StructureMatrix mean_structure(const Dataset &data,
                                                 const ModelParams &p,
                                                 const ModelConfig &c) {
  if (c.architecture != Architecture::sasa) {
    throw InvalidInput("mean_structure: only defined for the sasa architecture");
  }
  if (data.empty()) {
    throw InvalidInput("mean_structure: empty dataset");
  }
  std::vector<structure::StructureMatrix> ms;
  ms.reserve(data.size());
  for (std::size_t lo = 0; lo < data.size(); lo += c.eval_batch_size) {
    const std::size_t hi = std::min(data.size(), lo + c.eval_batch_size);
    std::vector<const TimeSeriesSample *> batch;
    for (std::size_t k = lo; k < hi; ++k) {
      batch.push_back(&data[k]);
    }
    auto res = forward_batch(batch, p, c);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      if (c.variables < 2) {
        ms.push_back({c.variables, std::vector<double>(c.variables * c.variables, 0.0)});
      } else {
        ms.push_back(structure::aggregate_structure(res.weights.beta[s].values(),
                                                    c.variables, c.length));
      }
    }
  }
  return structure::average(ms);
}

struct EpochRecord {
  std::size_t epoch = 0;
  double label_loss = 0.0;
  double alpha_loss = 0.0;
  double beta_loss = 0.0;
  double total_loss = 0.0;
  std::optional<double> target_metric;
  double seconds = 0.0;
};

struct TrainReport {
  std::string metric;
  std::vector<EpochRecord> epochs;
  std::optional<structure::StructureMatrix> source_structure;
  std::optional<structure::StructureMatrix> target_structure;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

namespace detail {

inline void check_dataset(const Dataset &d, const ModelConfig &c, const char *what,
                          bool need_labels) {
  for (const auto &s : d) {
    s.validate();
    if (s.variables != c.variables || s.length != c.length) {
      throw InvalidInput(std::string(what) + ": sample " + s.id +
                         " does not match configured M x N");
    }
    if (need_labels && !s.label) {
      throw InvalidInput(std::string(what) + ": sample " + s.id + " is unlabeled");
    }
  }
}

} // namespace detail

/// Trains on labeled @p source and unlabeled @p target. Each epoch shuffles
/// both sets independently and pairs batches by position, cycling the
/// smaller set. @p target_test, when given, is scored after every epoch.
inline TrainResult train(const Dataset &source, const Dataset &target,
                         const ModelConfig &c, const Dataset *target_test = nullptr,
                         const std::function<void(const EpochRecord &)> &on_epoch = {}) {
  c.validate();
  if (source.empty()) {
    throw InvalidInput("train: empty source dataset");
  }
  detail::check_dataset(source, c, "source", true);
  if (c.uses_target()) {
    if (target.empty()) {
      throw InvalidInput("train: empty target dataset");
    }
    detail::check_dataset(target, c, "target", false);
  }
  if (target_test) {
    detail::check_dataset(*target_test, c, "target_test", true);
  }

  TrainResult result{ModelParams::init(c), {}};
  result.report.metric = metric_name(c.task);
  diffnum::Adam opt(result.params.tensors(), {.lr = c.lr});
  std::mt19937_64 shuffle_rng(c.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> src_order(source.size()), tgt_order(target.size());
  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(src_order.begin(), src_order.end(), std::size_t{0});
    std::iota(tgt_order.begin(), tgt_order.end(), std::size_t{0});
    std::shuffle(src_order.begin(), src_order.end(), shuffle_rng);
    std::shuffle(tgt_order.begin(), tgt_order.end(), shuffle_rng);

    const std::size_t positions =
        c.uses_target() ? std::max(source.size(), target.size()) : source.size();
    const std::size_t steps = (positions + c.batch_size - 1) / c.batch_size;
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t lo = k * c.batch_size;
      const std::size_t hi = std::min(positions, lo + c.batch_size);
      std::vector<const TimeSeriesSample *> src, tgt;
      for (std::size_t pos = lo; pos < hi; ++pos) {
        src.push_back(&source[src_order[pos % source.size()]]);
        if (c.uses_target()) {
          tgt.push_back(&target[tgt_order[pos % target.size()]]);
        }
      }
      auto terms = total_loss(src, tgt, result.params, c);
      diffnum::backward(terms.total);
      opt.step();
      rec.label_loss += terms.label.item();
      rec.alpha_loss += terms.alpha.item();
      rec.beta_loss += terms.beta.item();
      rec.total_loss += terms.total.item();
    }
    const double n = static_cast<double>(steps);
    rec.label_loss /= n;
    rec.alpha_loss /= n;
    rec.beta_loss /= n;
    rec.total_loss /= n;
    if (target_test && !target_test->empty()) {
      rec.target_metric = evaluate(*target_test, result.params, c).value;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    result.report.epochs.push_back(rec);
    if (on_epoch) {
      on_epoch(rec);
    }
  }

  if (c.architecture == Architecture::sasa) {
    result.report.source_structure = mean_structure(source, result.params, c);
    if (!target.empty()) {
      result.report.target_structure = mean_structure(target, result.params, c);
    }
  }
  return result;
}

} // namespace sasa::model
