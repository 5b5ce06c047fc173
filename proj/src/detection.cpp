/*
 * Copyright 2026 The scs2s Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "scs2s/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace scs2s {

std::string to_string(Condition c) {
  switch (c) {
    case Condition::target: return "target";
    case Condition::predicted: return "predicted";
    case Condition::extended: return "extended";
  }
  return "unknown";
}

std::string to_string(ClassifierKind k) {
  return k == ClassifierKind::logreg_ngram ? "logreg_ngram" : "gru_pool";
}

ClassifierKind parse_classifier(const std::string& name) {
  if (name == "logreg_ngram" || name == "logreg") return ClassifierKind::logreg_ngram;
  if (name == "gru_pool" || name == "gru") return ClassifierKind::gru_pool;
  throw InputError("unknown classifier '" + name + "' (expected logreg_ngram or gru_pool)");
}

// ---------------------------------------------------------------------------
// n-gram features

std::map<Ngram, double> ngram_counts(const Sequence& seq, std::size_t n_max) {
  std::map<Ngram, double> counts;
  for (std::size_t n = 1; n <= n_max; ++n)
    for (std::size_t i = 0; i + n <= seq.size(); ++i)
      counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                   seq.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1.0;
  return counts;
}

NgramIdf::NgramIdf(std::span<const Sequence> documents, std::size_t n_max) : n_max_(n_max) {
  if (n_max < 1) throw InputError("NgramIdf: n_max must be >= 1");
  std::map<Ngram, std::size_t> df;
  for (const auto& doc : documents)
    for (const auto& [gram, count] : ngram_counts(doc, n_max)) ++df[gram];
  const double n = static_cast<double>(documents.size());
  for (const auto& [gram, d] : df) {
    ids_.emplace(gram, idf_.size());
    idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0);
  }
}

std::optional<std::size_t> NgramIdf::feature(const Ngram& gram) const {
  auto it = ids_.find(gram);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

SparseVector featurize_ngrams(const Sequence& seq, const NgramIdf& idf) {
  SparseVector v;
  for (const auto& [gram, count] : ngram_counts(seq, idf.n_max())) {
    if (auto id = idf.feature(gram)) v.emplace_back(*id, count * idf.idf(*id));
  }
  std::sort(v.begin(), v.end());
  double sq = 0.0;
  for (const auto& [id, w] : v) sq += w * w;
  if (sq > 0.0) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [id, w] : v) w *= inv;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Classifiers

namespace {

double logistic(double x) {
  x = std::clamp(x, -kExpClamp, kExpClamp);
  return 1.0 / (1.0 + std::exp(-x));
}

void require_both_labels(std::span<const LabeledSequence> train) {
  bool normal = false, attack = false;
  for (const auto& s : train) (s.label == Label::normal ? normal : attack) = true;
  if (!normal || !attack) throw InputError("train_classifier: training set holds a single class");
}

class LogRegScorer final : public Scorer {
 public:
  LogRegScorer(std::span<const LabeledSequence> train, const ClassifierOptions& opt)
      : idf_(documents(train), opt.n_max) {
    std::vector<SparseVector> x;
    std::vector<double> y;
    for (const auto& s : train) {
      x.push_back(featurize_ngrams(s.tokens, idf_));
      y.push_back(s.label == Label::attack ? 1.0 : 0.0);
    }
    weights_ = Vector::Zero(static_cast<Eigen::Index>(idf_.size()));
    const double inv_n = 1.0 / static_cast<double>(x.size());
    Vector grad(weights_.size());
    for (std::size_t epoch = 0; epoch < opt.logreg_epochs; ++epoch) {
      grad = opt.logreg_l2 * weights_;
      double grad_b = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double err = (logistic(dot(x[i]) + bias_) - y[i]) * inv_n;
        for (const auto& [id, w] : x[i]) grad[static_cast<Eigen::Index>(id)] += err * w;
        grad_b += err;
      }
      weights_ -= opt.logreg_lr * grad;
      bias_ -= opt.logreg_lr * grad_b;
    }
  }

  double risk(const Sequence& seq) const override {
    return logistic(dot(featurize_ngrams(seq, idf_)) + bias_);
  }

 private:
  static std::vector<Sequence> documents(std::span<const LabeledSequence> train) {
    std::vector<Sequence> docs;
    for (const auto& s : train) docs.push_back(s.tokens);
    return docs;
  }
  double dot(const SparseVector& v) const {
    double s = 0.0;
    for (const auto& [id, w] : v) s += weights_[static_cast<Eigen::Index>(id)] * w;
    return s;
  }

  NgramIdf idf_;
  Vector weights_;
  double bias_ = 0.0;
};

/// Embedding + one GRU layer, mean-pooled over real tokens, logistic head.
class GruPoolScorer final : public Scorer {
 public:
  GruPoolScorer(std::span<const LabeledSequence> train, std::uint64_t seed,
                const ClassifierOptions& opt) {
    Token max_token = Vocabulary::kFirstCall;
    for (const auto& s : train)
      for (Token t : s.tokens) max_token = std::max(max_token, t);
    vocab_ = max_token + 1;
    const auto h = static_cast<Eigen::Index>(opt.gru_hidden);
    embedding_ = store_.add("embedding", vocab_, h);
    cell_ = RecurrentCell::add_to(store_, "gru", CellType::gru, opt.gru_hidden, opt.gru_hidden);
    head_w_ = store_.add("head.w", h, 1);
    head_b_ = store_.add("head.b", 1, 1);
    Rng rng(seed);
    for (auto& slot : store_) fill_uniform(slot.value, rng, -0.1, 0.1);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < opt.gru_epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += opt.gru_batch) {
        const std::size_t stop = std::min(order.size(), start + opt.gru_batch);
        std::vector<const LabeledSequence*> batch;
        for (std::size_t k = start; k < stop; ++k) batch.push_back(&train[order[k]]);
        step(batch, opt.gru_lr);
      }
    }
  }

  double risk(const Sequence& seq) const override {
    if (seq.empty()) return logistic(store_[head_b_].value(0, 0));
    const auto n = static_cast<Eigen::Index>(seq.size());
    TokenMatrix tokens(1, n);
    for (Eigen::Index t = 0; t < n; ++t) tokens(0, t) = clamp_token(seq[static_cast<std::size_t>(t)]);
    Matrix mask = Matrix::Ones(1, n);
    return logistic(forward(tokens, mask, nullptr)(0, 0));
  }

 private:
  Token clamp_token(Token t) const { return t >= 0 && t < vocab_ ? t : Vocabulary::kUnk; }

  struct Cache {
    std::vector<RecurrentCell::Cache> steps;
    Matrix pooled;
  };

  // Returns logits (batch x 1).
  Matrix forward(const TokenMatrix& tokens, const Matrix& mask, Cache* cache) const {
    const Eigen::Index batch = tokens.rows();
    const Matrix& table = store_[embedding_].value;
    Matrix h = Matrix::Zero(batch, table.cols());
    Matrix pooled = Matrix::Zero(batch, table.cols());
    if (cache) cache->steps.resize(static_cast<std::size_t>(tokens.cols()));
    for (Eigen::Index t = 0; t < tokens.cols(); ++t) {
      Matrix x(batch, table.cols());
      for (Eigen::Index b = 0; b < batch; ++b) x.row(b) = table.row(tokens(b, t));
      Matrix m = mask.col(t);
      h = cell_.forward(store_, x, h, &m, cache ? &cache->steps[static_cast<std::size_t>(t)] : nullptr);
      pooled += (h.array().colwise() * m.col(0).array()).matrix();
    }
    const Vector lengths = mask.rowwise().sum();
    for (Eigen::Index b = 0; b < batch; ++b) pooled.row(b) /= std::max(1.0, lengths[b]);
    if (cache) cache->pooled = pooled;
    return (pooled * store_[head_w_].value).array() + store_[head_b_].value(0, 0);
  }

  void step(const std::vector<const LabeledSequence*>& batch, double lr) {
    const auto rows = static_cast<Eigen::Index>(batch.size());
    Eigen::Index cols = 1;
    for (const auto* s : batch) cols = std::max(cols, static_cast<Eigen::Index>(s->tokens.size()));
    TokenMatrix tokens = TokenMatrix::Constant(rows, cols, Vocabulary::kPad);
    Matrix mask = Matrix::Zero(rows, cols);
    Vector y(rows);
    for (Eigen::Index b = 0; b < rows; ++b) {
      const auto& seq = batch[static_cast<std::size_t>(b)]->tokens;
      for (std::size_t t = 0; t < seq.size(); ++t) {
        tokens(b, static_cast<Eigen::Index>(t)) = clamp_token(seq[t]);
        mask(b, static_cast<Eigen::Index>(t)) = 1.0;
      }
      y[b] = batch[static_cast<std::size_t>(b)]->label == Label::attack ? 1.0 : 0.0;
    }
    store_.zero_grad();
    Cache cache;
    const Matrix logits = forward(tokens, mask, &cache);
    Matrix d_logit(rows, 1);
    for (Eigen::Index b = 0; b < rows; ++b)
      d_logit(b, 0) = (logistic(logits(b, 0)) - y[b]) / static_cast<double>(rows);
    store_[head_w_].grad += cache.pooled.transpose() * d_logit;
    store_[head_b_].grad(0, 0) += d_logit.sum();
    Matrix d_pooled = d_logit * store_[head_w_].value.transpose();
    const Vector lengths = mask.rowwise().sum();
    for (Eigen::Index b = 0; b < rows; ++b) d_pooled.row(b) /= std::max(1.0, lengths[b]);

    Matrix d_h = Matrix::Zero(rows, d_pooled.cols());
    for (Eigen::Index t = cols - 1; t >= 0; --t) {
      d_h += (d_pooled.array().colwise() * mask.col(t).array()).matrix();
      Matrix d_x, d_prev;
      cell_.backward(store_, cache.steps[static_cast<std::size_t>(t)], d_h, d_x, d_prev);
      for (Eigen::Index b = 0; b < rows; ++b)
        if (mask(b, t) != 0.0) store_[embedding_].grad.row(tokens(b, t)) += d_x.row(b);
      d_h = std::move(d_prev);
    }
    const double norm = global_grad_norm(store_);
    const double scale = norm > 5.0 ? 5.0 / norm : 1.0;
    for (auto& slot : store_) slot.value -= lr * scale * slot.grad;
  }

  ParamStore store_;
  Token vocab_ = 0;
  std::size_t embedding_ = 0, head_w_ = 0, head_b_ = 0;
  RecurrentCell cell_;
};

}  // namespace

std::unique_ptr<Scorer> train_classifier(ClassifierKind kind, std::span<const LabeledSequence> train,
                                         std::uint64_t seed, const ClassifierOptions& options) {
  require_both_labels(train);
  if (kind == ClassifierKind::logreg_ngram) return std::make_unique<LogRegScorer>(train, options);
  return std::make_unique<GruPoolScorer>(train, seed, options);
}

// ---------------------------------------------------------------------------
// ROC

RocCurve roc_auc(std::span<const ScoredLabel> scores) {
  std::size_t pos = 0, neg = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.risk)) throw InputError("roc_auc: non-finite score");
    (s.label == Label::attack ? pos : neg) += 1;
  }
  if (pos == 0 || neg == 0) throw InputError("roc_auc: both labels are required");

  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredLabel& a, const ScoredLabel& b) { return a.risk > b.risk; });
  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double threshold = sorted[i].risk;
    for (; i < sorted.size() && sorted[i].risk == threshold; ++i)
      (sorted[i].label == Label::attack ? tp : fp) += 1;
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Conditions

ConditionSequences build_conditions(std::span<const SequencePair> pairs,
                                    std::span<const Sequence> predictions) {
  if (pairs.size() != predictions.size())
    throw InputError("build_conditions: predictions not aligned with pairs");
  std::vector<std::size_t> empty;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i].empty()) empty.push_back(i);
  if (!empty.empty()) {
    std::string list;
    for (std::size_t k = 0; k < empty.size() && k < 20; ++k) list += (k ? "," : "") + std::to_string(empty[k]);
    if (empty.size() > 20) list += ",...";
    throw InputError("predicted condition: " + std::to_string(empty.size()) +
                     " pair(s) have empty predictions: " + list);
  }
  ConditionSequences out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    out.target.push_back({p.target, p.label, Condition::target});
    out.predicted.push_back({predictions[i], p.label, Condition::predicted});
    Sequence ext = p.source;
    ext.insert(ext.end(), predictions[i].begin(), predictions[i].end());
    out.extended.push_back({std::move(ext), p.label, Condition::extended});
  }
  return out;
}

std::vector<SequencePair> detection_pairs(std::span<const SequencePair> pairs) {
  std::vector<SequencePair> out;
  for (const auto& p : pairs)
    if (p.label == Label::attack || p.set == TraceSet::validation) out.push_back(p);
  return out;
}

std::vector<Sequence> predict_all(const Seq2Seq& model, std::span<const SequencePair> pairs,
                                  std::size_t extra_len) {
  std::vector<Sequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(model.predict(p.source, p.target.size() + extra_len));
  return out;
}

std::vector<ConditionResult> run_conditions(ClassifierKind kind,
                                            std::span<const SequencePair> train_pairs,
                                            std::span<const Sequence> train_predictions,
                                            std::span<const SequencePair> test_pairs,
                                            std::span<const Sequence> test_predictions,
                                            std::uint64_t seed, const ClassifierOptions& options) {
  const ConditionSequences train = build_conditions(train_pairs, train_predictions);
  const ConditionSequences test = build_conditions(test_pairs, test_predictions);
  std::vector<ConditionResult> results;
  const auto run_one = [&](Condition c, const std::vector<LabeledSequence>& tr,
                           const std::vector<LabeledSequence>& te) {
    const auto scorer = train_classifier(kind, tr, seed, options);
    std::vector<ScoredLabel> scored;
    ConditionResult r;
    r.condition = c;
    for (const auto& s : te) {
      scored.push_back({scorer->risk(s.tokens), s.label});
      (s.label == Label::attack ? r.n_attack : r.n_normal) += 1;
    }
    r.roc = roc_auc(scored);
    results.push_back(std::move(r));
  };
  run_one(Condition::target, train.target, test.target);
  run_one(Condition::predicted, train.predicted, test.predicted);
  run_one(Condition::extended, train.extended, test.extended);
  return results;
}

std::vector<ConditionResult> run_conditions(const Seq2Seq& model, ClassifierKind kind,
                                            std::span<const SequencePair> train_pairs,
                                            std::span<const SequencePair> test_pairs,
                                            std::uint64_t seed, const ClassifierOptions& options) {
  const auto train_pred = predict_all(model, train_pairs);
  const auto test_pred = predict_all(model, test_pairs);
  return run_conditions(kind, train_pairs, train_pred, test_pairs, test_pred, seed, options);
}

}  // namespace scs2s
