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

#ifndef SCS2S_DETECTION_HPP
#define SCS2S_DETECTION_HPP

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/model.hpp"

namespace scs2s {

enum class Condition { target, predicted, extended };
std::string to_string(Condition c);

struct LabeledSequence {
  Sequence tokens;
  Label label = Label::normal;
  Condition condition = Condition::target;
};

using Ngram = std::vector<Token>;
/// Sorted by feature id.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// Raw counts of every 1..n_max-gram.
std::map<Ngram, double> ngram_counts(const Sequence& seq, std::size_t n_max);

/// n-gram feature index with smoothed IDF weights, built on a training split.
class NgramIdf {
 public:
  NgramIdf(std::span<const Sequence> documents, std::size_t n_max);
  std::optional<std::size_t> feature(const Ngram& gram) const;
  double idf(std::size_t feature) const { return idf_[feature]; }
  std::size_t size() const { return idf_.size(); }
  std::size_t n_max() const { return n_max_; }

 private:
  std::size_t n_max_;
  std::map<Ngram, std::size_t> ids_;
  std::vector<double> idf_;
};

/// TF-IDF weighted n-gram counts, L2-normalized. Unseen n-grams are dropped.
SparseVector featurize_ngrams(const Sequence& seq, const NgramIdf& idf);

enum class ClassifierKind { logreg_ngram, gru_pool };
std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& name);

struct ClassifierOptions {
  std::size_t n_max = 3;
  std::size_t logreg_epochs = 300;
  double logreg_lr = 1.0;
  double logreg_l2 = 1e-4;
  std::size_t gru_hidden = 16;
  std::size_t gru_epochs = 8;
  std::size_t gru_batch = 32;
  double gru_lr = 0.5;
};

/// Maps a sequence to an attack risk in [0, 1].
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double risk(const Sequence& seq) const = 0;
};

/// Throws InputError unless both labels are present.
std::unique_ptr<Scorer> train_classifier(ClassifierKind kind, std::span<const LabeledSequence> train,
                                         std::uint64_t seed, const ClassifierOptions& options = {});

struct RocPoint {
  double threshold = 0.0;  // +inf for the (0,0) origin
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct ScoredLabel {
  double risk = 0.0;
  Label label = Label::normal;
};

/// Threshold sweep over the distinct scores, highest first; tied scores move
/// both rates at once, so ties contribute half credit. AUC by trapezoid.
RocCurve roc_auc(std::span<const ScoredLabel> scores);

struct ConditionResult {
  Condition condition = Condition::target;
  RocCurve roc;
  std::size_t n_normal = 0;
  std::size_t n_attack = 0;
};

struct ConditionSequences {
  std::vector<LabeledSequence> target, predicted, extended;
};

/// target = gold target, predicted = model prediction from the source,
/// extended = source followed by the prediction. Throws InputError listing
/// the pairs whose prediction is empty.
ConditionSequences build_conditions(std::span<const SequencePair> pairs,
                                    std::span<const Sequence> predictions);

/// Attack windows plus normal windows from the validation set; normal
/// training-set windows are left to the sequence model.
std::vector<SequencePair> detection_pairs(std::span<const SequencePair> pairs);

/// Predicts every pair (greedy, at most target length + extra_len tokens).
std::vector<Sequence> predict_all(const Seq2Seq& model, std::span<const SequencePair> pairs,
                                  std::size_t extra_len = 0);

/// Trains one classifier per condition on the training pairs' sequences and
/// scores the test pairs' sequences.
std::vector<ConditionResult> run_conditions(const Seq2Seq& model, ClassifierKind kind,
                                            std::span<const SequencePair> train_pairs,
                                            std::span<const SequencePair> test_pairs,
                                            std::uint64_t seed,
                                            const ClassifierOptions& options = {});

/// Same, from precomputed predictions.
std::vector<ConditionResult> run_conditions(ClassifierKind kind,
                                            std::span<const SequencePair> train_pairs,
                                            std::span<const Sequence> train_predictions,
                                            std::span<const SequencePair> test_pairs,
                                            std::span<const Sequence> test_predictions,
                                            std::uint64_t seed,
                                            const ClassifierOptions& options = {});

}  // namespace scs2s

#endif  // SCS2S_DETECTION_HPP
