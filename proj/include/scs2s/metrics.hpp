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

#ifndef SCS2S_METRICS_HPP
#define SCS2S_METRICS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/model.hpp"

namespace scs2s {

struct BleuResult {
  double score = 0.0;                // 0..100
  std::vector<double> precisions;    // modified n-gram precision, n = 1..max_n
  double brevity_penalty = 0.0;
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  bool zero_precision = false;       // some order had no clipped match
};

/// Corpus BLEU: clipped n-gram counts pooled over the corpus, geometric mean
/// of precisions times exp(min(0, 1 - ref_len / cand_len)), scaled by 100.
/// No smoothing. Throws InputError on an empty or misaligned corpus.
BleuResult bleu_detail(std::span<const Sequence> candidates, std::span<const Sequence> references,
                       std::size_t max_n = 4);
double bleu(std::span<const Sequence> candidates, std::span<const Sequence> references,
            std::size_t max_n = 4);

struct LengthBleuRow {
  std::size_t source_length = 0;
  std::size_t pairs = 0;
  BleuResult result;
};

/// One row per distinct source length, ascending.
std::vector<LengthBleuRow> bleu_by_length(std::span<const SequencePair> pairs,
                                          std::span<const Sequence> predictions,
                                          std::size_t max_n = 4);

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over a document collection.
class IdfTable {
 public:
  IdfTable() = default;
  explicit IdfTable(std::span<const Sequence> documents);

  /// Unseen terms get the df = 0 weight.
  double weight(Token t) const;
  std::size_t documents() const { return documents_; }
  /// Every weight multiplied by `factor` (> 0).
  IdfTable scaled(double factor) const;

 private:
  std::map<Token, double> idf_;
  std::size_t documents_ = 0;
  double unseen_ = 1.0;
};

using TfIdfVector = std::map<Token, double>;

TfIdfVector tfidf_vector(const Sequence& seq, const IdfTable& idf);
/// Cosine of the two TF-IDF vectors; 0 if either is zero.
double tfidf_similarity(const Sequence& a, const Sequence& b, const IdfTable& idf);

/// Encoder final-state vectors of both sequences compared by cosine and
/// Euclidean distance.
VectorSimilarity semantic_similarity(const Seq2Seq& model, const Sequence& a, const Sequence& b);

struct EvalReport {
  std::string model_name;
  std::size_t pairs = 0;
  BleuResult corpus_bleu;
  std::vector<LengthBleuRow> by_length;
  double mean_tfidf = 0.0;
  double mean_semantic_cosine = 0.0;
  double mean_euclidean = 0.0;
  std::size_t degenerate_semantic = 0;
  std::size_t empty_predictions = 0;
};

/// Greedy-decodes every test source (target length + 5 cap) and scores the
/// predictions against the targets.
EvalReport evaluate_model(const Seq2Seq& model, std::span<const SequencePair> test,
                          std::string model_name = "model", std::size_t extra_len = 5);

/// Scores precomputed predictions.
EvalReport evaluate_predictions(const Seq2Seq& model, std::span<const SequencePair> test,
                                std::span<const Sequence> predictions, std::string model_name);

}  // namespace scs2s

#endif  // SCS2S_METRICS_HPP
