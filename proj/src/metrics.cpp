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

#include "scs2s/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace scs2s {

namespace {

using NgramCounts = std::map<std::vector<Token>, std::size_t>;

NgramCounts count_ngrams(const Sequence& seq, std::size_t n) {
  NgramCounts counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i)
    ++counts[std::vector<Token>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace

BleuResult bleu_detail(std::span<const Sequence> candidates, std::span<const Sequence> references,
                       std::size_t max_n) {
  if (candidates.empty()) throw InputError("bleu: empty candidate list");
  if (candidates.size() != references.size())
    throw InputError("bleu: " + std::to_string(candidates.size()) + " candidates vs " +
                     std::to_string(references.size()) + " references");
  if (max_n < 1) throw InputError("bleu: max_n must be >= 1");

  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  BleuResult r;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    r.candidate_length += candidates[k].size();
    r.reference_length += references[k].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts cand = count_ngrams(candidates[k], n);
      const NgramCounts ref = count_ngrams(references[k], n);
      for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) matched[n - 1] += static_cast<double>(std::min(count, it->second));
        total[n - 1] += static_cast<double>(count);
      }
    }
  }
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    const double p = total[n] > 0.0 ? matched[n] / total[n] : 0.0;
    r.precisions.push_back(p);
    if (p <= 0.0) r.zero_precision = true;
    else log_sum += std::log(p);
  }
  if (r.candidate_length == 0) {
    r.brevity_penalty = 0.0;
    r.zero_precision = true;
    return r;
  }
  r.brevity_penalty = std::exp(std::min(
      0.0, 1.0 - static_cast<double>(r.reference_length) / static_cast<double>(r.candidate_length)));
  if (r.zero_precision) return r;
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / static_cast<double>(max_n));
  r.score = std::clamp(r.score, 0.0, 100.0);
  return r;
}

double bleu(std::span<const Sequence> candidates, std::span<const Sequence> references,
            std::size_t max_n) {
  return bleu_detail(candidates, references, max_n).score;
}

std::vector<LengthBleuRow> bleu_by_length(std::span<const SequencePair> pairs,
                                          std::span<const Sequence> predictions, std::size_t max_n) {
  if (pairs.size() != predictions.size())
    throw InputError("bleu_by_length: predictions not aligned with pairs");
  std::map<std::size_t, std::pair<std::vector<Sequence>, std::vector<Sequence>>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto& g = groups[pairs[i].source.size()];
    g.first.push_back(predictions[i]);
    g.second.push_back(pairs[i].target);
  }
  std::vector<LengthBleuRow> rows;
  for (const auto& [len, g] : groups)
    rows.push_back({len, g.first.size(), bleu_detail(g.first, g.second, max_n)});
  return rows;
}

IdfTable::IdfTable(std::span<const Sequence> documents) : documents_(documents.size()) {
  std::map<Token, std::size_t> df;
  for (const auto& doc : documents) {
    Sequence uniq = doc;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (Token t : uniq) ++df[t];
  }
  const double n = static_cast<double>(documents_);
  for (const auto& [t, d] : df) idf_[t] = std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0;
  unseen_ = std::log(1.0 + n) + 1.0;
}

double IdfTable::weight(Token t) const {
  auto it = idf_.find(t);
  return it == idf_.end() ? unseen_ : it->second;
}

IdfTable IdfTable::scaled(double factor) const {
  if (!(factor > 0.0)) throw InputError("IdfTable::scaled: factor must be positive");
  IdfTable out = *this;
  for (auto& [t, w] : out.idf_) w *= factor;
  out.unseen_ *= factor;
  return out;
}

TfIdfVector tfidf_vector(const Sequence& seq, const IdfTable& idf) {
  TfIdfVector v;
  for (Token t : seq) v[t] += 1.0;
  for (auto& [t, w] : v) w *= idf.weight(t);
  return v;
}

double tfidf_similarity(const Sequence& a, const Sequence& b, const IdfTable& idf) {
  const TfIdfVector va = tfidf_vector(a, idf), vb = tfidf_vector(b, idf);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, w] : va) {
    na += w * w;
    auto it = vb.find(t);
    if (it != vb.end()) dot += w * it->second;
  }
  for (const auto& [t, w] : vb) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

VectorSimilarity semantic_similarity(const Seq2Seq& model, const Sequence& a, const Sequence& b) {
  return compare_vectors(model.encode_semantic(a), model.encode_semantic(b));
}

EvalReport evaluate_predictions(const Seq2Seq& model, std::span<const SequencePair> test,
                                std::span<const Sequence> predictions, std::string model_name) {
  if (test.empty()) throw InputError("evaluate: no test pairs");
  if (test.size() != predictions.size()) throw InputError("evaluate: predictions not aligned");
  EvalReport report;
  report.model_name = std::move(model_name);
  report.pairs = test.size();
  std::vector<Sequence> refs;
  refs.reserve(test.size());
  for (const auto& p : test) refs.push_back(p.target);
  report.corpus_bleu = bleu_detail(predictions, refs);
  report.by_length = bleu_by_length(test, predictions);

  const IdfTable idf(refs);
  double tfidf = 0.0, cosine = 0.0, euclid = 0.0;
  std::size_t semantic_n = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    tfidf += tfidf_similarity(predictions[i], refs[i], idf);
    if (predictions[i].empty()) {
      ++report.empty_predictions;
      ++report.degenerate_semantic;
      continue;
    }
    const VectorSimilarity s = semantic_similarity(model, predictions[i], refs[i]);
    if (s.degenerate) ++report.degenerate_semantic;
    cosine += s.cosine;
    euclid += s.euclidean;
    ++semantic_n;
  }
  report.mean_tfidf = tfidf / static_cast<double>(test.size());
  if (semantic_n > 0) {
    report.mean_semantic_cosine = cosine / static_cast<double>(semantic_n);
    report.mean_euclidean = euclid / static_cast<double>(semantic_n);
  }
  return report;
}

EvalReport evaluate_model(const Seq2Seq& model, std::span<const SequencePair> test,
                          std::string model_name, std::size_t extra_len) {
  std::vector<Sequence> predictions;
  predictions.reserve(test.size());
  for (const auto& p : test) predictions.push_back(model.predict(p.source, p.target.size() + extra_len));
  return evaluate_predictions(model, test, predictions, std::move(model_name));
}

}  // namespace scs2s
