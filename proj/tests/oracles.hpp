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

// Independent reference computations used only by the tests. Nothing here
// calls into the code path it checks.

#ifndef SCS2S_TESTS_ORACLES_HPP
#define SCS2S_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/detection.hpp"
#include "scs2s/model.hpp"

namespace scs2s::oracle {

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// Counts every n-gram by enumerating all start positions against every
// position of the other sequence; no maps shared with the library.
inline double brute_bleu(const std::vector<Sequence>& cands, const std::vector<Sequence>& refs,
                         int max_n = 4) {
  double log_p = 0.0;
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    cand_len += static_cast<double>(cands[k].size());
    ref_len += static_cast<double>(refs[k].size());
  }
  for (int n = 1; n <= max_n; ++n) {
    double matched = 0.0, total = 0.0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      const auto& c = cands[k];
      const auto& r = refs[k];
      const auto count_in = [n](const Sequence& s, const Sequence& g, std::size_t at) {
        double cnt = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
          bool eq = true;
          for (int q = 0; q < n; ++q)
            if (s[i + static_cast<std::size_t>(q)] != g[at + static_cast<std::size_t>(q)]) eq = false;
          cnt += eq ? 1.0 : 0.0;
        }
        return cnt;
      };
      if (c.size() < static_cast<std::size_t>(n)) continue;
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= c.size(); ++i) {
        // Each distinct n-gram is scored once, at its first occurrence.
        bool first = true;
        for (std::size_t j = 0; j < i && first; ++j) {
          bool eq = true;
          for (int q = 0; q < n; ++q)
            if (c[j + static_cast<std::size_t>(q)] != c[i + static_cast<std::size_t>(q)]) eq = false;
          if (eq) first = false;
        }
        if (!first) continue;
        const double in_cand = count_in(c, c, i);
        const double in_ref = count_in(r, c, i);
        matched += std::min(in_cand, in_ref);
        total += in_cand;
      }
    }
    if (total == 0.0 || matched == 0.0) return 0.0;
    log_p += std::log(matched / total);
  }
  if (cand_len == 0.0) return 0.0;
  const double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return 100.0 * bp * std::exp(log_p / max_n);
}

// P(risk_pos > risk_neg) + 0.5 P(tie), by enumerating every pair.
inline double pairwise_auc(const std::vector<ScoredLabel>& s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : s) {
    if (p.label != Label::attack) continue;
    for (const auto& q : s) {
      if (q.label != Label::normal) continue;
      pairs += 1.0;
      if (p.risk > q.risk) wins += 1.0;
      else if (p.risk == q.risk) wins += 0.5;
    }
  }
  return wins / pairs;
}

}  // namespace scs2s::oracle

#endif  // SCS2S_TESTS_ORACLES_HPP
