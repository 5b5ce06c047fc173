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

#ifndef SCS2S_CORPUS_HPP
#define SCS2S_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "scs2s/numeric.hpp"

namespace scs2s {

using Token = std::int32_t;
using Sequence = std::vector<Token>;
using RawCalls = std::vector<std::int32_t>;

enum class Label { normal = 0, attack = 1 };

/// Which part of the ADFA-LD layout a trace came from.
enum class TraceSet { training, validation, attack };

std::string to_string(Label label);
std::string to_string(TraceSet set);

struct Trace {
  RawCalls calls;
  Label label = Label::normal;
  std::string kind;  // attack family, empty for normal traces
  TraceSet set = TraceSet::training;
  std::string origin;
};

struct IngestReport {
  std::size_t normal_training = 0;
  std::size_t normal_validation = 0;
  std::map<std::string, std::size_t> attack_by_kind;
  std::size_t skipped_empty = 0;
  std::size_t skipped_unreadable = 0;
  std::vector<std::string> warnings;

  std::size_t attack_total() const;
};

struct IngestResult {
  std::vector<Trace> traces;
  IngestReport report;
};

/// Parses whitespace-separated positive decimal integers. Throws FormatError
/// naming `origin` and the byte offset of the first bad token.
RawCalls parse_calls(std::string_view text, const std::string& origin);

/// Reads Training_Data_Master/, Validation_Data_Master/ and
/// Attack_Data_Master/<Kind>_<n>/ under `root`. Files are visited in sorted
/// path order. Empty and unreadable files are skipped and counted.
IngestResult ingest_adfa(const std::filesystem::path& root);

/// "Hydra_FTP_3" -> "Hydra_FTP".
std::string attack_kind_from_dir(const std::string& dir_name);

/// Raw call numbers <-> dense token ids. Specials occupy 0..3; raw calls are
/// assigned ascending from 4.
class Vocabulary {
 public:
  static constexpr Token kPad = 0;
  static constexpr Token kBos = 1;
  static constexpr Token kEos = 2;
  static constexpr Token kUnk = 3;
  static constexpr Token kFirstCall = 4;

  Vocabulary() = default;
  /// Any order, duplicates allowed.
  explicit Vocabulary(RawCalls raw_calls);
  static Vocabulary build(std::span<const Trace> traces);

  Token encode(std::int32_t raw) const;
  Sequence encode(std::span<const std::int32_t> raw) const;
  /// Throws InputError for special or out-of-range tokens.
  std::int32_t decode(Token token) const;
  RawCalls decode(std::span<const Token> tokens) const;

  bool is_call(Token token) const { return token >= kFirstCall && token < size(); }
  /// Number of distinct raw calls (m).
  std::size_t call_count() const { return raw_.size(); }
  /// call_count() + 4.
  Token size() const { return static_cast<Token>(raw_.size()) + kFirstCall; }
  const RawCalls& raw_calls() const { return raw_; }
  /// FNV-1a over the ascending raw calls; identifies the token assignment.
  std::uint64_t hash() const;

 private:
  RawCalls raw_;
  std::unordered_map<std::int32_t, Token> index_;
};

struct SequencePair {
  Sequence source;
  Sequence target;
  std::size_t window_len = 0;
  Label label = Label::normal;
  std::string kind;
  TraceSet set = TraceSet::training;
  std::size_t trace_id = 0;  // index into the trace list the pair came from
};

struct PairOptions {
  std::vector<std::size_t> window_lengths{10, 12, 15, 18, 20, 22, 25, 30};
  std::vector<double> split_ratios{0.4, 0.5, 0.6, 0.7};
  std::size_t stride = 10;
  double train_fraction = 0.8;
};

struct PairReport {
  std::map<std::size_t, std::size_t> train_by_length;
  std::map<std::size_t, std::size_t> test_by_length;
  std::size_t traces_too_short = 0;  // shorter than the smallest window
  std::size_t train_traces = 0;
  std::size_t test_traces = 0;

  std::size_t train_total() const;
  std::size_t test_total() const;
};

struct PairSplit {
  std::vector<SequencePair> train;
  std::vector<SequencePair> test;
  PairReport report;
};

/// Length of the source part of a window of `window_len` cut at `ratio`:
/// ceil(ratio * window_len), kept inside [1, window_len - 1].
std::size_t source_length(double ratio, std::size_t window_len);

/// Slides each window length over each trace and cuts every window at a
/// ratio drawn from `split_ratios`. Traces (not windows) are split into
/// train/test, stratified by label, so no trace feeds both sides.
PairSplit make_pairs(std::span<const Trace> traces, const Vocabulary& vocab,
                     const PairOptions& options, Rng& rng);

struct BucketSpec {
  std::size_t max_source = 0;
  std::size_t max_target = 0;
};

std::vector<BucketSpec> default_buckets();

struct Batch {
  TokenMatrix source;      // batch x max_source, PAD-filled
  Matrix source_mask;      // 1 on real tokens
  TokenMatrix target_in;   // batch x (max_target + 1), BOS-prefixed
  TokenMatrix target_out;  // batch x (max_target + 1), EOS-suffixed
  Matrix target_mask;      // 0 exactly at PAD positions of target_out
  std::size_t bucket = 0;
  std::vector<std::size_t> pair_index;

  Eigen::Index size() const { return source.rows(); }
};

/// Pads the listed pairs to the given bucket bounds. Sources longer than
/// `bucket.max_source` keep their most recent tokens.
Batch make_batch(std::span<const SequencePair> pairs, std::span<const std::size_t> indices,
                 const BucketSpec& bucket, std::size_t bucket_id = 0);

/// Assigns pairs to the smallest bucket that fits and cuts batches.
class Batcher {
 public:
  Batcher(std::span<const SequencePair> pairs, std::vector<BucketSpec> buckets,
          std::size_t batch_size = 64);

  /// Pairs shuffled within each bucket, then the batch order shuffled.
  std::vector<Batch> epoch(Rng& rng) const;
  /// Input order, no shuffling.
  std::vector<Batch> ordered() const;

  const std::vector<std::vector<std::size_t>>& assignments() const { return members_; }
  /// Pairs whose source exceeded every bucket and will be front-truncated.
  std::size_t truncated() const { return truncated_; }
  std::size_t batch_size() const { return batch_size_; }

 private:
  std::vector<Batch> cut(const std::vector<std::vector<std::size_t>>& members) const;

  std::span<const SequencePair> pairs_;
  std::vector<BucketSpec> buckets_;
  std::size_t batch_size_;
  std::vector<std::vector<std::size_t>> members_;
  std::size_t truncated_ = 0;
};

/// Pairs TSV: `source<TAB>target<TAB>label`, raw call numbers space-separated,
/// label `normal` or `attack:<kind>`.
void write_pairs_tsv(std::ostream& out, std::span<const SequencePair> pairs,
                     const Vocabulary& vocab);
/// Lines starting with '#' are skipped.
std::vector<SequencePair> read_pairs_tsv(std::istream& in, const Vocabulary& vocab);
/// Raw calls of every pair, for building a vocabulary from a TSV alone.
RawCalls scan_pairs_tsv_calls(std::istream& in);

/// Probabilistic finite automata that emit one call per transition.
struct Automaton {
  struct Edge {
    std::string to;
    std::int32_t symbol = 0;
    double prob = 0.0;
  };
  std::string name;
  Label label = Label::normal;
  std::string kind;
  std::string start;
  std::size_t min_length = 1;
  std::size_t max_length = 1;
  std::map<std::string, std::vector<Edge>> edges;
};

struct SyntheticSpec {
  std::vector<Automaton> automata;
};

/// Text format, one directive per line, '#' comments:
///
///   automaton <name> normal|attack [kind]
///   start <state>
///   length <min> <max>
///   <state> -> <state> : <symbol> <prob>
///   end
///
/// Throws FormatError on syntax errors and on any reachable-by-name state
/// without outgoing edges.
SyntheticSpec parse_synthetic_spec(std::string_view text);

/// Two automata over a 20-call alphabet used by the desk-scale runs.
std::string_view default_synthetic_spec();

/// `n_traces` traces per automaton, lengths uniform in [min, max].
/// Normal traces alternate between the training and validation sets.
std::vector<Trace> generate_synthetic(const SyntheticSpec& spec, std::size_t n_traces, Rng& rng);

/// Writes traces in the ADFA-LD directory layout understood by ingest_adfa.
void write_adfa_layout(const std::filesystem::path& root, std::span<const Trace> traces);

}  // namespace scs2s

#endif  // SCS2S_CORPUS_HPP
