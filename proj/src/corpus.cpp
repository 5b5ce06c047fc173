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

#include "scs2s/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace scs2s {

namespace fs = std::filesystem;

std::string to_string(Label label) { return label == Label::normal ? "normal" : "attack"; }

std::string to_string(TraceSet set) {
  switch (set) {
    case TraceSet::training: return "training";
    case TraceSet::validation: return "validation";
    case TraceSet::attack: return "attack";
  }
  return "unknown";
}

std::size_t IngestReport::attack_total() const {
  std::size_t n = 0;
  for (const auto& [kind, count] : attack_by_kind) n += count;
  return n;
}

RawCalls parse_calls(std::string_view text, const std::string& origin) {
  RawCalls calls;
  std::size_t pos = 0;
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos == text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && !is_space(text[end])) ++end;
    std::int32_t value = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || value < 1) {
      throw FormatError(origin + ": bad system-call token '" + std::string(first, last) +
                        "' at byte offset " + std::to_string(pos));
    }
    calls.push_back(value);
    pos = end;
  }
  return calls;
}

std::string attack_kind_from_dir(const std::string& dir_name) {
  const auto cut = dir_name.find_last_of('_');
  if (cut == std::string::npos || cut + 1 == dir_name.size()) return dir_name;
  const std::string suffix = dir_name.substr(cut + 1);
  if (!std::all_of(suffix.begin(), suffix.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return dir_name;
  return dir_name.substr(0, cut);
}

namespace {

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) return files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
  std::vector<fs::path> dirs;
  if (!fs::is_directory(dir)) return dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

// Returns false (and records why) when the file is skipped.
bool load_trace(const fs::path& file, Trace& trace, IngestReport& report) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    ++report.skipped_unreadable;
    report.warnings.push_back("unreadable: " + file.string());
    return false;
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    ++report.skipped_unreadable;
    report.warnings.push_back("unreadable: " + file.string());
    return false;
  }
  trace.origin = file.string();
  trace.calls = parse_calls(buf.str(), trace.origin);
  if (trace.calls.empty()) {
    ++report.skipped_empty;
    report.warnings.push_back("empty: " + file.string());
    return false;
  }
  return true;
}

}  // namespace

IngestResult ingest_adfa(const fs::path& root) {
  if (!fs::is_directory(root)) throw InputError("ADFA-LD root is not a directory: " + root.string());
  IngestResult result;
  auto& report = result.report;

  const auto load_normal = [&](const char* sub, TraceSet set, std::size_t& counter) {
    for (const auto& file : sorted_files(root / sub)) {
      Trace t;
      t.label = Label::normal;
      t.set = set;
      if (load_trace(file, t, report)) {
        result.traces.push_back(std::move(t));
        ++counter;
      }
    }
  };
  load_normal("Training_Data_Master", TraceSet::training, report.normal_training);
  load_normal("Validation_Data_Master", TraceSet::validation, report.normal_validation);

  for (const auto& dir : sorted_dirs(root / "Attack_Data_Master")) {
    const std::string kind = attack_kind_from_dir(dir.filename().string());
    for (const auto& file : sorted_files(dir)) {
      Trace t;
      t.label = Label::attack;
      t.kind = kind;
      t.set = TraceSet::attack;
      if (load_trace(file, t, report)) {
        result.traces.push_back(std::move(t));
        ++report.attack_by_kind[kind];
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(RawCalls raw_calls) : raw_(std::move(raw_calls)) {
  std::sort(raw_.begin(), raw_.end());
  raw_.erase(std::unique(raw_.begin(), raw_.end()), raw_.end());
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    if (raw_[i] < 1) throw InputError("system-call numbers must be >= 1");
    index_.emplace(raw_[i], static_cast<Token>(i) + kFirstCall);
  }
}

Vocabulary Vocabulary::build(std::span<const Trace> traces) {
  if (traces.empty()) throw InputError("build_vocab: no traces");
  RawCalls all;
  for (const auto& t : traces) all.insert(all.end(), t.calls.begin(), t.calls.end());
  return Vocabulary(std::move(all));
}

Token Vocabulary::encode(std::int32_t raw) const {
  auto it = index_.find(raw);
  return it == index_.end() ? kUnk : it->second;
}

Sequence Vocabulary::encode(std::span<const std::int32_t> raw) const {
  Sequence out;
  out.reserve(raw.size());
  for (auto r : raw) out.push_back(encode(r));
  return out;
}

std::int32_t Vocabulary::decode(Token token) const {
  if (!is_call(token)) throw InputError("token " + std::to_string(token) + " is not a system call");
  return raw_[static_cast<std::size_t>(token - kFirstCall)];
}

RawCalls Vocabulary::decode(std::span<const Token> tokens) const {
  RawCalls out;
  out.reserve(tokens.size());
  for (auto t : tokens) out.push_back(decode(t));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  const auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint32_t>(raw_.size()));
  for (auto r : raw_) mix(static_cast<std::uint32_t>(r));
  return h;
}

// ---------------------------------------------------------------------------
// Pairs

std::size_t PairReport::train_total() const {
  std::size_t n = 0;
  for (const auto& [len, count] : train_by_length) n += count;
  return n;
}

std::size_t PairReport::test_total() const {
  std::size_t n = 0;
  for (const auto& [len, count] : test_by_length) n += count;
  return n;
}

std::size_t source_length(double ratio, std::size_t window_len) {
  if (window_len < 2) throw InputError("window length must be >= 2");
  const double raw = std::ceil(ratio * static_cast<double>(window_len) - 1e-9);
  const auto n = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(n, window_len - 1);
}

PairSplit make_pairs(std::span<const Trace> traces, const Vocabulary& vocab,
                     const PairOptions& options, Rng& rng) {
  if (options.window_lengths.empty()) throw InputError("make_pairs: no window lengths");
  if (options.split_ratios.empty()) throw InputError("make_pairs: no split ratios");
  if (options.stride < 1) throw InputError("make_pairs: stride must be >= 1");
  for (double r : options.split_ratios)
    if (!(r > 0.0 && r < 1.0)) throw InputError("make_pairs: split ratios must lie in (0,1)");

  PairSplit split;
  const std::size_t shortest =
      *std::min_element(options.window_lengths.begin(), options.window_lengths.end());

  // Trace-level split, stratified by label.
  std::vector<char> in_train(traces.size(), 0);
  for (Label label : {Label::normal, Label::attack}) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < traces.size(); ++i)
      if (traces[i].label == label) ids.push_back(i);
    rng.shuffle(ids);
    const auto n_train = static_cast<std::size_t>(
        std::llround(options.train_fraction * static_cast<double>(ids.size())));
    for (std::size_t k = 0; k < n_train && k < ids.size(); ++k) in_train[ids[k]] = 1;
  }

  for (std::size_t id = 0; id < traces.size(); ++id) {
    const Trace& trace = traces[id];
    if (in_train[id]) ++split.report.train_traces;
    else ++split.report.test_traces;
    if (trace.calls.size() < shortest) {
      ++split.report.traces_too_short;
      continue;
    }
    const Sequence tokens = vocab.encode(trace.calls);
    auto& side = in_train[id] ? split.train : split.test;
    auto& counts = in_train[id] ? split.report.train_by_length : split.report.test_by_length;
    for (std::size_t len : options.window_lengths) {
      if (trace.calls.size() < len) continue;
      for (std::size_t start = 0; start + len <= tokens.size(); start += options.stride) {
        const double ratio = options.split_ratios[rng.below(options.split_ratios.size())];
        const std::size_t cut = source_length(ratio, len);
        SequencePair p;
        p.source.assign(tokens.begin() + start, tokens.begin() + start + cut);
        p.target.assign(tokens.begin() + start + cut, tokens.begin() + start + len);
        p.window_len = len;
        p.label = trace.label;
        p.kind = trace.kind;
        p.set = trace.set;
        p.trace_id = id;
        side.push_back(std::move(p));
        ++counts[len];
      }
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Batching

std::vector<BucketSpec> default_buckets() { return {{8, 8}, {12, 12}, {16, 16}, {24, 24}}; }

Batch make_batch(std::span<const SequencePair> pairs, std::span<const std::size_t> indices,
                 const BucketSpec& bucket, std::size_t bucket_id) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto src_len = static_cast<Eigen::Index>(bucket.max_source);
  const auto tgt_len = static_cast<Eigen::Index>(bucket.max_target) + 1;
  Batch b;
  b.bucket = bucket_id;
  b.pair_index.assign(indices.begin(), indices.end());
  b.source = TokenMatrix::Constant(n, src_len, Vocabulary::kPad);
  b.source_mask = Matrix::Zero(n, src_len);
  b.target_in = TokenMatrix::Constant(n, tgt_len, Vocabulary::kPad);
  b.target_out = TokenMatrix::Constant(n, tgt_len, Vocabulary::kPad);
  b.target_mask = Matrix::Zero(n, tgt_len);
  for (Eigen::Index row = 0; row < n; ++row) {
    const SequencePair& p = pairs[indices[static_cast<std::size_t>(row)]];
    if (p.target.size() > bucket.max_target)
      throw InputError("pair target of length " + std::to_string(p.target.size()) +
                       " does not fit bucket target bound " + std::to_string(bucket.max_target));
    const std::size_t keep = std::min(p.source.size(), bucket.max_source);
    const std::size_t skip = p.source.size() - keep;
    for (std::size_t j = 0; j < keep; ++j) {
      b.source(row, static_cast<Eigen::Index>(j)) = p.source[skip + j];
      b.source_mask(row, static_cast<Eigen::Index>(j)) = 1.0;
    }
    b.target_in(row, 0) = Vocabulary::kBos;
    for (std::size_t j = 0; j < p.target.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      b.target_in(row, col + 1) = p.target[j];
      b.target_out(row, col) = p.target[j];
      b.target_mask(row, col) = 1.0;
    }
    const auto eos = static_cast<Eigen::Index>(p.target.size());
    b.target_out(row, eos) = Vocabulary::kEos;
    b.target_mask(row, eos) = 1.0;
  }
  return b;
}

Batcher::Batcher(std::span<const SequencePair> pairs, std::vector<BucketSpec> buckets,
                 std::size_t batch_size)
    : pairs_(pairs), buckets_(std::move(buckets)), batch_size_(batch_size) {
  if (buckets_.empty()) throw InputError("Batcher: no buckets");
  if (batch_size_ < 1) throw InputError("Batcher: batch size must be >= 1");
  std::stable_sort(buckets_.begin(), buckets_.end(), [](const BucketSpec& a, const BucketSpec& b) {
    return a.max_source + a.max_target < b.max_source + b.max_target;
  });
  members_.assign(buckets_.size(), {});
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    std::size_t chosen = buckets_.size();
    for (std::size_t b = 0; b < buckets_.size(); ++b) {
      if (p.source.size() <= buckets_[b].max_source && p.target.size() <= buckets_[b].max_target) {
        chosen = b;
        break;
      }
    }
    if (chosen == buckets_.size()) {
      // Source too long everywhere: the smallest bucket whose target fits,
      // preferring the largest source bound.
      std::size_t best_src = 0;
      for (std::size_t b = 0; b < buckets_.size(); ++b) {
        if (p.target.size() <= buckets_[b].max_target && buckets_[b].max_source >= best_src &&
            (chosen == buckets_.size() || buckets_[b].max_source > best_src)) {
          chosen = b;
          best_src = buckets_[b].max_source;
        }
      }
      if (chosen == buckets_.size())
        throw InputError("pair " + std::to_string(i) + ": target length " +
                         std::to_string(p.target.size()) + " exceeds every bucket");
      ++truncated_;
    }
    members_[chosen].push_back(i);
  }
}

std::vector<Batch> Batcher::cut(const std::vector<std::vector<std::size_t>>& members) const {
  std::vector<Batch> out;
  for (std::size_t b = 0; b < members.size(); ++b) {
    const auto& ids = members[b];
    for (std::size_t start = 0; start < ids.size(); start += batch_size_) {
      const std::size_t stop = std::min(ids.size(), start + batch_size_);
      out.push_back(make_batch(pairs_, std::span(ids).subspan(start, stop - start), buckets_[b], b));
    }
  }
  return out;
}

std::vector<Batch> Batcher::epoch(Rng& rng) const {
  auto members = members_;
  for (auto& ids : members) rng.shuffle(ids);
  auto batches = cut(members);
  rng.shuffle(batches);
  return batches;
}

std::vector<Batch> Batcher::ordered() const { return cut(members_); }

// ---------------------------------------------------------------------------
// Pairs TSV

namespace {

void write_calls(std::ostream& out, const RawCalls& calls) {
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (i) out << ' ';
    out << calls[i];
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

void write_pairs_tsv(std::ostream& out, std::span<const SequencePair> pairs,
                     const Vocabulary& vocab) {
  for (const auto& p : pairs) {
    write_calls(out, vocab.decode(p.source));
    out << '\t';
    write_calls(out, vocab.decode(p.target));
    out << '\t' << (p.label == Label::normal ? std::string("normal") : "attack:" + p.kind) << '\n';
  }
}

std::vector<SequencePair> read_pairs_tsv(std::istream& in, const Vocabulary& vocab) {
  std::vector<SequencePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    const std::string where = "pairs line " + std::to_string(line_no);
    if (fields.size() != 3) throw FormatError(where + ": expected 3 tab-separated fields");
    SequencePair p;
    p.source = vocab.encode(parse_calls(fields[0], where + " source"));
    p.target = vocab.encode(parse_calls(fields[1], where + " target"));
    if (p.source.empty() || p.target.empty()) throw FormatError(where + ": empty sequence");
    p.window_len = p.source.size() + p.target.size();
    if (fields[2] == "normal") {
      p.label = Label::normal;
    } else if (fields[2].starts_with("attack")) {
      p.label = Label::attack;
      p.set = TraceSet::attack;
      if (fields[2].size() > 7) p.kind = fields[2].substr(7);
    } else {
      throw FormatError(where + ": unknown label '" + fields[2] + "'");
    }
    p.trace_id = line_no;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

RawCalls scan_pairs_tsv_calls(std::istream& in) {
  RawCalls calls;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) throw FormatError("pairs line " + std::to_string(line_no) + ": expected 3 fields");
    for (int f = 0; f < 2; ++f) {
      auto c = parse_calls(fields[static_cast<std::size_t>(f)], "pairs line " + std::to_string(line_no));
      calls.insert(calls.end(), c.begin(), c.end());
    }
  }
  return calls;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  Automaton* current = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;

  const auto fail = [&](const std::string& msg) {
    throw FormatError("synthetic spec line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tok;
    for (std::string w; words >> w;) tok.push_back(w);
    if (tok.empty()) continue;

    if (tok[0] == "automaton") {
      if (current) fail("nested automaton (missing 'end')");
      if (tok.size() < 3) fail("expected: automaton <name> normal|attack [kind]");
      Automaton a;
      a.name = tok[1];
      if (tok[2] == "normal") a.label = Label::normal;
      else if (tok[2] == "attack") a.label = Label::attack;
      else fail("label must be normal or attack");
      a.kind = tok.size() > 3 ? tok[3] : (a.label == Label::attack ? a.name : "");
      spec.automata.push_back(std::move(a));
      current = &spec.automata.back();
    } else if (!current) {
      fail("directive outside an automaton block");
    } else if (tok[0] == "start") {
      if (tok.size() != 2) fail("expected: start <state>");
      current->start = tok[1];
    } else if (tok[0] == "length") {
      if (tok.size() != 3) fail("expected: length <min> <max>");
      try {
        current->min_length = std::stoul(tok[1]);
        current->max_length = std::stoul(tok[2]);
      } catch (const std::exception&) {
        fail("bad length bounds");
      }
      if (current->min_length < 1 || current->max_length < current->min_length)
        fail("length bounds must satisfy 1 <= min <= max");
    } else if (tok[0] == "end") {
      if (current->start.empty()) fail("automaton '" + current->name + "' has no start state");
      current = nullptr;
    } else {
      // <state> -> <state> : <symbol> <prob>
      if (tok.size() != 6 || tok[1] != "->" || tok[3] != ":")
        fail("expected: <state> -> <state> : <symbol> <prob>");
      Automaton::Edge e;
      e.to = tok[2];
      try {
        e.symbol = static_cast<std::int32_t>(std::stol(tok[4]));
        e.prob = std::stod(tok[5]);
      } catch (const std::exception&) {
        fail("bad symbol or probability");
      }
      if (e.symbol < 1) fail("symbols must be >= 1");
      if (!(e.prob > 0.0)) fail("probabilities must be > 0");
      current->edges[tok[0]].push_back(std::move(e));
    }
  }
  if (current) throw FormatError("synthetic spec: automaton '" + current->name + "' missing 'end'");
  if (spec.automata.empty()) throw FormatError("synthetic spec: no automata");

  for (const auto& a : spec.automata) {
    std::set<std::string> states{a.start};
    for (const auto& [from, edges] : a.edges) {
      states.insert(from);
      for (const auto& e : edges) states.insert(e.to);
    }
    for (const auto& s : states) {
      auto it = a.edges.find(s);
      if (it == a.edges.end() || it->second.empty())
        throw FormatError("synthetic spec: automaton '" + a.name + "' state '" + s +
                          "' has no outgoing edges");
    }
  }
  return spec;
}

std::string_view default_synthetic_spec() {
  return R"(# Two processes over a shared 20-call alphabet.
automaton service normal
start idle
length 40 80
idle -> open  : 5   0.6
idle -> poll  : 168 0.4
open -> read  : 3   1.0
read -> read2 : 3   0.5
read -> proc  : 197 0.5
read2 -> proc : 197 1.0
proc -> write : 4   0.8
proc -> stat  : 195 0.2
stat -> write : 4   1.0
write -> close : 6  1.0
close -> idle : 91  0.7
close -> poll : 168 0.3
poll -> time  : 13  0.8
poll -> idle  : 140 0.2
time -> idle  : 162 1.0
end

automaton intrusion attack Synthetic
start probe
length 40 80
probe -> conn  : 102 0.7
probe -> stat  : 195 0.3
stat -> conn   : 102 1.0
conn -> recv   : 3   1.0
recv -> dup    : 63  0.6
recv -> proc   : 197 0.4
dup -> dup2    : 63  1.0
dup2 -> spawn  : 11  1.0
proc -> write  : 4   1.0
write -> spawn : 11  0.5
write -> probe : 6   0.5
spawn -> mem   : 45  1.0
mem -> mem2    : 192 0.7
mem -> exec    : 120 0.3
mem2 -> exec   : 240 1.0
exec -> probe  : 33  0.6
exec -> conn   : 54  0.4
end
)";
}

std::vector<Trace> generate_synthetic(const SyntheticSpec& spec, std::size_t n_traces, Rng& rng) {
  std::vector<Trace> traces;
  for (const auto& a : spec.automata) {
    std::size_t normal_seen = 0;
    for (std::size_t n = 0; n < n_traces; ++n) {
      const std::size_t span = a.max_length - a.min_length + 1;
      const std::size_t length = a.min_length + rng.below(span);
      Trace t;
      t.label = a.label;
      t.kind = a.kind;
      if (a.label == Label::attack) {
        t.set = TraceSet::attack;
      } else {
        t.set = (normal_seen++ % 2 == 0) ? TraceSet::training : TraceSet::validation;
      }
      std::ostringstream origin;
      origin << "synthetic:" << a.name << ":" << n;
      t.origin = origin.str();
      std::string state = a.start;
      std::vector<double> weights;
      while (t.calls.size() < length) {
        const auto& edges = a.edges.at(state);
        weights.clear();
        for (const auto& e : edges) weights.push_back(e.prob);
        const auto& e = edges[edges.size() == 1 ? 0 : rng.categorical(weights)];
        t.calls.push_back(e.symbol);
        state = e.to;
      }
      traces.push_back(std::move(t));
    }
  }
  return traces;
}

void write_adfa_layout(const fs::path& root, std::span<const Trace> traces) {
  fs::create_directories(root / "Training_Data_Master");
  fs::create_directories(root / "Validation_Data_Master");
  fs::create_directories(root / "Attack_Data_Master");
  std::size_t n_train = 0, n_valid = 0;
  std::map<std::string, std::size_t> n_attack;
  for (const auto& t : traces) {
    fs::path file;
    std::ostringstream name;
    if (t.label == Label::attack) {
      const std::string kind = t.kind.empty() ? "Attack" : t.kind;
      const fs::path dir = root / "Attack_Data_Master" / (kind + "_1");
      fs::create_directories(dir);
      name << "UAD-" << kind << "-" << std::setw(4) << std::setfill('0') << ++n_attack[kind] << ".txt";
      file = dir / name.str();
    } else if (t.set == TraceSet::validation) {
      name << "UVD-" << std::setw(4) << std::setfill('0') << ++n_valid << ".txt";
      file = root / "Validation_Data_Master" / name.str();
    } else {
      name << "UTD-" << std::setw(4) << std::setfill('0') << ++n_train << ".txt";
      file = root / "Training_Data_Master" / name.str();
    }
    std::ofstream out(file);
    if (!out) throw FormatError("cannot write " + file.string());
    write_calls(out, t.calls);
    out << '\n';
  }
}

}  // namespace scs2s
