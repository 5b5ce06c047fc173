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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "scs2s/corpus.hpp"

namespace scs2s {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scs2s_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

Trace make_trace(RawCalls calls, Label label = Label::normal, std::string kind = "") {
  Trace t;
  t.calls = std::move(calls);
  t.label = label;
  t.kind = std::move(kind);
  t.set = label == Label::attack ? TraceSet::attack : TraceSet::training;
  return t;
}

TEST(ParseCalls, WhitespaceSeparatedIntegers) {
  EXPECT_EQ(parse_calls("6 6 63 6", "t"), (RawCalls{6, 6, 63, 6}));
  EXPECT_EQ(parse_calls("  1\t2\r\n3\n", "t"), (RawCalls{1, 2, 3}));
  EXPECT_TRUE(parse_calls("", "t").empty());
}

TEST(ParseCalls, BadTokenNamesFileAndOffset) {
  try {
    parse_calls("6 6 x3 6", "trace.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("trace.txt"), std::string::npos);
    EXPECT_NE(msg.find("offset 4"), std::string::npos);
  }
  EXPECT_THROW(parse_calls("0", "t"), FormatError);
  EXPECT_THROW(parse_calls("-3", "t"), FormatError);
}

TEST(Ingest, LayoutCountsAndKinds) {
  const fs::path root = fresh_dir("layout");
  write_file(root / "Training_Data_Master/UTD-0001.txt", "6 6 63 6\n");
  write_file(root / "Training_Data_Master/UTD-0002.txt", "");
  write_file(root / "Validation_Data_Master/UVD-0001.txt", "3 4 5");
  write_file(root / "Attack_Data_Master/Hydra_FTP_1/UAD-Hydra-FTP-1-1.txt", "102 3");
  write_file(root / "Attack_Data_Master/Hydra_FTP_2/UAD-Hydra-FTP-2-1.txt", "102 4");
  write_file(root / "Attack_Data_Master/Web_Shell_1/UAD-WS1-1.txt", "11 45");
  const auto r = ingest_adfa(root);
  EXPECT_EQ(r.report.normal_training, 1u);
  EXPECT_EQ(r.report.normal_validation, 1u);
  EXPECT_EQ(r.report.skipped_empty, 1u);
  EXPECT_EQ(r.report.attack_by_kind.at("Hydra_FTP"), 2u);
  EXPECT_EQ(r.report.attack_by_kind.at("Web_Shell"), 1u);
  EXPECT_EQ(r.report.attack_total(), 3u);
  ASSERT_EQ(r.traces.size(), 5u);
  EXPECT_EQ(r.traces[0].calls, (RawCalls{6, 6, 63, 6}));
  EXPECT_EQ(r.traces[0].set, TraceSet::training);
  EXPECT_EQ(r.traces[2].label, Label::attack);
  EXPECT_EQ(r.traces[2].kind, "Hydra_FTP");
}

TEST(Ingest, BadTokenIsAFormatError) {
  const fs::path root = fresh_dir("bad");
  write_file(root / "Training_Data_Master/UTD-0001.txt", "6 six");
  EXPECT_THROW(ingest_adfa(root), FormatError);
  EXPECT_THROW(ingest_adfa(root / "missing"), InputError);
}

TEST(Ingest, AttackKindFromDirectory) {
  EXPECT_EQ(attack_kind_from_dir("Hydra_FTP_3"), "Hydra_FTP");
  EXPECT_EQ(attack_kind_from_dir("Meterpreter_10"), "Meterpreter");
  EXPECT_EQ(attack_kind_from_dir("Adduser"), "Adduser");
}

TEST(Vocab, AscendingAssignment) {
  const std::vector<Trace> traces{make_trace({102, 6}), make_trace({3, 6, 6})};
  const Vocabulary v = Vocabulary::build(traces);
  EXPECT_EQ(v.call_count(), 3u);
  EXPECT_EQ(v.encode(3), 4);
  EXPECT_EQ(v.encode(6), 5);
  EXPECT_EQ(v.encode(102), 6);
  EXPECT_EQ(v.encode(999), Vocabulary::kUnk);
  EXPECT_EQ(v.size(), 7);
  EXPECT_EQ(v.decode(v.encode(RawCalls{102, 3, 6})), (RawCalls{102, 3, 6}));
  EXPECT_THROW(v.decode(Vocabulary::kEos), InputError);
  EXPECT_THROW(Vocabulary::build(std::vector<Trace>{}), InputError);
}

TEST(Vocab, HashDependsOnAssignmentOnly) {
  const Vocabulary a(RawCalls{3, 6, 102}), b(RawCalls{102, 6, 3, 3}), c(RawCalls{3, 6, 103});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST(SourceLength, CeilingOfRatio) {
  EXPECT_EQ(source_length(0.5, 10), 5u);
  EXPECT_EQ(source_length(0.4, 12), 5u);   // ceil(4.8)
  EXPECT_EQ(source_length(0.7, 10), 7u);   // 0.7*10 rounds just above 7 in binary
  EXPECT_EQ(source_length(0.6, 25), 15u);
  EXPECT_EQ(source_length(0.01, 10), 1u);
  EXPECT_EQ(source_length(0.99, 10), 9u);
}

TEST(MakePairs, SlidingWindowExample) {
  RawCalls calls;
  for (int i = 1; i <= 12; ++i) calls.push_back(i);
  const std::vector<Trace> traces{make_trace(calls)};
  const Vocabulary v = Vocabulary::build(traces);
  PairOptions opt;
  opt.window_lengths = {10};
  opt.split_ratios = {0.5};
  opt.stride = 2;
  opt.train_fraction = 1.0;
  Rng rng(1);
  const PairSplit s = make_pairs(traces, v, opt, rng);
  ASSERT_EQ(s.train.size(), 2u);
  EXPECT_TRUE(s.test.empty());
  EXPECT_EQ(v.decode(s.train[0].source), (RawCalls{1, 2, 3, 4, 5}));
  EXPECT_EQ(v.decode(s.train[0].target), (RawCalls{6, 7, 8, 9, 10}));
  EXPECT_EQ(v.decode(s.train[1].source), (RawCalls{3, 4, 5, 6, 7}));
  EXPECT_EQ(v.decode(s.train[1].target), (RawCalls{8, 9, 10, 11, 12}));
}

TEST(MakePairs, ShortTraceContributesNothing) {
  const std::vector<Trace> traces{make_trace({1, 2, 3, 4, 5, 6, 7, 8, 9})};
  const Vocabulary v = Vocabulary::build(traces);
  PairOptions opt;
  opt.window_lengths = {10};
  Rng rng(1);
  const PairSplit s = make_pairs(traces, v, opt, rng);
  EXPECT_TRUE(s.train.empty());
  EXPECT_TRUE(s.test.empty());
  EXPECT_EQ(s.report.traces_too_short, 1u);
}

TEST(MakePairs, RejectsBadOptions) {
  const std::vector<Trace> traces{make_trace({1, 2, 3})};
  const Vocabulary v = Vocabulary::build(traces);
  Rng rng(1);
  PairOptions opt;
  opt.stride = 0;
  EXPECT_THROW(make_pairs(traces, v, opt, rng), InputError);
  opt = PairOptions{};
  opt.split_ratios = {1.0};
  EXPECT_THROW(make_pairs(traces, v, opt, rng), InputError);
}

class PairInvariants : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(7);
    traces = generate_synthetic(parse_synthetic_spec(default_synthetic_spec()), 40, rng);
    vocab = Vocabulary::build(traces);
    opt.stride = 3;
    split = make_pairs(traces, vocab, opt, rng);
  }
  std::vector<Trace> traces;
  Vocabulary vocab;
  PairOptions opt;
  PairSplit split;
};

TEST_F(PairInvariants, WindowsDecodeToTheRawTrace) {
  for (const auto* side : {&split.train, &split.test}) {
    for (const auto& p : *side) {
      RawCalls window = vocab.decode(p.source);
      const RawCalls tail = vocab.decode(p.target);
      window.insert(window.end(), tail.begin(), tail.end());
      const RawCalls& calls = traces[p.trace_id].calls;
      const auto it = std::search(calls.begin(), calls.end(), window.begin(), window.end());
      ASSERT_NE(it, calls.end());
      EXPECT_EQ(p.window_len, window.size());
    }
  }
}

TEST_F(PairInvariants, SplitLengthsComeFromTheRatioSet) {
  for (const auto* side : {&split.train, &split.test}) {
    for (const auto& p : *side) {
      bool ok = false;
      for (double r : opt.split_ratios) {
        const auto n = static_cast<std::size_t>(std::ceil(r * static_cast<double>(p.window_len) - 1e-9));
        ok = ok || (p.source.size() == n && p.target.size() == p.window_len - n);
      }
      EXPECT_TRUE(ok) << p.source.size() << "|" << p.target.size();
      for (Token t : p.source) EXPECT_GE(t, Vocabulary::kFirstCall);
      for (Token t : p.target) EXPECT_GE(t, Vocabulary::kFirstCall);
    }
  }
}

TEST_F(PairInvariants, NoTraceFeedsBothSides) {
  std::set<std::size_t> train_ids, test_ids;
  for (const auto& p : split.train) train_ids.insert(p.trace_id);
  for (const auto& p : split.test) test_ids.insert(p.trace_id);
  for (auto id : train_ids) EXPECT_FALSE(test_ids.contains(id));
  EXPECT_FALSE(train_ids.empty());
  EXPECT_FALSE(test_ids.empty());
  EXPECT_EQ(split.report.train_total(), split.train.size());
  EXPECT_EQ(split.report.test_total(), split.test.size());
  EXPECT_EQ(split.report.train_traces, 64u);  // 80% of 40 per label
  EXPECT_EQ(split.report.test_traces, 16u);
}

TEST_F(PairInvariants, EveryPairLandsInExactlyOneBucket) {
  const Batcher batcher(split.train, default_buckets(), 64);
  std::vector<int> seen(split.train.size(), 0);
  std::size_t total = 0;
  for (const auto& members : batcher.assignments()) {
    total += members.size();
    for (auto i : members) ++seen[i];
  }
  EXPECT_EQ(total, split.train.size());
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(batcher.truncated(), 0u);
}

std::vector<SequencePair> pairs_with_sources(std::vector<std::size_t> lengths) {
  std::vector<SequencePair> out;
  for (auto n : lengths) {
    SequencePair p;
    for (std::size_t i = 0; i < n; ++i) p.source.push_back(static_cast<Token>(4 + i));
    p.target = {9, 10, 11};
    p.window_len = n + 3;
    out.push_back(p);
  }
  return out;
}

TEST(Batching, PadsToBucketBoundsWithMask) {
  const auto pairs = pairs_with_sources({5, 6});
  const Batcher batcher(pairs, {{8, 8}}, 64);
  const auto batches = batcher.ordered();
  ASSERT_EQ(batches.size(), 1u);
  const Batch& b = batches[0];
  EXPECT_EQ(b.source.cols(), 8);
  EXPECT_EQ(b.target_in.cols(), 9);
  EXPECT_EQ(b.source_mask.row(0).sum(), 5.0);
  EXPECT_EQ(b.source_mask.row(1).sum(), 6.0);
  EXPECT_EQ(b.source(0, 5), Vocabulary::kPad);
  EXPECT_EQ(b.target_in(0, 0), Vocabulary::kBos);
  EXPECT_EQ(b.target_in(0, 1), 9);
  EXPECT_EQ(b.target_out(0, 3), Vocabulary::kEos);
  for (Eigen::Index r = 0; r < b.size(); ++r)
    for (Eigen::Index c = 0; c < b.target_out.cols(); ++c)
      EXPECT_EQ(b.target_mask(r, c) == 0.0, b.target_out(r, c) == Vocabulary::kPad);
}

TEST(Batching, BatchSizesFollowArithmetic) {
  const auto pairs = pairs_with_sources(std::vector<std::size_t>(130, 4));
  const Batcher batcher(pairs, default_buckets(), 64);
  const auto batches = batcher.ordered();
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 64);
  EXPECT_EQ(batches[1].size(), 64);
  EXPECT_EQ(batches[2].size(), 2);
}

TEST(Batching, EpochIsSeeded) {
  const auto pairs = pairs_with_sources(std::vector<std::size_t>(200, 4));
  const Batcher batcher(pairs, default_buckets(), 16);
  Rng a(5), b(5), c(6);
  const auto ea = batcher.epoch(a), eb = batcher.epoch(b), ec = batcher.epoch(c);
  ASSERT_EQ(ea.size(), eb.size());
  bool differs = false;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    EXPECT_EQ(ea[i].pair_index, eb[i].pair_index);
    EXPECT_EQ(ea[i].source, eb[i].source);
    differs = differs || ea[i].pair_index != ec[i].pair_index;
  }
  EXPECT_TRUE(differs);
}

TEST(Batching, OversizeSourceKeepsMostRecentCalls) {
  const auto pairs = pairs_with_sources({10});
  const Batcher batcher(pairs, {{8, 8}}, 4);
  EXPECT_EQ(batcher.truncated(), 1u);
  const Batch b = batcher.ordered()[0];
  EXPECT_EQ(b.source(0, 0), 6);   // tokens 4..13, first two dropped
  EXPECT_EQ(b.source(0, 7), 13);
  EXPECT_EQ(b.target_out(0, 0), 9);
}

TEST(Batching, OversizeTargetIsRejected) {
  std::vector<SequencePair> pairs(1);
  pairs[0].source = {4};
  pairs[0].target = Sequence(9, 5);
  EXPECT_THROW(Batcher(pairs, {{8, 8}}, 4), InputError);
}

TEST(PairsTsv, RoundTrip) {
  const Vocabulary v(RawCalls{3, 6, 63, 102});
  std::vector<SequencePair> pairs(2);
  pairs[0].source = v.encode(RawCalls{6, 6, 63});
  pairs[0].target = v.encode(RawCalls{6});
  pairs[1].source = v.encode(RawCalls{102});
  pairs[1].target = v.encode(RawCalls{3, 3});
  pairs[1].label = Label::attack;
  pairs[1].kind = "Hydra_FTP";
  std::stringstream io;
  write_pairs_tsv(io, pairs, v);
  EXPECT_EQ(io.str(), "6 6 63\t6\tnormal\n102\t3 3\tattack:Hydra_FTP\n");
  const auto back = read_pairs_tsv(io, v);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].source, pairs[0].source);
  EXPECT_EQ(back[1].target, pairs[1].target);
  EXPECT_EQ(back[1].label, Label::attack);
  EXPECT_EQ(back[1].kind, "Hydra_FTP");
  EXPECT_EQ(back[0].window_len, 4u);
}

TEST(PairsTsv, MalformedLinesAreFormatErrors) {
  const Vocabulary v(RawCalls{3});
  std::stringstream two_fields("3\t3\n");
  EXPECT_THROW(read_pairs_tsv(two_fields, v), FormatError);
  std::stringstream bad_label("3\t3\tweird\n");
  EXPECT_THROW(read_pairs_tsv(bad_label, v), FormatError);
  std::stringstream comment("# header\n3\t3\tnormal\n");
  EXPECT_EQ(read_pairs_tsv(comment, v).size(), 1u);
}

constexpr const char* kCycleSpec = R"(
automaton cycle normal
start A
length 9 9
A -> B : 1 1.0
B -> C : 2 1.0
C -> A : 3 1.0
end
)";

TEST(Synthetic, DeterministicCycle) {
  Rng rng(1);
  const auto traces = generate_synthetic(parse_synthetic_spec(kCycleSpec), 2, rng);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].calls, (RawCalls{1, 2, 3, 1, 2, 3, 1, 2, 3}));
  EXPECT_EQ(traces[0].set, TraceSet::training);
  EXPECT_EQ(traces[1].set, TraceSet::validation);
}

TEST(Synthetic, SeedReproducesCorpus) {
  const auto spec = parse_synthetic_spec(default_synthetic_spec());
  Rng a(7), b(7);
  const auto ta = generate_synthetic(spec, 30, a), tb = generate_synthetic(spec, 30, b);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i].calls, tb[i].calls);
  std::set<std::int32_t> alphabet;
  for (const auto& t : ta) alphabet.insert(t.calls.begin(), t.calls.end());
  EXPECT_LE(alphabet.size(), 20u);
}

TEST(Synthetic, StateWithoutEdgesIsAnError) {
  EXPECT_THROW(parse_synthetic_spec("automaton a normal\nstart A\nA -> B : 1 1.0\nend\n"), FormatError);
  EXPECT_THROW(parse_synthetic_spec("automaton a normal\nstart A\nA -> A : 1 1.0\n"), FormatError);
  EXPECT_THROW(parse_synthetic_spec("start A\n"), FormatError);
  EXPECT_THROW(parse_synthetic_spec("automaton a normal\nstart A\nA -> A : 1 zero\nend\n"), FormatError);
}

TEST(Synthetic, DisjointBigramsSeparatePerfectly) {
  const auto spec = parse_synthetic_spec(R"(
automaton good normal
start A
length 20 40
A -> B : 1 0.5
A -> A : 2 0.5
B -> A : 3 1.0
end
automaton bad attack X
start P
length 20 40
P -> Q : 4 0.5
P -> P : 5 0.5
Q -> P : 6 1.0
end
)");
  Rng rng(3);
  const auto traces = generate_synthetic(spec, 50, rng);
  // Bigram presence: risk is the share of bigrams unseen in the normal set.
  std::set<std::pair<int, int>> normal_bigrams;
  for (const auto& t : traces)
    if (t.label == Label::normal && t.set == TraceSet::training)
      for (std::size_t i = 0; i + 1 < t.calls.size(); ++i) normal_bigrams.insert({t.calls[i], t.calls[i + 1]});
  std::vector<ScoredLabel> scored;
  for (const auto& t : traces) {
    if (t.label == Label::normal && t.set == TraceSet::training) continue;
    double unseen = 0;
    for (std::size_t i = 0; i + 1 < t.calls.size(); ++i)
      unseen += normal_bigrams.contains({t.calls[i], t.calls[i + 1]}) ? 0.0 : 1.0;
    scored.push_back({unseen / static_cast<double>(t.calls.size() - 1), t.label});
  }
  EXPECT_EQ(oracle::pairwise_auc(scored), 1.0);
}

TEST(Synthetic, AdfaLayoutRoundTrip) {
  const fs::path root = fresh_dir("synth");
  Rng rng(2);
  const auto traces = generate_synthetic(parse_synthetic_spec(default_synthetic_spec()), 6, rng);
  write_adfa_layout(root, traces);
  const auto r = ingest_adfa(root);
  EXPECT_EQ(r.report.normal_training, 3u);
  EXPECT_EQ(r.report.normal_validation, 3u);
  EXPECT_EQ(r.report.attack_by_kind.at("Synthetic"), 6u);
  ASSERT_EQ(r.traces.size(), traces.size());
  // Ingest visits training, validation, then attack directories.
  std::vector<RawCalls> want;
  for (TraceSet set : {TraceSet::training, TraceSet::validation, TraceSet::attack})
    for (const auto& t : traces)
      if (t.set == set) want.push_back(t.calls);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(r.traces[i].calls, want[i]);
}

}  // namespace
}  // namespace scs2s
