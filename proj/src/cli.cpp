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


#include "scs2s/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "scs2s/artifacts.hpp"
#include "scs2s/corpus.hpp"
#include "scs2s/detection.hpp"
#include "scs2s/metrics.hpp"
#include "scs2s/model.hpp"
#include "scs2s/run_config.hpp"
#include "scs2s/trainer.hpp"

namespace fs = std::filesystem;

namespace scs2s {
namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config lookups that fail are the caller's fault, not the data's.
template <typename F>
auto usage(F&& f) {
  try {
    return f();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
}

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

std::string required(const RunConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  if (v.empty()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    throw UsageError("missing --" + flag);
  }
  return v;
}

fs::path output_dir(const RunConfig& c) {
  fs::path dir = c.get("out_dir");
  fs::create_directories(dir);
  return dir;
}

std::string num(double x) { return format_number(x); }
std::string num(std::size_t x) { return std::to_string(x); }

std::string label_field(const SequencePair& p) {
  return p.label == Label::normal ? "normal" : "attack:" + p.kind;
}

std::string join_calls(const RawCalls& calls) {
  std::string s;
  for (std::size_t i = 0; i < calls.size(); ++i) s += (i ? " " : "") + std::to_string(calls[i]);
  return s;
}

void write_tsv(const fs::path& file, const std::vector<std::string>& header,
               std::span<const SequencePair> pairs, const Vocabulary& vocab) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot write " + file.string());
  for (const auto& h : header) out << "# " << h << "\n";
  write_pairs_tsv(out, pairs, vocab);
  if (!out) throw FormatError("write failed: " + file.string());
}

std::vector<SequencePair> load_pairs(const fs::path& file, const Vocabulary& vocab) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot read pairs file " + file.string());
  return read_pairs_tsv(in, vocab);
}

RawCalls scan_calls(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot read pairs file " + file.string());
  return scan_pairs_tsv_calls(in);
}

// --------------------------------------------------------------------------

int cmd_version(const RunConfig&, Io& io) {
  io.out << "scs2s " << SCS2S_VERSION << "\n";
  return kExitOk;
}

int cmd_prepare(const RunConfig& c, Io& io) {
  const fs::path root = required(c, "adfa_dir");
  const PairOptions opt = usage([&] { return c.pair_options(); });
  const auto seed = usage([&] { return c.get_int("seed"); });
  const fs::path dir = output_dir(c);
  const auto header = artifact_header("prepare", c);

  IngestResult ingest = ingest_adfa(root);
  const Vocabulary vocab = Vocabulary::build(ingest.traces);
  Rng rng(static_cast<std::uint64_t>(seed));
  const PairSplit split = make_pairs(ingest.traces, vocab, opt, rng);

  write_tsv(dir / "train_pairs.tsv", header, split.train, vocab);
  write_tsv(dir / "test_pairs.tsv", header, split.test, vocab);
  write_tsv(dir / "detect_train_pairs.tsv", header, detection_pairs(split.train), vocab);
  write_tsv(dir / "detect_test_pairs.tsv", header, detection_pairs(split.test), vocab);
  {
    CsvWriter w(dir / "vocab.csv", header, {"token", "raw_call"});
    for (std::size_t i = 0; i < vocab.raw_calls().size(); ++i)
      w.row({num(i + Vocabulary::kFirstCall), std::to_string(vocab.raw_calls()[i])});
  }
  const IngestReport& r = ingest.report;
  {
    CsvWriter w(dir / "ingest_counts.csv", header, {"category", "traces"});
    w.row({"normal_training", num(r.normal_training)});
    w.row({"normal_validation", num(r.normal_validation)});
    for (const auto& [kind, n] : r.attack_by_kind) w.row({"attack:" + kind, num(n)});
    w.row({"attack_total", num(r.attack_total())});
    w.row({"skipped_empty", num(r.skipped_empty)});
    w.row({"skipped_unreadable", num(r.skipped_unreadable)});
  }
  const PairReport& pr = split.report;
  {
    CsvWriter w(dir / "pair_counts.csv", header, {"window_len", "train_pairs", "test_pairs", "all_pairs"});
    for (std::size_t len : opt.window_lengths) {
      const auto tr = pr.train_by_length.contains(len) ? pr.train_by_length.at(len) : 0;
      const auto te = pr.test_by_length.contains(len) ? pr.test_by_length.at(len) : 0;
      w.row({num(len), num(tr), num(te), num(tr + te)});
    }
    w.row({"total", num(pr.train_total()), num(pr.test_total()),
           num(pr.train_total() + pr.test_total())});
  }
  for (const auto& warning : r.warnings) io.err << "warning: " << warning << "\n";
  io.out << "traces: normal_training=" << r.normal_training
         << " normal_validation=" << r.normal_validation << " attack=" << r.attack_total()
         << " attack_kinds=" << r.attack_by_kind.size() << "\n"
         << "vocabulary: " << vocab.call_count() << " calls\n"
         << "pairs: train=" << pr.train_total() << " test=" << pr.test_total()
         << " (traces train=" << pr.train_traces << " test=" << pr.test_traces
         << " too_short=" << pr.traces_too_short << ")\n";
  return kExitOk;
}

int cmd_synth(const RunConfig& c, Io& io) {
  const auto n = usage([&] { return c.get_size("n_traces"); });
  const auto seed = usage([&] { return c.get_int("seed"); });
  std::string text(default_synthetic_spec());
  if (const std::string& path = c.get("spec"); !path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read spec file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  const SyntheticSpec spec = parse_synthetic_spec(text);
  const fs::path dir = output_dir(c);
  Rng rng(static_cast<std::uint64_t>(seed));
  const auto traces = generate_synthetic(spec, n, rng);
  write_adfa_layout(dir, traces);

  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& t : traces) ++counts[{to_string(t.set), t.label == Label::normal ? "" : t.kind}];
  CsvWriter w(dir / "synth_counts.csv", artifact_header("synth", c), {"set", "kind", "traces"});
  for (const auto& [key, count] : counts) w.row({key.first, key.second, num(count)});
  io.out << "wrote " << traces.size() << " traces to " << dir.string() << "\n";
  return kExitOk;
}

void write_history(const fs::path& file, const std::vector<std::string>& header,
                   const std::vector<EpochRecord>& history) {
  CsvWriter w(file, header, {"epoch", "train_loss", "heldout_loss", "lr"});
  for (const auto& e : history) w.row({num(e.epoch), num(e.train_loss), num(e.heldout_loss), num(e.lr)});
}

int cmd_train(const RunConfig& c, Io& io) {
  const fs::path train_file = required(c, "train_pairs");
  const std::string test_file = c.get("test_pairs");
  const TrainConfig tc = usage([&] { return c.train_config(); });
  // Vocabulary size is only known after reading the data; check the rest now.
  usage([&] { return c.model_config(Vocabulary::kFirstCall + 1); });
  const fs::path dir = output_dir(c);
  const fs::path model_file = c.get("model").empty() ? dir / "model.ckpt" : fs::path(c.get("model"));
  const auto header = artifact_header("train", c);

  RawCalls calls = scan_calls(train_file);
  if (!test_file.empty()) {
    RawCalls more = scan_calls(test_file);
    calls.insert(calls.end(), more.begin(), more.end());
  }
  const Vocabulary vocab(std::move(calls));
  const auto train_pairs = load_pairs(train_file, vocab);
  std::vector<SequencePair> heldout;
  if (!test_file.empty()) heldout = load_pairs(test_file, vocab);
  if (train_pairs.empty()) throw FormatError(train_file.string() + ": no pairs");
  const ModelConfig mc = c.model_config(static_cast<std::size_t>(vocab.size()));

  auto log = [&](const EpochRecord& e) {
    io.err << "epoch " << e.epoch << " train_loss=" << num(e.train_loss)
           << " heldout_loss=" << num(e.heldout_loss) << " lr=" << num(e.lr) << "\n";
  };
  try {
    TrainResult result = train(mc, tc, train_pairs, heldout, log);
    write_history(dir / "history.csv", header, result.history);
    CheckpointHeader extra;
    extra.set("lr", num(tc.lr0));
    extra.set("seed", std::to_string(tc.seed));
    extra.set("best_epoch", num(result.best_epoch));
    extra.set("best_heldout", num(result.best_heldout));
    if (!c.get("name").empty()) extra.set("name", c.get("name"));
    save_checkpoint(model_file, result.model, vocab, extra);
    io.out << "best epoch " << result.best_epoch << " heldout_loss=" << num(result.best_heldout)
           << (result.early_stopped ? " (early stop)" : "") << "\nwrote " << model_file.string()
           << "\n";
  } catch (const TrainingDiverged& e) {
    write_history(dir / "history.csv", header, e.history());
    throw;
  }
  return kExitOk;
}

Seq2Seq::Decoding decoding(const RunConfig& c) {
  const std::string& d = c.get("decode");
  if (d == "greedy") return Seq2Seq::Decoding::greedy;
  if (d == "beam") return Seq2Seq::Decoding::beam;
  throw UsageError("decode must be greedy or beam, got '" + d + "'");
}

int cmd_predict(const RunConfig& c, Io& io) {
  const fs::path model_file = required(c, "model");
  const auto max_len = usage([&] { return c.get_size("max_len"); });
  const auto width = usage([&] { return c.get_size("beam_width"); });
  const auto mode = decoding(c);
  const LoadedModel m = load_checkpoint(model_file);

  auto run = [&](const std::string& text, const std::string& origin) {
    const Sequence source = m.vocab.encode(parse_calls(text, origin));
    if (source.empty()) throw FormatError(origin + ": no source calls");
    io.out << join_calls(m.vocab.decode(m.model.predict(source, max_len, mode, width))) << "\n";
  };
  if (!c.get("input").empty()) {
    run(c.get("input"), "--input");
    return kExitOk;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(io.in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    run(line, "stdin line " + std::to_string(line_no));
  }
  return kExitOk;
}

std::string model_name(const RunConfig& c, const LoadedModel& m, const fs::path& model_file) {
  if (!c.get("name").empty()) return c.get("name");
  if (auto n = m.header.get("name")) return *n;
  return model_file.stem().string();
}

int cmd_eval(const RunConfig& c, Io& io) {
  const fs::path model_file = required(c, "model");
  const fs::path test_file = required(c, "test_pairs");
  const auto extra = usage([&] { return c.get_size("predict_extra"); });
  const fs::path dir = output_dir(c);
  const auto header = artifact_header("eval", c);

  const LoadedModel m = load_checkpoint(model_file);
  const auto test = load_pairs(test_file, m.vocab);
  if (test.empty()) throw FormatError(test_file.string() + ": no pairs");
  const std::string name = model_name(c, m, model_file);

  std::vector<Sequence> predictions;
  predictions.reserve(test.size());
  for (const auto& p : test) predictions.push_back(m.model.predict(p.source, p.target.size() + extra));
  const EvalReport r = evaluate_predictions(m.model, test, predictions, name);

  const ModelConfig& mc = m.model.config();
  const std::string lr = m.header.get("lr").value_or("");
  {
    CsvWriter w(dir / "eval_summary.csv", header,
                {"model", "cell", "layers", "hidden", "attention", "lr", "pairs", "bleu", "p1", "p2",
                 "p3", "p4", "brevity_penalty", "zero_precision", "tfidf_cosine",
                 "semantic_cosine", "euclidean", "empty_predictions"});
    std::vector<std::string> row{name, to_string(mc.cell), num(mc.layers), num(mc.hidden),
                                 mc.attention ? "1" : "0", lr, num(r.pairs), num(r.corpus_bleu.score)};
    for (std::size_t n = 0; n < 4; ++n)
      row.push_back(n < r.corpus_bleu.precisions.size() ? num(r.corpus_bleu.precisions[n]) : "");
    row.insert(row.end(), {num(r.corpus_bleu.brevity_penalty), r.corpus_bleu.zero_precision ? "1" : "0",
                           num(r.mean_tfidf), num(r.mean_semantic_cosine), num(r.mean_euclidean),
                           num(r.empty_predictions)});
    w.row(row);
  }
  {
    CsvWriter w(dir / "bleu_by_length.csv", header, {"source_length", "pairs", "bleu", "zero_precision"});
    for (const auto& row : r.by_length)
      w.row({num(row.source_length), num(row.pairs), num(row.result.score),
             row.result.zero_precision ? "1" : "0"});
  }
  {
    CsvWriter w(dir / "predictions.csv", header,
                {"source", "target", "prediction", "label", "tfidf_cosine"});
    const IdfTable idf([&] {
      std::vector<Sequence> docs;
      for (const auto& p : test) docs.push_back(p.target);
      return docs;
    }());
    for (std::size_t i = 0; i < test.size(); ++i)
      w.row({join_calls(m.vocab.decode(test[i].source)), join_calls(m.vocab.decode(test[i].target)),
             join_calls(m.vocab.decode(predictions[i])), label_field(test[i]),
             num(tfidf_similarity(predictions[i], test[i].target, idf))});
  }
  io.out << name << ": pairs=" << r.pairs << " bleu=" << num(r.corpus_bleu.score)
         << " tfidf=" << num(r.mean_tfidf) << " semantic_cosine=" << num(r.mean_semantic_cosine)
         << "\n";
  return kExitOk;
}

int cmd_detect(const RunConfig& c, Io& io) {
  const fs::path model_file = required(c, "model");
  std::string train_file = c.get("detect_train"), test_file = c.get("detect_test");
  if (train_file.empty()) train_file = required(c, "train_pairs");
  if (test_file.empty()) test_file = required(c, "test_pairs");
  const auto extra = usage([&] { return c.get_size("predict_extra"); });
  const auto seed = usage([&] { return c.get_int("seed"); });
  const ClassifierOptions opt = usage([&] { return c.classifier_options(); });
  std::vector<ClassifierKind> kinds;
  if (c.get("classifier") == "both")
    kinds = {ClassifierKind::logreg_ngram, ClassifierKind::gru_pool};
  else
    kinds = {usage([&] { return parse_classifier(c.get("classifier")); })};
  const fs::path dir = output_dir(c);
  const auto header = artifact_header("detect", c);

  const LoadedModel m = load_checkpoint(model_file);
  const auto train_pairs = load_pairs(train_file, m.vocab);
  const auto test_pairs = load_pairs(test_file, m.vocab);
  const auto train_pred = predict_all(m.model, train_pairs, extra);
  const auto test_pred = predict_all(m.model, test_pairs, extra);

  CsvWriter auc(dir / "detect_auc.csv", header,
                {"classifier", "condition", "auc", "n_normal", "n_attack"});
  CsvWriter roc(dir / "roc.csv", header, {"classifier", "condition", "threshold", "fpr", "tpr"});
  for (ClassifierKind kind : kinds) {
    const auto results = run_conditions(kind, train_pairs, train_pred, test_pairs, test_pred,
                                        static_cast<std::uint64_t>(seed), opt);
    for (const auto& r : results) {
      auc.row({to_string(kind), to_string(r.condition), num(r.roc.auc), num(r.n_normal), num(r.n_attack)});
      for (const auto& p : r.roc.points)
        roc.row({to_string(kind), to_string(r.condition), num(p.threshold), num(p.fpr), num(p.tpr)});
      io.out << to_string(kind) << " " << to_string(r.condition) << " auc=" << num(r.roc.auc) << "\n";
    }
  }
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& c, Io& io) {
  const auto vocab = usage([&] { return c.get_size("vocab"); });
  const ModelConfig mc = usage([&] { return c.model_config(vocab); });
  const auto seq_len = usage([&] { return c.get_size("seq_len"); });
  const auto rows = usage([&] { return c.get_size("gradcheck_batch"); });
  const auto seed = usage([&] { return c.get_int("seed"); });
  const auto eps = usage([&] { return c.get_double("epsilon"); });
  const auto init = usage([&] { return c.get_double("gradcheck_init"); });
  const double err = usage([&] {
    return seq2seq_grad_check(mc, seq_len, rows, static_cast<std::uint64_t>(seed), eps, init);
  });
  const bool ok = err < 1e-4;
  io.out << "max_relative_error=" << num(err) << (ok ? " ok" : " FAIL") << "\n";
  return ok ? kExitOk : kExitNumeric;
}

int cmd_report(const RunConfig& c, Io& io) {
  const auto inputs = c.get_list("inputs");
  if (inputs.empty()) throw UsageError("missing --inputs");
  const fs::path dir = output_dir(c);
  const std::vector<std::string> columns{"model", "cell", "layers", "hidden", "attention", "lr", "pairs",
                                         "bleu", "tfidf_cosine", "semantic_cosine"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& input : inputs) {
    const CsvTable t = read_csv(fs::path(input) / "eval_summary.csv");
    for (const auto& r : t.rows) {
      if (r.size() != t.columns.size()) throw FormatError(input + ": ragged eval_summary.csv");
      std::vector<std::string> row;
      for (const auto& col : columns) row.push_back(r[t.column(col)]);
      rows.push_back(std::move(row));
    }
  }
  CsvWriter w(dir / "report.csv", artifact_header("report", c), columns);
  for (const auto& r : rows) w.row(r);

  std::vector<std::size_t> width(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    width[i] = columns[i].size();
    for (const auto& r : rows) width[i] = std::max(width[i], r[i].size());
  }
  auto print = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      io.out << (i ? "  " : "");
      if (i + 1 < r.size())
        io.out << std::left << std::setw(static_cast<int>(width[i])) << r[i];
      else
        io.out << r[i];
    }
    io.out << "\n";
  };
  print(columns);
  for (const auto& r : rows) print(r);
  return kExitOk;
}

using Command = int (*)(const RunConfig&, Io&);

struct CommandInfo {
  const char* name;
  const char* help;
  Command run;
};

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list{
      {"prepare", "ADFA-LD directory to pairs TSV, vocabulary and counts", cmd_prepare},
      {"synth", "generate a synthetic corpus in the ADFA-LD layout", cmd_synth},
      {"train", "train a model on a pairs TSV", cmd_train},
      {"predict", "predict the next calls for a source sequence", cmd_predict},
      {"eval", "BLEU, TF-IDF and semantic similarity on test pairs", cmd_eval},
      {"detect", "ROC curves for target, predicted and extended sequences", cmd_detect},
      {"gradcheck", "finite-difference check of the analytic gradients", cmd_gradcheck},
      {"report", "collect eval summaries into one table", cmd_report},
      {"version", "print the tool version", cmd_version},
  };
  return list;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, char** envp, std::istream& in, std::ostream& out,
            std::ostream& err) {
  Io io{in, out, err};
  CLI::App app("System-call sequence prediction with a recurrent encoder-decoder", "scs2s");
  app.require_subcommand(1);
  app.fallthrough(false);

  std::string config_file;
  std::map<std::string, std::string> strings;
  std::map<std::string, bool> flags;
  std::vector<std::pair<CLI::Option*, std::string>> bound;
  std::map<std::string, Command> dispatch;
  for (const auto& info : commands()) {
    CLI::App* sub = app.add_subcommand(info.name, info.help);
    dispatch[info.name] = info.run;
    if (std::string(info.name) == "version") continue;
    sub->add_option("--config", config_file, "key = value configuration file");
    for (const auto& key : config_keys()) {
      std::string dashed = key.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      std::string names = "--" + dashed;
      if (dashed != key.name) names += ",--" + key.name;
      CLI::Option* opt;
      if (key.is_flag) {
        opt = sub->add_flag(names + ",!--no-" + dashed, flags[key.name], key.help);
      } else {
        opt = sub->add_option(names, strings[key.name], key.help);
        if (!key.default_value.empty()) opt->default_str(key.default_value);
      }
      bound.emplace_back(opt, key.name);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands()[0]->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    if (!config_file.empty()) config.merge_file(config_file);
    for (const auto& [opt, key] : bound) {
      if (opt->count() == 0) continue;
      auto f = flags.find(key);
      config.set(key, f != flags.end() ? (f->second ? "true" : "false") : strings[key]);
    }
    config.merge_environment(envp);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return dispatch.at(name)(config, io);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace scs2s
