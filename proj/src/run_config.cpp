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

#include "scs2s/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace scs2s {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      // corpus
      {"adfa_dir", "", "ADFA-LD root directory (prepare)"},
      {"out_dir", "out", "directory receiving artifacts"},
      {"window_lengths", "10,12,15,18,20,22,25,30", "window lengths for pair construction"},
      {"split_ratios", "0.4,0.5,0.6,0.7", "source fraction choices per window"},
      {"stride", "10", "window stride"},
      {"train_fraction", "0.8", "fraction of traces on the training side"},
      {"buckets", "8x8,12x12,16x16,24x24", "bucket bounds source x target"},
      {"seed", "1", "random seed"},
      {"spec", "", "synthetic automaton spec file (empty: built-in)"},
      {"n_traces", "200", "synthetic traces per automaton"},
      // model
      {"cell", "gru", "recurrent cell: gru or simple_rnn"},
      {"layers", "1", "stacked recurrent layers (1-3)"},
      {"hidden", "256", "hidden width (embedding width matches)"},
      {"attention", "false", "use the attention decoder", true},
      {"dropout_keep", "0.5", "keep probability on non-recurrent connections"},
      {"init_range", "0.08", "uniform initialization half-width"},
      // training
      {"train_pairs", "", "training pairs TSV"},
      {"test_pairs", "", "held-out / test pairs TSV"},
      {"lr", "0.1", "initial learning rate"},
      {"clip_norm", "5", "global gradient-norm clip"},
      {"batch", "64", "mini-batch size"},
      {"lr_decay", "0.5", "learning-rate decay factor on plateau"},
      {"decay_patience", "2", "plateau epochs before decaying"},
      {"plateau_threshold", "0.01", "relative improvement that resets the plateau counter"},
      {"early_stop_patience", "4", "epochs without improvement before stopping"},
      {"max_epochs", "50", "epoch limit"},
      {"model", "", "checkpoint path"},
      // inference / evaluation
      {"input", "", "source calls for predict (empty: stdin)"},
      {"max_len", "10", "maximum predicted length"},
      {"decode", "greedy", "greedy or beam"},
      {"beam_width", "4", "beam width"},
      {"predict_extra", "0", "tokens allowed beyond the target length when predicting test pairs"},
      {"name", "", "model name used in reports"},
      // detection
      {"classifier", "both", "logreg_ngram, gru_pool or both"},
      {"detect_train", "", "labeled pairs TSV for classifier training (prepare writes detect_train_pairs.tsv)"},
      {"detect_test", "", "labeled pairs TSV for classifier scoring (prepare writes detect_test_pairs.tsv)"},
      {"n_max", "3", "largest n-gram order for classifier features"},
      // gradcheck
      {"vocab", "12", "vocabulary size for gradcheck"},
      {"seq_len", "6", "source and target length for gradcheck"},
      {"epsilon", "1e-5", "finite-difference step"},
      {"gradcheck_batch", "2", "batch rows for gradcheck"},
      {"gradcheck_init", "0.5", "initialization half-width for gradcheck"},
      // report
      {"inputs", "", "comma-separated eval output directories"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown configuration key '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw InputError("unknown configuration key '" + key + "'");
  return it->second;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!values_.contains(key))
      throw InputError(origin + ":" + std::to_string(line_no) + ": unknown configuration key '" + key + "'");
    values_[key] = trim(line.substr(eq + 1));
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path);
}

void RunConfig::merge_environment(char** envp) {
  if (!envp) return;
  const std::string prefix = "SCS2S_";
  for (char** e = envp; *e; ++e) {
    const std::string entry(*e);
    if (!entry.starts_with(prefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(prefix.size(), eq - prefix.size());
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (!values_.contains(key))
      throw InputError("unknown configuration key '" + key + "' from environment " +
                       entry.substr(0, eq));
    values_[key] = entry.substr(eq + 1);
  }
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("configuration '" + key + "' is not an integer: '" + v + "'");
  }
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const auto x = get_int(key);
  if (x < 0) throw InputError("configuration '" + key + "' must be non-negative");
  return static_cast<std::size_t>(x);
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("configuration '" + key + "' is not a number: '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
  throw InputError("configuration '" + key + "' is not a boolean: '" + get(key) + "'");
}

std::vector<std::string> RunConfig::get_list(const std::string& key) const { return split(get(key), ','); }

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : get_list(key)) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw InputError("configuration '" + key + "' has a bad entry '" + item + "'");
    }
  }
  return out;
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("configuration '" + key + "' has a bad entry '" + item + "'");
    }
  }
  return out;
}

std::vector<BucketSpec> parse_buckets(const std::string& text) {
  std::vector<BucketSpec> out;
  for (const auto& item : split(text, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw InputError("bucket '" + item + "' is not <source>x<target>");
    try {
      out.push_back({std::stoul(item.substr(0, x)), std::stoul(item.substr(x + 1))});
    } catch (const std::exception&) {
      throw InputError("bucket '" + item + "' is not <source>x<target>");
    }
  }
  if (out.empty()) throw InputError("no buckets configured");
  return out;
}

std::vector<BucketSpec> RunConfig::buckets() const { return parse_buckets(get("buckets")); }

ModelConfig RunConfig::model_config(std::size_t vocab_size) const {
  ModelConfig c;
  c.cell = parse_cell(get("cell"));
  c.layers = get_size("layers");
  c.hidden = get_size("hidden");
  c.vocab_size = vocab_size;
  c.attention = get_bool("attention");
  c.dropout_keep = get_double("dropout_keep");
  c.validate();
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.lr0 = get_double("lr");
  t.clip_norm = get_double("clip_norm");
  t.batch = get_size("batch");
  t.lr_decay = get_double("lr_decay");
  t.decay_patience = get_size("decay_patience");
  t.plateau_threshold = get_double("plateau_threshold");
  t.early_stop_patience = get_size("early_stop_patience");
  t.max_epochs = get_size("max_epochs");
  t.seed = static_cast<std::uint64_t>(get_int("seed"));
  t.init_range = get_double("init_range");
  t.buckets = buckets();
  t.validate();
  return t;
}

PairOptions RunConfig::pair_options() const {
  PairOptions p;
  p.window_lengths = get_sizes("window_lengths");
  p.split_ratios = get_doubles("split_ratios");
  p.stride = get_size("stride");
  p.train_fraction = get_double("train_fraction");
  return p;
}

ClassifierOptions RunConfig::classifier_options() const {
  ClassifierOptions o;
  o.n_max = get_size("n_max");
  return o;
}

}  // namespace scs2s
