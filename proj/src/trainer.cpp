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

#include "scs2s/trainer.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace scs2s {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw InputError("lr0 must be positive");
  if (!(clip_norm > 0.0)) throw InputError("clip_norm must be positive");
  if (batch < 1) throw InputError("batch must be >= 1");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InputError("lr_decay must lie in (0, 1]");
  if (decay_patience < 1) throw InputError("decay_patience must be >= 1");
  if (early_stop_patience < 1) throw InputError("early_stop_patience must be >= 1");
  if (!(init_range > 0.0)) throw InputError("init_range must be positive");
  if (buckets.empty()) throw InputError("at least one bucket is required");
}

double clip_gradients(ParamStore& store, double max_norm) {
  const double norm = global_grad_norm(store);
  if (!(norm > max_norm)) return 1.0;
  const double scale = max_norm / norm;
  for (auto& slot : store) slot.grad *= scale;
  return scale;
}

void sgd_step(ParamStore& store, double lr) {
  for (auto& slot : store) slot.value -= lr * slot.grad;
}

double evaluate_loss(const Seq2Seq& model, std::span<const SequencePair> pairs,
                     const std::vector<BucketSpec>& buckets, std::size_t batch_size) {
  if (pairs.empty()) return 0.0;
  Batcher batcher(pairs, buckets, batch_size);
  double total = 0.0, tokens = 0.0;
  for (const Batch& b : batcher.ordered()) {
    const double n = b.target_mask.sum();
    total += model.loss(b) * n;
    tokens += n;
  }
  return tokens > 0.0 ? total / tokens : 0.0;
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg,
                  std::span<const SequencePair> train_pairs,
                  std::span<const SequencePair> heldout_pairs, const EpochCallback& on_epoch) {
  cfg.validate();
  Rng rng(cfg.seed);
  Rng init_rng = rng.split();
  Rng shuffle_rng = rng.split();
  Rng dropout_rng = rng.split();

  Seq2Seq model(model_cfg);
  model.initialize(init_rng, cfg.init_range);
  TrainResult result{model, {}, 0, 0.0, false};
  if (cfg.max_epochs == 0) return result;
  if (train_pairs.empty()) throw InputError("train: no training pairs");

  Batcher batcher(train_pairs, cfg.buckets, cfg.batch);
  const bool has_heldout = !heldout_pairs.empty();
  const auto heldout_loss = [&](const Seq2Seq& m) {
    return has_heldout ? evaluate_loss(m, heldout_pairs, cfg.buckets, cfg.batch)
                       : evaluate_loss(m, train_pairs, cfg.buckets, cfg.batch);
  };

  auto best = std::make_shared<Seq2Seq>(model);
  double best_loss = std::numeric_limits<double>::infinity();
  double plateau_ref = std::numeric_limits<double>::infinity();
  std::size_t plateau = 0, stale = 0;
  double lr = cfg.lr0;
  double first_loss = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double sum = 0.0, tokens = 0.0;
    std::size_t step = 0;
    for (const Batch& b : batcher.epoch(shuffle_rng)) {
      ++step;
      const double loss = model.loss_and_grad(b, &dropout_rng);
      if (first_loss < 0.0) first_loss = loss;
      if (!std::isfinite(loss) || loss > 10.0 * first_loss) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " step " << step << ": loss " << loss
            << " (first batch loss " << first_loss << ", lr " << lr << ")";
        throw TrainingDiverged(msg.str(), best, result.history);
      }
      clip_gradients(model.params(), cfg.clip_norm);
      sgd_step(model.params(), lr);
      const double n = b.target_mask.sum();
      sum += loss * n;
      tokens += n;
    }
    if (!model.params().all_finite())
      throw TrainingDiverged("non-finite parameters after epoch " + std::to_string(epoch), best,
                             result.history);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = tokens > 0.0 ? sum / tokens : 0.0;
    rec.heldout_loss = heldout_loss(model);
    rec.lr = lr;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.heldout_loss < best_loss) {
      best_loss = rec.heldout_loss;
      best = std::make_shared<Seq2Seq>(model);
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.early_stop_patience) {
      result.early_stopped = true;
      break;
    }
    if (rec.heldout_loss < plateau_ref * (1.0 - cfg.plateau_threshold)) {
      plateau_ref = rec.heldout_loss;
      plateau = 0;
    } else if (++plateau >= cfg.decay_patience) {
      lr *= cfg.lr_decay;
      plateau = 0;
      plateau_ref = std::min(plateau_ref, rec.heldout_loss);
    }
  }
  result.model = *best;
  result.best_heldout = best_loss;
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

void CheckpointHeader::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find_first_of("=\n") != std::string::npos)
    throw InputError("bad checkpoint header key '" + key + "'");
  if (value.find('\n') != std::string::npos) throw InputError("checkpoint header value has a newline");
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::optional<std::string> CheckpointHeader::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string CheckpointHeader::require(const std::string& key) const {
  auto v = get(key);
  if (!v) throw FormatError("checkpoint header lacks '" + key + "'");
  return *v;
}

namespace {

void put_f32(std::ostream& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

bool get_f32(std::istream& in, float& value) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
  const std::uint32_t bits = std::uint32_t(bytes[0]) | (std::uint32_t(bytes[1]) << 8) |
                             (std::uint32_t(bytes[2]) << 16) | (std::uint32_t(bytes[3]) << 24);
  value = std::bit_cast<float>(bits);
  return true;
}

std::uint64_t header_number(const CheckpointHeader& h, const std::string& key) {
  const std::string v = h.require(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw FormatError("checkpoint header '" + key + "' is not a count: " + v);
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& params, const CheckpointHeader& header) {
  out << kCheckpointMagic << '\n';
  for (const auto& [k, v] : header.entries()) out << k << '=' << v << '\n';
  out << "slots=" << params.size() << "\n\n";
  for (const auto& slot : params) {
    out << "slot " << slot.name << ' ' << slot.value.rows() << ' ' << slot.value.cols() << '\n';
    for (Eigen::Index i = 0; i < slot.value.size(); ++i)
      put_f32(out, static_cast<float>(slot.value.data()[i]));
  }
  out << "end\n";
  if (!out) throw FormatError("checkpoint write failed");
}

std::pair<ParamStore, CheckpointHeader> read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw FormatError("not a checkpoint: bad magic");
  CheckpointHeader header;
  std::size_t slots = 0;
  bool have_slots = false;
  while (true) {
    if (!std::getline(in, line)) throw FormatError("checkpoint truncated in header");
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint header line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "slots") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), slots);
      if (ec != std::errc() || ptr != value.data() + value.size())
        throw FormatError("checkpoint slot count is not a number: " + value);
      have_slots = true;
    } else {
      header.set(key, value);
    }
  }
  if (!have_slots) throw FormatError("checkpoint header lacks slot count");

  ParamStore params;
  std::string previous = "(first)";
  for (std::size_t s = 0; s < slots; ++s) {
    if (!std::getline(in, line))
      throw FormatError("checkpoint truncated before slot " + std::to_string(s) + " (after '" +
                        previous + "')");
    std::istringstream words(line);
    std::string tag, name;
    long rows = -1, cols = -1;
    if (!(words >> tag >> name >> rows >> cols) || tag != "slot" || rows < 0 || cols < 0)
      throw FormatError("checkpoint slot header malformed after '" + previous + "': " + line);
    const std::size_t idx = params.add(name, rows, cols);
    Matrix& value = params[idx].value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      float f = 0.0f;
      if (!get_f32(in, f))
        throw FormatError("checkpoint truncated in slot '" + name + "' at value " +
                          std::to_string(i) + " of " + std::to_string(value.size()));
      value.data()[i] = static_cast<double>(f);
    }
    previous = name;
  }
  if (!std::getline(in, line) || line != "end")
    throw FormatError("checkpoint truncated after slot '" + previous + "' (missing end marker)");
  return {std::move(params), std::move(header)};
}

void save_checkpoint(const std::filesystem::path& file, const Seq2Seq& model,
                     const Vocabulary& vocab, CheckpointHeader extra) {
  const ModelConfig& c = model.config();
  if (static_cast<std::size_t>(vocab.size()) != c.vocab_size)
    throw InputError("save_checkpoint: vocabulary size does not match the model");
  CheckpointHeader h;
  h.set("cell", to_string(c.cell));
  h.set("layers", std::to_string(c.layers));
  h.set("hidden", std::to_string(c.hidden));
  h.set("vocab_size", std::to_string(c.vocab_size));
  h.set("attention", c.attention ? "1" : "0");
  h.set("dropout_keep", format_double(c.dropout_keep));
  h.set("gru_convention", kGruConvention);
  h.set("vocab_hash", std::to_string(vocab.hash()));
  std::ostringstream calls;
  for (std::size_t i = 0; i < vocab.raw_calls().size(); ++i)
    calls << (i ? " " : "") << vocab.raw_calls()[i];
  h.set("vocab", calls.str());
  for (const auto& [k, v] : extra.entries()) h.set(k, v);

  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + file.string());
  write_checkpoint(out, model.params(), h);
}

LoadedModel load_checkpoint(const std::filesystem::path& file,
                            std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + file.string());
  auto [stored, header] = read_checkpoint(in);

  const Vocabulary vocab(RawCalls(parse_calls(header.require("vocab"), "checkpoint vocab")));
  const std::uint64_t hash = header_number(header, "vocab_hash");
  if (hash != vocab.hash()) throw FormatError("checkpoint vocabulary does not match its hash");
  if (expected_vocab_hash && *expected_vocab_hash != hash)
    throw FormatError("checkpoint vocabulary hash " + std::to_string(hash) +
                      " does not match expected " + std::to_string(*expected_vocab_hash));

  ModelConfig c;
  c.cell = parse_cell(header.require("cell"));
  c.layers = header_number(header, "layers");
  c.hidden = header_number(header, "hidden");
  c.vocab_size = header_number(header, "vocab_size");
  c.attention = header.require("attention") == "1";
  try {
    c.dropout_keep = std::stod(header.require("dropout_keep"));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint header 'dropout_keep' is not a number");
  }
  if (c.vocab_size != static_cast<std::size_t>(vocab.size()))
    throw FormatError("checkpoint vocab_size disagrees with its vocabulary");
  try {
    c.validate();
  } catch (const InputError& e) {
    throw FormatError(std::string("checkpoint model config invalid: ") + e.what());
  }
  Seq2Seq model(c);
  if (model.params().size() != stored.size())
    throw FormatError("checkpoint has " + std::to_string(stored.size()) + " slots, model expects " +
                      std::to_string(model.params().size()));
  for (std::size_t i = 0; i < stored.size(); ++i) {
    auto& dst = model.params()[i];
    const auto& src = stored[i];
    if (dst.name != src.name) throw FormatError("checkpoint slot '" + src.name + "' where '" + dst.name + "' expected");
    if (dst.value.rows() != src.value.rows() || dst.value.cols() != src.value.cols())
      throw FormatError("checkpoint slot '" + src.name + "' has shape " +
                        shape_string(src.value.rows(), src.value.cols()) + ", expected " +
                        shape_string(dst.value.rows(), dst.value.cols()));
    dst.value = src.value;
  }
  return {std::move(model), vocab, std::move(header)};
}

}  // namespace scs2s
