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

#ifndef SCS2S_TRAINER_HPP
#define SCS2S_TRAINER_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/model.hpp"

namespace scs2s {

struct TrainConfig {
  double lr0 = 0.1;
  double clip_norm = 5.0;
  std::size_t batch = 64;
  double lr_decay = 0.5;
  /// Epochs without a >= plateau_threshold relative held-out improvement
  /// before the learning rate decays.
  std::size_t decay_patience = 2;
  double plateau_threshold = 0.01;
  /// Epochs without any held-out improvement before stopping.
  std::size_t early_stop_patience = 4;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 1;
  double init_range = 0.08;
  std::vector<BucketSpec> buckets = default_buckets();

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  Seq2Seq model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
  double best_heldout = 0.0;
  bool early_stopped = false;
};

/// Thrown when the loss turns NaN or exceeds 10x its first value. Carries
/// the best parameters seen before the failure.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::shared_ptr<const Seq2Seq> last_good,
                   std::vector<EpochRecord> history)
      : NumericError(what), last_good_(std::move(last_good)), history_(std::move(history)) {}
  const Seq2Seq& last_good() const { return *last_good_; }
  const std::vector<EpochRecord>& history() const { return history_; }

 private:
  std::shared_ptr<const Seq2Seq> last_good_;
  std::vector<EpochRecord> history_;
};

/// Scales every gradient by max_norm/g when the global norm g exceeds
/// max_norm. Returns the applied scale (1 when unchanged).
double clip_gradients(ParamStore& store, double max_norm = 5.0);

/// value -= lr * grad for every slot.
void sgd_step(ParamStore& store, double lr);

/// Token-weighted mean loss with dropout off.
double evaluate_loss(const Seq2Seq& model, std::span<const SequencePair> pairs,
                     const std::vector<BucketSpec>& buckets, std::size_t batch_size);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD with global-norm clipping, plateau learning-rate decay and
/// early stopping on held-out loss. Returns the best held-out parameters.
/// An empty `heldout` span falls back to the dropout-free training loss.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  std::span<const SequencePair> train_pairs,
                  std::span<const SequencePair> heldout_pairs, const EpochCallback& on_epoch = {});

/// Ordered key=value lines stored after the checkpoint magic.
class CheckpointHeader {
 public:
  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  std::string require(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline constexpr const char* kCheckpointMagic = "SCS2S1";

/// Raw format: magic line, header lines, blank line, then per slot
/// `slot <name> <rows> <cols>\n` followed by rows*cols little-endian
/// IEEE-754 binary32 values, then `end\n`.
void write_checkpoint(std::ostream& out, const ParamStore& params, const CheckpointHeader& header);
/// Returns slots with zero gradients. Throws FormatError naming the slot on
/// truncation.
std::pair<ParamStore, CheckpointHeader> read_checkpoint(std::istream& in);

struct LoadedModel {
  Seq2Seq model;
  Vocabulary vocab;
  CheckpointHeader header;
};

/// Adds model config, vocabulary and its hash to `extra` and writes the file.
void save_checkpoint(const std::filesystem::path& file, const Seq2Seq& model,
                     const Vocabulary& vocab, CheckpointHeader extra = {});
/// When `expected_vocab_hash` is given it must match the stored one.
LoadedModel load_checkpoint(const std::filesystem::path& file,
                            std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace scs2s

#endif  // SCS2S_TRAINER_HPP
