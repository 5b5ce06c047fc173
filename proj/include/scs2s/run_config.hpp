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

#ifndef SCS2S_RUN_CONFIG_HPP
#define SCS2S_RUN_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scs2s/corpus.hpp"
#include "scs2s/detection.hpp"
#include "scs2s/model.hpp"
#include "scs2s/trainer.hpp"

namespace scs2s {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
  bool is_flag = false;  // boolean switch on the command line
};

/// Every recognized knob, in display order.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value run configuration. Sources are layered: defaults, then a
/// config file, then command-line flags, then SCS2S_* environment variables.
class RunConfig {
 public:
  RunConfig();

  /// Throws InputError for unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;

  /// `key = value` lines, '#' comments.
  void merge_file(const std::string& path);
  void merge_text(const std::string& text, const std::string& origin);
  /// SCS2S_<UPPER_KEY>; unknown SCS2S_ variables are rejected.
  void merge_environment(char** envp);

  std::int64_t get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  ModelConfig model_config(std::size_t vocab_size) const;
  TrainConfig train_config() const;
  PairOptions pair_options() const;
  ClassifierOptions classifier_options() const;
  std::vector<BucketSpec> buckets() const;

 private:
  std::map<std::string, std::string> values_;
};

/// "8x8,12x12" -> buckets.
std::vector<BucketSpec> parse_buckets(const std::string& text);

}  // namespace scs2s

#endif  // SCS2S_RUN_CONFIG_HPP
