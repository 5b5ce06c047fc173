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

#ifndef SCS2S_ARTIFACTS_HPP
#define SCS2S_ARTIFACTS_HPP

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "scs2s/run_config.hpp"

namespace scs2s {

/// `# tool=scs2s <version>`, `# command=<cmd>` and one `# key=value` line per
/// resolved configuration entry.
std::vector<std::string> artifact_header(const std::string& command, const RunConfig& config);

/// Shortest decimal form that round-trips (%.17g trimmed), stable across runs.
std::string format_number(double value);

/// RFC-4180 quoting when the field holds a comma, quote or line break.
std::string csv_field(const std::string& value);

/// CSV file with leading `#` comment lines, a column row, then data rows.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& comments,
            const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::filesystem::path file_;
};

struct CsvTable {
  std::vector<std::string> comments;  // without the leading '#'
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Value of a `# key=value` comment, empty when absent.
  std::string comment_value(const std::string& key) const;
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& file);

}  // namespace scs2s

#endif  // SCS2S_ARTIFACTS_HPP
