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

#include "scs2s/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace scs2s {

std::vector<std::string> artifact_header(const std::string& command, const RunConfig& config) {
  std::vector<std::string> lines;
  lines.push_back(std::string("tool=scs2s ") + SCS2S_VERSION);
  lines.push_back("command=" + command);
  for (const auto& [k, v] : config.values()) lines.push_back(k + "=" + v);
  return lines;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

CsvWriter::CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& comments,
                     const std::vector<std::string>& columns)
    : out_(file, std::ios::binary), columns_(columns.size()), file_(file) {
  if (!out_) throw FormatError("cannot write " + file.string());
  for (const auto& c : comments) out_ << "# " << c << "\r\n";
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_)
    throw InputError(file_.string() + ": row has " + std::to_string(fields.size()) +
                     " fields, expected " + std::to_string(columns_));
  for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
  out_ << "\r\n";
  if (!out_) throw FormatError("write failed: " + file_.string());
}

std::string CsvTable::comment_value(const std::string& key) const {
  const std::string prefix = key + "=";
  for (const auto& c : comments)
    if (c.starts_with(prefix)) return c.substr(prefix.size());
  return "";
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw FormatError("CSV has no column '" + name + "'");
}

namespace {

std::vector<std::string> parse_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot read " + file.string());
  CsvTable t;
  std::string line;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_columns && line[0] == '#') {
      std::string c = line.substr(1);
      if (!c.empty() && c[0] == ' ') c.erase(0, 1);
      t.comments.push_back(std::move(c));
      continue;
    }
    if (!have_columns) {
      t.columns = parse_record(line);
      have_columns = true;
    } else {
      t.rows.push_back(parse_record(line));
    }
  }
  if (!have_columns) throw FormatError(file.string() + ": no CSV column row");
  return t;
}

}  // namespace scs2s
