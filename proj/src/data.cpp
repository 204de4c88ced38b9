// Copyright 2026 The wineqc Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wineqc/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wineqc {

namespace {

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out(text.substr(begin, end - begin));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    fields.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::size_t ClassCounts::count(int label) const {
  auto it = counts.find(label);
  return it == counts.end() ? 0 : it->second;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  out.groups.reserve(indices.size());
  for (std::size_t i : indices) {
    out.labels.push_back(labels.at(i));
    out.groups.push_back(groups.at(i));
  }
  out.feature_names = feature_names;
  out.class_vocab = vocabulary_of(out.labels);
  return out;
}

Dataset Dataset::with_features(std::span<const std::size_t> columns) const {
  Dataset out = *this;
  out.features = features.select_cols(columns);
  out.feature_names.clear();
  for (std::size_t c : columns) out.feature_names.push_back(feature_names.at(c));
  return out;
}

std::vector<int> vocabulary_of(std::span<const int> labels) {
  std::vector<int> vocab(labels.begin(), labels.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return vocab;
}

ClassCounts class_counts(std::span<const int> labels) {
  if (labels.empty()) throw DataError("class_counts: empty label vector");
  ClassCounts out;
  for (int label : labels) ++out.counts[label];
  out.total = labels.size();
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_csv: cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("load_csv: '" + path.string() + "' has no header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const std::vector<std::string> header = split_line(line, options.delimiter);
  auto label_it = std::find(header.begin(), header.end(), options.label_column);
  if (label_it == header.end()) {
    throw DataError("load_csv: unknown label column '" + options.label_column + "'");
  }
  const std::size_t label_pos = static_cast<std::size_t>(label_it - header.begin());

  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) ds.feature_names.push_back(header[c]);
  }
  if (ds.feature_names.empty()) throw DataError("load_csv: no feature columns");
  const std::size_t d = ds.feature_names.size();
  ds.features = Matrix(0, d);

  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_line(line, options.delimiter);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "load_csv: line " << line_no << " has " << fields.size() << " fields, expected "
          << header.size();
      throw DataError(msg.str());
    }
    std::size_t f = 0;
    double label_value = 0.0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double value = 0.0;
      if (!parse_double(fields[c], value) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "load_csv: line " << line_no << ", column '" << header[c]
            << "': non-numeric value '" << fields[c] << "'";
        throw DataError(msg.str());
      }
      if (c == label_pos) {
        label_value = value;
      } else {
        row[f++] = value;
      }
    }
    if (label_value != std::floor(label_value) || label_value < 0 || label_value > 10) {
      std::ostringstream msg;
      msg << "load_csv: line " << line_no << ": label " << fields[label_pos]
          << " is not an integer in 0..10";
      throw DataError(msg.str());
    }
    ds.features.append_row(row);
    ds.labels.push_back(static_cast<int>(label_value));
  }
  if (ds.labels.empty()) throw DataError("load_csv: '" + path.string() + "' has no data rows");

  ds.groups.resize(ds.labels.size());
  for (std::size_t i = 0; i < ds.groups.size(); ++i) ds.groups[i] = static_cast<std::int64_t>(i);
  ds.class_vocab = vocabulary_of(ds.labels);
  return ds;
}

void validate(const Dataset& ds) {
  const std::size_t n = ds.labels.size();
  if (n == 0 || ds.features.cols() == 0) throw DataError("dataset: empty table");
  if (ds.features.rows() != n) throw DataError("dataset: feature/label row mismatch");
  if (ds.groups.size() != n) throw DataError("dataset: group vector length mismatch");
  if (ds.feature_names.size() != ds.features.cols()) {
    throw DataError("dataset: feature name count mismatch");
  }
  for (double v : ds.features.values()) {
    if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
  }
  for (int y : ds.labels) {
    if (y < 0 || y > 10) throw DataError("dataset: label outside 0..10");
  }
  if (ds.class_vocab != vocabulary_of(ds.labels)) {
    throw DataError("dataset: class vocabulary does not match labels");
  }
}

}  // namespace wineqc
