// Copyright 2026 The flatprior Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "flatprior/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace flatprior {

namespace {

std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

void write_metadata(std::ostream& out, const CsvMetadata& metadata) {
  for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRecord>& records, const CsvMetadata& metadata) {
  write_metadata(out, metadata);
  out << kExperimentCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.run_id << ',' << r.optimizer << ',' << r.attack_size << ',' << r.epoch << ','
        << format_number(r.train_error) << ',' << format_number(r.test_error) << ',' << format_number(r.sharpness)
        << ',' << optional_number(r.spectral_norm) << ',' << optional_number(r.top_k_log_product) << ','
        << optional_number(r.log_prior) << ',' << optional_number(r.log_posterior) << ','
        << optional_number(r.bound_value) << '\n';
  }
}

void write_boolean_csv(std::ostream& out, const std::vector<BooleanRecord>& records, const CsvMetadata& metadata) {
  write_metadata(out, metadata);
  out << kBooleanCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.fingerprint.to_string() << ',' << r.sample_frequency << ',' << format_number(r.log_prior_empirical) << ','
        << format_number(r.sharpness) << ',' << optional_number(r.spectral_norm) << ',' << r.sgd_runs << '\n';
  }
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("no column named '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::pair<std::vector<double>, std::vector<double>> CsvTable::numeric_pairs(const std::string& x,
                                                                            const std::string& y) const {
  const std::size_t ix = column(x);
  const std::size_t iy = column(y);
  std::pair<std::vector<double>, std::vector<double>> out;
  for (const auto& row : rows) {
    if (ix >= row.size() || iy >= row.size() || row[ix].empty() || row[iy].empty()) continue;
    out.first.push_back(std::stod(row[ix]));
    out.second.push_back(std::stod(row[iy]));
  }
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.comments.push_back(line);
    } else if (!have_header) {
      table.columns = split_line(line);
      have_header = true;
    } else {
      table.rows.push_back(split_line(line));
    }
  }
  if (!have_header) throw std::invalid_argument("CSV has no header line");
  return table;
}

std::string scatter_svg(const std::vector<double>& xs, const std::vector<double>& ys, const ScatterOptions& options) {
  if (xs.size() != ys.size()) throw std::invalid_argument("scatter needs equal-length columns");
  const double left = 70.0;
  const double right = 20.0;
  const double top = 40.0;
  const double bottom = 60.0;
  const double w = options.width - left - right;
  const double h = options.height - top - bottom;

  auto range = [](const std::vector<double>& v) {
    if (v.empty()) return std::pair{0.0, 1.0};
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    double a = *lo;
    double b = *hi;
    if (a == b) {
      a -= 0.5;
      b += 0.5;
    }
    const double pad = 0.05 * (b - a);
    return std::pair{a - pad, b + pad};
  };
  const auto [x0, x1] = range(xs);
  const auto [y0, y1] = range(ys);
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * w; };
  auto py = [&](double y) { return top + h - (y - y0) / (y1 - y0) * h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << options.width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(options.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    svg << "<text x=\"" << format_number(px(fx)) << "\" y=\"" << format_number(top + h + 18)
        << "\" text-anchor=\"middle\">" << format_number(std::round(fx * 1e4) / 1e4) << "</text>\n";
    svg << "<text x=\"" << format_number(left - 6) << "\" y=\"" << format_number(py(fy) + 4)
        << "\" text-anchor=\"end\">" << format_number(std::round(fy * 1e4) / 1e4) << "</text>\n";
  }
  svg << "<text x=\"" << format_number(left + w / 2) << "\" y=\"" << options.height - 16
      << "\" text-anchor=\"middle\">" << xml_escape(options.x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << format_number(top + h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(options.y_label) << "</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "<circle cx=\"" << format_number(px(xs[i])) << "\" cy=\"" << format_number(py(ys[i]))
        << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace flatprior
