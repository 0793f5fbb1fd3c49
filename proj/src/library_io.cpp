/*
 * Copyright 2026 The ccs-forge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "library_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "error.hpp"
#include "textio.hpp"

namespace ccsforge::library {

namespace fs = std::filesystem;
using textio::format_double;

namespace {

void check_table(const CcsTable& t, std::size_t n) {
  if (t.times.size() != n || t.currents.size() != n) {
    fail(ErrorKind::Schema, "table for " + waveform::describe(t.condition) + " has " +
                                std::to_string(t.times.size()) + " times and " +
                                std::to_string(t.currents.size()) + " values, expected " +
                                std::to_string(n));
  }
  for (std::size_t j = 1; j < n; ++j) {
    if (!(t.times[j] > t.times[j - 1])) {
      fail(ErrorKind::Schema, "index_1 not strictly increasing at position " + std::to_string(j) +
                                  " for " + waveform::describe(t.condition));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(t.times[j]) || !std::isfinite(t.currents[j])) {
      fail(ErrorKind::Schema, "non-finite entry for " + waveform::describe(t.condition));
    }
  }
  if (!std::isfinite(t.reference_time)) {
    fail(ErrorKind::Schema, "non-finite reference_time for " + waveform::describe(t.condition));
  }
}

void append_list(std::string& out, const char* key, const std::vector<double>& v) {
  out += "    ";
  out += key;
  out += " (";
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) out += ", ";
    out += format_double(v[j]);
  }
  out += ");\n";
}

// ---- tokenizer ---------------------------------------------------------

struct Token {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
  std::size_t offset = 0;
};

bool is_punct(char c) {
  return c == '{' || c == '}' || c == '(' || c == ')' || c == ';' || c == '=' || c == ',';
}

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t col = 1;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++col;
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t{{}, line, col, i};
    if (is_punct(c)) {
      t.text = std::string(1, c);
      ++i;
      ++col;
    } else {
      std::size_t j = i;
      while (j < s.size() && !is_punct(s[j]) && s[j] != ' ' && s[j] != '\t' && s[j] != '\r' &&
             s[j] != '\n' && s[j] != '#') {
        ++j;
      }
      t.text = s.substr(i, j - i);
      col += j - i;
      i = j;
    }
    out.push_back(std::move(t));
  }
  return out;
}

class Parser {
 public:
  Parser(const std::string& text) : text_(text), toks_(tokenize(text)) {
    // Line count for end-of-input messages.
    eof_line_ = 1 + static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }

  bool done() const { return pos_ >= toks_.size(); }

  const Token& peek() {
    if (done()) truncated("more input");
    return toks_[pos_];
  }

  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }

  void expect(const std::string& s) {
    Token t = next();
    if (t.text != s) error(t, "expected '" + s + "', found '" + t.text + "'");
  }

  [[noreturn]] void error(const Token& t, const std::string& msg) {
    fail(ErrorKind::Parse,
         "line " + std::to_string(t.line) + ", column " + std::to_string(t.column) + ": " + msg);
  }

  [[noreturn]] void truncated(const std::string& what) {
    fail(ErrorKind::Parse, "line " + std::to_string(eof_line_) +
                               ": unexpected end of input, expected " + what);
  }

  double number() {
    Token t = next();
    auto v = textio::parse_double(t.text);
    if (!v || !std::isfinite(*v)) error(t, "expected a number, found '" + t.text + "'");
    return *v;
  }

  long long integer() {
    Token t = next();
    auto v = textio::parse_int(t.text);
    if (!v) error(t, "expected an integer, found '" + t.text + "'");
    return *v;
  }

  std::vector<double> number_list() {
    expect("(");
    std::vector<double> out;
    if (peek().text == ")") {
      next();
      return out;
    }
    for (;;) {
      out.push_back(number());
      Token t = next();
      if (t.text == ")") break;
      if (t.text != ",") error(t, "expected ',' or ')', found '" + t.text + "'");
    }
    return out;
  }

  std::size_t offset_after_previous() const {
    const Token& t = toks_[pos_ - 1];
    return t.offset + t.text.size();
  }

 private:
  const std::string& text_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t eof_line_ = 1;
};

CcsTable parse_arc(Parser& p, const std::string& cell, std::size_t n) {
  CcsTable t;
  t.condition.cell_type = cell;
  std::set<std::string> seen;
  const Token open = p.peek();
  p.expect("{");
  while (p.peek().text != "}") {
    Token key = p.next();
    if (!seen.insert(key.text).second) p.error(key, "duplicate key '" + key.text + "'");
    if (key.text == "index_1" || key.text == "values") {
      auto v = p.number_list();
      (key.text == "index_1" ? t.times : t.currents) = std::move(v);
      p.expect(";");
      continue;
    }
    if (key.text == "drive_strength" || key.text == "arc_id") {
      p.expect("=");
      Token at = p.peek();
      long long v = p.integer();
      if (v < (key.text == "arc_id" ? 0 : 1) || v > 1'000'000) p.error(at, "out-of-range " + key.text);
      (key.text == "arc_id" ? t.condition.arc_id : t.condition.drive_strength) = static_cast<int>(v);
    } else if (key.text == "process") {
      p.expect("=");
      Token v = p.next();
      if (is_punct(v.text[0])) p.error(v, "expected a process label, found '" + v.text + "'");
      t.condition.process = v.text;
    } else if (key.text == "voltage" || key.text == "temperature" || key.text == "slew" ||
               key.text == "load" || key.text == "reference_time") {
      p.expect("=");
      double v = p.number();
      if (key.text == "voltage") t.condition.voltage = v;
      else if (key.text == "temperature") t.condition.temperature = v;
      else if (key.text == "slew") t.condition.input_slew = v;
      else if (key.text == "load") t.condition.output_load = v;
      else t.reference_time = v;
    } else {
      p.error(key, "unknown key '" + key.text + "'");
    }
    p.expect(";");
  }
  p.next();  // '}'
  static const char* required[] = {"drive_strength", "process", "voltage", "temperature",
                                   "arc_id",         "slew",    "load",    "reference_time",
                                   "index_1",        "values"};
  for (const char* k : required) {
    if (!seen.count(k)) p.error(open, std::string("arc is missing '") + k + "'");
  }
  if (t.times.size() != n || t.currents.size() != n) {
    fail(ErrorKind::Schema, "line " + std::to_string(open.line) + ": arc lists have " +
                                std::to_string(t.times.size()) + " and " +
                                std::to_string(t.currents.size()) + " entries, header says n = " +
                                std::to_string(n));
  }
  check_table(t, n);
  return t;
}

}  // namespace

std::vector<CcsTable> library_order(std::span<const CcsTable> tables) {
  std::vector<std::string> order;
  for (const auto& t : tables) {
    if (std::find(order.begin(), order.end(), t.condition.cell_type) == order.end()) {
      order.push_back(t.condition.cell_type);
    }
  }
  std::vector<CcsTable> out;
  out.reserve(tables.size());
  for (const auto& name : order) {
    for (const auto& t : tables) {
      if (t.condition.cell_type == name) out.push_back(t);
    }
  }
  return out;
}

std::string format_ccs_library(std::span<const CcsTable> tables) {
  if (tables.empty()) fail(ErrorKind::Schema, "no tables to export");
  const std::size_t n = tables.front().times.size();
  if (n < 2) fail(ErrorKind::Schema, "tables need at least two points");
  std::set<waveform::Condition> keys;
  for (const auto& t : tables) {
    check_table(t, n);
    if (t.condition.cell_type.empty() || t.condition.process.empty()) {
      fail(ErrorKind::Schema, "table with empty cell type or process label");
    }
    if (!keys.insert(t.condition).second) {
      fail(ErrorKind::Duplicate, "two tables for " + waveform::describe(t.condition));
    }
  }

  std::string out = "ccs_library v1 {\n  n = " + std::to_string(n) + ";\n}\n";
  const auto ordered = library_order(tables);
  std::size_t i = 0;
  while (i < ordered.size()) {
    const std::string& cell = ordered[i].condition.cell_type;
    out += "cell (" + cell + ") {\n";
    for (; i < ordered.size() && ordered[i].condition.cell_type == cell; ++i) {
      const auto& t = ordered[i];
      const auto& c = t.condition;
      out += "  arc {\n";
      out += "    drive_strength = " + std::to_string(c.drive_strength) + ";\n";
      out += "    process = " + c.process + ";\n";
      out += "    voltage = " + format_double(c.voltage) + ";\n";
      out += "    temperature = " + format_double(c.temperature) + ";\n";
      out += "    arc_id = " + std::to_string(c.arc_id) + ";\n";
      out += "    slew = " + format_double(c.input_slew) + ";\n";
      out += "    load = " + format_double(c.output_load) + ";\n";
      out += "    reference_time = " + format_double(t.reference_time) + ";\n";
      append_list(out, "index_1", t.times);
      append_list(out, "values", t.currents);
      out += "  }\n";
    }
    out += "}\n";
  }
  return out;
}

std::vector<CcsTable> parse_ccs_library(const std::string& text, LibraryLayout* layout) {
  Parser p(text);
  Token head = p.next();
  if (head.text != "ccs_library") p.error(head, "expected 'ccs_library'");
  Token ver = p.next();
  if (ver.text != "v1") p.error(ver, "unsupported version '" + ver.text + "'");
  p.expect("{");
  Token nkey = p.next();
  if (nkey.text != "n") p.error(nkey, "unknown key '" + nkey.text + "'");
  p.expect("=");
  Token nt = p.peek();
  long long n = p.integer();
  if (n < 2 || n > 1'000'000) p.error(nt, "n out of range");
  p.expect(";");
  p.expect("}");

  std::vector<CcsTable> out;
  std::set<waveform::Condition> keys;
  std::map<std::string, std::size_t> index;
  LibraryLayout lay;
  std::size_t cell_total = 0;
  while (!p.done()) {
    Token kw = p.next();
    if (kw.text != "cell") p.error(kw, "expected 'cell', found '" + kw.text + "'");
    p.expect("(");
    Token name = p.next();
    if (is_punct(name.text[0])) p.error(name, "expected a cell name");
    p.expect(")");
    p.expect("{");
    while (p.peek().text != "}") {
      Token a = p.next();
      if (a.text != "arc") p.error(a, "unknown key '" + a.text + "'");
      CcsTable t = parse_arc(p, name.text, static_cast<std::size_t>(n));
      if (!keys.insert(t.condition).second) {
        fail(ErrorKind::Duplicate, "line " + std::to_string(a.line) + ": second table for " +
                                       waveform::describe(t.condition));
      }
      out.push_back(std::move(t));
    }
    p.next();
    std::size_t end = p.offset_after_previous();
    // A block owns its trailing newline.
    if (end < text.size() && text[end] == '\n') ++end;
    std::size_t bytes = end - kw.offset;
    cell_total += bytes;
    auto it = index.find(name.text);
    if (it == index.end()) {
      index.emplace(name.text, lay.cell_bytes.size());
      lay.cell_bytes.emplace_back(name.text, bytes);
    } else {
      lay.cell_bytes[it->second].second += bytes;
    }
  }
  lay.other_bytes = text.size() - cell_total;
  if (layout) *layout = std::move(lay);
  return out;
}

void export_ccs_library(std::span<const CcsTable> tables, const fs::path& path) {
  const std::string text = format_ccs_library(tables);
  try {
    textio::write_file_atomic(path, text);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& ex) {
    fail(ErrorKind::Io, "cannot write " + path.string() + ": " + ex.what());
  }
}

std::vector<CcsTable> import_ccs_library(const fs::path& path) {
  return parse_ccs_library(textio::read_file(path));
}

// ---- storage -----------------------------------------------------------

namespace {

std::size_t file_bytes(const fs::path& p) {
  std::error_code ec;
  auto size = fs::file_size(p, ec);
  if (ec) fail(ErrorKind::Io, "cannot stat " + p.string() + ": " + ec.message());
  return static_cast<std::size_t>(size);
}

}  // namespace

StorageReport storage_report(const fs::path& lut_path,
                             std::span<const std::pair<std::string, fs::path>> models) {
  StorageReport r;
  r.lut_bytes = file_bytes(lut_path);
  LibraryLayout lay;
  const std::string text = textio::read_file(lut_path);
  if (text.size() != r.lut_bytes) fail(ErrorKind::Io, lut_path.string() + " changed while reading");
  parse_ccs_library(text, &lay);

  std::map<std::string, std::size_t> row_of;
  for (const auto& [name, bytes] : lay.cell_bytes) {
    row_of.emplace(name, r.rows.size());
    r.rows.push_back({name, bytes, 0});
  }
  std::size_t other_model = 0;
  for (const auto& [cell, path] : models) {
    std::size_t b = file_bytes(path);
    r.model_bytes += b;
    auto it = row_of.find(cell);
    if (it == row_of.end()) {
      row_of.emplace(cell, r.rows.size());
      r.rows.push_back({cell, 0, b});
    } else {
      r.rows[it->second].model_bytes += b;
    }
  }
  r.rows.push_back({"(other)", lay.other_bytes, other_model});
  if (r.model_bytes == 0) fail(ErrorKind::Io, "no model bytes to compare against");
  r.ratio = static_cast<double>(r.lut_bytes) / static_cast<double>(r.model_bytes);
  return r;
}

std::string format_storage(const StorageReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %14s %14s %10s\n", "cell", "lut_bytes", "model_bytes",
                "ratio");
  os << buf;
  auto row = [&](const std::string& name, std::size_t l, std::size_t m) {
    if (m > 0) {
      std::snprintf(buf, sizeof buf, "%-12s %14zu %14zu %10.3f\n", name.c_str(), l, m,
                    static_cast<double>(l) / static_cast<double>(m));
    } else {
      std::snprintf(buf, sizeof buf, "%-12s %14zu %14zu %10s\n", name.c_str(), l, m, "-");
    }
    os << buf;
  };
  for (const auto& x : r.rows) row(x.name, x.lut_bytes, x.model_bytes);
  row("total", r.lut_bytes, r.model_bytes);
  os << "LUT baseline: this tool's ccs_library v1 text format at 17 significant digits.\n";
  return os.str();
}

// ---- accuracy ----------------------------------------------------------

namespace {

struct SampleResult {
  bool delay_ok = false;
  double abs_err = 0.0;
  bool in_mape = false;
  double rel_err = 0.0;
  double vrmse = 0.0;
};

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

AccuracyRow aggregate(const std::string& name, const std::vector<SampleResult>& rs) {
  AccuracyRow row;
  row.cell_type = name;
  row.samples = rs.size();
  std::vector<double> abs, rel, vr;
  for (const auto& r : rs) {
    vr.push_back(r.vrmse);
    if (!r.delay_ok) {
      ++row.failures;
      continue;
    }
    abs.push_back(r.abs_err);
    if (r.in_mape) rel.push_back(r.rel_err);
  }
  row.delay_samples = abs.size();
  row.mape_samples = rel.size();
  row.delay_mae = abs.empty() ? 0.0 : sorted_sum(abs) / static_cast<double>(abs.size());
  row.delay_mape = rel.empty() ? 0.0 : sorted_sum(rel) / static_cast<double>(rel.size());
  row.voltage_rmse = vr.empty() ? 0.0 : sorted_sum(vr) / static_cast<double>(vr.size());
  return row;
}

// Weighted recombination of per-cell rows; sums are formed from sorted
// per-row totals so the result does not depend on row order.
AccuracyRow combine(std::span<const AccuracyRow> rows) {
  AccuracyRow all;
  all.cell_type = "all";
  std::vector<double> abs, rel, vr;
  for (const auto& r : rows) {
    all.samples += r.samples;
    all.delay_samples += r.delay_samples;
    all.mape_samples += r.mape_samples;
    all.failures += r.failures;
    abs.push_back(r.delay_mae * static_cast<double>(r.delay_samples));
    rel.push_back(r.delay_mape * static_cast<double>(r.mape_samples));
    vr.push_back(r.voltage_rmse * static_cast<double>(r.samples));
  }
  auto div = [](double s, std::size_t c) { return c ? s / static_cast<double>(c) : 0.0; };
  all.delay_mae = div(sorted_sum(abs), all.delay_samples);
  all.delay_mape = div(sorted_sum(rel), all.mape_samples);
  all.voltage_rmse = div(sorted_sum(vr), all.samples);
  return all;
}

}  // namespace

AccuracyReport accuracy_report(const gpr::GprEnsemble& e, const waveform::Dataset& holdout,
                               const al::ElectricalFn& electrical, bool allow_overlap) {
  if (holdout.samples.empty()) fail(ErrorKind::EmptyDataset, "holdout set is empty");
  if (holdout.n != e.n) {
    fail(ErrorKind::Dimension, "holdout has n = " + std::to_string(holdout.n) +
                                   ", model has n = " + std::to_string(e.n));
  }
  const auto conds = holdout.conditions();

  if (!allow_overlap) {
    // Training rows are stored normalized; the same transform applied to a
    // holdout condition reproduces a training row bit for bit.
    std::set<std::vector<double>> train;
    const auto& x = *e.inputs;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(x.cols()));
      for (Eigen::Index c = 0; c < x.cols(); ++c) row[static_cast<std::size_t>(c)] = x(r, c);
      train.insert(std::move(row));
    }
    for (const auto& c : conds) {
      auto enc = waveform::encode_condition(c, e.schema);
      Eigen::VectorXd z = e.features.apply_row(enc);
      std::vector<double> row(z.data(), z.data() + z.size());
      if (train.count(row)) {
        fail(ErrorKind::Leakage, "holdout condition is a training row: " + waveform::describe(c));
      }
    }
  }

  const auto preds = gpr::predict_waveforms(e, conds, false);
  std::vector<std::string> order;
  std::map<std::string, std::vector<SampleResult>> by_cell;
  for (std::size_t s = 0; s < conds.size(); ++s) {
    const auto& c = conds[s];
    const auto el = electrical(c);
    const auto& truth_i = holdout.samples[s].waveform;
    const auto pred_i = preds[s].mean_waveform();
    const auto vt = waveform::current_to_voltage(truth_i, el.load, el.direction, el.vdd);
    const auto vp = waveform::current_to_voltage(pred_i, el.load, el.direction, el.vdd);
    SampleResult r;
    r.vrmse = waveform::align_rmse(vp, vt);
    const double t_end = std::max(truth_i.times().back(), pred_i.times().back());
    const auto vin = waveform::input_ramp(c, t_end);
    const double d_true = waveform::extract_delay(vin, vt);
    try {
      const double d_pred = waveform::extract_delay(vin, vp);
      r.delay_ok = true;
      r.abs_err = std::abs(d_pred - d_true);
      if (std::abs(d_true) >= kMapeFloor) {
        r.in_mape = true;
        r.rel_err = r.abs_err / std::abs(d_true);
      }
    } catch (const Error& ex) {
      if (ex.kind() != ErrorKind::AmbiguousCrossing && ex.kind() != ErrorKind::NoOverlap) throw;
    }
    if (!by_cell.count(c.cell_type)) order.push_back(c.cell_type);
    by_cell[c.cell_type].push_back(r);
  }

  AccuracyReport rep;
  std::sort(order.begin(), order.end());
  for (const auto& name : order) rep.rows.push_back(aggregate(name, by_cell[name]));
  rep.rows.push_back(combine(rep.rows));
  return rep;
}

AccuracyReport merge_accuracy(std::span<const AccuracyReport> parts) {
  AccuracyReport out;
  for (const auto& p : parts) {
    for (const auto& r : p.rows) {
      if (r.cell_type != "all") out.rows.push_back(r);
    }
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const AccuracyRow& a, const AccuracyRow& b) { return a.cell_type < b.cell_type; });
  out.rows.push_back(combine(out.rows));
  return out;
}

std::string format_accuracy_csv(const AccuracyReport& r) {
  std::string out =
      "cell_type,samples,delay_samples,mape_samples,failures,delay_mae_s,delay_mape,voltage_rmse_v\n";
  for (const auto& x : r.rows) {
    out += x.cell_type + "," + std::to_string(x.samples) + "," + std::to_string(x.delay_samples) +
           "," + std::to_string(x.mape_samples) + "," + std::to_string(x.failures) + "," +
           format_double(x.delay_mae) + "," + format_double(x.delay_mape) + "," +
           format_double(x.voltage_rmse) + "\n";
  }
  return out;
}

std::string format_accuracy_summary(const AccuracyReport& r) {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-8s %8s %14s %10s %14s %9s\n", "cell", "samples",
                "delay MAE ps", "MAPE %", "V RMSE mV", "failures");
  os << buf;
  for (const auto& x : r.rows) {
    std::snprintf(buf, sizeof buf, "%-8s %8zu %14.4f %10.3f %14.4f %9zu\n", x.cell_type.c_str(),
                  x.samples, x.delay_mae * 1e12, x.delay_mape * 100.0, x.voltage_rmse * 1e3,
                  x.failures);
    os << buf;
  }
  return os.str();
}

}  // namespace ccsforge::library
