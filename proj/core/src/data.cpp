#include "causal/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "causal/error.hpp"

namespace causal {

namespace {

void require_finite(double v, const char* what, std::size_t row) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Validation,
                std::string("non-finite ") + what + " at unit " + std::to_string(row));
  }
}

void require_binary(int v, const char* what, std::size_t row) {
  if (v != 0 && v != 1) {
    throw Error(ErrorKind::Validation, std::string(what) + " must be 0 or 1 at unit " +
                                           std::to_string(row) + " (got " + std::to_string(v) + ")");
  }
}

int to_binary(double v, const std::string& column, std::size_t row) {
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorKind::Validation, "column '" + column + "' must be 0 or 1 at row " +
                                           std::to_string(row) + " (got " + format_double(v) + ")");
  }
  return static_cast<int>(v);
}

std::int64_t to_integer(double v, const std::string& column, std::size_t row) {
  if (std::trunc(v) != v || std::abs(v) > 9.0e15) {
    throw Error(ErrorKind::Validation, "column '" + column + "' must hold integers at row " +
                                           std::to_string(row));
  }
  return static_cast<std::int64_t>(v);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::Parse, "non-numeric cell '" + std::string(cell) + "' in column '" +
                                      column + "' at row " + std::to_string(row));
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::Validation, "non-finite value in column '" + column + "' at row " +
                                           std::to_string(row));
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// ObservationalDataset

ObservationalDataset::ObservationalDataset(std::size_t d, std::vector<double> covariates,
                                           std::vector<int> treatment, std::vector<double> outcome,
                                           std::vector<std::string> covariate_names)
    : dim_(d),
      covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      names_(std::move(covariate_names)) {
  const std::size_t n = treatment_.size();
  if (outcome_.size() != n) {
    throw Error(ErrorKind::Validation, "outcome length differs from treatment length");
  }
  if (covariates_.size() != n * dim_) {
    throw Error(ErrorKind::Validation, "covariate table must hold n*d values");
  }
  if (names_.empty()) {
    for (std::size_t j = 0; j < dim_; ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (names_.size() != dim_) {
    throw Error(ErrorKind::Validation, "covariate name count differs from dimension");
  }
  for (std::size_t i = 0; i < n; ++i) {
    require_binary(treatment_[i], "treatment", i);
    require_finite(outcome_[i], "outcome", i);
    for (std::size_t j = 0; j < dim_; ++j) require_finite(covariates_[i * dim_ + j], "covariate", i);
  }
}

std::size_t ObservationalDataset::treated_count() const {
  return static_cast<std::size_t>(std::count(treatment_.begin(), treatment_.end(), 1));
}

ObservationalDataset ObservationalDataset::with_outcome(std::vector<double> outcome) const {
  return ObservationalDataset(dim_, covariates_, treatment_, std::move(outcome), names_);
}

ObservationalDataset ObservationalDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> cov;
  std::vector<int> a;
  std::vector<double> y;
  cov.reserve(indices.size() * dim_);
  a.reserve(indices.size());
  y.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto xi = x(i);
    cov.insert(cov.end(), xi.begin(), xi.end());
    a.push_back(treatment_[i]);
    y.push_back(outcome_[i]);
  }
  return ObservationalDataset(dim_, std::move(cov), std::move(a), std::move(y), names_);
}

// ---------------------------------------------------------------------------
// GroundTruth

GroundTruth GroundTruth::from_potential_outcomes(std::vector<double> y1, std::vector<double> y0,
                                                 std::vector<double> propensity) {
  if (y1.size() != y0.size()) throw Error(ErrorKind::Validation, "y1 and y0 lengths differ");
  GroundTruth truth;
  double s1 = 0.0;
  double s0 = 0.0;
  for (std::size_t i = 0; i < y1.size(); ++i) {
    s1 += y1[i];
    s0 += y0[i];
  }
  if (!y1.empty()) {
    const auto n = static_cast<double>(y1.size());
    truth.true_ate = s1 / n - s0 / n;
  }
  truth.y1 = std::move(y1);
  truth.y0 = std::move(y0);
  truth.propensity = std::move(propensity);
  return truth;
}

void GroundTruth::check_consistency(const ObservationalDataset& data) const {
  if (y1.size() != data.size() || y0.size() != data.size()) {
    throw Error(ErrorKind::Validation, "ground truth length differs from dataset size");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double expected = data.a(i) == 1 ? y1[i] : y0[i];
    if (expected != data.y(i)) {
      throw Error(ErrorKind::Validation, "consistency violated at unit " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// PanelDataset

PanelDataset::PanelDataset(std::vector<PanelRecord> records) : records_(std::move(records)) {
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::map<std::int64_t, int> unit_group;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    require_binary(r.a, "treatment", i);
    require_binary(r.group, "group", i);
    require_finite(r.y, "outcome", i);
    if (!seen.emplace(r.unit, r.period).second) {
      throw Error(ErrorKind::Validation, "duplicate (unit, period) = (" + std::to_string(r.unit) +
                                             ", " + std::to_string(r.period) + ")");
    }
    const auto [it, inserted] = unit_group.emplace(r.unit, r.group);
    if (!inserted && it->second != r.group) {
      throw Error(ErrorKind::Validation, "group flag changes within unit " + std::to_string(r.unit));
    }
  }
}

std::vector<std::int64_t> PanelDataset::periods() const {
  std::set<std::int64_t> s;
  for (const auto& r : records_) s.insert(r.period);
  return {s.begin(), s.end()};
}

std::vector<std::int64_t> PanelDataset::units() const {
  std::set<std::int64_t> s;
  for (const auto& r : records_) s.insert(r.unit);
  return {s.begin(), s.end()};
}

PanelDataset PanelDataset::with_outcome(std::vector<double> outcome) const {
  if (outcome.size() != records_.size()) {
    throw Error(ErrorKind::Validation, "outcome length differs from panel size");
  }
  auto copy = records_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].y = outcome[i];
  return PanelDataset(std::move(copy));
}

// ---------------------------------------------------------------------------
// IvDataset

IvDataset::IvDataset(std::vector<IvRecord> records, std::vector<std::string> covariate_names)
    : records_(std::move(records)), names_(std::move(covariate_names)) {
  dim_ = records_.empty() ? names_.size() : records_.front().x.size();
  if (names_.empty()) {
    for (std::size_t j = 0; j < dim_; ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (names_.size() != dim_) {
    throw Error(ErrorKind::Validation, "covariate name count differs from dimension");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    require_binary(r.z, "instrument", i);
    require_binary(r.a, "treatment", i);
    require_finite(r.y, "outcome", i);
    if (r.x.size() != dim_) throw Error(ErrorKind::Validation, "ragged covariates at unit " + std::to_string(i));
    for (double v : r.x) require_finite(v, "covariate", i);
  }
}

IvDataset IvDataset::with_outcome(std::vector<double> outcome) const {
  if (outcome.size() != records_.size()) {
    throw Error(ErrorKind::Validation, "outcome length differs from dataset size");
  }
  auto copy = records_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].y = outcome[i];
  return IvDataset(std::move(copy), names_);
}

IvDataset IvDataset::with_covariates(std::vector<std::vector<double>> covariates,
                                     std::vector<std::string> names) const {
  if (covariates.size() != records_.size()) {
    throw Error(ErrorKind::Validation, "covariate rows differ from dataset size");
  }
  auto copy = records_;
  for (std::size_t i = 0; i < copy.size(); ++i) copy[i].x = std::move(covariates[i]);
  return IvDataset(std::move(copy), std::move(names));
}

// ---------------------------------------------------------------------------

Summary summarize(const ObservationalDataset& data) {
  Summary s;
  s.n = data.size();
  s.d = data.dim();
  double sum1 = 0.0;
  double sum0 = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.a(i) == 1) {
      ++s.treated;
      sum1 += data.y(i);
    } else {
      ++s.control;
      sum0 += data.y(i);
    }
  }
  if (s.treated > 0) s.treated_mean = sum1 / static_cast<double>(s.treated);
  if (s.control > 0) s.control_mean = sum0 / static_cast<double>(s.control);
  return s;
}

// ---------------------------------------------------------------------------
// CSV

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorKind::Schema, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto fields = split_fields(line);
    if (!have_header) {
      std::set<std::string> unique;
      for (auto f : fields) {
        if (!unique.emplace(f).second) {
          throw Error(ErrorKind::Schema, "duplicate column '" + std::string(f) + "'");
        }
        table.header.emplace_back(f);
      }
      have_header = true;
      continue;
    }
    ++line_no;
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::Parse, "row " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " cells, expected " +
                                        std::to_string(table.header.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_cell(fields[j], line_no, table.header[j]);
    }
    table.rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  if (!have_header) throw Error(ErrorKind::Schema, "empty CSV: no header row");
  return table;
}

CsvTable read_csv_table(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

ObservationalDataset dataset_from_table(const CsvTable& table, const CsvSchema& schema) {
  const std::size_t ia = table.column(schema.treatment);
  const std::size_t iy = table.column(schema.outcome);
  std::vector<std::size_t> ix;
  for (const auto& name : schema.covariates) ix.push_back(table.column(name));

  const std::size_t n = table.rows.size();
  std::vector<double> cov;
  cov.reserve(n * ix.size());
  std::vector<int> a(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    a[i] = to_binary(row[ia], schema.treatment, i + 1);
    y[i] = row[iy];
    for (std::size_t j : ix) cov.push_back(row[j]);
  }
  return ObservationalDataset(ix.size(), std::move(cov), std::move(a), std::move(y), schema.covariates);
}

ObservationalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return dataset_from_table(read_csv_table(path), schema);
}

PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema) {
  const CsvTable table = read_csv_table(path);
  const std::size_t iu = table.column(schema.unit);
  const std::size_t it = table.column(schema.period);
  const std::size_t ia = table.column(schema.treatment);
  const std::size_t iy = table.column(schema.outcome);
  const std::size_t ig = table.column(schema.group);
  std::vector<PanelRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    records.push_back({to_integer(row[iu], schema.unit, i + 1), to_integer(row[it], schema.period, i + 1),
                       to_binary(row[ia], schema.treatment, i + 1), row[iy],
                       to_binary(row[ig], schema.group, i + 1)});
  }
  return PanelDataset(std::move(records));
}

IvDataset load_iv_csv(const std::filesystem::path& path, const IvSchema& schema) {
  const CsvTable table = read_csv_table(path);
  const std::size_t iz = table.column(schema.instrument);
  const std::size_t ia = table.column(schema.treatment);
  const std::size_t iy = table.column(schema.outcome);
  std::vector<std::size_t> ix;
  for (const auto& name : schema.covariates) ix.push_back(table.column(name));
  std::vector<IvRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    IvRecord r{to_binary(row[iz], schema.instrument, i + 1), to_binary(row[ia], schema.treatment, i + 1),
               row[iy], {}};
    for (std::size_t j : ix) r.x.push_back(row[j]);
    records.push_back(std::move(r));
  }
  return IvDataset(std::move(records), schema.covariates);
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc()) throw Error(ErrorKind::Numerical, "cannot format double");
  return std::string(buffer, ptr);
}

std::string to_csv(const ObservationalDataset& data, const CsvSchema& schema) {
  std::vector<std::string> names = schema.covariates;
  if (names.empty()) names = data.covariate_names();
  if (names.size() != data.dim()) throw Error(ErrorKind::Schema, "covariate names differ from dimension");
  std::string out;
  for (const auto& name : names) out += name + ",";
  out += schema.treatment + "," + schema.outcome + "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out += format_double(v) + ",";
    out += std::to_string(data.a(i)) + "," + format_double(data.y(i)) + "\n";
  }
  return out;
}

std::string to_csv(const PanelDataset& panel, const PanelSchema& schema) {
  std::string out = schema.unit + "," + schema.period + "," + schema.group + "," + schema.treatment +
                    "," + schema.outcome + "\n";
  for (const auto& r : panel.records()) {
    out += std::to_string(r.unit) + "," + std::to_string(r.period) + "," + std::to_string(r.group) +
           "," + std::to_string(r.a) + "," + format_double(r.y) + "\n";
  }
  return out;
}

std::string to_csv(const IvDataset& iv, const IvSchema& schema) {
  std::vector<std::string> names = schema.covariates;
  if (names.empty()) names = iv.covariate_names();
  std::string out;
  for (const auto& name : names) out += name + ",";
  out += schema.instrument + "," + schema.treatment + "," + schema.outcome + "\n";
  for (const auto& r : iv.records()) {
    for (double v : r.x) out += format_double(v) + ",";
    out += std::to_string(r.z) + "," + std::to_string(r.a) + "," + format_double(r.y) + "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_csv(const ObservationalDataset& data, const CsvSchema& schema,
               const std::filesystem::path& path) {
  write_text_file(path, to_csv(data, schema));
}

}  // namespace causal
