#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causal {

/// Units (x, a, y) with a common covariate dimension. Immutable once built;
/// construction validates every invariant and throws causal::Error otherwise.
class ObservationalDataset {
 public:
  ObservationalDataset() = default;

  /// `covariates` is row-major with n * d entries; d may be zero.
  ObservationalDataset(std::size_t d, std::vector<double> covariates, std::vector<int> treatment,
                       std::vector<double> outcome, std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return treatment_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return treatment_.empty(); }

  std::span<const double> x(std::size_t i) const { return {covariates_.data() + i * dim_, dim_}; }
  double x(std::size_t i, std::size_t j) const { return covariates_[i * dim_ + j]; }
  int a(std::size_t i) const { return treatment_[i]; }
  double y(std::size_t i) const { return outcome_[i]; }

  std::span<const double> covariates() const noexcept { return covariates_; }
  std::span<const int> treatment() const noexcept { return treatment_; }
  std::span<const double> outcome() const noexcept { return outcome_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  std::size_t treated_count() const;
  std::size_t control_count() const { return size() - treated_count(); }

  /// Same units, outcomes replaced.
  ObservationalDataset with_outcome(std::vector<double> outcome) const;

  /// Units at the given indices, in that order.
  ObservationalDataset subset(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> covariates_;
  std::vector<int> treatment_;
  std::vector<double> outcome_;
  std::vector<std::string> names_;
};

/// Potential outcomes of a simulated dataset.
struct GroundTruth {
  std::vector<double> y1;
  std::vector<double> y0;
  std::vector<double> propensity;  // true P(A=1|X); empty when not applicable
  double true_ate = 0.0;

  /// Builds from potential outcomes and sets true_ate = mean(y1) - mean(y0).
  static GroundTruth from_potential_outcomes(std::vector<double> y1, std::vector<double> y0,
                                             std::vector<double> propensity = {});

  /// Throws unless sizes match and y = a*y1 + (1-a)*y0 holds exactly.
  void check_consistency(const ObservationalDataset& data) const;
};

/// Result of an ATE-type estimator.
struct AteEstimate {
  std::string method;
  double psi_hat = 0.0;
  std::optional<std::vector<double>> eif;
  std::optional<double> se;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::size_t n = 0;

  struct Diagnostics {
    std::optional<std::size_t> clip_count;
    std::optional<std::size_t> unmatched_count;
    std::vector<double> fold_means;
    std::optional<double> fold_mean_average;
    std::optional<double> psi1;
    std::optional<double> psi0;
  } diagnostics;
};

struct PanelRecord {
  std::int64_t unit = 0;
  std::int64_t period = 0;
  int a = 0;
  double y = 0.0;
  int group = 0;
};

/// Long-format panel with unique (unit, period) pairs.
class PanelDataset {
 public:
  PanelDataset() = default;
  explicit PanelDataset(std::vector<PanelRecord> records);

  std::span<const PanelRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  /// Sorted distinct periods / units.
  std::vector<std::int64_t> periods() const;
  std::vector<std::int64_t> units() const;

  PanelDataset with_outcome(std::vector<double> outcome) const;

 private:
  std::vector<PanelRecord> records_;
};

struct IvRecord {
  int z = 0;
  int a = 0;
  double y = 0.0;
  std::vector<double> x;
};

class IvDataset {
 public:
  IvDataset() = default;
  IvDataset(std::vector<IvRecord> records, std::vector<std::string> covariate_names = {});

  std::span<const IvRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

  IvDataset with_outcome(std::vector<double> outcome) const;
  IvDataset with_covariates(std::vector<std::vector<double>> covariates,
                            std::vector<std::string> names) const;

 private:
  std::vector<IvRecord> records_;
  std::size_t dim_ = 0;
  std::vector<std::string> names_;
};

struct Summary {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t treated = 0;
  std::size_t control = 0;
  std::optional<double> treated_mean;
  std::optional<double> control_mean;
};

Summary summarize(const ObservationalDataset& data);

// CSV ingestion. Comma separated, header row, '.' decimals.

struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
};

struct PanelSchema {
  std::string unit = "unit";
  std::string period = "period";
  std::string treatment = "a";
  std::string outcome = "y";
  std::string group = "group";
};

struct IvSchema {
  std::string instrument = "z";
  std::string treatment = "a";
  std::string outcome = "y";
  std::vector<std::string> covariates;
};

/// Header names plus numeric rows; every data row must have one cell per column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of `name`; Schema error if missing.
  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv_table(const std::filesystem::path& path);

ObservationalDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
ObservationalDataset dataset_from_table(const CsvTable& table, const CsvSchema& schema);
PanelDataset load_panel_csv(const std::filesystem::path& path, const PanelSchema& schema = {});
IvDataset load_iv_csv(const std::filesystem::path& path, const IvSchema& schema);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

std::string to_csv(const ObservationalDataset& data, const CsvSchema& schema);
std::string to_csv(const PanelDataset& panel, const PanelSchema& schema = {});
std::string to_csv(const IvDataset& iv, const IvSchema& schema);

void write_text_file(const std::filesystem::path& path, std::string_view text);
void write_csv(const ObservationalDataset& data, const CsvSchema& schema,
               const std::filesystem::path& path);

}  // namespace causal
