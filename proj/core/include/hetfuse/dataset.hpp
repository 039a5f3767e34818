#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hetfuse/common.hpp"

namespace hetfuse {

/// One source's raw data: its own input parameterization (d columns) and
/// the output quantity shared across a fusion run.
struct SourceDataset {
  std::string source_id;
  std::vector<std::string> input_names;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::string output_name;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

/// Column-wise z-scoring with the population divisor. fit rejects constant
/// columns; fit_lenient keeps them centered with unit scale (used where a
/// degenerate column must not abort calibration).
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;

  static Standardizer fit(const Eigen::MatrixXd& X);
  static Standardizer fit_lenient(const Eigen::MatrixXd& X);
  static Standardizer identity(int d);

  int dim() const { return static_cast<int>(means.size()); }
  Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& Z) const;
};

/// Center/scale for the response. A constant response keeps scale 1 so the
/// transform stays invertible.
struct OutputScaler {
  double center = 0.0;
  double scale = 1.0;

  static OutputScaler fit(const Eigen::VectorXd& y);
  Eigen::VectorXd transform(const Eigen::VectorXd& y) const;
  Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

/// Deterministic shuffle-split; train receives ceil(fraction * n) rows.
/// Row order within each part follows the original dataset.
std::pair<SourceDataset, SourceDataset> split(const SourceDataset& ds, const SplitSpec& spec);

struct CsvSchema {
  std::vector<std::string> input_columns;
  std::string output_column;
};

/// Reads a comma-separated file (header row required, '.' decimal
/// separator). Non-numeric or non-finite cells are rejected with the
/// 1-based data row index in the message.
SourceDataset load_csv(const std::string& path, const CsvSchema& schema, const std::string& source_id);

void write_csv(const SourceDataset& ds, const std::string& path);

/// Stacked reference plus mapped rows, all in the reference source's
/// normalized input space, with the source id kept as a categorical column.
struct FusedDataset {
  Eigen::MatrixXd X;
  std::vector<std::string> s;
  Eigen::VectorXd y;
  std::string ref_source_id;
  std::vector<std::string> input_names;
  std::string output_name;

  int n() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
  std::vector<std::string> source_ids() const;  // distinct labels, sorted
  void validate() const;
};

void write_fused_csv(const FusedDataset& fused, const std::string& path);
FusedDataset load_fused_csv(const std::string& path, const std::string& ref_source_id,
                            const std::string& output_name);

struct ManifestEntry {
  std::string source_id;
  std::string csv_path;
  std::vector<std::string> input_columns;
  std::string output_column;
  std::optional<std::string> test_csv_path;
  std::optional<SplitSpec> split;  // applied when no separate test file exists
};

/// Dataset manifest: one entry per source, JSON on disk.
struct Manifest {
  std::vector<ManifestEntry> sources;

  static Manifest load(const std::string& path);
  void save(const std::string& path) const;
};

struct SourcePair {
  SourceDataset train;
  std::optional<SourceDataset> test;
};

/// Loads every manifest entry; entries without a test file but with a split
/// block are split deterministically. Relative paths resolve against
/// base_dir.
std::vector<SourcePair> load_manifest_data(const Manifest& m, const std::string& base_dir);

}  // namespace hetfuse
