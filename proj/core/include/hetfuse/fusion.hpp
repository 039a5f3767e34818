#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetfuse/dataset.hpp"
#include "hetfuse/gp.hpp"
#include "hetfuse/imc.hpp"
#include "hetfuse/lvgp.hpp"

namespace hetfuse {

/// One optimizer budget shared by the source-aware LVGP and both comparison
/// GPs, so the three models differ only in what they can express. The
/// default budget is sized for the likelihood surfaces that fused
/// multi-source data produces; they carry more local optima than a
/// single-source fit.
struct FusionConfig {
  int restarts = 64;
  long max_evals_per_restart = 1500;
  std::uint64_t seed = 0;
};

/// Source-aware LVGP on the fused data; the source id is the single
/// qualitative variable and the fusion reference anchors the latent space.
LvgpModel train_fusion(const FusedDataset& fused, const FusionConfig& cfg);

/// Source-unaware GP on the fused inputs, ignoring the labels.
GpModel train_baseline_gp(const FusedDataset& fused, const FusionConfig& cfg);

/// Plain GP on one source's original (unmapped) inputs.
GpModel train_single_source(const SourceDataset& source, const FusionConfig& cfg);

/// RMSE divided by the range of the truth values. Errors on constant truth.
double nrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// One source's held-out rows, carried in both input spaces so models are
/// always fed the space they were trained on.
struct TestSet {
  std::string source_id;
  Eigen::MatrixXd X_original;
  Eigen::MatrixXd X_mapped;  // reference-normalized; empty when unavailable
  Eigen::VectorXd y;
};

/// Routes each source's test rows: the reference is identity-embedded with
/// its training statistics, other sources go through their stored maps.
std::vector<TestSet> build_test_sets(const std::vector<SourceDataset>& tests,
                                     const std::string& ref_id, const Standardizer& ref_std,
                                     const std::vector<LinearMap>& maps);

struct TrainedModels {
  const GpModel* fused_gp = nullptr;
  const LvgpModel* fused_lvgp = nullptr;
  std::map<std::string, const GpModel*> single_source;
};

struct EvalRow {
  std::string model_kind;  // fused_gp | fused_lvgp | single_source_gp
  std::string source_id;   // set for single-source rows
  std::optional<double> train_nrmse_all;
  std::optional<double> test_nrmse_all;
  std::map<std::string, double> test_nrmse_per_source;
};

struct PredictionTable {
  std::string model_kind;
  std::string source_suffix;  // distinguishes single-source tables
  std::vector<std::string> input_names;
  std::vector<std::string> source;
  Eigen::MatrixXd inputs;
  Eigen::VectorXd y_true;
  Eigen::VectorXd y_pred;
  Eigen::VectorXd y_std;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::string ref_id;
  std::string sparse_source;  // fewest training rows; the per-source column in the text table
  std::map<std::string, int> train_sizes;
  std::map<std::string, int> test_sizes;
  std::string normalizer = "range of the evaluated truth values";
};

struct EvalResult {
  EvalReport report;
  std::vector<PredictionTable> predictions;
};

/// Fills the comparison table: pooled rows use every source's test rows,
/// per-source cells use that source's rows only. Training NRMSE re-predicts
/// the fused training rows with the fitted interpolator.
EvalResult evaluate(const TrainedModels& models, const FusedDataset* fused_train,
                    const std::vector<TestSet>& tests);

std::string render_report_text(const EvalReport& report);
void save_report_json(const EvalReport& report, const std::string& path);
void write_predictions_csv(const PredictionTable& table, const std::string& path);

}  // namespace hetfuse
