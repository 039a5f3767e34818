#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hetfuse/common.hpp"
#include "hetfuse/dataset.hpp"

namespace hetfuse {

/// Anisotropic Gaussian-kernel scales. Optimization and storage use
/// log10(phi); phi itself is always strictly positive.
struct KernelParams {
  Eigen::VectorXd log10_phi;

  Eigen::VectorXd phi() const;
  static KernelParams from_phi(const Eigen::VectorXd& phi);
  int dim() const { return static_cast<int>(log10_phi.size()); }
};

struct GpConfig {
  int restarts = 8;
  long max_evals_per_restart = 500;
  std::uint64_t seed = 0;
  double log10_phi_lo = -6.0;
  double log10_phi_hi = 4.0;
  double nugget_init = 1e-8;
  double nugget_max = 1e-3;
};

struct OptimizerSummary {
  int restarts = 0;
  int best_index = 0;
  long evals = 0;
  std::vector<double> restart_nll;
};

/// Trained GP with profiled constant mean and process variance. X_train and
/// y_train live in the model's normalized spaces; the attached standardizer
/// and output scaler translate raw queries and predictions.
struct GpModel {
  double mu = 0.0;
  double sigma2 = 1.0;
  KernelParams params;
  Eigen::MatrixXd X_train;
  Eigen::VectorXd y_train;
  double nugget = 0.0;
  Eigen::MatrixXd chol;  // lower factor of C + nugget*I
  Standardizer input_std;
  OutputScaler output;
  std::uint64_t seed = 0;
  OptimizerSummary trace;
  std::string input_space;  // routing tag: "original:<id>" or "fused:<ref>"
  std::string role;         // e.g. "reference_gp", "fused_gp", "single_source_gp"
  std::vector<std::string> input_names;

  // solver caches, rebuilt by finalize_cache(); not serialized
  Eigen::VectorXd alpha;       // C^{-1}(y - mu 1)
  Eigen::VectorXd ones_white;  // L^{-1} 1
  double one_cinv_one = 0.0;   // 1' C^{-1} 1

  int n() const { return static_cast<int>(X_train.rows()); }
  int dim() const { return static_cast<int>(X_train.cols()); }
  void finalize_cache();
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

/// exp(-sum_i phi_i (w_i - w2_i)^2); in (0,1], exactly symmetric.
double correlation(const Eigen::VectorXd& w, const Eigen::VectorXd& w2, const KernelParams& params);

/// C_ij = c(x_i, x_j) with a unit-plus-nugget diagonal; exactly symmetric.
Eigen::MatrixXd build_correlation_matrix(const Eigen::MatrixXd& X, const KernelParams& params,
                                         double nugget);

struct CholFactor {
  Eigen::MatrixXd L;
  double nugget = 0.0;
};

/// Cholesky of C0 + nugget*I where C0 carries a unit diagonal. On failure
/// the nugget escalates x10 (from 1e-8 when starting at zero) up to
/// nugget_max, then errors.
CholFactor cholesky_with_escalation(const Eigen::MatrixXd& C0, double nugget_init, double nugget_max);

/// Profiled negative log-likelihood: the mean and process variance are
/// replaced by their closed-form maximizers before evaluation.
double neg_log_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, double nugget_init = 1e-8,
                          double nugget_max = 1e-3);


/// Multi-start MLE over log10(phi). X and y are expected standardized; the
/// returned model carries identity scalers until a caller attaches real ones.
GpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& cfg);

/// Builds a model at fixed kernel scales (no optimization).
GpModel gp_with_params(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const KernelParams& params, const GpConfig& cfg = {});

/// Kriging predictor with the estimated-mean variance correction. Inputs are
/// raw; means/variances come back de-standardized.
Prediction predict(const GpModel& model, const Eigen::MatrixXd& Xq);

/// Same predictor on already-normalized inputs, returning standardized
/// means/variances.
Prediction predict_normalized(const GpModel& model, const Eigen::MatrixXd& Xq_norm);

/// Mean-only fast path on normalized inputs (skips the variance solves).
Eigen::VectorXd predict_mean_normalized(const GpModel& model, const Eigen::MatrixXd& Xq_norm);

void save_gp(const GpModel& model, const std::string& path);
GpModel load_gp(const std::string& path);

}  // namespace hetfuse
