#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "hetfuse/dataset.hpp"
#include "hetfuse/gp.hpp"

namespace hetfuse {

/// Affine calibration x_ref = A x_s + b between normalized input spaces.
/// The source's own standardizer travels with the map so prediction-time
/// inputs are transformed with the calibration statistics.
struct LinearMap {
  std::string source_id;
  std::string ref_id;
  Eigen::MatrixXd A;  // d_ref x d_s
  Eigen::VectorXd b;  // d_ref
  double loss = 0.0;
  Standardizer source_std;
  std::vector<std::string> source_input_names;
  std::vector<std::string> ref_input_names;
  std::uint64_t seed = 0;

  int d_ref() const { return static_cast<int>(A.rows()); }
  int d_s() const { return static_cast<int>(A.cols()); }
};

/// Real-coded GA settings. Genes are the entries of A and b; mutation adds
/// Gaussian noise of the given sigma, candidates are clamped into the box.
struct ImcConfig {
  int population = 60;
  int generations = 200;
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  double mutation_sigma = 1.0;  // 0.1 x default box width
  double bound_lo = -5.0;
  double bound_hi = 5.0;
  int elitism = 2;
  int tournament = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rows mapped to A x + b; column count changes from d_s to d_ref.
Eigen::MatrixXd apply_map(const LinearMap& map, const Eigen::MatrixXd& Xs_norm);

/// Mean squared output mismatch against the reference surrogate, in
/// standardized output units. Xs_norm must already be standardized in the
/// source's own space.
double imc_loss(const LinearMap& map, const Eigen::MatrixXd& Xs_norm, const Eigen::VectorXd& ys,
                const GpModel& ref_gp);

struct CalibrationResult {
  LinearMap map;
  std::vector<double> trace;  // best loss per generation, starting at the initial population
};

/// GA-minimized affine map from the source's normalized inputs into the
/// reference's normalized space. The zero map is seeded into the initial
/// population and elites survive unchanged, so the returned loss never
/// exceeds either baseline. Deterministic given the seed.
CalibrationResult calibrate(const SourceDataset& source, const GpModel& ref_gp,
                            const ImcConfig& cfg);

struct MapAllResult {
  std::vector<CalibrationResult> calibrations;  // one per non-reference source, label order
  FusedDataset fused;
  GpModel ref_gp;
  std::string ref_id;
};

/// Stage 1 end to end: fits the reference GP, calibrates every other source
/// against it, and stacks reference plus mapped rows into a FusedDataset.
/// An empty ref_id auto-selects the source with the most rows (ties broken
/// by label order).
MapAllResult map_all_sources(const std::vector<SourceDataset>& sources, const std::string& ref_id,
                             const ImcConfig& imc_cfg, const GpConfig& gp_cfg);

void save_map(const LinearMap& map, const ImcConfig& config_echo, const std::string& path);
LinearMap load_map(const std::string& path);

void write_trace_csv(const std::vector<double>& trace, const std::string& path);

}  // namespace hetfuse
