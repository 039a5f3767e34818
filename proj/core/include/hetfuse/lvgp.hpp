#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hetfuse/gp.hpp"

namespace hetfuse {

/// Learned 2-D latent point per level of one qualitative variable. The
/// anchor level sits exactly at the origin and the second level in order has
/// z2 = 0, removing translation/rotation indeterminacy.
struct LatentMap {
  std::vector<std::string> levels;  // anchor first, remainder in label order
  std::vector<Eigen::Vector2d> coords;
  std::string anchor_level;

  int index_of(const std::string& level) const;  // -1 when unknown
  int require(const std::string& level) const;   // throws listing known levels
  const Eigen::Vector2d& coord(const std::string& level) const;
  void validate() const;
};

struct LvgpConfig {
  int restarts = 12;
  long max_evals_per_restart = 500;
  std::uint64_t seed = 0;
  std::string anchor_level;  // empty: lexicographically first level
  double z_bound = 3.0;
  double log10_phi_lo = -6.0;
  double log10_phi_hi = 4.0;
  double nugget_init = 1e-8;
  double nugget_max = 1e-3;
};

/// GP over the augmented input w = [x, z1(s), z2(s)]: the quantitative
/// scales are learned, the two latent dimensions enter with unit weight.
/// One qualitative variable only (the source id); multiple qualitative
/// columns are out of scope by design.
struct LvgpModel {
  GpModel gp;  // trained on augmented inputs
  LatentMap latent;
  std::vector<std::string> train_labels;
  int quant_dim = 0;

  int n() const { return gp.n(); }
};

/// [x; z1(level); z2(level)] — length m + 2.
Eigen::VectorXd embed(const Eigen::VectorXd& x, const std::string& level, const LatentMap& latent);

Eigen::MatrixXd embed_all(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                          const LatentMap& latent);

/// Joint MLE over log10(phi) and the free latent coordinates (anchor fixed
/// at the origin, second level pinned to the z1 axis). X and y are expected
/// standardized.
LvgpModel fit_lvgp(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                   const Eigen::VectorXd& y, const LvgpConfig& cfg);

/// Assembles a model at fixed kernel scales and latent coordinates, without
/// optimization or anchor constraints. Supports reduction checks against a
/// plain GP and deliberately collapsed latent spaces.
LvgpModel lvgp_with_fixed_latent(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                                 const Eigen::VectorXd& y, const KernelParams& quant_params,
                                 const LatentMap& latent, const GpConfig& cfg = {});

Prediction predict_lvgp(const LvgpModel& model, const Eigen::MatrixXd& Xq,
                        const std::vector<std::string>& sq);

/// D(l) = ||z(l) - z(ref)|| / (3*sqrt(2)) for every level. Values above 1
/// are possible for a non-origin reference and are reported as-is.
std::map<std::string, double> dissimilarity(const LvgpModel& model, const std::string& ref_level);

struct LatentRow {
  std::string level;
  double z1 = 0.0;
  double z2 = 0.0;
  double d = 0.0;
};

/// One row per level, ordered by level label; D against the anchor unless a
/// reference is given.
std::vector<LatentRow> export_latent(const LvgpModel& model);
std::vector<LatentRow> export_latent(const LvgpModel& model, const std::string& ref_level);

void write_latent_csv(const std::vector<LatentRow>& rows, const std::string& path);
std::vector<LatentRow> load_latent_csv(const std::string& path);

void save_lvgp(const LvgpModel& model, const std::string& path);
LvgpModel load_lvgp(const std::string& path);

}  // namespace hetfuse
