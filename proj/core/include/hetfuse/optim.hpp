#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "hetfuse/common.hpp"

namespace hetfuse {

/// n-by-d Latin hypercube in [0,1): one stratum per sample in every
/// dimension, strata permuted independently per dimension.
Eigen::MatrixXd latin_hypercube(Rng& rng, int n, int d);

struct BoxBounds {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const;
  void clamp(Eigen::VectorXd& x) const;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  long evals = 0;
};

/// Bounded Nelder-Mead simplex descent. Candidate points are clamped into
/// the box before evaluation; deterministic given the start point.
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& start,
                             const BoxBounds& box, long max_evals);

struct MultistartResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int best_index = 0;
  std::vector<double> restart_f;
  long evals = 0;
};

/// Latin-hypercube start points with local Nelder-Mead refinement. Ties
/// break toward the lowest restart index; restarts may run in parallel and
/// the reduction is a stable argmin, so scheduling cannot change the result.
MultistartResult multistart_minimize(const Objective& f, const BoxBounds& box, int restarts,
                                     long max_evals_per_restart, std::uint64_t seed);

/// Same refinement over caller-provided start points (one per row).
MultistartResult multistart_minimize_from(const Objective& f, const BoxBounds& box,
                                          const Eigen::MatrixXd& starts,
                                          long max_evals_per_restart);

}  // namespace hetfuse
