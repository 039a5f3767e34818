#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetfuse/dataset.hpp"

namespace hetfuse {

enum class CrossSection { rectangular, hollow_rect, hollow_circ };

std::string cross_section_name(CrossSection section);

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// End-loaded cantilever under Euler-Bernoulli bending: tip deflection
/// P L^3 / (3 E I). Outer dimensions are sampled over absolute ranges;
/// hollow sections sample the inner dimensions as fractions of their outer
/// counterpart, which keeps the geometry feasible by construction.
struct BeamSpec {
  CrossSection section = CrossSection::rectangular;
  double load = 1e4;       // N
  double length = 1.0;     // m
  double modulus = 2e11;   // Pa
  Range outer_b{0.05, 0.3};      // B, or R for the hollow circular section
  Range outer_h{0.05, 0.3};      // H (ignored for hollow circular)
  Range inner_frac_b{0.2, 0.8};  // b/B, or r/R
  Range inner_frac_h{0.2, 0.8};  // h/H
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<std::string> variable_names() const;
};

/// Area moment of inertia for the given section; dims follow
/// variable_names() order.
double beam_second_moment(CrossSection section, const Eigen::VectorXd& dims);

double beam_deflection(const BeamSpec& spec, const Eigen::VectorXd& dims);

/// n Latin-hypercube samples over the spec's ranges, deterministic by seed.
SourceDataset gen_beam(const BeamSpec& spec, int n, const std::string& source_id = "");

/// The three-source cantilever study: RB (30 train / 1000 test), HRB
/// (25/1000), HCB (8/1000), shared load case.
struct PaperSuite {
  std::vector<SourceDataset> train;  // RB, HRB, HCB
  std::vector<SourceDataset> test;
  std::vector<BeamSpec> specs;
};

PaperSuite gen_paper_suite(std::uint64_t seed);

/// Two-source family with a known affine ground truth between the input
/// spaces: reference y1(x) = f(x) + noise, second source
/// y2(x2) = f(A* x2 + b*) + noise. The hidden map is returned for oracle
/// assertions only.
struct SyntheticFamilySpec {
  int d_ref = 2;
  int d_s = 2;
  std::string base_function = "ripple";  // ripple | bowl | ridge
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<Eigen::MatrixXd> A_true;  // drawn at random when absent
  std::optional<Eigen::VectorXd> b_true;
};

struct SyntheticFamily {
  SourceDataset reference;
  SourceDataset source;
  Eigen::MatrixXd A_true;
  Eigen::VectorXd b_true;
};

SyntheticFamily gen_synthetic_family(const SyntheticFamilySpec& spec, int n_ref, int n_s);

/// The analytic base response behind a synthetic family; exposed so tests
/// can verify generated rows against the ground truth.
double synthetic_base_function(const std::string& id, const Eigen::VectorXd& u);

}  // namespace hetfuse
