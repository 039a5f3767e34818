#include "hetfuse/generators.hpp"

#include <cmath>

#include "hetfuse/optim.hpp"

namespace hetfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_range(const Range& r, const std::string& what, bool fractional) {
  if (!(r.lo < r.hi)) fail("beam spec: empty range for " + what);
  if (!(r.lo > 0.0)) fail("beam spec: " + what + " must be positive");
  if (fractional && r.hi >= 1.0) {
    fail("beam spec: fractional range for " + what + " must stay below 1 (inner < outer)");
  }
}

}  // namespace

std::string cross_section_name(CrossSection section) {
  switch (section) {
    case CrossSection::rectangular: return "rectangular";
    case CrossSection::hollow_rect: return "hollow_rect";
    case CrossSection::hollow_circ: return "hollow_circ";
  }
  fail("unknown cross section");
}

void BeamSpec::validate() const {
  if (!(load > 0.0) || !(length > 0.0) || !(modulus > 0.0)) {
    fail("beam spec: load, length, and modulus must be positive");
  }
  check_range(outer_b, "outer width", false);
  if (section != CrossSection::hollow_circ) check_range(outer_h, "outer height", false);
  if (section == CrossSection::hollow_rect) {
    check_range(inner_frac_b, "inner width fraction", true);
    check_range(inner_frac_h, "inner height fraction", true);
  }
  if (section == CrossSection::hollow_circ) check_range(inner_frac_b, "inner radius fraction", true);
}

std::vector<std::string> BeamSpec::variable_names() const {
  switch (section) {
    case CrossSection::rectangular: return {"B", "H"};
    case CrossSection::hollow_rect: return {"B", "H", "b", "h"};
    case CrossSection::hollow_circ: return {"R", "r"};
  }
  fail("unknown cross section");
}

double beam_second_moment(CrossSection section, const Eigen::VectorXd& dims) {
  switch (section) {
    case CrossSection::rectangular: {
      if (dims.size() != 2) fail("second moment: rectangular section needs (B, H)");
      const double B = dims[0], H = dims[1];
      return B * H * H * H / 12.0;
    }
    case CrossSection::hollow_rect: {
      if (dims.size() != 4) fail("second moment: hollow rectangular section needs (B, H, b, h)");
      const double B = dims[0], H = dims[1], b = dims[2], h = dims[3];
      if (!(b < B) || !(h < H)) fail("second moment: inner dimensions must stay inside the outer");
      return (B * H * H * H - b * h * h * h) / 12.0;
    }
    case CrossSection::hollow_circ: {
      if (dims.size() != 2) fail("second moment: hollow circular section needs (R, r)");
      const double R = dims[0], r = dims[1];
      if (!(r < R)) fail("second moment: inner radius must stay inside the outer");
      return kPi * (R * R * R * R - r * r * r * r) / 4.0;
    }
  }
  fail("unknown cross section");
}

double beam_deflection(const BeamSpec& spec, const Eigen::VectorXd& dims) {
  const double I = beam_second_moment(spec.section, dims);
  return spec.load * spec.length * spec.length * spec.length / (3.0 * spec.modulus * I);
}

SourceDataset gen_beam(const BeamSpec& spec, int n, const std::string& source_id) {
  spec.validate();
  if (n < 1) fail("gen_beam: n must be positive");

  const std::vector<std::string> names = spec.variable_names();
  const int d = static_cast<int>(names.size());
  Rng rng(spec.seed);
  const Eigen::MatrixXd unit = latin_hypercube(rng, n, d);

  SourceDataset ds;
  ds.source_id = source_id.empty() ? cross_section_name(spec.section) : source_id;
  ds.input_names = names;
  ds.output_name = "deflection";
  ds.X.resize(n, d);
  ds.y.resize(n);

  auto span = [](const Range& r, double u) { return r.lo + u * (r.hi - r.lo); };
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd dims(d);
    switch (spec.section) {
      case CrossSection::rectangular:
        dims[0] = span(spec.outer_b, unit(i, 0));
        dims[1] = span(spec.outer_h, unit(i, 1));
        break;
      case CrossSection::hollow_rect:
        dims[0] = span(spec.outer_b, unit(i, 0));
        dims[1] = span(spec.outer_h, unit(i, 1));
        dims[2] = span(spec.inner_frac_b, unit(i, 2)) * dims[0];
        dims[3] = span(spec.inner_frac_h, unit(i, 3)) * dims[1];
        break;
      case CrossSection::hollow_circ:
        dims[0] = span(spec.outer_b, unit(i, 0));
        dims[1] = span(spec.inner_frac_b, unit(i, 1)) * dims[0];
        break;
    }
    ds.X.row(i) = dims.transpose();
    ds.y[i] = beam_deflection(spec, dims);
  }
  ds.validate();
  return ds;
}

PaperSuite gen_paper_suite(std::uint64_t seed) {
  PaperSuite suite;

  // The shared load case plus these ranges put the three sections on
  // overlapping deflection scales while keeping the circular section
  // genuinely hard to reconcile with the rectangular reference (the r^4
  // wall effect has no affine pullback).
  BeamSpec rb;
  rb.section = CrossSection::rectangular;
  rb.outer_b = {0.1, 0.3};
  rb.outer_h = {0.1, 0.3};
  BeamSpec hrb;
  hrb.section = CrossSection::hollow_rect;
  hrb.outer_b = {0.1, 0.3};
  hrb.outer_h = {0.1, 0.3};
  BeamSpec hcb;
  hcb.section = CrossSection::hollow_circ;
  hcb.outer_b = {0.06, 0.15};
  hcb.inner_frac_b = {0.3, 0.9};

  const std::vector<std::pair<BeamSpec, std::string>> sources = {
      {rb, "RB"}, {hrb, "HRB"}, {hcb, "HCB"}};
  const std::vector<int> train_sizes = {30, 25, 8};
  const int test_size = 1000;

  for (std::size_t k = 0; k < sources.size(); ++k) {
    BeamSpec train_spec = sources[k].first;
    train_spec.seed = mix_seed(seed, 2 * k);
    BeamSpec test_spec = sources[k].first;
    test_spec.seed = mix_seed(seed, 2 * k + 1);
    suite.train.push_back(gen_beam(train_spec, train_sizes[k], sources[k].second));
    suite.test.push_back(gen_beam(test_spec, test_size, sources[k].second));
    suite.specs.push_back(train_spec);
  }
  return suite;
}

namespace {

double base_function(const std::string& id, const Eigen::VectorXd& u) {
  if (id == "ripple") {
    double v = std::sin(3.0 * u[0] + 1.0);
    for (int k = 1; k < u.size(); ++k) {
      v += 0.7 / static_cast<double>(k) * std::cos(2.0 * u[k] - 0.5 * static_cast<double>(k));
    }
    v += 0.3 * u[0] * u[u.size() - 1];
    return v;
  }
  if (id == "bowl") {
    double v = 0.0;
    for (int k = 0; k < u.size(); ++k) {
      const double c = u[k] - 0.2 * static_cast<double>(k + 1);
      v += c * c;
    }
    return v;
  }
  if (id == "ridge") {
    return std::tanh(2.0 * u.sum() / std::sqrt(static_cast<double>(u.size()))) + 0.5 * u[0];
  }
  fail("gen_synthetic_family: unknown base function '" + id + "'");
}

}  // namespace

SyntheticFamily gen_synthetic_family(const SyntheticFamilySpec& spec, int n_ref, int n_s) {
  if (spec.d_ref < 1 || spec.d_s < 1) fail("gen_synthetic_family: dimensions must be positive");
  if (n_ref < 1 || n_s < 1) fail("gen_synthetic_family: sample counts must be positive");
  if (spec.noise_sigma < 0.0) fail("gen_synthetic_family: noise_sigma must be nonnegative");

  Rng rng(spec.seed);

  // hidden map, scaled so the image of the source box stays inside the
  // reference box [-1, 1]^d_ref
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  if (spec.A_true) {
    A = *spec.A_true;
    if (A.rows() != spec.d_ref || A.cols() != spec.d_s) {
      fail("gen_synthetic_family: A_true has the wrong shape");
    }
  } else {
    A.resize(spec.d_ref, spec.d_s);
    for (int i = 0; i < spec.d_ref; ++i) {
      for (int j = 0; j < spec.d_s; ++j) {
        A(i, j) = rng.uniform(-0.5, 0.5) + (j % spec.d_ref == i ? 0.5 : 0.0);
      }
      const double l1 = A.row(i).cwiseAbs().sum();
      if (l1 > 0.7) A.row(i) *= 0.7 / l1;
    }
  }
  if (spec.b_true) {
    b = *spec.b_true;
    if (b.size() != spec.d_ref) fail("gen_synthetic_family: b_true has the wrong length");
  } else {
    b.resize(spec.d_ref);
    for (int i = 0; i < spec.d_ref; ++i) b[i] = rng.uniform(-0.2, 0.2);
  }

  SyntheticFamily family;
  family.A_true = A;
  family.b_true = b;

  auto name_columns = [](const std::string& prefix, int d) {
    std::vector<std::string> names;
    for (int j = 0; j < d; ++j) names.push_back(prefix + std::to_string(j + 1));
    return names;
  };

  // reference source on [-1,1]^d_ref
  {
    SourceDataset ds;
    ds.source_id = "S1";
    ds.input_names = name_columns("u", spec.d_ref);
    ds.output_name = "f";
    const Eigen::MatrixXd unit = latin_hypercube(rng, n_ref, spec.d_ref);
    ds.X = (unit.array() * 2.0 - 1.0).matrix();
    ds.y.resize(n_ref);
    for (int i = 0; i < n_ref; ++i) {
      ds.y[i] = base_function(spec.base_function, ds.X.row(i).transpose()) +
                spec.noise_sigma * rng.normal();
    }
    family.reference = std::move(ds);
  }

  // second source on [-0.8,0.8]^d_s, responses through the hidden map
  {
    SourceDataset ds;
    ds.source_id = "S2";
    ds.input_names = name_columns("v", spec.d_s);
    ds.output_name = "f";
    const Eigen::MatrixXd unit = latin_hypercube(rng, n_s, spec.d_s);
    ds.X = (unit.array() * 1.6 - 0.8).matrix();
    ds.y.resize(n_s);
    for (int i = 0; i < n_s; ++i) {
      const Eigen::VectorXd mapped = A * ds.X.row(i).transpose() + b;
      ds.y[i] = base_function(spec.base_function, mapped) + spec.noise_sigma * rng.normal();
    }
    family.source = std::move(ds);
  }

  return family;
}

}  // namespace hetfuse
