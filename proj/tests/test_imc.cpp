#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hetfuse/generators.hpp"
#include "hetfuse/imc.hpp"
#include "hetfuse/optim.hpp"

using namespace hetfuse;

namespace {

LinearMap make_map(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  LinearMap map;
  map.A = A;
  map.b = b;
  map.source_id = "src";
  map.ref_id = "ref";
  map.source_std = Standardizer::identity(static_cast<int>(A.cols()));
  return map;
}

// a reference GP trained on a smooth 2-D function over [-1,1]^2
GpModel smooth_ref_gp(std::uint64_t seed, int n = 60) {
  Rng rng(seed);
  Eigen::MatrixXd X = (latin_hypercube(rng, n, 2).array() * 2.0 - 1.0).matrix();
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sin(3.0 * X(i, 0) + 1.0) + 0.7 * std::cos(2.0 * X(i, 1));
  const Standardizer st = Standardizer::fit(X);
  const OutputScaler sc = OutputScaler::fit(y);
  GpConfig cfg;
  cfg.seed = seed;
  GpModel gp = fit_gp(st.transform(X), sc.transform(y), cfg);
  gp.input_std = st;
  gp.output = sc;
  gp.input_names = {"u1", "u2"};
  gp.input_space = "original:ref";
  return gp;
}

}  // namespace

TEST_CASE("apply_map hand values") {
  SUBCASE("identity") {
    const LinearMap map = make_map(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
    Eigen::MatrixXd X(3, 2);
    X << 1, 2, 3, 4, 5, 6;
    CHECK(apply_map(map, X) == X);
  }
  SUBCASE("full-linear transform with an ignored column") {
    Eigen::Matrix2d A;
    A << 2.00, 0.00, 0.89, 0.00;
    const LinearMap map = make_map(A, Eigen::Vector2d(0.55, 0.67));
    Eigen::MatrixXd X(1, 2);
    X << 1.0, 5.0;  // the second input has a zero column and drops out
    const Eigen::MatrixXd Y = apply_map(map, X);
    CHECK(Y(0, 0) == doctest::Approx(2.55).epsilon(1e-12));
    CHECK(Y(0, 1) == doctest::Approx(1.56).epsilon(1e-12));
  }
  SUBCASE("zero map sends every row to the shift") {
    const LinearMap map = make_map(Eigen::Matrix2d::Zero(), Eigen::Vector2d(0.3, -0.7));
    Eigen::MatrixXd X(4, 2);
    X.setRandom();
    const Eigen::MatrixXd Y = apply_map(map, X);
    for (int i = 0; i < 4; ++i) {
      CHECK(Y(i, 0) == 0.3);
      CHECK(Y(i, 1) == -0.7);
    }
  }
  SUBCASE("dimension mismatch") {
    const LinearMap map = make_map(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
    CHECK_THROWS_AS(apply_map(map, Eigen::MatrixXd::Zero(2, 3)), Error);
  }
}

TEST_CASE("imc_loss is near zero for a self-map and exact for constants") {
  const GpModel ref = smooth_ref_gp(60);
  SUBCASE("reference data maps onto itself") {
    const LinearMap identity = make_map(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
    const Eigen::VectorXd y_raw = ref.output.inverse(
        predict_mean_normalized(ref, ref.X_train));
    const double loss = imc_loss(identity, ref.X_train, y_raw, ref);
    CHECK(loss < 1e-10);
  }
  SUBCASE("constant-response surrogate with matching outputs") {
    Eigen::MatrixXd X(5, 2);
    X << 0, 0, 1, 0, 0, 1, 1, 1, 0.5, 0.5;
    const Eigen::VectorXd y = Eigen::VectorXd::Zero(5);
    GpConfig cfg;
    cfg.seed = 1;
    const GpModel const_gp = fit_gp(X, y, cfg);
    const LinearMap any = make_map((Eigen::Matrix2d() << 1, 2, 3, 4).finished(),
                                   Eigen::Vector2d(0.2, -0.1));
    CHECK(imc_loss(any, X, y, const_gp) < 1e-12);
  }
}

TEST_CASE("imc_loss prefers the generating map over a perturbed one") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SyntheticFamilySpec spec;
    spec.seed = 1000 + seed;
    const SyntheticFamily fam = gen_synthetic_family(spec, 80, 30);

    const Standardizer ref_std = Standardizer::fit(fam.reference.X);
    const OutputScaler ref_scl = OutputScaler::fit(fam.reference.y);
    GpConfig cfg;
    cfg.seed = seed;
    GpModel ref_gp = fit_gp(ref_std.transform(fam.reference.X), ref_scl.transform(fam.reference.y), cfg);
    ref_gp.input_std = ref_std;
    ref_gp.output = ref_scl;

    // express the hidden raw-space map in the two normalized spaces
    const Standardizer src_std = Standardizer::fit(fam.source.X);
    const Eigen::MatrixXd D_src = src_std.stds.asDiagonal();
    Eigen::MatrixXd A_norm = fam.A_true * D_src;
    Eigen::VectorXd b_norm = fam.A_true * src_std.means + fam.b_true;
    for (int i = 0; i < A_norm.rows(); ++i) {
      A_norm.row(i) /= ref_std.stds[i];
      b_norm[i] = (b_norm[i] - ref_std.means[i]) / ref_std.stds[i];
    }
    LinearMap truth = make_map(A_norm, b_norm);
    LinearMap perturbed = truth;
    perturbed.A.diagonal().array() += 0.5;

    const Eigen::MatrixXd Xs_norm = src_std.transform(fam.source.X);
    const double loss_truth = imc_loss(truth, Xs_norm, fam.source.y, ref_gp);
    const double loss_pert = imc_loss(perturbed, Xs_norm, fam.source.y, ref_gp);
    if (loss_truth < loss_pert) ++wins;
  }
  CHECK(wins == 20);
}

TEST_CASE("imc config validation") {
  ImcConfig cfg;
  cfg.validate();
  cfg.elitism = cfg.population;  // degenerate but allowed
  cfg.validate();
  cfg.elitism = cfg.population + 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ImcConfig{};
  cfg.mutation_sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ImcConfig{};
  cfg.crossover_rate = 1.2;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("calibrate recovers a synthetic affine family in output space") {
  SyntheticFamilySpec spec;
  spec.seed = 77;
  const SyntheticFamily fam = gen_synthetic_family(spec, 80, 30);
  const Standardizer ref_std = Standardizer::fit(fam.reference.X);
  const OutputScaler ref_scl = OutputScaler::fit(fam.reference.y);
  GpConfig gcfg;
  gcfg.seed = 5;
  GpModel ref_gp = fit_gp(ref_std.transform(fam.reference.X), ref_scl.transform(fam.reference.y), gcfg);
  ref_gp.input_std = ref_std;
  ref_gp.output = ref_scl;

  ImcConfig cfg;
  cfg.seed = 9;
  const CalibrationResult result = calibrate(fam.source, ref_gp, cfg);
  CHECK(result.map.loss <= 0.05);
  CHECK(result.map.d_ref() == 2);
  CHECK(result.map.d_s() == 2);
}

TEST_CASE("calibrating a source identical to the reference reaches near-zero loss") {
  Rng rng(8);
  Eigen::MatrixXd X = (latin_hypercube(rng, 50, 2).array() * 2.0 - 1.0).matrix();
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y[i] = std::sin(3.0 * X(i, 0) + 1.0) + 0.7 * std::cos(2.0 * X(i, 1));
  SourceDataset src;
  src.source_id = "clone";
  src.input_names = {"u1", "u2"};
  src.output_name = "f";
  src.X = X;
  src.y = y;

  const Standardizer st = Standardizer::fit(X);
  const OutputScaler sc = OutputScaler::fit(y);
  GpConfig gcfg;
  gcfg.seed = 2;
  GpModel ref_gp = fit_gp(st.transform(X), sc.transform(y), gcfg);
  ref_gp.input_std = st;
  ref_gp.output = sc;

  ImcConfig cfg;
  cfg.seed = 3;
  const CalibrationResult result = calibrate(src, ref_gp, cfg);
  CHECK(result.map.loss <= 1e-3);
}

TEST_CASE("calibrate with a degenerate budget returns the single individual") {
  const GpModel ref = smooth_ref_gp(61, 40);
  SourceDataset src;
  src.source_id = "tiny";
  src.input_names = {"v1"};
  src.output_name = "f";
  src.X.resize(3, 1);
  src.X << -0.5, 0.0, 0.5;
  src.y.resize(3);
  src.y << 0.1, 0.2, 0.3;

  ImcConfig cfg;
  cfg.population = 1;
  cfg.generations = 1;
  cfg.elitism = 1;
  cfg.seed = 4;
  const CalibrationResult result = calibrate(src, ref, cfg);
  CHECK(std::isfinite(result.map.loss));
  CHECK(result.map.A.isZero());  // the lone individual is the zero map
  CHECK(result.trace.size() == 2);
}

TEST_CASE("GA determinism, elitism monotonicity, and baseline bounds") {
  const GpModel ref = smooth_ref_gp(62, 50);
  SyntheticFamilySpec spec;
  spec.seed = 15;
  const SyntheticFamily fam = gen_synthetic_family(spec, 50, 25);

  ImcConfig cfg;
  cfg.population = 30;
  cfg.generations = 40;
  cfg.seed = 77;
  const CalibrationResult a = calibrate(fam.source, ref, cfg);
  const CalibrationResult b = calibrate(fam.source, ref, cfg);
  CHECK(a.map.A == b.map.A);  // bitwise identical
  CHECK(a.map.b == b.map.b);
  CHECK(a.map.loss == b.map.loss);
  CHECK(a.trace == b.trace);

  for (std::size_t g = 1; g < a.trace.size(); ++g) CHECK(a.trace[g] <= a.trace[g - 1]);

  // final loss never exceeds the zero map or the initial population's best
  const Standardizer sstd = Standardizer::fit_lenient(fam.source.X);
  LinearMap zero = make_map(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2));
  zero.source_std = sstd;
  CHECK(a.map.loss <= imc_loss(zero, sstd.transform(fam.source.X), fam.source.y, ref) + 1e-15);
  CHECK(a.map.loss <= a.trace.front() + 1e-15);
}

TEST_CASE("map_all_sources on the beam suite") {
  const PaperSuite suite = gen_paper_suite(3);
  ImcConfig imc_cfg;
  imc_cfg.population = 20;  // structural checks only
  imc_cfg.generations = 10;
  imc_cfg.seed = 1;
  GpConfig gp_cfg;
  gp_cfg.seed = 2;

  const MapAllResult result = map_all_sources(suite.train, "RB", imc_cfg, gp_cfg);
  CHECK(result.ref_id == "RB");
  REQUIRE(result.calibrations.size() == 2);
  // label order: HCB before HRB
  CHECK(result.calibrations[0].map.source_id == "HCB");
  CHECK(result.calibrations[0].map.d_ref() == 2);
  CHECK(result.calibrations[0].map.d_s() == 2);
  CHECK(result.calibrations[1].map.source_id == "HRB");
  CHECK(result.calibrations[1].map.d_ref() == 2);
  CHECK(result.calibrations[1].map.d_s() == 4);  // rectangular A for d_s > d_ref
  CHECK(result.fused.n() == 63);                 // 30 + 25 + 8
  CHECK(result.fused.ref_source_id == "RB");
  CHECK(result.ref_gp.role == "reference_gp");

  int rb_rows = 0;
  for (const auto& label : result.fused.s) rb_rows += label == "RB";
  CHECK(rb_rows == 30);
}

TEST_CASE("map_all_sources auto-selects the largest source and handles one source") {
  const PaperSuite suite = gen_paper_suite(4);
  ImcConfig imc_cfg;
  imc_cfg.population = 10;
  imc_cfg.generations = 5;
  GpConfig gp_cfg;
  gp_cfg.seed = 1;
  const MapAllResult result = map_all_sources(suite.train, "", imc_cfg, gp_cfg);
  CHECK(result.ref_id == "RB");  // 30 rows beats 25 and 8

  const MapAllResult solo = map_all_sources({suite.train[0]}, "", imc_cfg, gp_cfg);
  CHECK(solo.calibrations.empty());
  CHECK(solo.fused.n() == suite.train[0].n());
  CHECK(solo.fused.source_ids() == std::vector<std::string>{"RB"});

  CHECK_THROWS_AS(map_all_sources(suite.train, "NOPE", imc_cfg, gp_cfg), Error);
}

TEST_CASE("linear map artifact round trip and trace csv") {
  Eigen::MatrixXd A(2, 3);
  A << 0.5, -1.25, 0.0, 2.0, 0.125, -0.375;
  LinearMap map = make_map(A, Eigen::Vector2d(0.1, -0.2));
  map.source_input_names = {"a", "b", "c"};
  map.ref_input_names = {"u", "v"};
  map.loss = 0.0123;
  map.seed = 42;

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hetfuse_map_artifact";
  fs::create_directories(dir);
  save_map(map, ImcConfig{}, (dir / "map.json").string());
  const LinearMap back = load_map((dir / "map.json").string());
  CHECK(back.A == map.A);
  CHECK(back.b == map.b);
  CHECK(back.loss == map.loss);
  CHECK(back.source_input_names == map.source_input_names);

  write_trace_csv({1.0, 0.5, 0.25}, (dir / "trace.csv").string());
  std::ifstream in(dir / "trace.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "generation,best_loss");
  std::getline(in, line);
  CHECK(line == "0,1");
}
