#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hetfuse/lvgp.hpp"
#include "hetfuse/optim.hpp"

using namespace hetfuse;

namespace {

LatentMap three_level_map() {
  LatentMap lm;
  lm.levels = {"A", "B", "C"};
  lm.anchor_level = "A";
  lm.coords = {{0.0, 0.0}, {1.0, 0.0}, {-2.0, 1.5}};
  return lm;
}

struct TwoSourceData {
  Eigen::MatrixXd X;
  std::vector<std::string> s;
  Eigen::VectorXd y;
};

// two levels drawn over the same inputs; the second level's response is the
// first's plus a fixed shift
TwoSourceData two_sources(std::uint64_t seed, double shift, int n_per = 14) {
  Rng rng(seed);
  TwoSourceData data;
  data.X.resize(2 * n_per, 1);
  data.y.resize(2 * n_per);
  const Eigen::MatrixXd u = latin_hypercube(rng, n_per, 1);
  for (int i = 0; i < n_per; ++i) {
    const double x = 2.0 * u(i, 0);
    data.X(i, 0) = x;
    data.y[i] = std::sin(2.0 * x);
    data.s.push_back("a");
  }
  const Eigen::MatrixXd u2 = latin_hypercube(rng, n_per, 1);
  for (int i = 0; i < n_per; ++i) {
    const double x = 2.0 * u2(i, 0);
    data.X(n_per + i, 0) = x;
    data.y[n_per + i] = std::sin(2.0 * x) + shift;
    data.s.push_back("b");
  }
  return data;
}

}  // namespace

TEST_CASE("embed appends the level's latent point") {
  const LatentMap lm = three_level_map();
  Eigen::VectorXd x(1);
  x << 0.5;
  const Eigen::VectorXd w = embed(x, "A", lm);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == 0.5);
  CHECK(w[1] == 0.0);
  CHECK(w[2] == 0.0);

  // pure-categorical edge case: empty quantitative part
  const Eigen::VectorXd w2 = embed(Eigen::VectorXd(), "C", lm);
  REQUIRE(w2.size() == 2);
  CHECK(w2[0] == -2.0);
  CHECK(w2[1] == 1.5);

  CHECK_THROWS_WITH_AS(embed(x, "S9", lm), doctest::Contains("known levels"), Error);
}

TEST_CASE("latent map validation enforces the anchor constraints") {
  LatentMap lm = three_level_map();
  lm.validate();

  LatentMap off_origin = lm;
  off_origin.coords[0] = {0.1, 0.0};
  CHECK_THROWS_AS(off_origin.validate(), Error);

  LatentMap rotated = lm;
  rotated.coords[1] = {1.0, 0.2};  // second level must stay on the z1 axis
  CHECK_THROWS_AS(rotated.validate(), Error);

  LatentMap outside = lm;
  outside.coords[2] = {3.5, 0.0};
  CHECK_THROWS_AS(outside.validate(), Error);
}

TEST_CASE("identical generators place the levels close together") {
  const TwoSourceData data = two_sources(101, 0.0);
  LvgpConfig cfg;
  cfg.seed = 7;
  const LvgpModel model = fit_lvgp(data.X, data.s, data.y, cfg);
  model.latent.validate();
  CHECK(model.latent.anchor_level == "a");
  CHECK(model.latent.coord("a") == Eigen::Vector2d(0.0, 0.0));
  const double sep = (model.latent.coord("a") - model.latent.coord("b")).norm();
  CHECK(sep < 0.3);
}

TEST_CASE("a large constant shift separates the levels more than identical generators") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    LvgpConfig cfg;
    cfg.seed = seed;
    const TwoSourceData same = two_sources(200 + seed, 0.0);
    const TwoSourceData shifted = two_sources(200 + seed, 3.0);
    const LvgpModel m_same = fit_lvgp(same.X, same.s, same.y, cfg);
    const LvgpModel m_shift = fit_lvgp(shifted.X, shifted.s, shifted.y, cfg);
    const double d_same = (m_same.latent.coord("a") - m_same.latent.coord("b")).norm();
    const double d_shift = (m_shift.latent.coord("a") - m_shift.latent.coord("b")).norm();
    if (d_shift > d_same) ++wins;
  }
  CHECK(wins >= 9);
}

TEST_CASE("fit_lvgp rejects degenerate inputs") {
  const TwoSourceData data = two_sources(5, 0.0);
  std::vector<std::string> single(data.s.size(), "only");
  CHECK_THROWS_WITH_AS(fit_lvgp(data.X, single, data.y, {}), doctest::Contains("single level"),
                       Error);

  std::vector<std::string> with_empty = data.s;
  with_empty[3] = "";
  CHECK_THROWS_WITH_AS(fit_lvgp(data.X, with_empty, data.y, {}),
                       doctest::Contains("empty source label"), Error);

  LvgpConfig bad_anchor;
  bad_anchor.anchor_level = "zzz";
  CHECK_THROWS_AS(fit_lvgp(data.X, data.s, data.y, bad_anchor), Error);
}

TEST_CASE("predict_lvgp interpolates and distinguishes sources") {
  const TwoSourceData data = two_sources(303, 2.5);
  LvgpConfig cfg;
  cfg.seed = 9;
  const LvgpModel model = fit_lvgp(data.X, data.s, data.y, cfg);

  SUBCASE("training rows reproduce within 1e-6 relative error") {
    const Prediction p = predict_lvgp(model, data.X, data.s);
    const double scale = std::sqrt(data.y.array().square().mean());
    for (int i = 0; i < data.y.size(); ++i) {
      CHECK(std::abs(p.mean[i] - data.y[i]) <=
            1e-6 * std::max(std::abs(data.y[i]), scale));
    }
  }
  SUBCASE("the source label changes the prediction when levels are separated") {
    const double sep = (model.latent.coord("a") - model.latent.coord("b")).norm();
    if (sep > 0.5) {
      Eigen::MatrixXd Xq(1, 1);
      Xq << 1.0;
      const Prediction pa = predict_lvgp(model, Xq, {"a"});
      const Prediction pb = predict_lvgp(model, Xq, {"b"});
      CHECK(pa.mean[0] != pb.mean[0]);
    }
  }
  SUBCASE("unknown labels are rejected") {
    Eigen::MatrixXd Xq(1, 1);
    Xq << 1.0;
    CHECK_THROWS_WITH_AS(predict_lvgp(model, Xq, {"nope"}), doctest::Contains("known levels"),
                         Error);
  }
}

TEST_CASE("dissimilarity follows the normalized latent distance") {
  LatentMap lm;
  lm.levels = {"ref", "corner", "axis"};
  lm.anchor_level = "ref";
  lm.coords = {{0.0, 0.0}, {3.0, 3.0}, {0.0, 3.0}};
  LvgpModel model;
  model.latent = lm;

  const auto d = dissimilarity(model, "ref");
  CHECK(d.at("ref") == 0.0);
  CHECK(d.at("corner") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.at("axis") == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(dissimilarity(model, "S9"), Error);
}

TEST_CASE("dissimilarity is a scaled metric") {
  LvgpModel model;
  model.latent = three_level_map();
  const auto dA = dissimilarity(model, "A");
  const auto dB = dissimilarity(model, "B");
  const auto dC = dissimilarity(model, "C");
  CHECK(dA.at("B") == dB.at("A"));  // symmetry
  CHECK(dA.at("A") == 0.0);
  CHECK(dA.at("C") <= dA.at("B") + dB.at("C") + 1e-15);  // triangle inequality
}

TEST_CASE("export_latent orders rows by label and round-trips through csv") {
  const TwoSourceData data = two_sources(42, 1.0);
  LvgpConfig cfg;
  cfg.seed = 13;
  const LvgpModel model = fit_lvgp(data.X, data.s, data.y, cfg);
  const auto rows = export_latent(model);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].level == "a");
  CHECK(rows[1].level == "b");
  CHECK(rows[0].z1 == 0.0);
  CHECK(rows[0].z2 == 0.0);
  CHECK(rows[0].d == 0.0);
  CHECK(rows[1].z2 == 0.0);  // rotation anchor: single free level stays on the z1 axis

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hetfuse_latent";
  fs::create_directories(dir);
  write_latent_csv(rows, (dir / "latent.csv").string());
  const auto back = load_latent_csv((dir / "latent.csv").string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].level == rows[i].level);
    CHECK(back[i].z1 == rows[i].z1);  // exact: shortest round-trip decimals
    CHECK(back[i].z2 == rows[i].z2);
    CHECK(back[i].d == rows[i].d);
  }
}

TEST_CASE("re-embedding the training data reproduces the stored augmented matrix") {
  const TwoSourceData data = two_sources(77, 0.5);
  LvgpConfig cfg;
  cfg.seed = 2;
  const LvgpModel model = fit_lvgp(data.X, data.s, data.y, cfg);
  const Eigen::MatrixXd W = embed_all(data.X, data.s, model.latent);
  CHECK(W == model.gp.X_train);
}

TEST_CASE("label permutation equivariance under an order-preserving relabeling") {
  const TwoSourceData data = two_sources(88, 1.5);
  std::vector<std::string> renamed;
  for (const auto& label : data.s) renamed.push_back(label == "a" ? "p" : "q");

  LvgpConfig cfg;
  cfg.seed = 31;
  const LvgpModel m1 = fit_lvgp(data.X, data.s, data.y, cfg);
  const LvgpModel m2 = fit_lvgp(data.X, renamed, data.y, cfg);

  Eigen::MatrixXd Xq(5, 1);
  Xq << 0.1, 0.5, 1.0, 1.5, 1.9;
  const Prediction p1 = predict_lvgp(m1, Xq, {"b", "b", "b", "b", "b"});
  const Prediction p2 = predict_lvgp(m2, Xq, {"q", "q", "q", "q", "q"});
  CHECK(p1.mean == p2.mean);
  CHECK(p1.var == p2.var);
}

TEST_CASE("collapsed latent points reduce the model to a plain GP") {
  const TwoSourceData data = two_sources(99, 2.0);
  KernelParams quant;
  quant.log10_phi = Eigen::VectorXd::Constant(1, 0.3);

  LatentMap collapsed;
  collapsed.levels = {"a", "b"};
  collapsed.anchor_level = "a";
  collapsed.coords = {{0.7, -0.4}, {0.7, -0.4}};  // same point, deliberately off-origin

  const LvgpModel lvgp = lvgp_with_fixed_latent(data.X, data.s, data.y, quant, collapsed);
  const GpModel gp = gp_with_params(data.X, data.y, quant);

  Eigen::MatrixXd Xq(7, 1);
  for (int i = 0; i < 7; ++i) Xq(i, 0) = 0.25 * i;
  const Prediction pl = predict_lvgp(lvgp, Xq, std::vector<std::string>(7, "b"));
  const Prediction pg = predict_normalized(gp, Xq);
  CHECK((pl.mean - pg.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((pl.var - pg.var).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lvgp artifact round-trips byte-exactly") {
  const TwoSourceData data = two_sources(111, 1.0);
  LvgpConfig cfg;
  cfg.seed = 5;
  const LvgpModel model = fit_lvgp(data.X, data.s, data.y, cfg);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hetfuse_lvgp_artifact";
  fs::create_directories(dir);
  const std::string p1 = (dir / "m1.json").string();
  const std::string p2 = (dir / "m2.json").string();
  save_lvgp(model, p1);
  const LvgpModel loaded = load_lvgp(p1);
  save_lvgp(loaded, p2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.latent.levels == model.latent.levels);

  const Prediction a = predict_lvgp(model, data.X, data.s);
  const Prediction b = predict_lvgp(loaded, data.X, data.s);
  CHECK(a.mean == b.mean);
}
