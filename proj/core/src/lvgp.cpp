#include "hetfuse/lvgp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hetfuse/optim.hpp"
#include "serialize.hpp"

namespace hetfuse {

namespace {

const double kMaxLatentDistance = 3.0 * std::sqrt(2.0);

std::vector<std::string> ordered_levels(const std::vector<std::string>& s,
                                        const std::string& anchor) {
  std::set<std::string> uniq(s.begin(), s.end());
  if (!anchor.empty() && uniq.count(anchor) == 0) {
    fail("lvgp: anchor level '" + anchor + "' not present in the data");
  }
  std::vector<std::string> levels;
  const std::string chosen = anchor.empty() ? *uniq.begin() : anchor;
  levels.push_back(chosen);
  for (const auto& l : uniq) {
    if (l != chosen) levels.push_back(l);
  }
  return levels;
}

// Free-parameter layout: level 1 contributes z1 only (z2 pinned), levels
// 2..K-1 contribute both coordinates. The anchor (level 0) is fixed.
int free_coord_count(int n_levels) { return 2 * n_levels - 3; }

LatentMap decode_latent(const std::vector<std::string>& levels, const std::string& anchor,
                        const Eigen::VectorXd& free_coords) {
  LatentMap lm;
  lm.levels = levels;
  lm.anchor_level = anchor;
  lm.coords.assign(levels.size(), Eigen::Vector2d::Zero());
  int k = 0;
  if (levels.size() >= 2) {
    lm.coords[1] = Eigen::Vector2d(free_coords[k], 0.0);
    ++k;
  }
  for (std::size_t i = 2; i < levels.size(); ++i) {
    lm.coords[i] = Eigen::Vector2d(free_coords[k], free_coords[k + 1]);
    k += 2;
  }
  return lm;
}

std::string known_levels_message(const LatentMap& lm) {
  std::string msg = "known levels: ";
  for (std::size_t i = 0; i < lm.levels.size(); ++i) {
    if (i > 0) msg += ", ";
    msg += lm.levels[i];
  }
  return msg;
}

}  // namespace

int LatentMap::index_of(const std::string& level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return static_cast<int>(i);
  }
  return -1;
}

int LatentMap::require(const std::string& level) const {
  const int idx = index_of(level);
  if (idx < 0) fail("lvgp: unknown level '" + level + "'; " + known_levels_message(*this));
  return idx;
}

const Eigen::Vector2d& LatentMap::coord(const std::string& level) const {
  return coords[static_cast<std::size_t>(require(level))];
}

void LatentMap::validate() const {
  if (levels.empty() || levels.size() != coords.size()) fail("latent map: bad shape");
  const int anchor_idx = index_of(anchor_level);
  if (anchor_idx != 0) fail("latent map: anchor level must come first");
  if (coords[0].x() != 0.0 || coords[0].y() != 0.0) {
    fail("latent map: anchor level must sit exactly at the origin");
  }
  if (levels.size() >= 2 && coords[1].y() != 0.0) {
    fail("latent map: second level must have z2 = 0");
  }
  for (const auto& z : coords) {
    if (std::abs(z.x()) > 3.0 || std::abs(z.y()) > 3.0) {
      fail("latent map: coordinate outside [-3, 3]");
    }
  }
  std::set<std::string> uniq(levels.begin(), levels.end());
  if (uniq.size() != levels.size()) fail("latent map: duplicate levels");
}

Eigen::VectorXd embed(const Eigen::VectorXd& x, const std::string& level, const LatentMap& latent) {
  const Eigen::Vector2d& z = latent.coord(level);
  Eigen::VectorXd w(x.size() + 2);
  w.head(x.size()) = x;
  w[x.size()] = z.x();
  w[x.size() + 1] = z.y();
  return w;
}

Eigen::MatrixXd embed_all(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                          const LatentMap& latent) {
  if (static_cast<int>(s.size()) != X.rows()) fail("lvgp: label count mismatch");
  Eigen::MatrixXd W(X.rows(), X.cols() + 2);
  W.leftCols(X.cols()) = X;
  for (int i = 0; i < X.rows(); ++i) {
    const Eigen::Vector2d& z = latent.coord(s[static_cast<std::size_t>(i)]);
    W(i, X.cols()) = z.x();
    W(i, X.cols() + 1) = z.y();
  }
  return W;
}

namespace {

KernelParams augmented_params(const Eigen::VectorXd& log10_phi_quant) {
  KernelParams p;
  p.log10_phi.resize(log10_phi_quant.size() + 2);
  p.log10_phi.head(log10_phi_quant.size()) = log10_phi_quant;
  p.log10_phi[log10_phi_quant.size()] = 0.0;  // unit weight on both latent axes
  p.log10_phi[log10_phi_quant.size() + 1] = 0.0;
  return p;
}

}  // namespace

LvgpModel fit_lvgp(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                   const Eigen::VectorXd& y, const LvgpConfig& cfg) {
  if (static_cast<int>(s.size()) != X.rows()) fail("fit_lvgp: label count mismatch");
  if (X.rows() < 3) fail("fit_lvgp: need at least 3 rows");
  if (y.size() != X.rows()) fail("fit_lvgp: X/y row mismatch");
  for (const auto& label : s) {
    if (label.empty()) fail("fit_lvgp: empty source label present");
  }

  const std::vector<std::string> levels = ordered_levels(s, cfg.anchor_level);
  if (levels.size() < 2) {
    fail("fit_lvgp: a single level is degenerate; fit a plain GP instead");
  }
  const int m = static_cast<int>(X.cols());
  const int n_free = free_coord_count(static_cast<int>(levels.size()));

  // precompute per-row level indices once; the objective re-embeds cheaply
  std::vector<int> row_level(s.size());
  {
    LatentMap probe = decode_latent(levels, levels.front(), Eigen::VectorXd::Zero(n_free));
    for (std::size_t i = 0; i < s.size(); ++i) row_level[i] = probe.require(s[i]);
  }

  BoxBounds box;
  box.lo.resize(m + n_free);
  box.hi.resize(m + n_free);
  box.lo.head(m).setConstant(cfg.log10_phi_lo);
  box.hi.head(m).setConstant(cfg.log10_phi_hi);
  box.lo.tail(n_free).setConstant(-cfg.z_bound);
  box.hi.tail(n_free).setConstant(cfg.z_bound);

  const Objective objective = [&, levels](const Eigen::VectorXd& theta) {
    const LatentMap lm = decode_latent(levels, levels.front(), theta.tail(n_free));
    Eigen::MatrixXd Wq(X.rows(), m + 2);
    Wq.leftCols(m) = X;
    for (int i = 0; i < X.rows(); ++i) {
      const Eigen::Vector2d& z = lm.coords[static_cast<std::size_t>(row_level[static_cast<std::size_t>(i)])];
      Wq(i, m) = z.x();
      Wq(i, m + 1) = z.y();
    }
    const KernelParams p = augmented_params(theta.head(m));
    try {
      return neg_log_likelihood(p, Wq, y, cfg.nugget_init, cfg.nugget_max);
    } catch (const Error&) {
      return 1e100;
    }
  };

  const MultistartResult ms =
      multistart_minimize(objective, box, cfg.restarts, cfg.max_evals_per_restart, cfg.seed);
  if (!(ms.f < 1e100)) fail("fit_lvgp: every restart failed numerically");

  const LatentMap latent = decode_latent(levels, levels.front(), ms.x.tail(n_free));
  latent.validate();
  const KernelParams params = augmented_params(ms.x.head(m));

  GpConfig gp_cfg;
  gp_cfg.nugget_init = cfg.nugget_init;
  gp_cfg.nugget_max = cfg.nugget_max;
  const Eigen::MatrixXd Waug = embed_all(X, s, latent);

  LvgpModel model;
  model.gp = gp_with_params(Waug, y, params, gp_cfg);
  model.gp.seed = cfg.seed;
  model.gp.trace.restarts = cfg.restarts;
  model.gp.trace.best_index = ms.best_index;
  model.gp.trace.evals = ms.evals;
  model.gp.trace.restart_nll = ms.restart_f;
  model.latent = latent;
  model.train_labels = s;
  model.quant_dim = m;
  return model;
}

LvgpModel lvgp_with_fixed_latent(const Eigen::MatrixXd& X, const std::vector<std::string>& s,
                                 const Eigen::VectorXd& y, const KernelParams& quant_params,
                                 const LatentMap& latent, const GpConfig& cfg) {
  if (quant_params.dim() != X.cols()) fail("lvgp: quantitative params dimension mismatch");
  const KernelParams params = augmented_params(quant_params.log10_phi);
  const Eigen::MatrixXd Waug = embed_all(X, s, latent);

  LvgpModel model;
  model.gp = gp_with_params(Waug, y, params, cfg);
  model.latent = latent;
  model.train_labels = s;
  model.quant_dim = static_cast<int>(X.cols());
  return model;
}

Prediction predict_lvgp(const LvgpModel& model, const Eigen::MatrixXd& Xq,
                        const std::vector<std::string>& sq) {
  if (static_cast<int>(sq.size()) != Xq.rows()) fail("predict_lvgp: label count mismatch");
  if (Xq.cols() != model.quant_dim) {
    fail("predict_lvgp: query has " + std::to_string(Xq.cols()) + " columns, model expects " +
         std::to_string(model.quant_dim));
  }
  const Eigen::MatrixXd Wq = embed_all(Xq, sq, model.latent);
  const Prediction pn = predict_normalized(model.gp, model.gp.input_std.transform(Wq));
  Prediction out;
  out.mean = pn.mean.array() * model.gp.output.scale + model.gp.output.center;
  out.var = pn.var.array() * (model.gp.output.scale * model.gp.output.scale);
  return out;
}

std::map<std::string, double> dissimilarity(const LvgpModel& model, const std::string& ref_level) {
  const Eigen::Vector2d z_ref = model.latent.coord(ref_level);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < model.latent.levels.size(); ++i) {
    const double dist = (model.latent.coords[i] - z_ref).norm();
    out[model.latent.levels[i]] = dist / kMaxLatentDistance;
  }
  return out;
}

std::vector<LatentRow> export_latent(const LvgpModel& model) {
  return export_latent(model, model.latent.anchor_level);
}

std::vector<LatentRow> export_latent(const LvgpModel& model, const std::string& ref_level) {
  const auto d = dissimilarity(model, ref_level);
  std::vector<LatentRow> rows;
  for (const auto& [level, dist] : d) {  // std::map iterates in label order
    const Eigen::Vector2d z = model.latent.coord(level);
    rows.push_back({level, z.x(), z.y(), dist});
  }
  return rows;
}

void write_latent_csv(const std::vector<LatentRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_latent_csv: cannot open '" + path + "'");
  out << "level,z1,z2,D\n";
  for (const auto& r : rows) {
    out << r.level << ',' << format_double(r.z1) << ',' << format_double(r.z2) << ','
        << format_double(r.d) << '\n';
  }
}

std::vector<LatentRow> load_latent_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("load_latent_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("load_latent_csv: empty file");
  std::vector<LatentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string level, z1, z2, d;
    std::getline(ss, level, ',');
    std::getline(ss, z1, ',');
    std::getline(ss, z2, ',');
    std::getline(ss, d, ',');
    rows.push_back({level, parse_double(z1), parse_double(z2), parse_double(d)});
  }
  return rows;
}

void save_lvgp(const LvgpModel& model, const std::string& path) {
  nlohmann::json doc = detail::gp_to_json(model.gp);
  doc["kind"] = "lvgp";
  doc["quant_dim"] = model.quant_dim;
  doc["train_labels"] = model.train_labels;
  nlohmann::json latent;
  latent["levels"] = model.latent.levels;
  latent["anchor_level"] = model.latent.anchor_level;
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& z : model.latent.coords) coords.push_back({z.x(), z.y()});
  latent["coords"] = coords;
  doc["latent"] = latent;
  detail::write_json_file(doc, path);
}

LvgpModel load_lvgp(const std::string& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  if (doc.value("kind", "") != "lvgp") fail("'" + path + "' is not an lvgp model artifact");
  LvgpModel model;
  model.gp = detail::gp_from_json(doc);
  model.quant_dim = doc.at("quant_dim").get<int>();
  model.train_labels = doc.at("train_labels").get<std::vector<std::string>>();
  const auto& latent = doc.at("latent");
  model.latent.levels = latent.at("levels").get<std::vector<std::string>>();
  model.latent.anchor_level = latent.at("anchor_level").get<std::string>();
  for (const auto& z : latent.at("coords")) {
    model.latent.coords.emplace_back(z[0].get<double>(), z[1].get<double>());
  }
  if (model.latent.levels.size() != model.latent.coords.size()) {
    fail("'" + path + "': latent levels/coords mismatch");
  }
  return model;
}

}  // namespace hetfuse
