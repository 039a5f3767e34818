#include "hetfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "serialize.hpp"

namespace hetfuse {

namespace {

Standardizer extend_with_latent_slots(const Standardizer& st) {
  Standardizer ext;
  ext.means.resize(st.dim() + 2);
  ext.stds.resize(st.dim() + 2);
  ext.means.head(st.dim()) = st.means;
  ext.stds.head(st.dim()) = st.stds;
  ext.means.tail(2).setZero();
  ext.stds.tail(2).setOnes();
  return ext;
}

}  // namespace

LvgpModel train_fusion(const FusedDataset& fused, const FusionConfig& cfg) {
  fused.validate();
  if (fused.source_ids().size() < 2) {
    fail("train_fusion: need at least two sources in the fused data");
  }
  const Standardizer xstd = Standardizer::fit(fused.X);
  const OutputScaler yscl = OutputScaler::fit(fused.y);

  LvgpConfig lcfg;
  lcfg.restarts = cfg.restarts;
  lcfg.max_evals_per_restart = cfg.max_evals_per_restart;
  lcfg.seed = cfg.seed;
  lcfg.anchor_level = fused.ref_source_id;

  LvgpModel model = fit_lvgp(xstd.transform(fused.X), fused.s, yscl.transform(fused.y), lcfg);
  model.gp.input_std = extend_with_latent_slots(xstd);
  model.gp.output = yscl;
  model.gp.input_space = "fused:" + fused.ref_source_id;
  model.gp.role = "fused_lvgp";
  model.gp.input_names = fused.input_names;
  return model;
}

GpModel train_baseline_gp(const FusedDataset& fused, const FusionConfig& cfg) {
  fused.validate();
  const Standardizer xstd = Standardizer::fit(fused.X);
  const OutputScaler yscl = OutputScaler::fit(fused.y);

  GpConfig gcfg;
  gcfg.restarts = cfg.restarts;
  gcfg.max_evals_per_restart = cfg.max_evals_per_restart;
  gcfg.seed = cfg.seed;

  GpModel model = fit_gp(xstd.transform(fused.X), yscl.transform(fused.y), gcfg);
  model.input_std = xstd;
  model.output = yscl;
  model.input_space = "fused:" + fused.ref_source_id;
  model.role = "fused_gp";
  model.input_names = fused.input_names;
  return model;
}

GpModel train_single_source(const SourceDataset& source, const FusionConfig& cfg) {
  source.validate();
  if (source.n() < 2) {
    fail("train_single_source('" + source.source_id + "'): need at least 2 rows");
  }
  const Standardizer xstd = Standardizer::fit(source.X);
  const OutputScaler yscl = OutputScaler::fit(source.y);

  GpConfig gcfg;
  gcfg.restarts = cfg.restarts;
  gcfg.max_evals_per_restart = cfg.max_evals_per_restart;
  gcfg.seed = cfg.seed;

  GpModel model = fit_gp(xstd.transform(source.X), yscl.transform(source.y), gcfg);
  model.input_std = xstd;
  model.output = yscl;
  model.input_space = "original:" + source.source_id;
  model.role = "single_source_gp";
  model.input_names = source.input_names;
  return model;
}

double nrmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
  if (pred.size() != truth.size()) fail("nrmse: length mismatch");
  if (pred.size() == 0) fail("nrmse: empty vectors");
  const double range = truth.maxCoeff() - truth.minCoeff();
  if (!(range > 0.0)) fail("nrmse: constant truth (zero range)");
  const double mse = (pred - truth).squaredNorm() / static_cast<double>(pred.size());
  return std::sqrt(mse) / range;
}

std::vector<TestSet> build_test_sets(const std::vector<SourceDataset>& tests,
                                     const std::string& ref_id, const Standardizer& ref_std,
                                     const std::vector<LinearMap>& maps) {
  std::vector<TestSet> out;
  for (const auto& ds : tests) {
    ds.validate();
    TestSet t;
    t.source_id = ds.source_id;
    t.X_original = ds.X;
    t.y = ds.y;
    if (ds.source_id == ref_id) {
      t.X_mapped = ref_std.transform(ds.X);
    } else {
      const LinearMap* map = nullptr;
      for (const auto& m : maps) {
        if (m.source_id == ds.source_id) map = &m;
      }
      if (map != nullptr) {
        t.X_mapped = apply_map(*map, map->source_std.transform(ds.X));
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

struct PooledPredictions {
  Eigen::VectorXd y_true;
  Eigen::VectorXd y_pred;
  Eigen::VectorXd y_std;
  std::vector<std::string> source;
  Eigen::MatrixXd inputs;
  std::map<std::string, std::pair<Eigen::VectorXd, Eigen::VectorXd>> per_source;  // truth, pred
};

PooledPredictions predict_over_tests(const std::vector<TestSet>& tests, bool mapped_space,
                                     const std::function<Prediction(const Eigen::MatrixXd&,
                                                                    const std::string&)>& predictor) {
  int total = 0;
  int d = 0;
  for (const auto& t : tests) {
    const Eigen::MatrixXd& X = mapped_space ? t.X_mapped : t.X_original;
    if (X.rows() != t.y.size()) {
      fail("evaluate: test rows for '" + t.source_id + "' not routable in the required space");
    }
    total += static_cast<int>(X.rows());
    d = static_cast<int>(X.cols());
  }
  PooledPredictions pooled;
  pooled.y_true.resize(total);
  pooled.y_pred.resize(total);
  pooled.y_std.resize(total);
  pooled.inputs.resize(total, d);
  pooled.source.reserve(static_cast<std::size_t>(total));
  int row = 0;
  for (const auto& t : tests) {
    const Eigen::MatrixXd& X = mapped_space ? t.X_mapped : t.X_original;
    const Prediction p = predictor(X, t.source_id);
    pooled.per_source[t.source_id] = {t.y, p.mean};
    for (int i = 0; i < X.rows(); ++i, ++row) {
      pooled.y_true[row] = t.y[i];
      pooled.y_pred[row] = p.mean[i];
      pooled.y_std[row] = std::sqrt(std::max(p.var[i], 0.0));
      pooled.inputs.row(row) = X.row(i);
      pooled.source.push_back(t.source_id);
    }
  }
  return pooled;
}

EvalRow row_from_pooled(const std::string& kind, const PooledPredictions& pooled) {
  EvalRow row;
  row.model_kind = kind;
  row.test_nrmse_all = nrmse(pooled.y_pred, pooled.y_true);
  for (const auto& [id, tp] : pooled.per_source) {
    row.test_nrmse_per_source[id] = nrmse(tp.second, tp.first);
  }
  return row;
}

}  // namespace

EvalResult evaluate(const TrainedModels& models, const FusedDataset* fused_train,
                    const std::vector<TestSet>& tests) {
  if (tests.empty()) fail("evaluate: no test sets");
  if (models.fused_gp == nullptr && models.fused_lvgp == nullptr && models.single_source.empty()) {
    fail("evaluate: no models given");
  }
  if ((models.fused_gp != nullptr || models.fused_lvgp != nullptr) && fused_train == nullptr) {
    fail("evaluate: fused models require the fused training data");
  }

  EvalResult result;
  EvalReport& report = result.report;

  if (fused_train != nullptr) {
    report.ref_id = fused_train->ref_source_id;
    for (const auto& id : fused_train->source_ids()) {
      report.train_sizes[id] =
          static_cast<int>(std::count(fused_train->s.begin(), fused_train->s.end(), id));
    }
  }
  for (const auto& t : tests) {
    report.test_sizes[t.source_id] = static_cast<int>(t.y.size());
  }
  // the per-source column of the text table: fewest training rows
  if (!report.train_sizes.empty()) {
    report.sparse_source = report.train_sizes.begin()->first;
    for (const auto& [id, n] : report.train_sizes) {
      if (n < report.train_sizes.at(report.sparse_source)) report.sparse_source = id;
    }
  }

  if (models.fused_gp != nullptr) {
    const GpModel& gp = *models.fused_gp;
    if (gp.input_space.rfind("fused:", 0) != 0) {
      fail("evaluate: fused_gp model is not tagged for the fused input space");
    }
    const PooledPredictions pooled = predict_over_tests(
        tests, /*mapped_space=*/true,
        [&](const Eigen::MatrixXd& X, const std::string&) { return predict(gp, X); });
    EvalRow row = row_from_pooled("fused_gp", pooled);
    const Prediction train_pred = predict(gp, fused_train->X);
    row.train_nrmse_all = nrmse(train_pred.mean, fused_train->y);
    report.rows.push_back(std::move(row));

    PredictionTable table;
    table.model_kind = "fused_gp";
    table.input_names = gp.input_names;
    table.source = pooled.source;
    table.inputs = pooled.inputs;
    table.y_true = pooled.y_true;
    table.y_pred = pooled.y_pred;
    table.y_std = pooled.y_std;
    result.predictions.push_back(std::move(table));
  }

  if (models.fused_lvgp != nullptr) {
    const LvgpModel& lvgp = *models.fused_lvgp;
    if (lvgp.gp.input_space.rfind("fused:", 0) != 0) {
      fail("evaluate: fused_lvgp model is not tagged for the fused input space");
    }
    const PooledPredictions pooled =
        predict_over_tests(tests, /*mapped_space=*/true,
                           [&](const Eigen::MatrixXd& X, const std::string& id) {
                             return predict_lvgp(lvgp, X, std::vector<std::string>(
                                                              static_cast<std::size_t>(X.rows()), id));
                           });
    EvalRow row = row_from_pooled("fused_lvgp", pooled);
    const Prediction train_pred = predict_lvgp(lvgp, fused_train->X, fused_train->s);
    row.train_nrmse_all = nrmse(train_pred.mean, fused_train->y);
    report.rows.push_back(std::move(row));

    PredictionTable table;
    table.model_kind = "fused_lvgp";
    table.input_names = lvgp.gp.input_names;
    table.source = pooled.source;
    table.inputs = pooled.inputs;
    table.y_true = pooled.y_true;
    table.y_pred = pooled.y_pred;
    table.y_std = pooled.y_std;
    result.predictions.push_back(std::move(table));
  }

  for (const auto& [id, model] : models.single_source) {
    const GpModel& gp = *model;
    if (gp.input_space != "original:" + id) {
      fail("evaluate: single-source model for '" + id + "' carries tag '" + gp.input_space + "'");
    }
    const TestSet* own = nullptr;
    for (const auto& t : tests) {
      if (t.source_id == id) own = &t;
    }
    if (own == nullptr) fail("evaluate: no test rows for single-source model '" + id + "'");
    if (own->X_original.cols() != gp.dim()) {
      fail("evaluate: test rows for '" + id + "' not routable to the original input space");
    }

    const Prediction p = predict(gp, own->X_original);
    EvalRow row;
    row.model_kind = "single_source_gp";
    row.source_id = id;
    row.test_nrmse_per_source[id] = nrmse(p.mean, own->y);
    report.rows.push_back(std::move(row));

    PredictionTable table;
    table.model_kind = "single_source_gp";
    table.source_suffix = id;
    table.input_names = gp.input_names;
    table.source.assign(static_cast<std::size_t>(own->y.size()), id);
    table.inputs = own->X_original;
    table.y_true = own->y;
    table.y_pred = p.mean;
    table.y_std = p.var.array().max(0.0).sqrt();
    result.predictions.push_back(std::move(table));
  }

  return result;
}

namespace {

std::string fixed3(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(3) << v;
  return ss.str();
}

}  // namespace

std::string render_report_text(const EvalReport& report) {
  std::ostringstream out;
  const std::string sparse = report.sparse_source;
  out << "Model            Train NRMSE (all)  Test NRMSE (all)  Test NRMSE (" << sparse << ")\n";
  for (const auto& row : report.rows) {
    std::string name = row.model_kind;
    if (row.model_kind == "single_source_gp") name = "gp-" + row.source_id;
    std::string sparse_cell = "--";
    const auto it = row.test_nrmse_per_source.find(sparse);
    if (it != row.test_nrmse_per_source.end()) sparse_cell = fixed3(it->second);
    out << std::left << std::setw(17) << name << std::setw(19)
        << (row.train_nrmse_all ? fixed3(*row.train_nrmse_all) : "--") << std::setw(18)
        << (row.test_nrmse_all ? fixed3(*row.test_nrmse_all) : "--") << sparse_cell << '\n';
  }
  return out.str();
}

void save_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["kind"] = "eval_report";
  doc["ref_id"] = report.ref_id;
  doc["sparse_source"] = report.sparse_source;
  doc["normalizer"] = report.normalizer;
  doc["train_sizes"] = report.train_sizes;
  doc["test_sizes"] = report.test_sizes;
  doc["models"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r;
    r["model_kind"] = row.model_kind;
    if (!row.source_id.empty()) r["source_id"] = row.source_id;
    if (row.train_nrmse_all) r["train_nrmse_all"] = *row.train_nrmse_all;
    if (row.test_nrmse_all) r["test_nrmse_all"] = *row.test_nrmse_all;
    r["test_nrmse_per_source"] = row.test_nrmse_per_source;
    doc["models"].push_back(std::move(r));
  }
  detail::write_json_file(doc, path);
}

void write_predictions_csv(const PredictionTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_predictions_csv: cannot open '" + path + "'");
  out << "source_id";
  for (const auto& name : table.input_names) out << ',' << name;
  out << ",y_true,y_pred,y_std\n";
  for (int i = 0; i < table.y_true.size(); ++i) {
    out << table.source[static_cast<std::size_t>(i)];
    for (int j = 0; j < table.inputs.cols(); ++j) out << ',' << format_double(table.inputs(i, j));
    out << ',' << format_double(table.y_true[i]) << ',' << format_double(table.y_pred[i]) << ','
        << format_double(table.y_std[i]) << '\n';
  }
}

}  // namespace hetfuse
