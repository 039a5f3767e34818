#include "hetfuse/gp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hetfuse/optim.hpp"
#include "serialize.hpp"

namespace hetfuse {

namespace {

constexpr double kSigma2Floor = 1e-12;

Eigen::VectorXd cross_correlations(const Eigen::MatrixXd& X, const Eigen::VectorXd& phi,
                                   const Eigen::VectorXd& q) {
  // k_i = exp(-sum_j phi_j (x_ij - q_j)^2)
  const Eigen::MatrixXd diff = X.rowwise() - q.transpose();
  return (-(diff.array().square().matrix() * phi).array()).exp();
}

struct LikelihoodParts {
  double mu = 0.0;
  double sigma2 = 0.0;
  double nll = 0.0;
};

LikelihoodParts profiled_likelihood(const Eigen::MatrixXd& L, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(y.size());
  const auto Lt = L.triangularView<Eigen::Lower>();
  const Eigen::VectorXd y_white = Lt.solve(y);
  const Eigen::VectorXd ones_white = Lt.solve(Eigen::VectorXd::Ones(n));
  const double one_cinv_one = ones_white.squaredNorm();
  const double one_cinv_y = ones_white.dot(y_white);

  LikelihoodParts parts;
  parts.mu = one_cinv_y / one_cinv_one;
  const Eigen::VectorXd r_white = y_white - parts.mu * ones_white;
  const double quad = r_white.squaredNorm();
  parts.sigma2 = std::max(quad / static_cast<double>(n), kSigma2Floor);
  const double logdet = 2.0 * L.diagonal().array().log().sum();
  parts.nll = 0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846 * parts.sigma2) +
              0.5 * logdet + 0.5 * quad / parts.sigma2;
  return parts;
}

std::string params_to_string(const KernelParams& params) {
  std::string s = "log10_phi=[";
  for (int i = 0; i < params.dim(); ++i) {
    if (i > 0) s += ", ";
    s += format_double(params.log10_phi[i]);
  }
  return s + "]";
}

}  // namespace

Eigen::VectorXd KernelParams::phi() const {
  return Eigen::pow(10.0, log10_phi.array());
}

KernelParams KernelParams::from_phi(const Eigen::VectorXd& phi) {
  for (int i = 0; i < phi.size(); ++i) {
    if (!(phi[i] > 0.0)) fail("kernel params: phi entries must be positive");
  }
  KernelParams p;
  p.log10_phi = phi.array().log10();
  return p;
}

double correlation(const Eigen::VectorXd& w, const Eigen::VectorXd& w2, const KernelParams& params) {
  if (w.size() != w2.size()) fail("correlation: length mismatch");
  if (w.size() != params.dim()) fail("correlation: params dimension mismatch");
  const Eigen::VectorXd phi = params.phi();
  const Eigen::ArrayXd d = (w - w2).array();
  return std::exp(-(phi.array() * d.square()).sum());
}

Eigen::MatrixXd build_correlation_matrix(const Eigen::MatrixXd& X, const KernelParams& params,
                                         double nugget) {
  if (X.rows() < 1) fail("correlation matrix: need at least one row");
  if (X.cols() != params.dim()) fail("correlation matrix: params dimension mismatch");
  if (nugget < 0.0) fail("correlation matrix: nugget must be nonnegative");
  const int n = static_cast<int>(X.rows());
  const Eigen::VectorXd phi = params.phi();
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i) {
    C(i, i) = 1.0 + nugget;
    for (int j = i + 1; j < n; ++j) {
      const Eigen::ArrayXd d = (X.row(i) - X.row(j)).transpose().array();
      const double v = std::exp(-(phi.array() * d.square()).sum());
      C(i, j) = v;
      C(j, i) = v;
    }
  }
  return C;
}

CholFactor cholesky_with_escalation(const Eigen::MatrixXd& C0, double nugget_init, double nugget_max) {
  if (nugget_init < 0.0) fail("cholesky: nugget must be nonnegative");
  double nugget = nugget_init;
  for (;;) {
    Eigen::MatrixXd C = C0;
    C.diagonal().array() += nugget;
    const Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd L = llt.matrixL();
      if (L.allFinite() && L.diagonal().minCoeff() > 0.0) return {std::move(L), nugget};
    }
    if (nugget >= nugget_max) {
      fail("cholesky: factorization failed after nugget escalation to " + format_double(nugget));
    }
    nugget = nugget <= 0.0 ? 1e-8 : std::min(nugget * 10.0, nugget_max);
  }
}

double neg_log_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, double nugget_init, double nugget_max) {
  if (X.rows() < 2) fail("likelihood: need at least 2 rows");
  if (y.size() != X.rows()) fail("likelihood: X/y row mismatch");
  const Eigen::MatrixXd C0 = build_correlation_matrix(X, params, 0.0);
  const CholFactor chol = cholesky_with_escalation(C0, nugget_init, nugget_max);
  const LikelihoodParts parts = profiled_likelihood(chol.L, y);
  if (!std::isfinite(parts.nll)) {
    fail("likelihood: non-finite value at " + params_to_string(params));
  }
  return parts.nll;
}


void GpModel::finalize_cache() {
  const Eigen::VectorXd r = y_train.array() - mu;
  const Eigen::VectorXd r_white = chol.triangularView<Eigen::Lower>().solve(r);
  alpha = chol.transpose().triangularView<Eigen::Upper>().solve(r_white);
  ones_white = chol.triangularView<Eigen::Lower>().solve(Eigen::VectorXd::Ones(n()));
  one_cinv_one = ones_white.squaredNorm();
}

GpModel gp_with_params(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const KernelParams& params, const GpConfig& cfg) {
  if (X.rows() < 2) fail("gp: need at least 2 training rows");
  if (y.size() != X.rows()) fail("gp: X/y row mismatch");
  if (params.dim() != X.cols()) fail("gp: params dimension mismatch");

  GpModel model;
  model.params = params;
  model.X_train = X;
  model.y_train = y;
  const Eigen::MatrixXd C0 = build_correlation_matrix(X, params, 0.0);
  CholFactor chol = cholesky_with_escalation(C0, cfg.nugget_init, cfg.nugget_max);
  const LikelihoodParts parts = profiled_likelihood(chol.L, y);
  model.mu = parts.mu;
  model.sigma2 = parts.sigma2;
  model.nugget = chol.nugget;
  model.chol = std::move(chol.L);
  model.input_std = Standardizer::identity(static_cast<int>(X.cols()));
  model.output = OutputScaler{};
  model.finalize_cache();
  return model;
}

GpModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GpConfig& cfg) {
  if (X.rows() < 2) fail("fit_gp: need at least 2 training rows");
  if (X.cols() < 1) fail("fit_gp: need at least one input column");
  if (y.size() != X.rows()) fail("fit_gp: X/y row mismatch");
  if (!X.allFinite() || !y.allFinite()) fail("fit_gp: non-finite training data");

  const int d = static_cast<int>(X.cols());
  BoxBounds box;
  box.lo = Eigen::VectorXd::Constant(d, cfg.log10_phi_lo);
  box.hi = Eigen::VectorXd::Constant(d, cfg.log10_phi_hi);

  const Objective objective = [&](const Eigen::VectorXd& v) {
    KernelParams p;
    p.log10_phi = v;
    try {
      return neg_log_likelihood(p, X, y, cfg.nugget_init, cfg.nugget_max);
    } catch (const Error&) {
      return 1e100;
    }
  };

  const MultistartResult ms =
      multistart_minimize(objective, box, cfg.restarts, cfg.max_evals_per_restart, cfg.seed);
  if (!(ms.f < 1e100)) fail("fit_gp: every restart failed numerically");

  KernelParams best;
  best.log10_phi = ms.x;
  GpModel model = gp_with_params(X, y, best, cfg);
  model.seed = cfg.seed;
  model.trace.restarts = cfg.restarts;
  model.trace.best_index = ms.best_index;
  model.trace.evals = ms.evals;
  model.trace.restart_nll = ms.restart_f;
  return model;
}

Prediction predict_normalized(const GpModel& model, const Eigen::MatrixXd& Xq_norm) {
  if (Xq_norm.cols() != model.dim()) {
    fail("predict: query has " + std::to_string(Xq_norm.cols()) + " columns, model expects " +
         std::to_string(model.dim()));
  }
  const int q = static_cast<int>(Xq_norm.rows());
  const Eigen::VectorXd phi = model.params.phi();
  Prediction out;
  out.mean.resize(q);
  out.var.resize(q);
  const auto Lt = model.chol.triangularView<Eigen::Lower>();
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd k = cross_correlations(model.X_train, phi, Xq_norm.row(j));
    out.mean[j] = model.mu + k.dot(model.alpha);
    const Eigen::VectorXd k_white = Lt.solve(k);
    const double quad = k_white.squaredNorm();
    const double mean_corr = 1.0 - model.ones_white.dot(k_white);
    const double v =
        model.sigma2 * (1.0 - quad + mean_corr * mean_corr / model.one_cinv_one);
    out.var[j] = std::max(v, 0.0);
  }
  return out;
}

Eigen::VectorXd predict_mean_normalized(const GpModel& model, const Eigen::MatrixXd& Xq_norm) {
  if (Xq_norm.cols() != model.dim()) fail("predict: query dimension mismatch");
  const int q = static_cast<int>(Xq_norm.rows());
  const Eigen::VectorXd phi = model.params.phi();
  Eigen::VectorXd mean(q);
  for (int j = 0; j < q; ++j) {
    const Eigen::VectorXd k = cross_correlations(model.X_train, phi, Xq_norm.row(j));
    mean[j] = model.mu + k.dot(model.alpha);
  }
  return mean;
}

Prediction predict(const GpModel& model, const Eigen::MatrixXd& Xq) {
  const Prediction pn = predict_normalized(model, model.input_std.transform(Xq));
  Prediction out;
  out.mean = pn.mean.array() * model.output.scale + model.output.center;
  out.var = pn.var.array() * (model.output.scale * model.output.scale);
  return out;
}

namespace detail {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != d) {
      fail("model artifact: ragged matrix");
    }
    for (int j = 0; j < d; ++j) {
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

nlohmann::json gp_to_json(const GpModel& model) {
  nlohmann::json doc;
  doc["kind"] = "gp";
  doc["log10_phi"] = vector_to_json(model.params.log10_phi);
  doc["phi"] = vector_to_json(model.params.phi());
  doc["mu"] = model.mu;
  doc["sigma2"] = model.sigma2;
  doc["nugget"] = model.nugget;
  doc["X_train"] = matrix_to_json(model.X_train);
  doc["y_train"] = vector_to_json(model.y_train);
  doc["standardizers"] = {
      {"input", {{"means", vector_to_json(model.input_std.means)},
                 {"stds", vector_to_json(model.input_std.stds)}}},
      {"output", {{"center", model.output.center}, {"scale", model.output.scale}}}};
  doc["seed"] = model.seed;
  doc["optimizer_trace_summary"] = {{"restarts", model.trace.restarts},
                                    {"best_index", model.trace.best_index},
                                    {"evals", model.trace.evals},
                                    {"restart_nll", model.trace.restart_nll}};
  doc["input_space"] = model.input_space;
  doc["role"] = model.role;
  doc["input_names"] = model.input_names;
  return doc;
}

GpModel gp_from_json(const nlohmann::json& doc) {
  GpModel model;
  model.params.log10_phi = vector_from_json(doc.at("log10_phi"));
  model.mu = doc.at("mu").get<double>();
  model.sigma2 = doc.at("sigma2").get<double>();
  model.nugget = doc.at("nugget").get<double>();
  model.X_train = matrix_from_json(doc.at("X_train"));
  model.y_train = vector_from_json(doc.at("y_train"));
  model.input_std.means = vector_from_json(doc.at("standardizers").at("input").at("means"));
  model.input_std.stds = vector_from_json(doc.at("standardizers").at("input").at("stds"));
  model.output.center = doc.at("standardizers").at("output").at("center").get<double>();
  model.output.scale = doc.at("standardizers").at("output").at("scale").get<double>();
  model.seed = doc.at("seed").get<std::uint64_t>();
  const auto& trace = doc.at("optimizer_trace_summary");
  model.trace.restarts = trace.at("restarts").get<int>();
  model.trace.best_index = trace.at("best_index").get<int>();
  model.trace.evals = trace.at("evals").get<long>();
  model.trace.restart_nll = trace.at("restart_nll").get<std::vector<double>>();
  model.input_space = doc.at("input_space").get<std::string>();
  model.role = doc.at("role").get<std::string>();
  model.input_names = doc.at("input_names").get<std::vector<std::string>>();

  // the factor is rebuilt from the stored data at the stored nugget
  Eigen::MatrixXd C = build_correlation_matrix(model.X_train, model.params, model.nugget);
  const Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) fail("model artifact: stored matrix is not positive definite");
  model.chol = llt.matrixL();
  model.finalize_cache();
  return model;
}

void write_json_file(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) fail("write failed for '" + path + "'");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail("invalid JSON in '" + path + "': " + e.what());
  }
  return doc;
}

}  // namespace detail

void save_gp(const GpModel& model, const std::string& path) {
  detail::write_json_file(detail::gp_to_json(model), path);
}

GpModel load_gp(const std::string& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  if (doc.value("kind", "") != "gp") fail("'" + path + "' is not a gp model artifact");
  return detail::gp_from_json(doc);
}

}  // namespace hetfuse
