#include "hetfuse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hetfuse {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void SourceDataset::validate() const {
  if (source_id.empty()) fail("dataset: empty source_id");
  if (n() < 1) fail("dataset '" + source_id + "': empty dataset (n >= 1 required)");
  if (static_cast<int>(input_names.size()) != dim()) {
    fail("dataset '" + source_id + "': input_names length does not match column count");
  }
  std::set<std::string> seen(input_names.begin(), input_names.end());
  if (seen.size() != input_names.size()) {
    fail("dataset '" + source_id + "': duplicate input names");
  }
  if (y.size() != X.rows()) fail("dataset '" + source_id + "': X/y row mismatch");
  if (!X.allFinite() || !y.allFinite()) {
    fail("dataset '" + source_id + "': non-finite values present");
  }
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) fail("standardizer: need at least 2 rows");
  Standardizer st = fit_lenient(X);
  for (int j = 0; j < st.dim(); ++j) {
    // fit_lenient parks constant columns at scale 1; detect them here
    const double spread = (X.col(j).maxCoeff() - X.col(j).minCoeff());
    if (spread <= 1e-12 * (1.0 + std::abs(st.means[j]))) {
      fail("standardizer: constant column " + std::to_string(j));
    }
  }
  return st;
}

Standardizer Standardizer::fit_lenient(const Eigen::MatrixXd& X) {
  if (X.rows() < 1) fail("standardizer: empty matrix");
  Standardizer st;
  const double n = static_cast<double>(X.rows());
  st.means = X.colwise().mean();
  st.stds.resize(X.cols());
  for (int j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - st.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    st.stds[j] = sd > 1e-12 * (1.0 + std::abs(st.means[j])) ? sd : 1.0;
  }
  return st;
}

Standardizer Standardizer::identity(int d) {
  Standardizer st;
  st.means = Eigen::VectorXd::Zero(d);
  st.stds = Eigen::VectorXd::Ones(d);
  return st;
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& X) const {
  if (X.cols() != dim()) fail("standardizer: dimension mismatch");
  return (X.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& Z) const {
  if (Z.cols() != dim()) fail("standardizer: dimension mismatch");
  return (Z.array().rowwise() * stds.transpose().array()).matrix().rowwise() + means.transpose();
}

OutputScaler OutputScaler::fit(const Eigen::VectorXd& y) {
  if (y.size() < 1) fail("output scaler: empty response");
  OutputScaler sc;
  sc.center = y.mean();
  const double var = (y.array() - sc.center).square().sum() / static_cast<double>(y.size());
  const double sd = std::sqrt(var);
  sc.scale = sd > 0.0 ? sd : 1.0;
  return sc;
}

Eigen::VectorXd OutputScaler::transform(const Eigen::VectorXd& y) const {
  return (y.array() - center) / scale;
}

Eigen::VectorXd OutputScaler::inverse(const Eigen::VectorXd& z) const {
  return z.array() * scale + center;
}

std::pair<SourceDataset, SourceDataset> split(const SourceDataset& ds, const SplitSpec& spec) {
  ds.validate();
  if (!(spec.train_fraction > 0.0) || spec.train_fraction > 1.0) {
    fail("split: train_fraction must lie in (0,1]");
  }
  const int n = ds.n();
  const int n_train = static_cast<int>(
      std::ceil(spec.train_fraction * static_cast<double>(n) - 1e-9));
  if (n_train < 1) fail("split: train_fraction yields empty train set");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(idx);
  std::vector<int> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<int> test_idx(idx.begin() + n_train, idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&ds](const std::vector<int>& rows) {
    SourceDataset out;
    out.source_id = ds.source_id;
    out.input_names = ds.input_names;
    out.output_name = ds.output_name;
    out.X.resize(static_cast<int>(rows.size()), ds.dim());
    out.y.resize(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.X.row(static_cast<int>(i)) = ds.X.row(rows[i]);
      out.y[static_cast<int>(i)] = ds.y[rows[i]];
    }
    return out;
  };
  return {take(train_idx), take(test_idx)};
}

SourceDataset load_csv(const std::string& path, const CsvSchema& schema, const std::string& source_id) {
  if (schema.input_columns.empty()) fail("load_csv: schema needs at least one input column");
  if (schema.output_column.empty()) fail("load_csv: schema needs an output column");

  std::ifstream in(path);
  if (!in) fail("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) fail("load_csv: '" + path + "' is empty (header row required)");
  const std::vector<std::string> header = split_line(line);

  auto column_index = [&](const std::string& name) {
    int found = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) {
        if (found >= 0) fail("load_csv: duplicate column '" + name + "' in '" + path + "'");
        found = static_cast<int>(j);
      }
    }
    if (found < 0) fail("load_csv: missing column '" + name + "' in '" + path + "'");
    return found;
  };

  std::vector<int> in_cols;
  for (const auto& name : schema.input_columns) in_cols.push_back(column_index(name));
  const int out_col = column_index(schema.output_column);

  std::vector<std::vector<double>> rows;
  std::vector<double> yv;
  int data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      fail("load_csv: row " + std::to_string(data_row) + " of '" + path + "' has " +
           std::to_string(cells.size()) + " cells, expected " + std::to_string(header.size()));
    }
    auto cell_value = [&](int col) {
      double v = 0.0;
      try {
        v = parse_double(cells[static_cast<std::size_t>(col)]);
      } catch (const Error&) {
        fail("load_csv: non-numeric value '" + cells[static_cast<std::size_t>(col)] +
             "' at row " + std::to_string(data_row) + " of '" + path + "'");
      }
      if (!std::isfinite(v)) {
        fail("load_csv: non-finite value at row " + std::to_string(data_row) + " of '" + path + "'");
      }
      return v;
    };
    std::vector<double> r;
    r.reserve(in_cols.size());
    for (int c : in_cols) r.push_back(cell_value(c));
    rows.push_back(std::move(r));
    yv.push_back(cell_value(out_col));
  }
  if (rows.empty()) fail("load_csv: empty dataset in '" + path + "' (header only)");

  SourceDataset ds;
  ds.source_id = source_id;
  ds.input_names = schema.input_columns;
  ds.output_name = schema.output_column;
  ds.X.resize(static_cast<int>(rows.size()), static_cast<int>(in_cols.size()));
  ds.y.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      ds.X(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    ds.y[static_cast<int>(i)] = yv[i];
  }
  ds.validate();
  return ds;
}

void write_csv(const SourceDataset& ds, const std::string& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) fail("write_csv: cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < ds.input_names.size(); ++j) {
    out << ds.input_names[j] << ',';
  }
  out << ds.output_name << '\n';
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << format_double(ds.X(i, j)) << ',';
    out << format_double(ds.y[i]) << '\n';
  }
  if (!out) fail("write_csv: write failed for '" + path + "'");
}

std::vector<std::string> FusedDataset::source_ids() const {
  std::set<std::string> ids(s.begin(), s.end());
  return {ids.begin(), ids.end()};
}

void FusedDataset::validate() const {
  if (n() < 1) fail("fused dataset: empty");
  if (static_cast<int>(s.size()) != n()) fail("fused dataset: label count mismatch");
  if (y.size() != n()) fail("fused dataset: response count mismatch");
  if (!X.allFinite() || !y.allFinite()) fail("fused dataset: non-finite values");
  for (const auto& label : s) {
    if (label.empty()) fail("fused dataset: empty source label present");
  }
  const auto ids = source_ids();
  if (std::find(ids.begin(), ids.end(), ref_source_id) == ids.end()) {
    fail("fused dataset: ref source '" + ref_source_id + "' not among labels");
  }
  if (static_cast<int>(input_names.size()) != dim()) {
    fail("fused dataset: input_names length mismatch");
  }
}

void write_fused_csv(const FusedDataset& fused, const std::string& path) {
  fused.validate();
  std::ofstream out(path);
  if (!out) fail("write_fused_csv: cannot open '" + path + "'");
  for (const auto& name : fused.input_names) out << name << ',';
  out << "source," << fused.output_name << '\n';
  for (int i = 0; i < fused.n(); ++i) {
    for (int j = 0; j < fused.dim(); ++j) out << format_double(fused.X(i, j)) << ',';
    out << fused.s[static_cast<std::size_t>(i)] << ',' << format_double(fused.y[i]) << '\n';
  }
  if (!out) fail("write_fused_csv: write failed for '" + path + "'");
}

FusedDataset load_fused_csv(const std::string& path, const std::string& ref_source_id,
                            const std::string& output_name) {
  std::ifstream in(path);
  if (!in) fail("load_fused_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail("load_fused_csv: '" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);

  int source_col = -1;
  int out_col = -1;
  std::vector<int> in_cols;
  std::vector<std::string> in_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "source") {
      source_col = static_cast<int>(j);
    } else if (header[j] == output_name) {
      out_col = static_cast<int>(j);
    } else {
      in_cols.push_back(static_cast<int>(j));
      in_names.push_back(header[j]);
    }
  }
  if (source_col < 0) fail("load_fused_csv: missing 'source' column in '" + path + "'");
  if (out_col < 0) fail("load_fused_csv: missing output column '" + output_name + "' in '" + path + "'");

  FusedDataset fused;
  fused.ref_source_id = ref_source_id;
  fused.input_names = in_names;
  fused.output_name = output_name;

  std::vector<std::vector<double>> rows;
  std::vector<double> yv;
  int data_row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++data_row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      fail("load_fused_csv: ragged row " + std::to_string(data_row) + " in '" + path + "'");
    }
    std::vector<double> r;
    for (int c : in_cols) r.push_back(parse_double(cells[static_cast<std::size_t>(c)]));
    rows.push_back(std::move(r));
    fused.s.push_back(cells[static_cast<std::size_t>(source_col)]);
    yv.push_back(parse_double(cells[static_cast<std::size_t>(out_col)]));
  }
  if (rows.empty()) fail("load_fused_csv: no data rows in '" + path + "'");
  fused.X.resize(static_cast<int>(rows.size()), static_cast<int>(in_cols.size()));
  fused.y.resize(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      fused.X(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
    fused.y[static_cast<int>(i)] = yv[i];
  }
  fused.validate();
  return fused;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("manifest: cannot open '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    fail("manifest: invalid JSON in '" + path + "': " + e.what());
  }
  Manifest m;
  if (!doc.contains("sources") || !doc["sources"].is_array()) {
    fail("manifest: '" + path + "' needs a 'sources' array");
  }
  for (const auto& entry : doc["sources"]) {
    ManifestEntry e;
    e.source_id = entry.at("source_id").get<std::string>();
    e.csv_path = entry.at("csv_path").get<std::string>();
    e.input_columns = entry.at("input_columns").get<std::vector<std::string>>();
    e.output_column = entry.at("output_column").get<std::string>();
    if (entry.contains("test_csv_path")) {
      e.test_csv_path = entry["test_csv_path"].get<std::string>();
    }
    if (entry.contains("split")) {
      SplitSpec sp;
      sp.train_fraction = entry["split"].at("train_fraction").get<double>();
      sp.seed = entry["split"].at("seed").get<std::uint64_t>();
      e.split = sp;
    }
    m.sources.push_back(std::move(e));
  }
  if (m.sources.empty()) fail("manifest: '" + path + "' lists no sources");
  std::set<std::string> ids;
  for (const auto& e : m.sources) {
    if (!ids.insert(e.source_id).second) {
      fail("manifest: duplicate source_id '" + e.source_id + "'");
    }
  }
  return m;
}

void Manifest::save(const std::string& path) const {
  nlohmann::json doc;
  doc["sources"] = nlohmann::json::array();
  for (const auto& e : sources) {
    nlohmann::json entry;
    entry["source_id"] = e.source_id;
    entry["csv_path"] = e.csv_path;
    entry["input_columns"] = e.input_columns;
    entry["output_column"] = e.output_column;
    if (e.test_csv_path) entry["test_csv_path"] = *e.test_csv_path;
    if (e.split) {
      entry["split"] = {{"train_fraction", e.split->train_fraction}, {"seed", e.split->seed}};
    }
    doc["sources"].push_back(entry);
  }
  std::ofstream out(path);
  if (!out) fail("manifest: cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
}

std::vector<SourcePair> load_manifest_data(const Manifest& m, const std::string& base_dir) {
  namespace fs = std::filesystem;
  auto resolve = [&base_dir](const std::string& p) {
    const fs::path path(p);
    if (path.is_absolute() || base_dir.empty()) return path.string();
    return (fs::path(base_dir) / path).string();
  };

  std::vector<SourcePair> out;
  std::string shared_output;
  for (const auto& e : m.sources) {
    if (shared_output.empty()) {
      shared_output = e.output_column;
    } else if (shared_output != e.output_column) {
      fail("manifest: sources disagree on output column ('" + shared_output + "' vs '" +
           e.output_column + "')");
    }
    const CsvSchema schema{e.input_columns, e.output_column};
    SourceDataset full = load_csv(resolve(e.csv_path), schema, e.source_id);
    SourcePair pair;
    if (e.test_csv_path) {
      pair.train = std::move(full);
      pair.test = load_csv(resolve(*e.test_csv_path), schema, e.source_id);
    } else if (e.split) {
      auto [tr, te] = split(full, *e.split);
      pair.train = std::move(tr);
      if (te.n() > 0) pair.test = std::move(te);
    } else {
      pair.train = std::move(full);
    }
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace hetfuse
