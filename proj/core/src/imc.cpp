#include "hetfuse/imc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "hetfuse/optim.hpp"
#include "serialize.hpp"

namespace hetfuse {

void ImcConfig::validate() const {
  if (population < 1) fail("imc config: population must be positive");
  if (generations < 1) fail("imc config: generations must be positive");
  if (crossover_rate < 0.0 || crossover_rate > 1.0) fail("imc config: crossover_rate outside [0,1]");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) fail("imc config: mutation_rate outside [0,1]");
  if (!(mutation_sigma > 0.0)) fail("imc config: mutation_sigma must be positive");
  if (!(bound_lo < bound_hi)) fail("imc config: empty parameter box");
  if (elitism < 0 || elitism > population) fail("imc config: elitism must not exceed population");
  if (tournament < 1) fail("imc config: tournament size must be positive");
}

Eigen::MatrixXd apply_map(const LinearMap& map, const Eigen::MatrixXd& Xs_norm) {
  if (Xs_norm.cols() != map.d_s()) {
    fail("apply_map: input has " + std::to_string(Xs_norm.cols()) + " columns, map expects " +
         std::to_string(map.d_s()));
  }
  return ((map.A * Xs_norm.transpose()).colwise() + map.b).transpose();
}

double imc_loss(const LinearMap& map, const Eigen::MatrixXd& Xs_norm, const Eigen::VectorXd& ys,
                const GpModel& ref_gp) {
  if (ys.size() != Xs_norm.rows()) fail("imc_loss: X/y row mismatch");
  if (Xs_norm.rows() < 1) fail("imc_loss: empty source data");
  const Eigen::MatrixXd mapped = apply_map(map, Xs_norm);
  const Eigen::VectorXd pred = predict_mean_normalized(ref_gp, mapped);
  const Eigen::VectorXd ys_std = ref_gp.output.transform(ys);
  const double loss = (ys_std - pred).squaredNorm() / static_cast<double>(ys.size());
  if (!std::isfinite(loss)) fail("imc_loss: non-finite prediction");
  return loss;
}

namespace {

LinearMap decode_genome(const Eigen::VectorXd& genes, int d_ref, int d_s) {
  LinearMap map;
  map.A.resize(d_ref, d_s);
  for (int i = 0; i < d_ref; ++i) {
    map.A.row(i) = genes.segment(i * d_s, d_s).transpose();
  }
  map.b = genes.segment(d_ref * d_s, d_ref);
  return map;
}

struct RankedIndex {
  double fitness;
  int index;
};

}  // namespace

CalibrationResult calibrate(const SourceDataset& source, const GpModel& ref_gp,
                            const ImcConfig& cfg) {
  cfg.validate();
  source.validate();
  const int d_s = source.dim();
  const int d_ref = ref_gp.dim();
  const int genome = d_ref * (d_s + 1);

  // own-space z-scoring; single-row or constant columns keep unit scale
  const Standardizer source_std = source.n() >= 2 ? Standardizer::fit_lenient(source.X)
                                                  : [&] {
                                                      Standardizer st;
                                                      st.means = source.X.row(0).transpose();
                                                      st.stds = Eigen::VectorXd::Ones(d_s);
                                                      return st;
                                                    }();
  const Eigen::MatrixXd Xs_norm = source_std.transform(source.X);

  auto fitness_of = [&](const Eigen::VectorXd& genes) {
    LinearMap candidate = decode_genome(genes, d_ref, d_s);
    try {
      return imc_loss(candidate, Xs_norm, source.y, ref_gp);
    } catch (const Error&) {
      return 1e100;
    }
  };

  Rng rng(cfg.seed);
  const int P = cfg.population;
  std::vector<Eigen::VectorXd> pop(static_cast<std::size_t>(P));
  std::vector<double> fit(static_cast<std::size_t>(P));

  // individual 0 is the zero map; the rest spread by Latin hypercube
  pop[0] = Eigen::VectorXd::Zero(genome);
  if (P > 1) {
    const Eigen::MatrixXd unit = latin_hypercube(rng, P - 1, genome);
    for (int i = 1; i < P; ++i) {
      pop[static_cast<std::size_t>(i)] =
          (cfg.bound_lo +
           unit.row(i - 1).transpose().array() * (cfg.bound_hi - cfg.bound_lo))
              .matrix();
    }
  }
  parallel_for(static_cast<std::size_t>(P),
               [&](std::size_t i) { fit[i] = fitness_of(pop[i]); });

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.generations) + 1);
  trace.push_back(*std::min_element(fit.begin(), fit.end()));

  auto ranked = [&] {
    std::vector<RankedIndex> r(static_cast<std::size_t>(P));
    for (int i = 0; i < P; ++i) r[static_cast<std::size_t>(i)] = {fit[static_cast<std::size_t>(i)], i};
    std::stable_sort(r.begin(), r.end(), [](const RankedIndex& a, const RankedIndex& b) {
      return a.fitness < b.fitness;
    });
    return r;
  };

  auto tournament_pick = [&]() {
    int best = static_cast<int>(rng.index(static_cast<std::size_t>(P)));
    for (int t = 1; t < cfg.tournament; ++t) {
      const int challenger = static_cast<int>(rng.index(static_cast<std::size_t>(P)));
      if (fit[static_cast<std::size_t>(challenger)] < fit[static_cast<std::size_t>(best)] ||
          (fit[static_cast<std::size_t>(challenger)] == fit[static_cast<std::size_t>(best)] &&
           challenger < best)) {
        best = challenger;
      }
    }
    return best;
  };

  for (int g = 0; g < cfg.generations; ++g) {
    const auto order = ranked();
    std::vector<Eigen::VectorXd> next;
    std::vector<double> next_fit;
    next.reserve(static_cast<std::size_t>(P));
    next_fit.reserve(static_cast<std::size_t>(P));
    for (int e = 0; e < cfg.elitism && e < P; ++e) {
      next.push_back(pop[static_cast<std::size_t>(order[static_cast<std::size_t>(e)].index)]);
      next_fit.push_back(order[static_cast<std::size_t>(e)].fitness);
    }
    const std::size_t n_elite = next.size();
    while (static_cast<int>(next.size()) < P) {
      const int pa = tournament_pick();
      const int pb = tournament_pick();
      Eigen::VectorXd child = pop[static_cast<std::size_t>(pa)];
      if (rng.uniform() < cfg.crossover_rate) {
        for (int k = 0; k < genome; ++k) {
          if (rng.uniform() < 0.5) child[k] = pop[static_cast<std::size_t>(pb)][k];
        }
      }
      for (int k = 0; k < genome; ++k) {
        if (rng.uniform() < cfg.mutation_rate) {
          child[k] = std::clamp(child[k] + cfg.mutation_sigma * rng.normal(), cfg.bound_lo,
                                cfg.bound_hi);
        }
      }
      next.push_back(std::move(child));
      next_fit.push_back(0.0);  // filled below
    }
    parallel_for(next.size() - n_elite, [&](std::size_t i) {
      next_fit[n_elite + i] = fitness_of(next[n_elite + i]);
    });
    pop = std::move(next);
    fit = std::move(next_fit);
    trace.push_back(*std::min_element(fit.begin(), fit.end()));
  }

  int best = 0;
  for (int i = 1; i < P; ++i) {
    if (fit[static_cast<std::size_t>(i)] < fit[static_cast<std::size_t>(best)]) best = i;
  }
  if (!(fit[static_cast<std::size_t>(best)] < 1e100)) {
    fail("calibrate('" + source.source_id + "'): GA budget exhausted with non-finite losses");
  }

  CalibrationResult result;
  result.map = decode_genome(pop[static_cast<std::size_t>(best)], d_ref, d_s);
  result.map.source_id = source.source_id;
  result.map.loss = fit[static_cast<std::size_t>(best)];
  result.map.source_std = source_std;
  result.map.source_input_names = source.input_names;
  result.map.ref_input_names = ref_gp.input_names;
  result.map.seed = cfg.seed;
  result.trace = std::move(trace);
  return result;
}

MapAllResult map_all_sources(const std::vector<SourceDataset>& sources, const std::string& ref_id,
                             const ImcConfig& imc_cfg, const GpConfig& gp_cfg) {
  if (sources.empty()) fail("map_all_sources: no sources given");
  std::set<std::string> ids;
  for (const auto& src : sources) {
    src.validate();
    if (!ids.insert(src.source_id).second) {
      fail("map_all_sources: duplicate source id '" + src.source_id + "'");
    }
    if (src.output_name != sources.front().output_name) {
      fail("map_all_sources: sources disagree on output ('" + sources.front().output_name +
           "' vs '" + src.output_name + "')");
    }
  }

  // reference: as named, else the source with the most rows (ties by label)
  int ref_idx = -1;
  if (!ref_id.empty()) {
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (sources[i].source_id == ref_id) ref_idx = static_cast<int>(i);
    }
    if (ref_idx < 0) fail("map_all_sources: reference source '" + ref_id + "' not found");
  } else {
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (ref_idx < 0 || sources[i].n() > sources[static_cast<std::size_t>(ref_idx)].n() ||
          (sources[i].n() == sources[static_cast<std::size_t>(ref_idx)].n() &&
           sources[i].source_id < sources[static_cast<std::size_t>(ref_idx)].source_id)) {
        ref_idx = static_cast<int>(i);
      }
    }
  }
  const SourceDataset& ref = sources[static_cast<std::size_t>(ref_idx)];

  MapAllResult result;
  result.ref_id = ref.source_id;

  const Standardizer ref_std = Standardizer::fit(ref.X);
  const OutputScaler ref_scaler = OutputScaler::fit(ref.y);
  result.ref_gp = fit_gp(ref_std.transform(ref.X), ref_scaler.transform(ref.y), gp_cfg);
  result.ref_gp.input_std = ref_std;
  result.ref_gp.output = ref_scaler;
  result.ref_gp.input_space = "original:" + ref.source_id;
  result.ref_gp.role = "reference_gp";
  result.ref_gp.input_names = ref.input_names;

  std::vector<int> other_order;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (static_cast<int>(i) != ref_idx) other_order.push_back(static_cast<int>(i));
  }
  std::sort(other_order.begin(), other_order.end(), [&](int a, int b) {
    return sources[static_cast<std::size_t>(a)].source_id < sources[static_cast<std::size_t>(b)].source_id;
  });

  int n_total = ref.n();
  for (int idx : other_order) {
    const SourceDataset& src = sources[static_cast<std::size_t>(idx)];
    ImcConfig cfg_s = imc_cfg;
    cfg_s.seed = mix_seed(imc_cfg.seed, hash_label(src.source_id));
    try {
      CalibrationResult cal = calibrate(src, result.ref_gp, cfg_s);
      cal.map.ref_id = ref.source_id;
      result.calibrations.push_back(std::move(cal));
    } catch (const Error& e) {
      fail("map_all_sources: source '" + src.source_id + "': " + e.what());
    }
    n_total += src.n();
  }

  FusedDataset fused;
  fused.ref_source_id = ref.source_id;
  fused.input_names = ref.input_names;
  fused.output_name = ref.output_name;
  fused.X.resize(n_total, ref.dim());
  fused.y.resize(n_total);
  fused.s.reserve(static_cast<std::size_t>(n_total));

  int row = 0;
  const Eigen::MatrixXd ref_norm = ref_std.transform(ref.X);
  for (int i = 0; i < ref.n(); ++i, ++row) {
    fused.X.row(row) = ref_norm.row(i);
    fused.y[row] = ref.y[i];
    fused.s.push_back(ref.source_id);
  }
  for (std::size_t c = 0; c < result.calibrations.size(); ++c) {
    const SourceDataset& src = sources[static_cast<std::size_t>(other_order[c])];
    const LinearMap& map = result.calibrations[c].map;
    const Eigen::MatrixXd mapped = apply_map(map, map.source_std.transform(src.X));
    for (int i = 0; i < src.n(); ++i, ++row) {
      fused.X.row(row) = mapped.row(i);
      fused.y[row] = src.y[i];
      fused.s.push_back(src.source_id);
    }
  }
  fused.validate();
  result.fused = std::move(fused);
  return result;
}

void save_map(const LinearMap& map, const ImcConfig& config_echo, const std::string& path) {
  nlohmann::json doc;
  doc["kind"] = "linear_map";
  doc["source_id"] = map.source_id;
  doc["ref_id"] = map.ref_id;
  doc["A"] = detail::matrix_to_json(map.A);
  doc["b"] = detail::vector_to_json(map.b);
  doc["loss"] = map.loss;
  doc["seed"] = map.seed;
  doc["source_standardizer"] = {{"means", detail::vector_to_json(map.source_std.means)},
                                {"stds", detail::vector_to_json(map.source_std.stds)}};
  doc["source_input_names"] = map.source_input_names;
  doc["ref_input_names"] = map.ref_input_names;
  doc["config_echo"] = {{"population", config_echo.population},
                        {"generations", config_echo.generations},
                        {"crossover_rate", config_echo.crossover_rate},
                        {"mutation_rate", config_echo.mutation_rate},
                        {"mutation_sigma", config_echo.mutation_sigma},
                        {"bound_lo", config_echo.bound_lo},
                        {"bound_hi", config_echo.bound_hi},
                        {"elitism", config_echo.elitism},
                        {"tournament", config_echo.tournament},
                        {"seed", config_echo.seed}};
  detail::write_json_file(doc, path);
}

LinearMap load_map(const std::string& path) {
  const nlohmann::json doc = detail::read_json_file(path);
  if (doc.value("kind", "") != "linear_map") fail("'" + path + "' is not a linear map artifact");
  LinearMap map;
  map.source_id = doc.at("source_id").get<std::string>();
  map.ref_id = doc.at("ref_id").get<std::string>();
  map.A = detail::matrix_from_json(doc.at("A"));
  map.b = detail::vector_from_json(doc.at("b"));
  map.loss = doc.at("loss").get<double>();
  map.seed = doc.at("seed").get<std::uint64_t>();
  map.source_std.means = detail::vector_from_json(doc.at("source_standardizer").at("means"));
  map.source_std.stds = detail::vector_from_json(doc.at("source_standardizer").at("stds"));
  map.source_input_names = doc.at("source_input_names").get<std::vector<std::string>>();
  map.ref_input_names = doc.at("ref_input_names").get<std::vector<std::string>>();
  return map;
}

void write_trace_csv(const std::vector<double>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_trace_csv: cannot open '" + path + "'");
  out << "generation,best_loss\n";
  for (std::size_t g = 0; g < trace.size(); ++g) {
    out << g << ',' << format_double(trace[g]) << '\n';
  }
}

}  // namespace hetfuse
