// hetfuse: batch front end for the multi-source surrogate pipeline.
//
// Subcommands: generate | map | train | predict | eval | latent.
// Every invocation writes into one run directory: a fully-resolved config
// echo, the declared artifacts, and a log. Outputs are byte-reproducible
// given identical config and seeds; a failing command removes whatever it
// had partially written and exits nonzero.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetfuse/dataset.hpp"
#include "hetfuse/fusion.hpp"
#include "hetfuse/generators.hpp"
#include "hetfuse/gp.hpp"
#include "hetfuse/imc.hpp"
#include "hetfuse/lvgp.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string manifest;
  std::string out = "run";
  std::string ref_source;
  std::uint64_t seed = 0;
  hetfuse::ImcConfig imc;
  hetfuse::GpConfig gp;      // stage-1 reference surrogate
  hetfuse::LvgpConfig lvgp;  // stage-2 comparison trainings
  bool imc_seed_set = false;
  bool gp_seed_set = false;
  bool lvgp_seed_set = false;

  RunConfig() {
    hetfuse::FusionConfig stage2;
    lvgp.restarts = stage2.restarts;
    lvgp.max_evals_per_restart = stage2.max_evals_per_restart;
  }

  void fill_default_seeds() {
    if (!imc_seed_set) imc.seed = hetfuse::mix_seed(seed, 0x11);
    if (!gp_seed_set) gp.seed = hetfuse::mix_seed(seed, 0x22);
    if (!lvgp_seed_set) lvgp.seed = hetfuse::mix_seed(seed, 0x33);
  }

  json to_json() const {
    json doc;
    doc["manifest"] = manifest;
    doc["out"] = out;
    doc["ref_source"] = ref_source;
    doc["seed"] = seed;
    doc["imc"] = {{"population", imc.population},
                  {"generations", imc.generations},
                  {"crossover_rate", imc.crossover_rate},
                  {"mutation_rate", imc.mutation_rate},
                  {"mutation_sigma", imc.mutation_sigma},
                  {"bound_lo", imc.bound_lo},
                  {"bound_hi", imc.bound_hi},
                  {"elitism", imc.elitism},
                  {"tournament", imc.tournament},
                  {"seed", imc.seed}};
    doc["gp"] = {{"restarts", gp.restarts},
                 {"max_evals", gp.max_evals_per_restart},
                 {"seed", gp.seed}};
    doc["lvgp"] = {{"restarts", lvgp.restarts},
                   {"max_evals", lvgp.max_evals_per_restart},
                   {"seed", lvgp.seed}};
    return doc;
  }
};

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) hetfuse::fail("config: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    hetfuse::fail("config: invalid JSON in '" + path + "': " + std::string(e.what()));
  }
  RunConfig cfg;
  cfg.manifest = doc.value("manifest", "");
  cfg.out = doc.value("out", "run");
  cfg.ref_source = doc.value("ref_source", "");
  cfg.seed = doc.value("seed", std::uint64_t{0});
  if (doc.contains("imc")) {
    const auto& j = doc["imc"];
    cfg.imc.population = j.value("population", cfg.imc.population);
    cfg.imc.generations = j.value("generations", cfg.imc.generations);
    cfg.imc.crossover_rate = j.value("crossover_rate", cfg.imc.crossover_rate);
    cfg.imc.mutation_rate = j.value("mutation_rate", cfg.imc.mutation_rate);
    cfg.imc.mutation_sigma = j.value("mutation_sigma", cfg.imc.mutation_sigma);
    cfg.imc.bound_lo = j.value("bound_lo", cfg.imc.bound_lo);
    cfg.imc.bound_hi = j.value("bound_hi", cfg.imc.bound_hi);
    cfg.imc.elitism = j.value("elitism", cfg.imc.elitism);
    cfg.imc.tournament = j.value("tournament", cfg.imc.tournament);
    if (j.contains("seed")) {
      cfg.imc.seed = j["seed"].get<std::uint64_t>();
      cfg.imc_seed_set = true;
    }
  }
  if (doc.contains("gp")) {
    const auto& j = doc["gp"];
    cfg.gp.restarts = j.value("restarts", cfg.gp.restarts);
    cfg.gp.max_evals_per_restart = j.value("max_evals", cfg.gp.max_evals_per_restart);
    if (j.contains("seed")) {
      cfg.gp.seed = j["seed"].get<std::uint64_t>();
      cfg.gp_seed_set = true;
    }
  }
  if (doc.contains("lvgp")) {
    const auto& j = doc["lvgp"];
    cfg.lvgp.restarts = j.value("restarts", cfg.lvgp.restarts);
    cfg.lvgp.max_evals_per_restart = j.value("max_evals", cfg.lvgp.max_evals_per_restart);
    if (j.contains("seed")) {
      cfg.lvgp.seed = j["seed"].get<std::uint64_t>();
      cfg.lvgp_seed_set = true;
    }
  }
  return cfg;
}

/// Records files as they are written so a failing command can remove its
/// partial outputs before exiting.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& name) {
    fs::path p = dir_ / name;
    written_.push_back(p);
    return p;
  }

  const fs::path& dir() const { return dir_; }

  void discard_partial_outputs() {
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) hetfuse::fail("cannot open '" + p.string() + "' for writing");
  out << text;
  if (!out) hetfuse::fail("write failed for '" + p.string() + "'");
}

void write_json_file(const fs::path& p, const json& doc) {
  write_text(p, doc.dump(2) + "\n");
}

void echo_config(OutputTracker& tracker, const std::string& command, const RunConfig& cfg) {
  json doc = cfg.to_json();
  doc["command"] = command;
  write_json_file(tracker.path(command + ".config.json"), doc);
}

std::string manifest_dir(const std::string& manifest_path) {
  return fs::path(manifest_path).parent_path().string();
}

// ---------------------------------------------------------------------------
// generate

int cmd_generate(const RunConfig& cfg, const std::string& suite, OutputTracker& tracker) {
  std::ostringstream log;

  if (suite == "beam-paper") {
    const hetfuse::PaperSuite data = hetfuse::gen_paper_suite(cfg.seed);
    hetfuse::Manifest manifest;
    json meta;
    meta["suite"] = "beam-paper";
    meta["seed"] = cfg.seed;
    meta["sources"] = json::array();
    for (std::size_t k = 0; k < data.train.size(); ++k) {
      const auto& tr = data.train[k];
      const auto& te = data.test[k];
      const std::string train_name = tr.source_id + "_train.csv";
      const std::string test_name = tr.source_id + "_test.csv";
      hetfuse::write_csv(tr, tracker.path(train_name).string());
      hetfuse::write_csv(te, tracker.path(test_name).string());
      hetfuse::ManifestEntry entry;
      entry.source_id = tr.source_id;
      entry.csv_path = train_name;
      entry.input_columns = tr.input_names;
      entry.output_column = tr.output_name;
      entry.test_csv_path = test_name;
      manifest.sources.push_back(entry);

      const auto& spec = data.specs[k];
      json src_meta;
      src_meta["source_id"] = tr.source_id;
      src_meta["cross_section"] = hetfuse::cross_section_name(spec.section);
      src_meta["load_N"] = spec.load;
      src_meta["length_m"] = spec.length;
      src_meta["modulus_Pa"] = spec.modulus;
      src_meta["outer_range"] = {spec.outer_b.lo, spec.outer_b.hi};
      if (spec.section != hetfuse::CrossSection::hollow_circ) {
        src_meta["outer_height_range"] = {spec.outer_h.lo, spec.outer_h.hi};
      }
      if (spec.section != hetfuse::CrossSection::rectangular) {
        src_meta["inner_fraction_range"] = {spec.inner_frac_b.lo, spec.inner_frac_b.hi};
      }
      src_meta["train_rows"] = tr.n();
      src_meta["test_rows"] = te.n();
      meta["sources"].push_back(src_meta);
      log << tr.source_id << ": " << tr.n() << " train rows, " << te.n() << " test rows\n";
    }
    manifest.save(tracker.path("manifest.json").string());
    write_json_file(tracker.path("generation_meta.json"), meta);
  } else if (suite == "synthetic") {
    hetfuse::SyntheticFamilySpec spec;
    spec.seed = cfg.seed;
    const hetfuse::SyntheticFamily family = hetfuse::gen_synthetic_family(spec, 80, 30);
    hetfuse::write_csv(family.reference, tracker.path("S1.csv").string());
    hetfuse::write_csv(family.source, tracker.path("S2.csv").string());

    json hidden;
    hidden["A"] = json::array();
    for (int i = 0; i < family.A_true.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < family.A_true.cols(); ++j) row.push_back(family.A_true(i, j));
      hidden["A"].push_back(row);
    }
    hidden["b"] = json::array();
    for (int i = 0; i < family.b_true.size(); ++i) hidden["b"].push_back(family.b_true[i]);
    write_json_file(tracker.path("hidden_map.json"), hidden);

    hetfuse::Manifest manifest;
    for (const auto* ds : {&family.reference, &family.source}) {
      hetfuse::ManifestEntry entry;
      entry.source_id = ds->source_id;
      entry.csv_path = ds->source_id + ".csv";
      entry.input_columns = ds->input_names;
      entry.output_column = ds->output_name;
      manifest.sources.push_back(entry);
      log << ds->source_id << ": " << ds->n() << " rows\n";
    }
    manifest.save(tracker.path("manifest.json").string());

    json meta;
    meta["suite"] = "synthetic";
    meta["seed"] = cfg.seed;
    meta["base_function"] = spec.base_function;
    meta["noise_sigma"] = spec.noise_sigma;
    write_json_file(tracker.path("generation_meta.json"), meta);
  } else {
    hetfuse::fail("unknown suite '" + suite + "'; known suites: beam-paper, synthetic");
  }

  echo_config(tracker, "generate", cfg);
  write_text(tracker.path("generate.log"), log.str());
  std::cout << log.str();
  return 0;
}

// ---------------------------------------------------------------------------
// map

int cmd_map(const RunConfig& cfg, OutputTracker& tracker) {
  if (cfg.manifest.empty()) hetfuse::fail("map: a manifest is required (--manifest or config)");
  const hetfuse::Manifest manifest = hetfuse::Manifest::load(cfg.manifest);
  const auto pairs = hetfuse::load_manifest_data(manifest, manifest_dir(cfg.manifest));

  std::vector<hetfuse::SourceDataset> train;
  for (const auto& p : pairs) train.push_back(p.train);

  const hetfuse::MapAllResult result =
      hetfuse::map_all_sources(train, cfg.ref_source, cfg.imc, cfg.gp);

  std::ostringstream log;
  log << "reference: " << result.ref_id << "\n";

  hetfuse::save_gp(result.ref_gp, tracker.path("ref_gp.json").string());
  for (const auto& cal : result.calibrations) {
    hetfuse::save_map(cal.map, cfg.imc,
                      tracker.path("map_" + cal.map.source_id + ".json").string());
    hetfuse::write_trace_csv(cal.trace,
                             tracker.path("trace_" + cal.map.source_id + ".csv").string());
    log << "map " << cal.map.source_id << " -> " << result.ref_id << ": loss "
        << hetfuse::format_double(cal.map.loss) << " (A " << cal.map.d_ref() << "x"
        << cal.map.d_s() << ")\n";
  }
  hetfuse::write_fused_csv(result.fused, tracker.path("fused_train.csv").string());

  json meta;
  meta["ref_source_id"] = result.ref_id;
  meta["output_name"] = result.fused.output_name;
  meta["input_names"] = result.fused.input_names;
  {
    json st;
    st["means"] = json::array();
    st["stds"] = json::array();
    for (int i = 0; i < result.ref_gp.input_std.dim(); ++i) {
      st["means"].push_back(result.ref_gp.input_std.means[i]);
      st["stds"].push_back(result.ref_gp.input_std.stds[i]);
    }
    meta["ref_standardizer"] = st;
  }
  meta["rows"] = json::object();
  for (const auto& id : result.fused.source_ids()) {
    meta["rows"][id] =
        static_cast<int>(std::count(result.fused.s.begin(), result.fused.s.end(), id));
  }
  write_json_file(tracker.path("fused_meta.json"), meta);

  log << "fused rows: " << result.fused.n() << "\n";
  echo_config(tracker, "map", cfg);
  write_text(tracker.path("map.log"), log.str());
  std::cout << log.str();
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct FusedArtifacts {
  hetfuse::FusedDataset fused;
  hetfuse::Standardizer ref_std;
  std::string ref_id;
  std::string output_name;
};

FusedArtifacts load_fused_artifacts(const fs::path& dir) {
  const fs::path meta_path = dir / "fused_meta.json";
  std::ifstream in(meta_path);
  if (!in) {
    hetfuse::fail("missing '" + meta_path.string() + "' (run the map command first)");
  }
  json meta;
  in >> meta;
  FusedArtifacts art;
  art.ref_id = meta.at("ref_source_id").get<std::string>();
  art.output_name = meta.at("output_name").get<std::string>();
  const auto means = meta.at("ref_standardizer").at("means").get<std::vector<double>>();
  const auto stds = meta.at("ref_standardizer").at("stds").get<std::vector<double>>();
  art.ref_std.means =
      Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<int>(means.size()));
  art.ref_std.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(), static_cast<int>(stds.size()));
  art.fused =
      hetfuse::load_fused_csv((dir / "fused_train.csv").string(), art.ref_id, art.output_name);
  return art;
}

int cmd_train(const RunConfig& cfg, const std::string& kind, OutputTracker& tracker) {
  std::ostringstream log;

  hetfuse::FusionConfig fusion_cfg;
  fusion_cfg.restarts = cfg.lvgp.restarts;
  fusion_cfg.max_evals_per_restart = cfg.lvgp.max_evals_per_restart;

  std::string log_name = "train";
  if (kind == "fused_lvgp") {
    const FusedArtifacts art = load_fused_artifacts(tracker.dir());
    fusion_cfg.seed = cfg.lvgp.seed;
    const hetfuse::LvgpModel model = hetfuse::train_fusion(art.fused, fusion_cfg);
    hetfuse::save_lvgp(model, tracker.path("model_fused_lvgp.json").string());
    log << "fused_lvgp: " << model.latent.levels.size() << " latent points, n=" << model.n()
        << "\n";
    log_name += "_fused_lvgp";
  } else if (kind == "fused_gp") {
    const FusedArtifacts art = load_fused_artifacts(tracker.dir());
    fusion_cfg.seed = hetfuse::mix_seed(cfg.lvgp.seed, 0xB1);
    const hetfuse::GpModel model = hetfuse::train_baseline_gp(art.fused, fusion_cfg);
    hetfuse::save_gp(model, tracker.path("model_fused_gp.json").string());
    log << "fused_gp: n=" << model.n() << ", d=" << model.dim() << "\n";
    log_name += "_fused_gp";
  } else if (kind.rfind("single_source:", 0) == 0) {
    const std::string id = kind.substr(std::string("single_source:").size());
    if (cfg.manifest.empty()) hetfuse::fail("train: manifest required for single-source models");
    const hetfuse::Manifest manifest = hetfuse::Manifest::load(cfg.manifest);
    const auto pairs = hetfuse::load_manifest_data(manifest, manifest_dir(cfg.manifest));
    const hetfuse::SourceDataset* source = nullptr;
    for (const auto& p : pairs) {
      if (p.train.source_id == id) source = &p.train;
    }
    if (source == nullptr) hetfuse::fail("train: source '" + id + "' not in the manifest");
    fusion_cfg.seed = hetfuse::mix_seed(cfg.lvgp.seed, hetfuse::hash_label(id));
    const hetfuse::GpModel model = hetfuse::train_single_source(*source, fusion_cfg);
    hetfuse::save_gp(model, tracker.path("model_single_source_" + id + ".json").string());
    log << "single_source:" << id << ": n=" << model.n() << ", d=" << model.dim() << "\n";
    log_name += "_single_source_" + id;
  } else {
    hetfuse::fail("unknown train kind '" + kind +
                  "'; expected fused_gp, fused_lvgp, or single_source:<id>");
  }

  echo_config(tracker, "train", cfg);
  write_text(tracker.path(log_name + ".log"), log.str());
  std::cout << log.str();
  return 0;
}

// ---------------------------------------------------------------------------
// model loading shared by predict/eval/latent

struct LoadedModel {
  std::string kind;  // "gp" | "lvgp"
  hetfuse::GpModel gp;
  hetfuse::LvgpModel lvgp;

  const std::string& role() const { return kind == "lvgp" ? lvgp.gp.role : gp.role; }
  const std::string& input_space() const {
    return kind == "lvgp" ? lvgp.gp.input_space : gp.input_space;
  }
};

LoadedModel load_model(const std::string& path) {
  std::ifstream probe(path);
  if (!probe) hetfuse::fail("model file '" + path + "' not found");
  json doc;
  try {
    probe >> doc;
  } catch (const std::exception& e) {
    hetfuse::fail("invalid model JSON in '" + path + "': " + std::string(e.what()));
  }
  LoadedModel m;
  m.kind = doc.value("kind", "");
  if (m.kind == "gp") {
    m.gp = hetfuse::load_gp(path);
  } else if (m.kind == "lvgp") {
    m.lvgp = hetfuse::load_lvgp(path);
  } else {
    hetfuse::fail("'" + path + "' is not a model artifact");
  }
  return m;
}

std::vector<hetfuse::LinearMap> load_maps_in(const fs::path& dir) {
  std::vector<hetfuse::LinearMap> maps;
  std::vector<fs::path> files;
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("map_", 0) == 0 && e.path().extension() == ".json") {
        files.push_back(e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) maps.push_back(hetfuse::load_map(f.string()));
  return maps;
}

std::vector<hetfuse::TestSet> build_cli_test_sets(const RunConfig& cfg, const fs::path& dir,
                                                  const std::string& ref_id,
                                                  const hetfuse::Standardizer& ref_std) {
  if (cfg.manifest.empty()) hetfuse::fail("a manifest is required to locate test data");
  const hetfuse::Manifest manifest = hetfuse::Manifest::load(cfg.manifest);
  const auto pairs = hetfuse::load_manifest_data(manifest, manifest_dir(cfg.manifest));
  std::vector<hetfuse::SourceDataset> tests;
  for (const auto& p : pairs) {
    if (!p.test) {
      hetfuse::fail("no test data for source '" + p.train.source_id +
                    "' (add test_csv_path or a split block to the manifest)");
    }
    tests.push_back(*p.test);
  }
  return hetfuse::build_test_sets(tests, ref_id, ref_std, load_maps_in(dir));
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const RunConfig& cfg, const std::string& model_path, OutputTracker& tracker) {
  const LoadedModel model = load_model(model_path);
  std::ostringstream log;

  hetfuse::TrainedModels models;
  const hetfuse::FusedDataset* fused_ptr = nullptr;
  FusedArtifacts art;
  std::vector<hetfuse::TestSet> tests;

  if (model.input_space().rfind("fused:", 0) == 0) {
    art = load_fused_artifacts(tracker.dir());
    fused_ptr = &art.fused;
    tests = build_cli_test_sets(cfg, tracker.dir(), art.ref_id, art.ref_std);
    if (model.kind == "lvgp") {
      models.fused_lvgp = &model.lvgp;
    } else {
      models.fused_gp = &model.gp;
    }
  } else {
    const std::string id = model.input_space().substr(std::string("original:").size());
    // single-source predictions need no maps; raw test rows route directly
    tests = build_cli_test_sets(cfg, tracker.dir(), "", hetfuse::Standardizer{});
    models.single_source[id] = &model.gp;
  }

  const hetfuse::EvalResult result = hetfuse::evaluate(models, fused_ptr, tests);
  for (const auto& table : result.predictions) {
    std::string name = "predictions_" + table.model_kind;
    if (!table.source_suffix.empty()) name += "_" + table.source_suffix;
    hetfuse::write_predictions_csv(table, tracker.path(name + ".csv").string());
    log << name << ".csv: " << table.y_true.size() << " rows\n";
  }

  echo_config(tracker, "predict", cfg);
  write_text(tracker.path("predict.log"), log.str());
  std::cout << log.str();
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const RunConfig& cfg, const std::vector<std::string>& model_paths,
             OutputTracker& tracker) {
  if (model_paths.empty()) hetfuse::fail("eval: at least one --model required");

  std::vector<LoadedModel> loaded;
  loaded.reserve(model_paths.size());
  for (const auto& p : model_paths) loaded.push_back(load_model(p));

  hetfuse::TrainedModels models;
  bool any_fused = false;
  for (const auto& m : loaded) {
    if (m.kind == "lvgp") {
      models.fused_lvgp = &m.lvgp;
      any_fused = true;
    } else if (m.input_space().rfind("fused:", 0) == 0) {
      models.fused_gp = &m.gp;
      any_fused = true;
    } else {
      const std::string id = m.input_space().substr(std::string("original:").size());
      models.single_source[id] = &m.gp;
    }
  }

  FusedArtifacts art;
  const hetfuse::FusedDataset* fused_ptr = nullptr;
  std::string ref_id;
  hetfuse::Standardizer ref_std;
  if (any_fused) {
    art = load_fused_artifacts(tracker.dir());
    fused_ptr = &art.fused;
    ref_id = art.ref_id;
    ref_std = art.ref_std;
  }
  const std::vector<hetfuse::TestSet> tests =
      build_cli_test_sets(cfg, tracker.dir(), ref_id, ref_std);

  const hetfuse::EvalResult result = hetfuse::evaluate(models, fused_ptr, tests);

  hetfuse::save_report_json(result.report, tracker.path("report.json").string());
  const std::string text = hetfuse::render_report_text(result.report);
  write_text(tracker.path("report.txt"), text);
  for (const auto& table : result.predictions) {
    std::string name = "predictions_" + table.model_kind;
    if (!table.source_suffix.empty()) name += "_" + table.source_suffix;
    hetfuse::write_predictions_csv(table, tracker.path(name + ".csv").string());
  }

  echo_config(tracker, "eval", cfg);
  write_text(tracker.path("eval.log"), text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// latent

int cmd_latent(const RunConfig& cfg, const std::string& model_path, const std::string& ref,
               OutputTracker& tracker) {
  std::ifstream probe(model_path);
  if (!probe) hetfuse::fail("model file '" + model_path + "' not found");
  json doc;
  probe >> doc;
  if (doc.value("kind", "") != "lvgp") {
    hetfuse::fail("model '" + model_path + "' has no latent space (not an lvgp artifact)");
  }
  const hetfuse::LvgpModel model = hetfuse::load_lvgp(model_path);
  const std::string ref_level = ref.empty() ? model.latent.anchor_level : ref;
  const auto rows = hetfuse::export_latent(model, ref_level);
  hetfuse::write_latent_csv(rows, tracker.path("latent.csv").string());

  std::ostringstream log;
  log << "level,z1,z2,D (ref=" << ref_level << ")\n";
  for (const auto& r : rows) {
    log << r.level << ',' << hetfuse::format_double(r.z1) << ',' << hetfuse::format_double(r.z2)
        << ',' << hetfuse::format_double(r.d) << '\n';
  }
  echo_config(tracker, "latent", cfg);
  write_text(tracker.path("latent.log"), log.str());
  std::cout << log.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "multi-source surrogate modeling: affine input-space calibration plus "
      "latent-variable GP fusion"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string ref_source;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string manifest_path;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "run directory for all outputs");
  app.add_option("--seed", seed, "master seed; per-stage seeds derive from it")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  app.add_option("--ref", ref_source, "reference source id (default: most data)");
  app.add_option("--manifest", manifest_path, "dataset manifest JSON");

  auto* generate = app.add_subcommand("generate", "write a benchmark dataset suite");
  generate->fallthrough();
  std::string suite;
  generate->add_option("--suite", suite, "beam-paper | synthetic")->required();

  auto* map_cmd = app.add_subcommand("map", "calibrate affine maps into the reference space");
  map_cmd->fallthrough();

  auto* train = app.add_subcommand("train", "train a model on mapped or original data");
  train->fallthrough();
  std::string kind;
  train->add_option("--kind", kind, "fused_gp | fused_lvgp | single_source:<id>")->required();

  auto* predict = app.add_subcommand("predict", "write test-set predictions for one model");
  predict->fallthrough();
  std::string predict_model;
  predict->add_option("--model", predict_model, "model artifact JSON")->required();

  auto* eval = app.add_subcommand("eval", "score models into a comparison report");
  eval->fallthrough();
  std::vector<std::string> eval_models;
  eval->add_option("--model", eval_models, "model artifact JSON (repeatable)")->required();

  auto* latent = app.add_subcommand("latent", "export a fitted latent space");
  latent->fallthrough();
  std::string latent_model;
  std::string latent_ref;
  latent->add_option("--model", latent_model, "lvgp model artifact JSON")->required();
  latent->add_option("--ref-level", latent_ref, "dissimilarity reference level (default: anchor)");

  CLI11_PARSE(app, argc, argv);

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (seed_given) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!ref_source.empty()) cfg.ref_source = ref_source;
    if (!manifest_path.empty()) cfg.manifest = manifest_path;
    cfg.fill_default_seeds();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  OutputTracker tracker(cfg.out);
  try {
    if (generate->parsed()) return cmd_generate(cfg, suite, tracker);
    if (map_cmd->parsed()) return cmd_map(cfg, tracker);
    if (train->parsed()) return cmd_train(cfg, kind, tracker);
    if (predict->parsed()) return cmd_predict(cfg, predict_model, tracker);
    if (eval->parsed()) return cmd_eval(cfg, eval_models, tracker);
    if (latent->parsed()) return cmd_latent(cfg, latent_model, latent_ref, tracker);
  } catch (const std::exception& e) {
    tracker.discard_partial_outputs();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
