#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ffcac/audio/manifest.hpp"
#include "ffcac/audio/synth.hpp"
#include "ffcac/error.hpp"
#include "ffcac/protocol/experiment.hpp"
#include "ffcac/rng.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ffcac;
using namespace ffcac::protocol;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

ExperimentConfig config_from(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

struct SynthArgs {
  std::size_t classes = 10;
  std::size_t per_class = 30;
  std::size_t test_per_class = 0;
  std::string out;
  std::uint64_t seed = 0;
  std::string config;
};

int cmd_synth(const SynthArgs& a) {
  ExperimentConfig cfg = config_from(a.config);
  audio::SynthConfig synth = cfg.data.synth;
  synth.num_classes = a.classes;
  synth.validate();
  const std::size_t tests = a.test_per_class == 0 ? a.per_class / 2 : a.test_per_class;
  if (tests >= a.per_class) throw UsageError("--test-per-class must be smaller than --per-class");
  make_dir(a.out);
  std::vector<audio::ManifestEntry> entries;
  for (std::size_t c = 0; c < a.classes; ++c) {
    const std::string label = (c < 10 ? "class0" : "class") + std::to_string(c);
    make_dir(fs::path(a.out) / label);
    for (std::size_t i = 0; i < a.per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "clip%03zu.wav", i);
      const fs::path rel = fs::path(label) / name;
      audio::save_wav(audio::synth_class_waveform(c, derive_seed(a.seed, c * 1000003 + i), synth),
                      fs::path(a.out) / rel);
      entries.push_back({rel, label, i < a.per_class - tests ? audio::Split::kTrain : audio::Split::kTest});
    }
  }
  audio::write_manifest(entries, fs::path(a.out) / "manifest.csv");
  std::cout << "wrote " << entries.size() << " clips and " << (fs::path(a.out) / "manifest.csv").string() << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  std::string out;
  std::int64_t seed = -1;
  std::size_t runs = 0;
  std::size_t threads = 0;
};

void apply_overrides(ExperimentConfig& cfg, const RunArgs& a) {
  if (a.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(a.seed);
  if (a.runs > 0) cfg.run.n_runs = a.runs;
  cfg.derive();
  cfg.validate();
}

int cmd_run(const RunArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  apply_overrides(cfg, a);
  make_dir(a.out);
  const Dataset data = Dataset::from_config(cfg);
  const std::size_t threads = resolve_threads(a.threads);
  const RunReport report = run_repeated(cfg, data, cfg.run.n_runs, threads);
  const std::string json = report_json(cfg, report);
  write_text(fs::path(a.out) / "report.json", json);
  const std::string csv = report_csv(json);
  write_text(fs::path(a.out) / "report.csv", csv);

  // Artifacts of the first run (seed = run.seed).
  Learner learner;
  run_once(cfg, data, 0, &learner);
  mee::save_params(learner.mee, fs::path(a.out) / "mee.meew");
  io::write_file(learner.ridge.to_container(), fs::path(a.out) / "classifier.meew");
  std::cout << csv;
  return 0;
}

struct AblateArgs {
  RunArgs run;
  std::string fusion;
  std::string classifier;
};

int cmd_ablate(const AblateArgs& a) {
  ExperimentConfig cfg = load_config(a.run.config);
  apply_overrides(cfg, a.run);
  make_dir(a.run.out);
  const Dataset data = Dataset::from_config(cfg);
  auto rows = run_ablation(cfg, data, cfg.run.n_runs, resolve_threads(a.run.threads));
  std::erase_if(rows, [&](const AblationRow& r) {
    return (!a.fusion.empty() && r.fusion != (a.fusion == "on")) ||
           (!a.classifier.empty() && to_string(r.classifier) != a.classifier);
  });
  const std::string json = ablation_json(cfg, rows);
  write_text(fs::path(a.run.out) / "ablation.json", json);
  const std::string csv = report_csv(json);
  write_text(fs::path(a.run.out) / "ablation.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_complexity(const std::string& config, bool as_json, std::size_t classes) {
  const ExperimentConfig cfg = config_from(config);
  const std::size_t n = classes > 0 ? classes
                                    : cfg.plan.base_classes + cfg.plan.sessions * cfg.plan.classes_per_session;
  const auto r = mee::count_params_macs(cfg.model, cfg.model.encoder.max_patches, n);
  if (as_json) {
    const nlohmann::ordered_json doc{{"np", r.np},
                                     {"macs", r.macs},
                                     {"classifier_params", r.classifier_params},
                                     {"patches", r.patches},
                                     {"classes", n}};
    std::cout << doc.dump() << "\n";
  } else {
    std::printf("NP   %llu (%.2f M)\nMACs %llu (%.2f G)\nclassifier params %llu, patches %llu, classes %zu\n",
                static_cast<unsigned long long>(r.np), r.np / 1e6, static_cast<unsigned long long>(r.macs),
                r.macs / 1e9, static_cast<unsigned long long>(r.classifier_params),
                static_cast<unsigned long long>(r.patches), n);
  }
  return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  const std::string csv = report_csv(read_text(in));
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot class-incremental audio classification laboratory"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Write synthetic class WAVs and a manifest");
  s->add_option("--classes", synth.classes, "Number of classes")->check(CLI::PositiveNumber);
  s->add_option("--per-class", synth.per_class, "Clips per class")->check(CLI::PositiveNumber);
  s->add_option("--test-per-class", synth.test_per_class, "Test clips per class (default half)");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Seed");
  s->add_option("--config", synth.config, "Config file for synthesis settings");

  RunArgs run;
  auto add_run_options = [](CLI::App* sub, RunArgs& r) {
    sub->add_option("--config", r.config, "Experiment config file")->required();
    sub->add_option("--out", r.out, "Output directory")->required();
    sub->add_option("--seed", r.seed, "Override run.seed");
    sub->add_option("--runs", r.runs, "Override run.n_runs");
    sub->add_option("--threads", r.threads, "Worker threads (default FFCAC_THREADS or 1)");
  };
  auto* r = app.add_subcommand("run", "Run the session protocol and write reports");
  add_run_options(r, run);

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate", "Fusion on/off x PBC/RRC ablation grid");
  add_run_options(ab, ablate.run);
  ab->add_option("--fusion", ablate.fusion, "Restrict to fusion on or off")->check(CLI::IsMember({"on", "off"}));
  ab->add_option("--classifier", ablate.classifier, "Restrict to one classifier")
      ->check(CLI::IsMember({"rrc", "pbc"}));

  std::string cc_config;
  bool cc_json = false;
  std::size_t cc_classes = 0;
  auto* cc = app.add_subcommand("count-complexity", "Print parameter and MAC counts");
  cc->add_option("--config", cc_config, "Experiment config file (default: built-in toy config)");
  cc->add_flag("--json", cc_json, "Machine-readable output");
  cc->add_option("--classes", cc_classes, "Classifier width (default: all planned classes)");

  std::string rep_in, rep_out;
  auto* rp = app.add_subcommand("report", "Render a report JSON as CSV");
  rp->add_option("--in", rep_in, "report.json or ablation.json")->required();
  rp->add_option("--out", rep_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::kUsage);
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*r) return cmd_run(run);
    if (*ab) return cmd_ablate(ablate);
    if (*cc) return cmd_complexity(cc_config, cc_json, cc_classes);
    if (*rp) return cmd_report(rep_in, rep_out);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
