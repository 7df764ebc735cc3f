#include "ffcac/protocol/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ffcac/error.hpp"

namespace ffcac::protocol {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("expected a number, got `" + v + "`");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("expected a nonnegative integer, got `" + v + "`");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("expected on/off, got `" + v + "`");
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define FFCAC_DOUBLE(KEY, MEMBER)                                               \
  Field { KEY, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = parse_double(v); }, \
          [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.MEMBER)); } }
#define FFCAC_UINT(KEY, MEMBER)                                                                   \
  Field { KEY,                                                                                    \
          [](ExperimentConfig& c, const std::string& v) {                                         \
            c.MEMBER = static_cast<decltype(c.MEMBER)>(parse_uint(v));                             \
          },                                                                                      \
          [](const ExperimentConfig& c) { return fmt(static_cast<std::uint64_t>(c.MEMBER)); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FFCAC_UINT("frontend.sample_rate_hz", frontend.sample_rate_hz),
      FFCAC_DOUBLE("frontend.frame_length_ms", frontend.frame_length_ms),
      FFCAC_DOUBLE("frontend.frame_shift_ms", frontend.frame_shift_ms),
      FFCAC_UINT("frontend.fft_size", frontend.fft_size),
      FFCAC_UINT("frontend.mel_bins", frontend.mel_bins),
      FFCAC_DOUBLE("frontend.f_min_hz", frontend.f_min_hz),
      FFCAC_DOUBLE("frontend.f_max_hz", frontend.f_max_hz),
      FFCAC_DOUBLE("frontend.log_floor", frontend.log_floor),
      FFCAC_DOUBLE("frontend.clip_seconds", frontend.clip_seconds),
      FFCAC_UINT("patch.s_f", model.patch.s_f),
      FFCAC_UINT("patch.s_t", model.patch.s_t),
      FFCAC_UINT("patch.stride", model.patch.stride),
      FFCAC_UINT("model.layers", model.encoder.layers),
      FFCAC_UINT("model.dim", model.encoder.dim),
      FFCAC_UINT("model.heads", model.encoder.heads),
      FFCAC_UINT("model.mlp_hidden", model.encoder.mlp_hidden),
      Field{"model.fusion", [](ExperimentConfig& c, const std::string& v) { c.model.fusion = parse_bool(v); },
            [](const ExperimentConfig& c) { return std::string(c.model.fusion ? "on" : "off"); }},
      FFCAC_UINT("model.fusion_hidden", model.fusion_hidden),
      FFCAC_DOUBLE("model.input_mean", model.input_mean),
      FFCAC_DOUBLE("model.input_std", model.input_std),
      FFCAC_DOUBLE("model.token_init_std", model.token_init_std),
      FFCAC_UINT("train.epochs", train.epochs),
      FFCAC_DOUBLE("train.lr", train.lr),
      FFCAC_DOUBLE("train.weight_decay", train.weight_decay),
      FFCAC_DOUBLE("train.eta", train.eta),
      FFCAC_UINT("train.batch_size", train.batch_size),
      Field{"classifier.kind",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "rrc") {
                c.classifier.kind = ClassifierKind::kRrc;
              } else if (v == "pbc") {
                c.classifier.kind = ClassifierKind::kPbc;
              } else {
                throw ConfigError("expected rrc or pbc, got `" + v + "`");
              }
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.classifier.kind)); }},
      Field{"classifier.lambda",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "cv") {
                c.classifier.lambda = -1.0;
                return;
              }
              const double x = parse_double(v);
              if (x < 0) throw ConfigError("must be >= 0 or `cv`");
              c.classifier.lambda = x;
            },
            [](const ExperimentConfig& c) {
              return c.classifier.use_cv() ? std::string("cv") : fmt(c.classifier.lambda);
            }},
      Field{"classifier.lambda_grid",
            [](ExperimentConfig& c, const std::string& v) {
              std::vector<double> grid;
              std::stringstream ss(v);
              std::string item;
              while (std::getline(ss, item, ',')) grid.push_back(parse_double(trim(item)));
              c.classifier.lambda_grid = grid;
            },
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.classifier.lambda_grid.size(); ++i) {
                s += (i ? "," : "") + fmt(c.classifier.lambda_grid[i]);
              }
              return s;
            }},
      FFCAC_UINT("classifier.cv_folds", classifier.cv_folds),
      Field{"classifier.reselect_lambda",
            [](ExperimentConfig& c, const std::string& v) { c.classifier.reselect_lambda = parse_bool(v); },
            [](const ExperimentConfig& c) { return std::string(c.classifier.reselect_lambda ? "on" : "off"); }},
      FFCAC_UINT("plan.sessions", plan.sessions),
      FFCAC_UINT("plan.base_classes", plan.base_classes),
      FFCAC_UINT("plan.base_shots", plan.base_shots),
      FFCAC_UINT("plan.classes_per_session", plan.classes_per_session),
      FFCAC_UINT("plan.shots", plan.shots),
      Field{"data.source",
            [](ExperimentConfig& c, const std::string& v) {
              if (v == "synthetic") {
                c.data.source = DataSource::kSynthetic;
              } else if (v == "manifest") {
                c.data.source = DataSource::kManifest;
              } else {
                throw ConfigError("expected synthetic or manifest, got `" + v + "`");
              }
            },
            [](const ExperimentConfig& c) {
              return std::string(c.data.source == DataSource::kSynthetic ? "synthetic" : "manifest");
            }},
      Field{"data.manifest", [](ExperimentConfig& c, const std::string& v) { c.data.manifest = v; },
            [](const ExperimentConfig& c) { return c.data.manifest.generic_string(); }},
      FFCAC_UINT("data.classes", data.synth.num_classes),
      FFCAC_UINT("data.train_per_class", data.train_per_class),
      FFCAC_UINT("data.test_per_class", data.test_per_class),
      FFCAC_DOUBLE("data.min_hz", data.synth.min_hz),
      FFCAC_DOUBLE("data.max_hz", data.synth.max_hz),
      FFCAC_UINT("data.harmonics", data.synth.harmonics),
      FFCAC_DOUBLE("data.jitter", data.synth.jitter),
      FFCAC_DOUBLE("data.noise_amplitude", data.synth.noise_amplitude),
      FFCAC_UINT("run.seed", run.seed),
      FFCAC_UINT("run.n_runs", run.n_runs),
  };
  return table;
}

#undef FFCAC_DOUBLE
#undef FFCAC_UINT

}  // namespace

const char* to_string(ClassifierKind kind) { return kind == ClassifierKind::kRrc ? "rrc" : "pbc"; }

void ExperimentConfig::derive() {
  model.encoder.patch_dim = model.patch.patch_dim();
  const std::size_t frames = frontend.frames();
  if (model.patch.s_f > 0 && model.patch.s_t > 0 && model.patch.stride > 0 && model.patch.s_f <= frontend.mel_bins &&
      model.patch.s_t <= frames) {
    model.encoder.max_patches = audio::patch_count(frontend.mel_bins, frames, model.patch.s_f, model.patch.s_t,
                                                   model.patch.stride);
  } else {
    model.encoder.max_patches = 0;
  }
  data.synth.sample_rate_hz = frontend.sample_rate_hz;
  data.synth.duration_seconds = frontend.clip_seconds;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  auto section = [&errors](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      errors.push_back(e.what());
    }
  };
  auto check = [&errors](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };
  section([&] { frontend.validate(); });
  if (model.encoder.max_patches == 0) {
    errors.push_back("patch " + std::to_string(model.patch.s_f) + "x" + std::to_string(model.patch.s_t) +
                     " does not fit a " + std::to_string(frontend.mel_bins) + "x" + std::to_string(frontend.frames()) +
                     " spectrogram");
  } else {
    section([&] { model.validate(); });
  }
  check(train.lr > 0, "train.lr must be positive");
  check(train.weight_decay >= 0, "train.weight_decay must be >= 0");
  check(train.eta > 0, "train.eta must be positive");
  check(train.batch_size >= 1, "train.batch_size must be at least 1");
  check(classifier.cv_folds >= 2, "classifier.cv_folds must be at least 2");
  if (classifier.use_cv() || classifier.reselect_lambda) {
    check(!classifier.lambda_grid.empty(), "classifier.lambda_grid must not be empty");
    for (double l : classifier.lambda_grid) check(l >= 0, "classifier.lambda_grid entries must be >= 0");
    check(plan.base_shots >= classifier.cv_folds,
          "plan.base_shots must be >= classifier.cv_folds when lambda is chosen by cross-validation");
  }
  if (classifier.reselect_lambda) {
    check(plan.shots >= classifier.cv_folds, "plan.shots must be >= classifier.cv_folds when reselect_lambda is on");
  }
  check(plan.base_classes >= 1, "plan.base_classes must be at least 1");
  check(plan.base_shots >= 1, "plan.base_shots must be at least 1");
  check(plan.sessions == 0 || plan.classes_per_session >= 1, "plan.classes_per_session must be at least 1");
  check(plan.sessions == 0 || plan.shots >= 1, "plan.shots must be at least 1");
  if (data.source == DataSource::kSynthetic) {
    section([&] { data.synth.validate(); });
    check(data.train_per_class >= 1, "data.train_per_class must be at least 1");
    check(data.test_per_class >= 1, "data.test_per_class must be at least 1");
  } else {
    check(!data.manifest.empty(), "data.manifest is required when data.source = manifest");
  }
  check(run.n_runs >= 1, "run.n_runs must be at least 1");
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.derive();
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg = default_config();
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.key] = &f;
  std::map<std::string, std::size_t> seen;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where + "expected `key = value`");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) {
      errors.push_back(where + "unknown key `" + key + "`");
      continue;
    }
    if (auto [pos, fresh] = seen.emplace(key, lineno); !fresh) {
      errors.push_back(where + "`" + key + "` already set on line " + std::to_string(pos->second));
      continue;
    }
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      errors.push_back(where + key + ": " + e.what());
    }
  }
  if (!cfg.data.manifest.empty() && cfg.data.manifest.is_relative() && !base_dir.empty()) {
    cfg.data.manifest = base_dir / cfg.data.manifest;
  }
  cfg.derive();
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    // Re-collect the validator's lines so parse and range errors share one list.
    std::istringstream rest(e.what());
    std::string item;
    std::getline(rest, item);
    while (std::getline(rest, item)) errors.push_back(trim(item));
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : config_entries(cfg)) s += k + " = " + v + "\n";
  return s;
}

}  // namespace ffcac::protocol
