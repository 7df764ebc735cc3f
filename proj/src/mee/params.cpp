#include <cmath>
#include <string>

#include "ffcac/error.hpp"
#include "ffcac/mee/mee.hpp"
#include "ffcac/rng.hpp"

namespace ffcac::mee {

void EncoderConfig::validate() const {
  if (layers == 0) throw ConfigError("model.layers must be at least 1");
  if (dim == 0) throw ConfigError("model.dim must be positive");
  if (heads == 0 || dim % heads != 0) throw ConfigError("model.dim must be divisible by model.heads");
  if (mlp_hidden == 0) throw ConfigError("model.mlp_hidden must be positive");
  if (max_patches == 0) throw ConfigError("model.max_patches must be positive");
  if (patch_dim == 0) throw ConfigError("patch_dim must be positive");
}

void MeeConfig::validate() const {
  encoder.validate();
  patch.validate();
  if (patch.patch_dim() != encoder.patch_dim) {
    throw ConfigError("patch s_f*s_t = " + std::to_string(patch.patch_dim()) + " differs from encoder patch_dim " +
                      std::to_string(encoder.patch_dim));
  }
  if (!(input_std > 0) || !std::isfinite(input_mean)) throw ConfigError("model.input_std must be positive");
  if (!(token_init_std >= 0)) throw ConfigError("model.token_init_std must be nonnegative");
}

std::vector<std::pair<std::string, Shape>> parameter_layout(const MeeConfig& cfg) {
  const auto& e = cfg.encoder;
  const std::size_t D = e.dim, H = e.mlp_hidden, L = e.layers, F = cfg.fusion_width();
  std::vector<std::pair<std::string, Shape>> out = {
      {"patch_embed.weight", {e.patch_dim, D}},
      {"patch_embed.bias", {D}},
      {"cls_token", {1, D}},
      {"pos_embed", {e.max_patches + 1, D}},
  };
  for (std::size_t l = 0; l < L; ++l) {
    const std::string b = "blocks." + std::to_string(l) + ".";
    out.push_back({b + "ln1.gamma", {D}});
    out.push_back({b + "ln1.beta", {D}});
    for (const char* proj : {"q", "k", "v", "o"}) {
      out.push_back({b + "attn." + proj + ".weight", {D, D}});
      out.push_back({b + "attn." + proj + ".bias", {D}});
    }
    out.push_back({b + "ln2.gamma", {D}});
    out.push_back({b + "ln2.beta", {D}});
    out.push_back({b + "ff.fc1.weight", {D, H}});
    out.push_back({b + "ff.fc1.bias", {H}});
    out.push_back({b + "ff.fc2.weight", {H, D}});
    out.push_back({b + "ff.fc2.bias", {D}});
    out.push_back({b + "out_norm.gamma", {D}});
    out.push_back({b + "out_norm.beta", {D}});
  }
  if (!cfg.fusion) return out;
  out.push_back({"fusion.fc1.weight", {L * D, F}});
  out.push_back({"fusion.fc1.bias", {F}});
  out.push_back({"fusion.fc2.weight", {F, L}});
  out.push_back({"fusion.fc2.bias", {L}});
  return out;
}

Tensor& MeeParams::at(std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  throw UsageError("no parameter named " + std::string(name));
}

const Tensor& MeeParams::at(std::string_view name) const { return const_cast<MeeParams*>(this)->at(name); }

std::size_t MeeParams::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

MeeParams init_params(const MeeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  MeeParams p;
  p.config = cfg;
  Rng rng(seed);
  for (auto& [name, shape] : parameter_layout(cfg)) {
    Tensor t(shape);
    if (name == "cls_token" || name == "pos_embed") {
      for (auto& v : t.values()) v = rng.normal(0.0, cfg.token_init_std);
    } else if (ends_with(name, ".weight")) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(shape[0]));
      for (auto& v : t.values()) v = rng.normal(0.0, sd);
    } else if (ends_with(name, ".gamma")) {
      for (auto& v : t.values()) v = 1.0;
    }
    p.names.push_back(name);
    p.tensors.push_back(std::move(t));
  }
  return p;
}

io::Container to_container(const MeeParams& params, io::DType dtype) {
  io::Container c;
  for (std::size_t i = 0; i < params.names.size(); ++i) c.tensors.push_back({params.names[i], params.tensors[i], dtype});
  return c;
}

MeeParams from_container(const io::Container& container, const MeeConfig& cfg) {
  cfg.validate();
  MeeParams p;
  p.config = cfg;
  std::vector<std::string> missing, misshaped, unexpected;
  const auto layout = parameter_layout(cfg);
  for (const auto& [name, shape] : layout) {
    const io::NamedTensor* t = container.find(name);
    if (t == nullptr) {
      missing.push_back(name);
    } else if (t->value.shape() != shape) {
      misshaped.push_back(name + " " + shape_string(t->value.shape()) + " (expected " + shape_string(shape) + ")");
    } else {
      p.names.push_back(name);
      p.tensors.push_back(t->value);
    }
  }
  for (const auto& t : container.tensors) {
    bool known = false;
    for (const auto& entry : layout) known = known || entry.first == t.name;
    if (!known) unexpected.push_back(t.name);
  }
  if (!missing.empty() || !misshaped.empty() || !unexpected.empty()) {
    std::string msg = "container does not match model config";
    auto list = [&msg](const char* what, const std::vector<std::string>& items) {
      if (items.empty()) return;
      msg += std::string("; ") + what + ":";
      for (const auto& s : items) msg += " " + s;
    };
    list("missing", missing);
    list("wrong shape", misshaped);
    list("unexpected", unexpected);
    throw LoadError(LoadFailure::kShapeMismatch, msg);
  }
  return p;
}

void save_params(const MeeParams& params, const std::filesystem::path& path) {
  io::write_file(to_container(params), path);
}

MeeParams load_params(const std::filesystem::path& path, const MeeConfig& cfg) {
  return from_container(io::read_file(path), cfg);
}

std::uint64_t parameter_checksum(const MeeParams& params) {
  return io::fnv1a64(io::encode(to_container(params, io::DType::kF64)));
}

}  // namespace ffcac::mee
