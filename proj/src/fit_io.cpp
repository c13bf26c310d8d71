#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "spectral_ops/fit.hpp"
#include "spectral_ops/ftns.hpp"

namespace spectral_ops {
namespace {

namespace fs = std::filesystem;

constexpr const char* kManifest = "config.txt";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a non-negative integer");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
}

// Every named tensor of a model, in a fixed order.
template <class Model, class Fn>
void for_each_tensor(Model& m, Fn&& fn) {
  auto lin = [&](auto& l, const std::string& name) {
    fn(l.weight, name + ".weight");
    fn(l.bias, name + ".bias");
  };
  lin(m.patch_proj, "patch_proj");
  fn(m.cls_token, "cls_token");
  fn(m.pos_embed, "pos_embed");
  fn(m.embed_norm_gamma, "embed_norm.gamma");
  fn(m.embed_norm_beta, "embed_norm.beta");
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    auto& w = m.blocks[b];
    const std::string p = "blocks." + std::to_string(b) + ".";
    fn(w.norm1_gamma, p + "norm1.gamma");
    fn(w.norm1_beta, p + "norm1.beta");
    lin(w.ff, p + "ff");
    lin(w.dense, p + "dense");
    fn(w.norm2_gamma, p + "norm2.gamma");
    fn(w.norm2_beta, p + "norm2.beta");
    if (w.attention) {
      lin(w.attention->query, p + "attn.query");
      lin(w.attention->key, p + "attn.key");
      lin(w.attention->value, p + "attn.value");
      lin(w.attention->output, p + "attn.output");
    }
  }
  lin(m.head, "head");
}

}  // namespace

void save_model(const FitModel& model, const FitConfig& config, const fs::path& dir) {
  validate_model(model, config);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create model directory " + dir.string() + ": " + ec.message());

  std::ofstream manifest(dir / kManifest, std::ios::trunc);
  if (!manifest) throw Error("cannot write " + (dir / kManifest).string());
  manifest << "img_h=" << config.img_h << '\n'
           << "img_w=" << config.img_w << '\n'
           << "patch_h=" << config.patch_h << '\n'
           << "patch_w=" << config.patch_w << '\n'
           << "in_chans=" << config.in_chans << '\n'
           << "embed_dim=" << config.embed_dim << '\n'
           << "dim_feedforward=" << config.dim_feedforward << '\n'
           << "depth=" << config.depth << '\n'
           << "num_classes=" << config.num_classes << '\n'
           << "num_heads=" << config.num_heads << '\n'
           << "dropout_rate=" << config.dropout_rate << '\n'
           << "mixer=" << to_string(config.mixer) << '\n';
  if (!manifest) throw Error("failed writing " + (dir / kManifest).string());

  for_each_tensor(model, [&](const Tensor<double>& t, const std::string& name) {
    write_tensor(t, dir / (name + ".ftns"));
  });
}

std::pair<FitConfig, FitModel> load_model(const fs::path& dir) {
  std::ifstream manifest(dir / kManifest);
  if (!manifest) throw ConfigError("missing model manifest " + (dir / kManifest).string());

  FitConfig c;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> keys = {
      {"img_h", [&](auto& k, auto& v) { c.img_h = parse_size(k, v); }},
      {"img_w", [&](auto& k, auto& v) { c.img_w = parse_size(k, v); }},
      {"patch_h", [&](auto& k, auto& v) { c.patch_h = parse_size(k, v); }},
      {"patch_w", [&](auto& k, auto& v) { c.patch_w = parse_size(k, v); }},
      {"in_chans", [&](auto& k, auto& v) { c.in_chans = parse_size(k, v); }},
      {"embed_dim", [&](auto& k, auto& v) { c.embed_dim = parse_size(k, v); }},
      {"dim_feedforward", [&](auto& k, auto& v) { c.dim_feedforward = parse_size(k, v); }},
      {"depth", [&](auto& k, auto& v) { c.depth = parse_size(k, v); }},
      {"num_classes", [&](auto& k, auto& v) { c.num_classes = parse_size(k, v); }},
      {"num_heads", [&](auto& k, auto& v) { c.num_heads = parse_size(k, v); }},
      {"dropout_rate", [&](auto& k, auto& v) { c.dropout_rate = parse_double(k, v); }},
      {"mixer", [&](auto&, auto& v) { c.mixer = parse_mixer(v); }},
  };

  std::string line;
  for (int lineno = 1; std::getline(manifest, line); ++lineno) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config.txt line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError("config.txt line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second(key, value);
  }
  c.validate();

  FitModel m;
  m.blocks.resize(c.depth);
  if (c.mixer == Mixer::attention) {
    for (auto& b : m.blocks) b.attention.emplace();
  }
  for_each_tensor(m, [&](Tensor<double>& t, const std::string& name) {
    const fs::path p = dir / (name + ".ftns");
    if (!fs::exists(p)) throw ConfigError("model tensor missing: " + p.string());
    t = read_tensor_as<double>(p);
  });
  validate_model(m, c);
  return {c, std::move(m)};
}

}  // namespace spectral_ops
