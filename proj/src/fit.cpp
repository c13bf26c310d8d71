#include "spectral_ops/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spectral_ops/spectral.hpp"

namespace spectral_ops {

std::string_view to_string(Mixer mixer) {
  return mixer == Mixer::fourier ? "fourier" : "attention";
}

Mixer parse_mixer(std::string_view name) {
  if (name == "fourier") return Mixer::fourier;
  if (name == "attention") return Mixer::attention;
  throw ConfigError("unknown mixer '" + std::string(name) + "' (expected fourier or attention)");
}

void FitConfig::validate() const {
  if (!img_h || !img_w || !patch_h || !patch_w || !in_chans || !embed_dim || !dim_feedforward ||
      !num_classes || !num_heads) {
    throw ConfigError("FitConfig sizes must be positive");
  }
  if (img_h % patch_h || img_w % patch_w) {
    throw ConfigError("patch " + std::to_string(patch_h) + "x" + std::to_string(patch_w) +
                      " does not tile image " + std::to_string(img_h) + "x" +
                      std::to_string(img_w));
  }
  if (mixer == Mixer::attention && embed_dim % num_heads) {
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
}

FitConfig vit_base_config(Mixer mixer) {
  FitConfig c;
  c.img_h = c.img_w = 224;
  c.patch_h = c.patch_w = 16;
  c.in_chans = 3;
  c.embed_dim = 768;
  c.dim_feedforward = 3072;
  c.depth = 12;
  c.num_classes = 1000;
  c.num_heads = 12;
  c.mixer = mixer;
  return c;
}

namespace {

Linear<double> init_linear(Rng& rng, std::size_t in, std::size_t out) {
  Linear<double> l{randn<double>(rng, {out, in}), Tensor<double>::filled({out}, 0.0)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : l.weight.data()) v *= scale;
  return l;
}

void expect_shape(const Tensor<double>& t, const Shape& shape, const std::string& name) {
  if (t.shape() != shape) {
    throw ConfigError(name + " has shape " + to_string(t.shape()) + ", expected " +
                      to_string(shape));
  }
}

void expect_linear(const Linear<double>& l, std::size_t in, std::size_t out,
                   const std::string& name) {
  expect_shape(l.weight, {out, in}, name + ".weight");
  expect_shape(l.bias, {out}, name + ".bias");
}

template <class T>
std::size_t linear_params(const Linear<T>& l) {
  return l.weight.size() + l.bias.size();
}

}  // namespace

FitModel init_fit_model(const FitConfig& config, Rng& rng) {
  config.validate();
  const std::size_t d = config.embed_dim, dff = config.dim_feedforward;
  FitModel m;
  m.patch_proj = init_linear(rng, config.patch_len(), d);
  m.cls_token = randn<double>(rng, {1, d});
  m.pos_embed = Tensor<double>::filled({config.num_patches() + 1, d}, 0.0);
  m.embed_norm_gamma = Tensor<double>::filled({d}, 1.0);
  m.embed_norm_beta = Tensor<double>::filled({d}, 0.0);
  for (std::size_t b = 0; b < config.depth; ++b) {
    BlockWeights w;
    w.norm1_gamma = Tensor<double>::filled({d}, 1.0);
    w.norm1_beta = Tensor<double>::filled({d}, 0.0);
    w.ff = init_linear(rng, d, dff);
    w.dense = init_linear(rng, dff, d);
    w.norm2_gamma = Tensor<double>::filled({d}, 1.0);
    w.norm2_beta = Tensor<double>::filled({d}, 0.0);
    if (config.mixer == Mixer::attention) {
      w.attention = AttentionWeights<double>{init_linear(rng, d, d), init_linear(rng, d, d),
                                             init_linear(rng, d, d), init_linear(rng, d, d)};
    }
    m.blocks.push_back(std::move(w));
  }
  m.head = init_linear(rng, d, config.num_classes);
  return m;
}

void validate_model(const FitModel& m, const FitConfig& config) {
  config.validate();
  const std::size_t d = config.embed_dim, dff = config.dim_feedforward;
  expect_linear(m.patch_proj, config.patch_len(), d, "patch_proj");
  expect_shape(m.cls_token, {1, d}, "cls_token");
  expect_shape(m.pos_embed, {config.num_patches() + 1, d}, "pos_embed");
  expect_shape(m.embed_norm_gamma, {d}, "embed_norm.gamma");
  expect_shape(m.embed_norm_beta, {d}, "embed_norm.beta");
  if (m.blocks.size() != config.depth) {
    throw ConfigError("model has " + std::to_string(m.blocks.size()) + " blocks, config depth is " +
                      std::to_string(config.depth));
  }
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const auto& w = m.blocks[b];
    const std::string p = "blocks." + std::to_string(b) + ".";
    expect_shape(w.norm1_gamma, {d}, p + "norm1.gamma");
    expect_shape(w.norm1_beta, {d}, p + "norm1.beta");
    expect_linear(w.ff, d, dff, p + "ff");
    expect_linear(w.dense, dff, d, p + "dense");
    expect_shape(w.norm2_gamma, {d}, p + "norm2.gamma");
    expect_shape(w.norm2_beta, {d}, p + "norm2.beta");
    if ((config.mixer == Mixer::attention) != w.attention.has_value()) {
      throw ConfigError(p + "attention weights do not match mixer '" +
                        std::string(to_string(config.mixer)) + "'");
    }
    if (w.attention) {
      expect_linear(w.attention->query, d, d, p + "attn.query");
      expect_linear(w.attention->key, d, d, p + "attn.key");
      expect_linear(w.attention->value, d, d, p + "attn.value");
      expect_linear(w.attention->output, d, d, p + "attn.output");
    }
  }
  expect_linear(m.head, d, config.num_classes, "head");
}

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Linear<T>& layer) {
  const std::size_t in = layer.in_features(), out = layer.out_features();
  if (x.rank() != 2 || x.extent(1) != in || layer.bias.size() != out) {
    throw ShapeError("linear: input " + to_string(x.shape()) + " against weight " +
                     to_string(layer.weight.shape()));
  }
  const std::size_t rows = x.extent(0);
  // Transposed weight so the inner loop runs contiguously over outputs.
  std::vector<T> wt(in * out);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) wt[i * out + o] = layer.weight.at(o, i);
  }
  Tensor<T> y({rows, out});
  for (std::size_t r = 0; r < rows; ++r) {
    T* yr = &y.at(r, 0);
    std::copy_n(layer.bias.data().data(), out, yr);
    for (std::size_t i = 0; i < in; ++i) {
      const T xv = x.at(r, i);
      const T* w = wt.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xv * w[o];
    }
  }
  return y;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(gelu(static_cast<double>(x[i])));
  return y;
}

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps) {
  if (!(eps > 0.0)) throw ConfigError("layer_norm eps must be positive");
  const std::size_t d = x.shape().back();
  if (gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: gamma/beta must have " + std::to_string(d) + " entries");
  }
  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < x.size() / d; ++r) {
    const T* xr = x.data().data() + r * d;
    T* yr = y.data().data() + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t i = 0; i < d; ++i) {
      yr[i] = static_cast<T>((xr[i] - mean) * inv * gamma[i] + beta[i]);
    }
  }
  return y;
}

template <class T>
Tensor<T> fourier_mixing(const Tensor<T>& x) {
  if (x.rank() != 2) throw ShapeError("fourier_mixing expects [S, d], got " + to_string(x.shape()));
  const std::size_t s = x.extent(0), d = x.extent(1), half = d / 2 + 1;
  // rfft2 covers hidden frequencies 0..d/2; the rest follow from
  // Y[r][d - k] = conj(Y[(S - r) % S][k]) for real input.
  const ComplexTensor<T> spec = rfft2(x);
  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < s; ++r) {
    const std::size_t mirror = (s - r) % s;
    for (std::size_t k = 0; k < d; ++k) {
      y.at(r, k) = k < half ? spec.at(r, k).real() : spec.at(mirror, d - k).real();
    }
  }
  return y;
}

namespace {

template <class T>
void check_attention(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t heads) {
  if (x.rank() != 2) throw ShapeError("attention expects [S, d], got " + to_string(x.shape()));
  const std::size_t d = x.extent(1);
  if (heads == 0 || d % heads) {
    throw ConfigError("embedding width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  for (const auto* l : {&w.query, &w.key, &w.value, &w.output}) {
    if (l->weight.shape() != Shape{d, d} || l->bias.shape() != Shape{d}) {
      throw ShapeError("attention projections must be [d, d] with [d] biases");
    }
  }
}

// Calls emit(head, row, probabilities) for every query row.
template <class T, class Emit>
void attention_rows(const Tensor<T>& q, const Tensor<T>& k, std::size_t heads, Emit&& emit) {
  const std::size_t s = q.extent(0), d = q.extent(1), dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<T> kt(dk * s);
  std::vector<T> p(s);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t j = 0; j < s; ++j) {
      for (std::size_t t = 0; t < dk; ++t) kt[t * s + j] = k.at(j, h * dk + t);
    }
    for (std::size_t i = 0; i < s; ++i) {
      std::fill(p.begin(), p.end(), T(0));
      for (std::size_t t = 0; t < dk; ++t) {
        const T qv = q.at(i, h * dk + t);
        const T* kr = kt.data() + t * s;
        for (std::size_t j = 0; j < s; ++j) p[j] += qv * kr[j];
      }
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < s; ++j) {
        p[j] = static_cast<T>(p[j] * scale);
        mx = std::max(mx, p[j]);
      }
      T sum = 0;
      for (std::size_t j = 0; j < s; ++j) {
        p[j] = std::exp(p[j] - mx);
        sum += p[j];
      }
      const T inv = T(1) / sum;
      for (std::size_t j = 0; j < s; ++j) p[j] *= inv;
      emit(h, i, std::span<const T>(p));
    }
  }
}

}  // namespace

template <class T>
Tensor<T> attention_probabilities(const Tensor<T>& x, const AttentionWeights<T>& w,
                                  std::size_t num_heads) {
  check_attention(x, w, num_heads);
  const std::size_t s = x.extent(0);
  Tensor<T> probs({num_heads, s, s});
  attention_rows(linear(x, w.query), linear(x, w.key), num_heads,
                 [&](std::size_t h, std::size_t i, std::span<const T> p) {
                   std::copy(p.begin(), p.end(), &probs.at(h, i, 0));
                 });
  return probs;
}

template <class T>
Tensor<T> attention_mixing(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t num_heads) {
  check_attention(x, w, num_heads);
  const std::size_t s = x.extent(0), d = x.extent(1), dk = d / num_heads;
  const Tensor<T> v = linear(x, w.value);
  Tensor<T> heads = Tensor<T>::filled({s, d}, T(0));
  attention_rows(linear(x, w.query), linear(x, w.key), num_heads,
                 [&](std::size_t h, std::size_t i, std::span<const T> p) {
                   T* out = &heads.at(i, h * dk);
                   for (std::size_t j = 0; j < s; ++j) {
                     const T pj = p[j];
                     const T* vr = &v.at(j, h * dk);
                     for (std::size_t t = 0; t < dk; ++t) out[t] += pj * vr[t];
                   }
                 });
  return linear(heads, w.output);
}

Tensor<double> patch_embed(const Tensor<double>& image, const FitModel& model,
                           const FitConfig& config) {
  if (image.shape() != Shape{config.in_chans, config.img_h, config.img_w}) {
    throw ShapeError("image " + to_string(image.shape()) + " does not match config [" +
                     std::to_string(config.in_chans) + ", " + std::to_string(config.img_h) +
                     ", " + std::to_string(config.img_w) + "]");
  }
  const std::size_t gh = config.grid_h(), gw = config.grid_w();
  const std::size_t ph = config.patch_h, pw = config.patch_w, c = config.in_chans;
  Tensor<double> patches({gh * gw, config.patch_len()});
  for (std::size_t gy = 0; gy < gh; ++gy) {
    for (std::size_t gx = 0; gx < gw; ++gx) {
      double* row = &patches.at(gy * gw + gx, 0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < ph; ++y) {
          for (std::size_t x = 0; x < pw; ++x) {
            *row++ = image.at(ch, gy * ph + y, gx * pw + x);
          }
        }
      }
    }
  }
  const Tensor<double> emb = linear(patches, model.patch_proj);
  const std::size_t d = config.embed_dim;
  Tensor<double> seq({gh * gw + 1, d});
  std::copy_n(model.cls_token.data().data(), d, &seq.at(0, 0));
  std::copy_n(emb.data().data(), emb.size(), &seq.at(1, 0));
  for (std::size_t i = 0; i < seq.size(); ++i) seq[i] += model.pos_embed[i];
  return layer_norm(seq, model.embed_norm_gamma, model.embed_norm_beta, kEmbedNormEps);
}

Tensor<double> feed_forward(const Tensor<double>& x, const BlockWeights& block) {
  return linear(gelu(linear(x, block.ff)), block.dense);
}

Tensor<double> fit_block(const Tensor<double>& x, const BlockWeights& block,
                         const FitConfig& config) {
  Tensor<double> mix;
  if (config.mixer == Mixer::attention) {
    if (!block.attention) throw ConfigError("attention mixer requires attention weights");
    mix = attention_mixing(x, *block.attention, config.num_heads);
  } else {
    mix = fourier_mixing(x);
  }
  Tensor<double> sum = mix;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += x[i];
  const Tensor<double> h = layer_norm(sum, block.norm1_gamma, block.norm1_beta, kBlockNormEps);
  Tensor<double> f = feed_forward(h, block);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += mix[i];
  return layer_norm(f, block.norm2_gamma, block.norm2_beta, kBlockNormEps);
}

Tensor<double> fit_forward_embedded(const Tensor<double>& tokens, const FitModel& model,
                                    const FitConfig& config) {
  Tensor<double> x = tokens;
  for (const auto& block : model.blocks) x = fit_block(x, block, config);
  const std::size_t d = config.embed_dim;
  Tensor<double> cls({1, d}, std::vector<double>(x.data().begin(), x.data().begin() + d));
  return gelu(linear(cls, model.head)).reshaped({config.num_classes});
}

Tensor<double> fit_forward(const Tensor<double>& image, const FitModel& model,
                           const FitConfig& config) {
  return fit_forward_embedded(patch_embed(image, model, config), model, config);
}

double cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ConfigError("label " + std::to_string(label) + " out of range for " +
                      std::to_string(logits.size()) + " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return std::log(sum) - (logits[label] - mx);
}

std::size_t block_param_count(const FitConfig& c) {
  const std::size_t d = c.embed_dim, dff = c.dim_feedforward;
  std::size_t n = 2 * (2 * d) + d * dff + dff + dff * d + d;
  if (c.mixer == Mixer::attention) n += 4 * d * d + 4 * d;
  return n;
}

std::size_t count_params(const FitConfig& c) {
  c.validate();
  const std::size_t d = c.embed_dim;
  const std::size_t embed = d * c.patch_len() + d  // projection
                            + d                      // cls token
                            + (c.num_patches() + 1) * d  // positions
                            + 2 * d;                 // embedding norm
  const std::size_t head = c.num_classes * d + c.num_classes;
  return embed + c.depth * block_param_count(c) + head;
}

std::size_t count_params(const FitModel& m) {
  std::size_t n = linear_params(m.patch_proj) + m.cls_token.size() + m.pos_embed.size() +
                  m.embed_norm_gamma.size() + m.embed_norm_beta.size() + linear_params(m.head);
  for (const auto& b : m.blocks) {
    n += b.norm1_gamma.size() + b.norm1_beta.size() + linear_params(b.ff) +
         linear_params(b.dense) + b.norm2_gamma.size() + b.norm2_beta.size();
    if (b.attention) {
      n += linear_params(b.attention->query) + linear_params(b.attention->key) +
           linear_params(b.attention->value) + linear_params(b.attention->output);
    }
  }
  return n;
}

namespace {

template <class T>
Linear<T> random_linear(Rng& rng, std::size_t d) {
  Linear<T> l{randn<T>(rng, {d, d}), Tensor<T>::filled({d}, T(0))};
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  for (auto& v : l.weight.data()) v *= scale;
  return l;
}

template <class T>
void bench_mixing_len(std::size_t s, std::size_t d, int repeats, std::uint64_t seed,
                      std::vector<BenchRow>& rows) {
  Rng rng(seed ^ (s << 16) ^ d);
  const Tensor<T> x = randn<T>(rng, {s, d});
  const AttentionWeights<T> w{random_linear<T>(rng, d), random_linear<T>(rng, d),
                              random_linear<T>(rng, d), random_linear<T>(rng, d)};
  const std::size_t heads = std::max<std::size_t>(1, d / 64);
  const std::string params = "S=" + std::to_string(s) + " d=" + std::to_string(d);
  Tensor<T> last;
  auto ta = time_median([&] { last = attention_mixing(x, w, heads); }, repeats);
  rows.push_back({"mixing", params, "attention", ta.median_ms, repeats, static_cast<double>(last[0])});
  auto tf = time_median([&] { last = fourier_mixing(x); }, repeats);
  rows.push_back({"mixing", params, "fourier", tf.median_ms, repeats, static_cast<double>(last[0])});
}

}  // namespace

std::vector<BenchRow> bench_mixing(std::span<const std::size_t> seq_lens, std::size_t dim,
                                   int repeats, DType dtype, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  if (dim == 0) throw ConfigError("dim must be positive");
  std::vector<std::size_t> ss(seq_lens.begin(), seq_lens.end());
  for (auto v : ss) if (v == 0) throw ConfigError("sequence lengths must be positive");
  std::sort(ss.begin(), ss.end());
  ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
  std::vector<BenchRow> rows;
  for (auto s : ss) {
    if (dtype == DType::f32) {
      bench_mixing_len<float>(s, dim, repeats, seed, rows);
    } else {
      bench_mixing_len<double>(s, dim, repeats, seed, rows);
    }
  }
  return rows;
}

#define SPECTRAL_OPS_INSTANTIATE(T)                                                             \
  template Tensor<T> linear<T>(const Tensor<T>&, const Linear<T>&);                             \
  template Tensor<T> gelu<T>(const Tensor<T>&);                                                 \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double); \
  template Tensor<T> fourier_mixing<T>(const Tensor<T>&);                                       \
  template Tensor<T> attention_probabilities<T>(const Tensor<T>&, const AttentionWeights<T>&,   \
                                                std::size_t);                                   \
  template Tensor<T> attention_mixing<T>(const Tensor<T>&, const AttentionWeights<T>&, std::size_t);

SPECTRAL_OPS_INSTANTIATE(float)
SPECTRAL_OPS_INSTANTIATE(double)

#undef SPECTRAL_OPS_INSTANTIATE

}  // namespace spectral_ops
