#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "spectral_ops/bench.hpp"
#include "spectral_ops/rng.hpp"
#include "spectral_ops/tensor.hpp"

namespace spectral_ops {

enum class Mixer { fourier, attention };

std::string_view to_string(Mixer mixer);
Mixer parse_mixer(std::string_view name);

inline constexpr double kBlockNormEps = 1e-12;
inline constexpr double kEmbedNormEps = 1e-5;

struct FitConfig {
  std::size_t img_h = 32;
  std::size_t img_w = 32;
  std::size_t patch_h = 4;
  std::size_t patch_w = 4;
  std::size_t in_chans = 3;
  std::size_t embed_dim = 64;
  std::size_t dim_feedforward = 128;
  std::size_t depth = 2;
  std::size_t num_classes = 10;
  std::size_t num_heads = 4;    // attention mixer only
  double dropout_rate = 0.0;    // inert at inference
  Mixer mixer = Mixer::fourier;

  std::size_t grid_h() const { return img_h / patch_h; }
  std::size_t grid_w() const { return img_w / patch_w; }
  std::size_t num_patches() const { return grid_h() * grid_w(); }
  std::size_t patch_len() const { return in_chans * patch_h * patch_w; }

  /// Throws ConfigError on zero sizes, patches that do not tile the image,
  /// or an embedding width not divisible by the head count (attention).
  void validate() const;
};

/// The ViT-Base/16 ImageNet configuration with the given mixer.
FitConfig vit_base_config(Mixer mixer = Mixer::attention);

/// y = x W^T + b with `weight` stored [out, in] and `bias` [out].
template <class T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  std::size_t in_features() const { return weight.extent(1); }
  std::size_t out_features() const { return weight.extent(0); }
};

template <class T>
struct AttentionWeights {
  Linear<T> query, key, value, output;
};

struct BlockWeights {
  Tensor<double> norm1_gamma, norm1_beta;
  Linear<double> ff;     // embed_dim -> dim_feedforward
  Linear<double> dense;  // dim_feedforward -> embed_dim
  Tensor<double> norm2_gamma, norm2_beta;
  std::optional<AttentionWeights<double>> attention;
};

struct FitModel {
  Linear<double> patch_proj;     // [d, C*Ph*Pw], channel-major patch flattening
  Tensor<double> cls_token;      // [1, d]
  Tensor<double> pos_embed;      // [num_patches + 1, d]
  Tensor<double> embed_norm_gamma, embed_norm_beta;
  std::vector<BlockWeights> blocks;
  Linear<double> head;           // d -> num_classes
};

/// Seeded initialization: weights N(0, 1) / sqrt(fan_in), biases zero,
/// LayerNorm gamma one and beta zero, cls token N(0, 1), positions zero.
FitModel init_fit_model(const FitConfig& config, Rng& rng);

/// Throws ConfigError naming the first tensor whose shape disagrees with `config`.
void validate_model(const FitModel& model, const FitConfig& config);

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Linear<T>& layer);

/// Exact-erf GELU.
double gelu(double x);

template <class T>
Tensor<T> gelu(const Tensor<T>& x);

/// Row-wise normalization over the last axis with population variance.
template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = kBlockNormEps);

/// Re(F_seq(F_hidden(x))) for x [S, d]. Has no parameters.
template <class T>
Tensor<T> fourier_mixing(const Tensor<T>& x);

/// Softmax attention probabilities [heads, S, S] of the projected queries
/// and keys of x.
template <class T>
Tensor<T> attention_probabilities(const Tensor<T>& x, const AttentionWeights<T>& w,
                                  std::size_t num_heads);

/// Multi-head self-attention with Q = K = V = x, heads concatenated then
/// projected by the output layer.
template <class T>
Tensor<T> attention_mixing(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t num_heads);

Tensor<double> patch_embed(const Tensor<double>& image, const FitModel& model,
                           const FitConfig& config);

/// dense(GELU(ff(x))); dropout is the identity.
Tensor<double> feed_forward(const Tensor<double>& x, const BlockWeights& block);

/// One transformer block, wired as
///   mix = mixer(x); h = norm1(mix + x); f = feed_forward(h); out = norm2(f + mix)
/// The second residual adds the mixer output, not h.
Tensor<double> fit_block(const Tensor<double>& x, const BlockWeights& block,
                         const FitConfig& config);

/// Blocks applied to an already embedded sequence, then GELU(head(cls row)).
Tensor<double> fit_forward_embedded(const Tensor<double>& tokens, const FitModel& model,
                                    const FitConfig& config);

/// Logits [num_classes] for one image [C, H, W].
Tensor<double> fit_forward(const Tensor<double>& image, const FitModel& model,
                           const FitConfig& config);

/// -log softmax(logits)[label] with max subtraction.
double cross_entropy(std::span<const double> logits, std::size_t label);

/// Learnable scalars of a model built from `config`.
std::size_t count_params(const FitConfig& config);

/// Scalars actually held by `model`.
std::size_t count_params(const FitModel& model);

/// Parameters a single block holds under `config`.
std::size_t block_param_count(const FitConfig& config);

/// Times fourier_mixing against attention_mixing on random [S, d] inputs,
/// with max(1, d / 64) heads. Rows are ordered by S, then method.
std::vector<BenchRow> bench_mixing(std::span<const std::size_t> seq_lens, std::size_t dim,
                                   int repeats, DType dtype = DType::f32, std::uint64_t seed = 42);

/// Model directory: `config.txt` (key=value lines) plus one FTNS file per tensor.
void save_model(const FitModel& model, const FitConfig& config, const std::filesystem::path& dir);
std::pair<FitConfig, FitModel> load_model(const std::filesystem::path& dir);

}  // namespace spectral_ops
