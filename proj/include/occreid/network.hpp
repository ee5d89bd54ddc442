#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "occreid/image.hpp"
#include "occreid/nn_ops.hpp"
#include "occreid/random.hpp"
#include "occreid/tensor.hpp"

namespace occreid {

enum class ParamGroup { backbone, classification, cosaliency };
std::string_view to_string(ParamGroup g);

struct Parameter {
  std::string name;
  ParamGroup group = ParamGroup::backbone;
  Tensor value;
};

// Ordered, named parameter tensors. Gradients and optimizer moments are kept
// in vectors aligned with this order.
class ParameterStore {
 public:
  int add(std::string name, ParamGroup group, Tensor value);

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  const Tensor& value(int i) const { return params_[static_cast<std::size_t>(i)].value; }

  // Index by name, or -1.
  int find(std::string_view name) const;
  std::size_t scalar_count() const;
  std::size_t scalar_count(ParamGroup g) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

using Gradients = std::vector<Tensor>;

Gradients zero_gradients(const ParameterStore& store);

struct NetworkConfig {
  std::array<int, 5> stage_channels{16, 32, 64, 96, 128};
  int n_identities = 2;
  int cs_channels = 16;
  int input_size = 64;
  std::string preset = "tiny";

  int embed_dim() const { return stage_channels[4]; }
  // Spatial size of backbone stage k (1..5).
  int stage_size(int k) const { return input_size >> k; }
  int saliency_size() const { return input_size / 2; }

  static NetworkConfig tiny(int n_identities);
  // Stage widths of a 50-layer residual backbone at 224 px input.
  static NetworkConfig paper(int n_identities);
  void validate() const;

  bool operator==(const NetworkConfig&) const = default;
};

struct NetworkOutput {
  Tensor identity_logits;  // (B, n_identities, 1, 1)
  Tensor obc_logits;       // (B, 2, 1, 1)
  Tensor saliency_logits;  // (B, 1, S/2, S/2)
  Tensor feature;          // (B, embed_dim, 1, 1)

  // (B, 1, S, S) bilinear view of saliency_logits.
  Tensor saliency_full() const { return nn::upsample2x_forward(saliency_logits); }
};

using StageFeatures = std::array<Tensor, 5>;

// Intermediate activations recorded by a forward pass for backward().
struct ForwardTape {
  Tensor input;
  std::array<Tensor, 5> block_hidden;  // ReLU output of each block's first conv
  StageFeatures stages;                // F1..F5
  Tensor feature;
  Tensor seed;                         // 1x1 projection of F5
  struct CsBlock {
    Tensor d_in, up, fused, hidden, d_out;
  };
  std::array<CsBlock, 4> cs;           // lateral order F4, F3, F2, F1

  // Hash of the sign pattern of every ReLU output; equal hashes mean the
  // network is in the same linear region.
  std::uint64_t activation_signature() const;
};

// Shared backbone f, classification branch g (identity) and b (OBC), and the
// co-saliency decoder h.
class CoSaliencyNet {
 public:
  CoSaliencyNet(const NetworkConfig& config, std::uint64_t init_seed);

  const NetworkConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  StageFeatures backbone_forward(const Tensor& batch, ForwardTape* tape = nullptr) const;
  // Returns {identity_logits, obc_logits}; `feature` receives the pooled F5.
  std::pair<Tensor, Tensor> classification_forward(const Tensor& f5, Tensor* feature = nullptr) const;
  Tensor cosaliency_forward(const StageFeatures& stages, ForwardTape* tape = nullptr) const;
  NetworkOutput forward(const Tensor& batch, ForwardTape* tape = nullptr) const;
  Tensor extract_feature(const Tensor& batch) const;

  // Accumulates parameter gradients given loss gradients w.r.t. the three
  // heads. An empty d_saliency skips the decoder.
  void backward(const ForwardTape& tape, const Tensor& d_identity, const Tensor& d_obc,
                const Tensor& d_saliency, Gradients& grads) const;

  // Replaces the identity head with a freshly initialized one.
  void reset_identity_head(int n_identities, std::uint64_t init_seed);

 private:
  struct Conv {
    int weight = -1;
    int bias = -1;
    nn::ConvGeometry geometry;
  };
  struct Linear {
    int weight = -1;
    int bias = -1;
  };
  struct CsBlockLayers {
    Conv up_proj, lateral_proj, refine_a, refine_b;
  };

  Conv add_conv(const std::string& name, ParamGroup group, int cin, int cout, int kernel,
                int stride, RandomSource& rng);
  Linear add_linear(const std::string& name, ParamGroup group, int in, int out, RandomSource& rng);
  Tensor run(const Conv& c, const Tensor& x) const;
  Tensor run_back(const Conv& c, const Tensor& x, const Tensor& dy, Gradients& g,
                  bool need_input_grad = true) const;

  NetworkConfig config_;
  ParameterStore params_;
  std::array<Conv, 5> block_a_;
  std::array<Conv, 5> block_b_;
  Conv seed_proj_;
  std::array<CsBlockLayers, 4> cs_;
  Conv saliency_head_;
  Linear identity_head_;
  Linear obc_head_;
};

// Stacks equally sized 3-channel rasters into a (B, 3, H, W) tensor.
Tensor images_to_batch(const std::vector<const Raster*>& images);
// Stacks 1-channel masks, area-downsampled by `factor`, into (B, 1, H/f, W/f).
Tensor masks_to_batch(const std::vector<const Raster*>& masks, int factor);

}  // namespace occreid
