#include "occreid/network.hpp"

#include <cmath>

#include "occreid/errors.hpp"
#include "occreid/random.hpp"

namespace occreid {

std::string_view to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::backbone: return "backbone";
    case ParamGroup::classification: return "classification";
    case ParamGroup::cosaliency: return "cosaliency";
  }
  return "backbone";
}

int ParameterStore::add(std::string name, ParamGroup group, Tensor value) {
  params_.push_back({std::move(name), group, std::move(value)});
  return static_cast<int>(params_.size()) - 1;
}

int ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<int>(i);
  return -1;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::size_t ParameterStore::scalar_count(ParamGroup g) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.group == g) n += p.value.size();
  return n;
}

Gradients zero_gradients(const ParameterStore& store) {
  Gradients g;
  g.reserve(store.size());
  for (const auto& p : store) g.emplace_back(p.value.n(), p.value.c(), p.value.h(), p.value.w());
  return g;
}

NetworkConfig NetworkConfig::tiny(int n_identities) {
  NetworkConfig c;
  c.n_identities = n_identities;
  return c;
}

NetworkConfig NetworkConfig::paper(int n_identities) {
  NetworkConfig c;
  c.stage_channels = {64, 256, 512, 1024, 2048};
  c.cs_channels = 64;
  c.input_size = 224;
  c.n_identities = n_identities;
  c.preset = "paper";
  return c;
}

void NetworkConfig::validate() const {
  if (input_size <= 0 || input_size % 32 != 0)
    throw ConfigError("network: input_size must be a positive multiple of 32");
  if (n_identities < 2) throw ConfigError("network: n_identities must be >= 2");
  if (cs_channels <= 0) throw ConfigError("network: cs_channels must be positive");
  for (int c : stage_channels)
    if (c <= 0) throw ConfigError("network: stage channels must be positive");
}

std::uint64_t ForwardTape::activation_signature() const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  std::uint64_t bits = 0;
  int nbits = 0;
  auto feed = [&](const Tensor& t) {
    for (double v : t.data) {
      bits = (bits << 1) | (v > 0.0 ? 1u : 0u);
      if (++nbits == 64) {
        h = mix64(h ^ bits);
        bits = 0;
        nbits = 0;
      }
    }
  };
  for (const auto& t : block_hidden) feed(t);
  for (const auto& t : stages) feed(t);
  for (const auto& b : cs) {
    feed(b.hidden);
    feed(b.d_out);
  }
  return mix64(h ^ bits ^ static_cast<std::uint64_t>(nbits));
}

CoSaliencyNet::Conv CoSaliencyNet::add_conv(const std::string& name, ParamGroup group, int cin,
                                            int cout, int kernel, int stride, RandomSource& rng) {
  Tensor w(cout, cin, kernel, kernel);
  const double std_dev = std::sqrt(2.0 / (cin * kernel * kernel));
  for (double& v : w.data) v = std_dev * rng.normal();
  Conv c;
  c.weight = params_.add(name + ".weight", group, std::move(w));
  c.bias = params_.add(name + ".bias", group, Tensor(cout, 1, 1, 1));
  c.geometry = {kernel, stride, kernel / 2};
  return c;
}

CoSaliencyNet::Linear CoSaliencyNet::add_linear(const std::string& name, ParamGroup group, int in,
                                                int out, RandomSource& rng) {
  Tensor w(out, in, 1, 1);
  const double std_dev = std::sqrt(1.0 / in);
  for (double& v : w.data) v = std_dev * rng.normal();
  Linear l;
  l.weight = params_.add(name + ".weight", group, std::move(w));
  l.bias = params_.add(name + ".bias", group, Tensor(out, 1, 1, 1));
  return l;
}

CoSaliencyNet::CoSaliencyNet(const NetworkConfig& config, std::uint64_t init_seed)
    : config_(config) {
  config_.validate();
  RandomSource rng(derive_seed(init_seed, "network/init"));
  const auto& ch = config_.stage_channels;
  int cin = 3;
  for (int k = 0; k < 5; ++k) {
    const std::string prefix = "backbone.block" + std::to_string(k + 1);
    block_a_[k] = add_conv(prefix + ".conv_a", ParamGroup::backbone, cin, ch[k], 3, 2, rng);
    block_b_[k] = add_conv(prefix + ".conv_b", ParamGroup::backbone, ch[k], ch[k], 3, 1, rng);
    cin = ch[k];
  }
  const int cs = config_.cs_channels;
  seed_proj_ = add_conv("cosaliency.seed", ParamGroup::cosaliency, ch[4], cs, 1, 1, rng);
  for (int j = 0; j < 4; ++j) {
    const int lateral = 3 - j;  // F4, F3, F2, F1
    const std::string prefix = "cosaliency.cs" + std::to_string(lateral + 1);
    cs_[j].up_proj = add_conv(prefix + ".up_proj", ParamGroup::cosaliency, cs, cs, 1, 1, rng);
    cs_[j].lateral_proj =
        add_conv(prefix + ".lateral_proj", ParamGroup::cosaliency, ch[lateral], cs, 1, 1, rng);
    cs_[j].refine_a = add_conv(prefix + ".refine_a", ParamGroup::cosaliency, cs, cs, 3, 1, rng);
    cs_[j].refine_b = add_conv(prefix + ".refine_b", ParamGroup::cosaliency, cs, cs, 3, 1, rng);
  }
  saliency_head_ = add_conv("cosaliency.head", ParamGroup::cosaliency, cs, 1, 1, 1, rng);
  identity_head_ = add_linear("classification.identity", ParamGroup::classification, ch[4],
                              config_.n_identities, rng);
  obc_head_ = add_linear("classification.obc", ParamGroup::classification, ch[4], 2, rng);
}

void CoSaliencyNet::reset_identity_head(int n_identities, std::uint64_t init_seed) {
  if (n_identities < 2) throw ConfigError("network: n_identities must be >= 2");
  RandomSource rng(derive_seed(init_seed, "network/identity_head"));
  const int in = config_.embed_dim();
  Tensor w(n_identities, in, 1, 1);
  const double std_dev = std::sqrt(1.0 / in);
  for (double& v : w.data) v = std_dev * rng.normal();
  params_[static_cast<std::size_t>(identity_head_.weight)].value = std::move(w);
  params_[static_cast<std::size_t>(identity_head_.bias)].value = Tensor(n_identities, 1, 1, 1);
  config_.n_identities = n_identities;
}

Tensor CoSaliencyNet::run(const Conv& c, const Tensor& x) const {
  return nn::conv2d_forward(x, params_.value(c.weight), params_.value(c.bias), c.geometry);
}

Tensor CoSaliencyNet::run_back(const Conv& c, const Tensor& x, const Tensor& dy, Gradients& g,
                               bool need_input_grad) const {
  return nn::conv2d_backward(x, params_.value(c.weight), dy, c.geometry,
                             g[static_cast<std::size_t>(c.weight)],
                             g[static_cast<std::size_t>(c.bias)], need_input_grad);
}

StageFeatures CoSaliencyNet::backbone_forward(const Tensor& batch, ForwardTape* tape) const {
  if (batch.c() != 3 || batch.h() != config_.input_size || batch.w() != config_.input_size)
    throw ShapeError("backbone: expected (B, 3, " + std::to_string(config_.input_size) + ", " +
                     std::to_string(config_.input_size) + ") input, got " + batch.shape_string());
  if (batch.n() < 1) throw ShapeError("backbone: empty batch");
  StageFeatures stages;
  const Tensor* x = &batch;
  for (int k = 0; k < 5; ++k) {
    Tensor hidden = nn::relu_forward(run(block_a_[k], *x));
    stages[k] = nn::relu_forward(run(block_b_[k], hidden));
    if (tape) tape->block_hidden[k] = std::move(hidden);
    x = &stages[k];
  }
  if (tape) {
    tape->input = batch;
    tape->stages = stages;
  }
  return stages;
}

std::pair<Tensor, Tensor> CoSaliencyNet::classification_forward(const Tensor& f5,
                                                                Tensor* feature) const {
  Tensor pooled = nn::global_avg_pool_forward(f5);
  auto id = nn::linear_forward(pooled, params_.value(identity_head_.weight),
                               params_.value(identity_head_.bias));
  auto obc = nn::linear_forward(pooled, params_.value(obc_head_.weight),
                                params_.value(obc_head_.bias));
  if (feature) *feature = std::move(pooled);
  return {std::move(id), std::move(obc)};
}

Tensor CoSaliencyNet::cosaliency_forward(const StageFeatures& stages, ForwardTape* tape) const {
  Tensor d = run(seed_proj_, stages[4]);
  if (tape) tape->seed = d;
  for (int j = 0; j < 4; ++j) {
    const int lateral = 3 - j;
    Tensor up = nn::upsample2x_forward(d);
    Tensor a = run(cs_[j].up_proj, up);
    const Tensor& lat = stages[lateral];
    if (lat.c() != config_.stage_channels[lateral] || lat.n() != up.n())
      throw ShapeError("cs block " + std::to_string(lateral + 1) + ": lateral feature " +
                       lat.shape_string() + " does not have " +
                       std::to_string(config_.stage_channels[lateral]) + " channels");
    Tensor l = run(cs_[j].lateral_proj, lat);
    if (!a.same_shape(l))
      throw ShapeError("cs block " + std::to_string(lateral + 1) + ": upsampled path " +
                       a.shape_string() + " does not match lateral path " + l.shape_string());
    Tensor fused = nn::add(a, l);
    Tensor hidden = nn::relu_forward(run(cs_[j].refine_a, fused));
    Tensor out = nn::relu_forward(run(cs_[j].refine_b, hidden));
    if (tape) {
      tape->cs[j] = {std::move(d), std::move(up), std::move(fused), std::move(hidden), out};
    }
    d = std::move(out);
  }
  return run(saliency_head_, d);
}

NetworkOutput CoSaliencyNet::forward(const Tensor& batch, ForwardTape* tape) const {
  NetworkOutput out;
  const StageFeatures stages = backbone_forward(batch, tape);
  std::tie(out.identity_logits, out.obc_logits) = classification_forward(stages[4], &out.feature);
  out.saliency_logits = cosaliency_forward(stages, tape);
  if (tape) tape->feature = out.feature;
  return out;
}

Tensor CoSaliencyNet::extract_feature(const Tensor& batch) const {
  const StageFeatures stages = backbone_forward(batch);
  return nn::global_avg_pool_forward(stages[4]);
}

void CoSaliencyNet::backward(const ForwardTape& tape, const Tensor& d_identity,
                             const Tensor& d_obc, const Tensor& d_saliency,
                             Gradients& grads) const {
  const auto& st = tape.stages;
  std::array<Tensor, 5> d_stage;
  for (int k = 0; k < 5; ++k) d_stage[k] = Tensor(st[k].n(), st[k].c(), st[k].h(), st[k].w());

  // Classification heads.
  Tensor d_feat = nn::linear_backward(tape.feature, params_.value(identity_head_.weight),
                                      d_identity, grads[identity_head_.weight],
                                      grads[identity_head_.bias]);
  Tensor d_feat_obc = nn::linear_backward(tape.feature, params_.value(obc_head_.weight), d_obc,
                                          grads[obc_head_.weight], grads[obc_head_.bias]);
  for (std::size_t i = 0; i < d_feat.size(); ++i) d_feat.data[i] += d_feat_obc.data[i];
  d_stage[4] = nn::global_avg_pool_backward(d_feat, st[4].h(), st[4].w());

  // Co-saliency decoder.
  if (!d_saliency.data.empty()) {
    Tensor dd = run_back(saliency_head_, tape.cs[3].d_out, d_saliency, grads);
    for (int j = 3; j >= 0; --j) {
      const int lateral = 3 - j;
      const auto& b = tape.cs[j];
      Tensor dh = run_back(cs_[j].refine_b, b.hidden, nn::relu_backward(b.d_out, dd), grads);
      Tensor dfused = run_back(cs_[j].refine_a, b.fused, nn::relu_backward(b.hidden, dh), grads);
      Tensor dlat = run_back(cs_[j].lateral_proj, st[lateral], dfused, grads);
      for (std::size_t i = 0; i < dlat.size(); ++i) d_stage[lateral].data[i] += dlat.data[i];
      Tensor dup = run_back(cs_[j].up_proj, b.up, dfused, grads);
      dd = nn::upsample2x_backward(dup);
    }
    Tensor dseed = run_back(seed_proj_, st[4], dd, grads);
    for (std::size_t i = 0; i < dseed.size(); ++i) d_stage[4].data[i] += dseed.data[i];
  }

  // Backbone, deepest block first.
  for (int k = 4; k >= 0; --k) {
    const Tensor& x = k == 0 ? tape.input : st[k - 1];
    Tensor dh = run_back(block_b_[k], tape.block_hidden[k], nn::relu_backward(st[k], d_stage[k]),
                         grads);
    Tensor dx = run_back(block_a_[k], x, nn::relu_backward(tape.block_hidden[k], dh), grads,
                         k > 0);
    if (k > 0)
      for (std::size_t i = 0; i < dx.size(); ++i) d_stage[k - 1].data[i] += dx.data[i];
  }
}

Tensor images_to_batch(const std::vector<const Raster*>& images) {
  if (images.empty()) throw ArgumentError("images_to_batch: empty batch");
  const int h = images[0]->height, w = images[0]->width;
  Tensor t(static_cast<int>(images.size()), 3, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Raster& r = *images[i];
    if (r.channels != 3 || r.height != h || r.width != w)
      throw ShapeError("images_to_batch: images differ in shape");
    auto dst = t.sample(static_cast<int>(i));
    for (std::size_t k = 0; k < r.data.size(); ++k) dst[k] = r.data[k];
  }
  return t;
}

Tensor masks_to_batch(const std::vector<const Raster*>& masks, int factor) {
  if (masks.empty()) throw ArgumentError("masks_to_batch: empty batch");
  const int h = masks[0]->height, w = masks[0]->width;
  if (factor < 1 || h % factor != 0 || w % factor != 0)
    throw ShapeError("masks_to_batch: size not divisible by factor");
  const int ho = h / factor, wo = w / factor;
  const double inv = 1.0 / (factor * factor);
  Tensor t(static_cast<int>(masks.size()), 1, ho, wo);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const Raster& m = *masks[i];
    if (m.channels != 1 || m.height != h || m.width != w)
      throw ShapeError("masks_to_batch: masks differ in shape");
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        double s = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) s += m.at(0, y * factor + dy, x * factor + dx);
        t.at(static_cast<int>(i), 0, y, x) = s * inv;
      }
  }
  return t;
}

}  // namespace occreid
