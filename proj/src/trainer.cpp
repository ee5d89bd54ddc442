#include "occreid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "occreid/errors.hpp"

namespace occreid {

namespace fs = std::filesystem;
using nlohmann::json;

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.batch_size = 8;
  c.lr_backbone = 1e-5;
  c.lr_branches = 2e-4;
  c.weights = {0.8, 0.8};
  c.preprocess = PreprocessConfig::paper();
  c.stage_channels = {64, 256, 512, 1024, 2048};
  c.cs_channels = 64;
  c.preset = "paper";
  return c;
}

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 8;
  c.lr_backbone = 1e-3;
  c.lr_branches = 1e-3;
  c.weights = {0.8, 0.8};
  return c;
}

NetworkConfig TrainConfig::network(int n_identities) const {
  NetworkConfig n;
  n.stage_channels = stage_channels;
  n.cs_channels = cs_channels;
  n.input_size = preprocess.crop;
  n.n_identities = n_identities;
  n.preset = preset;
  return n;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
  if (!(lr_backbone > 0.0) || !(lr_branches > 0.0))
    throw ConfigError("train: learning rates must be positive");
  if (epochs - 1 > epoch_max())
    throw ConfigError("train: epochs exceed the schedule's epoch_max + 1");
  weights.validate(allow_weight_override);
  simulator.validate();
  preprocess.validate();
  network(2).validate();
}

std::string config_to_json(const TrainConfig& c) {
  json j = {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr_backbone", c.lr_backbone},
            {"lr_branches", c.lr_branches},
            {"alpha", c.weights.alpha},
            {"beta", c.weights.beta},
            {"allow_weight_override", c.allow_weight_override},
            {"schedule", {{"epoch_max", c.schedule.epoch_max}, {"mode", to_string(c.schedule.mode)}}},
            {"simulator",
             {{"area_lo", c.simulator.area_lo},
              {"area_hi", c.simulator.area_hi},
              {"bank_mode", to_string(c.simulator.bank_mode)},
              {"max_retries", c.simulator.max_retries}}},
            {"preprocess", {{"resize", c.preprocess.resize}, {"crop", c.preprocess.crop}}},
            {"stage_channels", c.stage_channels},
            {"cs_channels", c.cs_channels},
            {"preset", c.preset},
            {"seed", c.seed},
            {"checkpoint_dir", c.checkpoint_dir.string()},
            {"log_path", c.log_path.string()},
            {"optimizer", {{"name", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}}}};
  return j.dump(2);
}

TrainConfig config_from_json(const std::string& text, TrainConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("lr_backbone", c.lr_backbone);
    get("lr_branches", c.lr_branches);
    get("alpha", c.weights.alpha);
    get("beta", c.weights.beta);
    get("allow_weight_override", c.allow_weight_override);
    get("stage_channels", c.stage_channels);
    get("cs_channels", c.cs_channels);
    get("preset", c.preset);
    get("seed", c.seed);
    if (j.contains("checkpoint_dir")) c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
    if (j.contains("log_path")) c.log_path = j.at("log_path").get<std::string>();
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.contains("epoch_max")) c.schedule.epoch_max = s.at("epoch_max").get<int>();
      if (s.contains("mode")) c.schedule.mode = parse_schedule_mode(s.at("mode").get<std::string>());
    }
    if (j.contains("simulator")) {
      const auto& s = j.at("simulator");
      if (s.contains("area_lo")) c.simulator.area_lo = s.at("area_lo").get<double>();
      if (s.contains("area_hi")) c.simulator.area_hi = s.at("area_hi").get<double>();
      if (s.contains("bank_mode"))
        c.simulator.bank_mode = parse_occluder_origin(s.at("bank_mode").get<std::string>());
      if (s.contains("max_retries")) c.simulator.max_retries = s.at("max_retries").get<int>();
    }
    if (j.contains("preprocess")) {
      const auto& p = j.at("preprocess");
      if (p.contains("resize")) c.preprocess.resize = p.at("resize").get<int>();
      if (p.contains("crop")) c.preprocess.crop = p.at("crop").get<int>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------

namespace {

int class_index(const std::vector<int>& vocabulary, int identity) {
  const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), identity);
  if (it == vocabulary.end() || *it != identity)
    throw ArgumentError("identity " + std::to_string(identity) + " not in model vocabulary");
  return static_cast<int>(it - vocabulary.begin());
}

}  // namespace

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                 const std::vector<int>& vocabulary, PreprocessMode mode, RandomSource& rng,
                 const PreprocessConfig& preprocess) {
  std::vector<Sample> samples;
  samples.reserve(indices.size());
  Batch b;
  for (std::size_t idx : indices) {
    const ImageRecord& r = data.records[idx];
    samples.push_back(occreid::preprocess(r, mode, rng, preprocess));
    b.labels.push_back(class_index(vocabulary, r.identity));
    b.obc.push_back(r.obc);
    b.record_indices.push_back(idx);
  }
  std::vector<const Raster*> images, masks;
  for (const auto& s : samples) {
    images.push_back(&s.image);
    masks.push_back(&s.mask);
  }
  b.images = images_to_batch(images);
  b.mask_targets = masks_to_batch(masks, 2);
  return b;
}

LossBreakdown loss_and_gradients(const Batch& batch, const CoSaliencyNet& model,
                                 const LossWeights& w, Gradients* grads,
                                 std::uint64_t* activation_signature) {
  ForwardTape tape;
  const NetworkOutput out = model.forward(batch.images, grads || activation_signature ? &tape : nullptr);
  Tensor d_id, d_obc, d_sal;
  DomainTerms terms;
  terms.identity = identity_loss(out.identity_logits, batch.labels, grads ? &d_id : nullptr);
  terms.obc = obc_loss(out.obc_logits, batch.obc, grads ? &d_obc : nullptr);
  terms.saliency = saliency_loss(out.saliency_logits, batch.mask_targets, grads ? &d_sal : nullptr);
  const LossBreakdown loss = total_loss(std::span(&terms, 1), w);
  if (activation_signature) *activation_signature = tape.activation_signature();
  if (grads) {
    for (double& v : d_id.data) v *= w.alpha * w.beta;
    for (double& v : d_obc.data) v *= w.alpha * (1.0 - w.beta);
    if (w.alpha < 1.0) {
      for (double& v : d_sal.data) v *= 1.0 - w.alpha;
    } else {
      d_sal = Tensor();
    }
    model.backward(tape, d_id, d_obc, d_sal, *grads);
  }
  return loss;
}

StepResult step(const Batch& batch, CoSaliencyNet& model, const LossWeights& weights,
                AdamState& opt, const LearningRates& lr) {
  auto& params = model.params();
  Gradients grads = zero_gradients(params);
  StepResult result;
  result.loss = loss_and_gradients(batch, model, weights, &grads);

  bool finite = std::isfinite(result.loss.total);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const double sq = squared_norm(grads[i]);
    if (!std::isfinite(sq)) finite = false;
    switch (params[i].group) {
      case ParamGroup::backbone: result.grad_norm_backbone += sq; break;
      case ParamGroup::classification: result.grad_norm_classification += sq; break;
      case ParamGroup::cosaliency: result.grad_norm_cosaliency += sq; break;
    }
  }
  result.grad_norm_backbone = std::sqrt(result.grad_norm_backbone);
  result.grad_norm_classification = std::sqrt(result.grad_norm_classification);
  result.grad_norm_cosaliency = std::sqrt(result.grad_norm_cosaliency);
  if (!finite) {
    result.skipped = true;
    return result;
  }

  if (opt.m.size() != params.size()) {
    opt.m = zero_gradients(params);
    opt.v = zero_gradients(params);
  }
  ++opt.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double rate = params[i].group == ParamGroup::backbone ? lr.backbone : lr.branches;
    auto& value = params[i].value.data;
    auto& m = opt.m[i].data;
    auto& v = opt.v[i].data;
    const auto& g = grads[i].data;
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      value[k] -= rate * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {

void write_param_groups(const ParameterStore& params, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (auto g : {ParamGroup::backbone, ParamGroup::classification, ParamGroup::cosaliency})
    out << "# " << to_string(g) << " " << params.scalar_count(g) << "\n";
  for (const auto& p : params) out << p.name << " " << to_string(p.group) << " " << p.value.size() << "\n";
}

void replace_link(const fs::path& dir, const std::string& link, const std::string& target) {
  const fs::path path = dir / link;
  std::error_code ec;
  fs::remove(path, ec);
  fs::create_symlink(target, path, ec);
  if (ec) throw IoError("cannot link " + path.string() + ": " + ec.message());
}

TrainResult run_training(CoSaliencyNet& net, AdamState& opt, const Dataset& data,
                         const TrainConfig& cfg, const std::string& stage, bool simulate) {
  if (data.empty()) throw ArgumentError(stage + ": training dataset is empty");
  const std::vector<int>& vocabulary = data.identities;
  const LearningRates lr{cfg.lr_backbone, cfg.lr_branches};
  const OcclusionSchedule schedule{cfg.epoch_max(), cfg.schedule.mode};
  const OccluderBank bank{&data, cfg.simulator};
  // Paths are left out of the echo so that runs differing only in output
  // location produce identical checkpoints.
  TrainConfig echoed = cfg;
  echoed.checkpoint_dir.clear();
  echoed.log_path.clear();
  const std::string echo = config_to_json(echoed);

  std::ofstream log;
  if (!cfg.log_path.empty()) {
    if (cfg.log_path.has_parent_path()) fs::create_directories(cfg.log_path.parent_path());
    log.open(cfg.log_path);
    if (!log) throw IoError("cannot write training log " + cfg.log_path.string());
    log << "epoch,step,identity,obc,saliency,multitask,total,p\n";
  }
  if (!cfg.checkpoint_dir.empty()) {
    fs::create_directories(cfg.checkpoint_dir);
    write_param_groups(net.params(), cfg.checkpoint_dir / "param_groups.txt");
  }

  TrainResult result;
  double best_loss = INFINITY;
  std::string rng_state;
  int global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double p = simulate ? schedule_probability(epoch, schedule) : 0.0;
    Dataset simulated;
    const Dataset* epoch_data = &data;
    if (simulate) {
      RandomSource sim_rng(derive_seed(cfg.seed, stage + "/simulator", static_cast<std::uint64_t>(epoch)));
      simulated = simulate_epoch(data, p, bank, sim_rng);
      epoch_data = &simulated;
    }
    RandomSource shuffle_rng(derive_seed(cfg.seed, stage + "/shuffle", static_cast<std::uint64_t>(epoch)));
    RandomSource crop_rng(derive_seed(cfg.seed, stage + "/crop", static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(epoch_data->size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    EpochSummary summary;
    summary.epoch = epoch;
    summary.p = p;
    for (const auto& r : epoch_data->records) summary.occluded_records += r.obc;
    int n_steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Batch batch = make_batch(*epoch_data, idx, vocabulary, PreprocessMode::train, crop_rng,
                                     cfg.preprocess);
      const StepResult sr = step(batch, net, cfg.weights, opt, lr);
      if (!std::isfinite(sr.loss.total)) {
        std::string ids;
        for (std::size_t i : idx) ids += (ids.empty() ? "" : ",") + epoch_data->records[i].source_id;
        throw TrainingError(stage + ": non-finite loss at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(global_step) + "; batch records [" + ids + "]");
      }
      if (sr.skipped) {
        ++summary.skipped_steps;
        std::cerr << stage << ": step " << global_step << " skipped (non-finite gradients)\n";
      }
      result.steps.push_back(sr.loss);
      summary.mean_total += sr.loss.total;
      ++n_steps;
      if (log) {
        char line[320];
        std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", epoch,
                      global_step, sr.loss.identity, sr.loss.obc, sr.loss.saliency,
                      sr.loss.multitask, sr.loss.total, p);
        log << line;
      }
      ++global_step;
    }
    summary.mean_total /= std::max(1, n_steps);
    result.epochs.push_back(summary);
    rng_state = crop_rng.save_state();

    if (!cfg.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
      save_checkpoint(make_checkpoint(net, opt, vocabulary, stage, epoch + 1, cfg.seed, rng_state, echo),
                      cfg.checkpoint_dir / name);
      replace_link(cfg.checkpoint_dir, "last.ckpt", name);
      if (summary.mean_total < best_loss) {
        best_loss = summary.mean_total;
        replace_link(cfg.checkpoint_dir, "best.ckpt", name);
      }
    }
  }
  result.final_loss = result.epochs.back().mean_total;
  result.checkpoint =
      make_checkpoint(net, opt, vocabulary, stage, cfg.epochs, cfg.seed, rng_state, echo);
  return result;
}

}  // namespace

TrainResult train_teacher(const Dataset& full_body, const TrainConfig& cfg) {
  cfg.validate();
  full_body.validate();
  for (const auto& r : full_body.records)
    if (r.obc != 0) throw ArgumentError("train_teacher: full-body data must have obc = 0 (" + r.source_id + ")");
  CoSaliencyNet net(cfg.network(static_cast<int>(full_body.identities.size())),
                    derive_seed(cfg.seed, "teacher/init"));
  AdamState opt;
  return run_training(net, opt, full_body, cfg, "teacher", true);
}

TrainResult train_student(const Checkpoint& teacher, const Dataset& occluded, const TrainConfig& cfg) {
  cfg.validate();
  occluded.validate();
  CoSaliencyNet net = restore_network(teacher);
  net.reset_identity_head(static_cast<int>(occluded.identities.size()),
                          derive_seed(cfg.seed, "student/identity_head"));
  AdamState opt;
  return run_training(net, opt, occluded, cfg, "student", false);
}

TrainResult train_student_from_scratch(const Dataset& occluded, const TrainConfig& cfg) {
  cfg.validate();
  occluded.validate();
  CoSaliencyNet net(cfg.network(static_cast<int>(occluded.identities.size())),
                    derive_seed(cfg.seed, "student/init"));
  AdamState opt;
  return run_training(net, opt, occluded, cfg, "student", false);
}

Dataset distill_masks(const Checkpoint& teacher, const Dataset& occluded,
                      const PreprocessConfig& preprocess) {
  preprocess.validate();
  const CoSaliencyNet net = restore_network(teacher);
  const int s = net.config().input_size;
  if (preprocess.crop != s)
    throw Error("distill_masks: preprocess crop " + std::to_string(preprocess.crop) +
                " does not match network input " + std::to_string(s));
  Dataset out = occluded;
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < out.records.size(); start += kChunk) {
    const std::size_t end = std::min(out.records.size(), start + kChunk);
    std::vector<Raster> resized;
    for (std::size_t i = start; i < end; ++i) resized.push_back(resize_bilinear(out.records[i].image, s, s));
    std::vector<const Raster*> ptrs;
    for (const auto& r : resized) ptrs.push_back(&r);
    const NetworkOutput o = net.forward(images_to_batch(ptrs));
    const Tensor full = o.saliency_full();
    if (full.h() != s || full.w() != s) throw Error("distill_masks: saliency resolution mismatch");
    for (std::size_t i = start; i < end; ++i) {
      Raster prob(1, s, s);
      const auto src = full.sample(static_cast<int>(i - start));
      for (std::size_t k = 0; k < prob.data.size(); ++k)
        prob.data[k] = static_cast<float>(sigmoid(src[k]));
      ImageRecord& rec = out.records[i];
      rec.mask = resize_bilinear(prob, rec.height(), rec.width());
      for (float& v : rec.mask.data) v = std::clamp(v, 0.0f, 1.0f);
      rec.mask_provenance = MaskProvenance::distilled;
    }
  }
  return out;
}

Tensor extract_dataset_features(const CoSaliencyNet& net, const Dataset& data,
                                const PreprocessConfig& preprocess) {
  const int d = net.config().embed_dim();
  Tensor feats(static_cast<int>(data.size()), d, 1, 1);
  RandomSource unused(0);
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t end = std::min(data.size(), start + kChunk);
    std::vector<Sample> samples;
    for (std::size_t i = start; i < end; ++i)
      samples.push_back(occreid::preprocess(data.records[i], PreprocessMode::eval, unused, preprocess));
    std::vector<const Raster*> ptrs;
    for (const auto& s : samples) ptrs.push_back(&s.image);
    const Tensor f = net.extract_feature(images_to_batch(ptrs));
    std::copy(f.data.begin(), f.data.end(), feats.data.begin() + static_cast<std::ptrdiff_t>(start * d));
  }
  return feats;
}

RetrievalResult evaluate_reid(const CoSaliencyNet& net, const Dataset& probes, const Dataset& gallery,
                              int max_rank, const PreprocessConfig& preprocess) {
  if (probes.empty()) throw EvaluationSetupError("evaluate_reid: no probes");
  if (gallery.empty()) throw EvaluationSetupError("evaluate_reid: empty gallery");
  const Tensor pf = extract_dataset_features(net, probes, preprocess);
  const Tensor gf = extract_dataset_features(net, gallery, preprocess);
  std::vector<int> pid, gid;
  for (const auto& r : probes.records) pid.push_back(r.identity);
  for (const auto& r : gallery.records) gid.push_back(r.identity);
  return evaluate_retrieval(distance_matrix(pf, gf), pid, gid, max_rank);
}

}  // namespace occreid
