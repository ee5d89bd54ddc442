#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "occreid/checkpoint.hpp"
#include "occreid/datamodel.hpp"
#include "occreid/evaluator.hpp"
#include "occreid/losses.hpp"
#include "occreid/network.hpp"
#include "occreid/simulator.hpp"

namespace occreid {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double lr_backbone = 1e-3;
  double lr_branches = 1e-3;
  LossWeights weights;
  // Permits alpha/beta outside [0.5, 1), used by the ablation configs.
  bool allow_weight_override = false;
  // epoch_max <= 0 means "use epochs".
  OcclusionSchedule schedule{0, ScheduleMode::growing};
  SimulatorConfig simulator;
  PreprocessConfig preprocess = PreprocessConfig::toy();
  std::array<int, 5> stage_channels{16, 32, 64, 96, 128};
  int cs_channels = 16;
  std::string preset = "tiny";
  std::uint64_t seed = 0;
  // Per-epoch checkpoints plus best/last links; empty disables.
  std::filesystem::path checkpoint_dir;
  // Per-step CSV log; empty disables.
  std::filesystem::path log_path;

  // Learning rates and batch size from the reference setup (Adam, 1e-5
  // backbone, 2e-4 branches, batch 8, alpha = beta = 0.8, 224 px input).
  static TrainConfig paper();
  // Desk-scale preset for the tiny network.
  static TrainConfig toy();

  int epoch_max() const { return schedule.epoch_max > 0 ? schedule.epoch_max : epochs; }
  NetworkConfig network(int n_identities) const;
  void validate() const;
};

// Resolved config as JSON text (what gets echoed into checkpoints and run dirs).
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text, TrainConfig base = TrainConfig::toy());

struct Batch {
  Tensor images;          // (B, 3, S, S)
  Tensor mask_targets;    // (B, 1, S/2, S/2)
  std::vector<int> labels;  // class indices
  std::vector<int> obc;
  std::vector<std::size_t> record_indices;
};

struct StepResult {
  LossBreakdown loss;
  bool skipped = false;  // non-finite gradients; parameters untouched
  double grad_norm_backbone = 0.0;
  double grad_norm_classification = 0.0;
  double grad_norm_cosaliency = 0.0;
};

struct LearningRates {
  double backbone = 0.0;
  double branches = 0.0;
};

// Computes the loss, backpropagates and applies one Adam update with the
// backbone rate on backbone parameters and the branch rate on both branches.
StepResult step(const Batch& batch, CoSaliencyNet& model, const LossWeights& weights,
                AdamState& optimizer, const LearningRates& lr);

// Loss and parameter gradients without an update (gradient checks, diagnostics).
LossBreakdown loss_and_gradients(const Batch& batch, const CoSaliencyNet& model,
                                 const LossWeights& weights, Gradients* grads,
                                 std::uint64_t* activation_signature = nullptr);

struct EpochSummary {
  int epoch = 0;
  double p = 0.0;
  int occluded_records = 0;
  double mean_total = 0.0;
  int skipped_steps = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochSummary> epochs;
  std::vector<LossBreakdown> steps;
  double final_loss = 0.0;  // mean total loss of the last epoch
};

// Teacher stage: every epoch, p = schedule(epoch), the simulator occludes
// round(p N) records, then one pass of mini-batch Adam updates.
TrainResult train_teacher(const Dataset& full_body, const TrainConfig& cfg);

// Replaces every mask with the teacher's sigmoid saliency map at record
// resolution.
Dataset distill_masks(const Checkpoint& teacher, const Dataset& occluded,
                      const PreprocessConfig& preprocess = PreprocessConfig::toy());

// Student stage: inherits backbone, decoder and OBC head; identity head is
// re-initialized for the student vocabulary; simulator off.
TrainResult train_student(const Checkpoint& teacher, const Dataset& occluded,
                          const TrainConfig& cfg);

// Same training as train_student from a random initialization.
TrainResult train_student_from_scratch(const Dataset& occluded, const TrainConfig& cfg);

// Eval-mode pooled features, (N, embed_dim, 1, 1).
Tensor extract_dataset_features(const CoSaliencyNet& net, const Dataset& data,
                                const PreprocessConfig& preprocess = PreprocessConfig::toy());

// Occluded probes against full-body gallery.
RetrievalResult evaluate_reid(const CoSaliencyNet& net, const Dataset& probes,
                              const Dataset& gallery, int max_rank,
                              const PreprocessConfig& preprocess = PreprocessConfig::toy());

// Builds a batch from records; train mode draws crops from rng.
Batch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                 const std::vector<int>& vocabulary, PreprocessMode mode, RandomSource& rng,
                 const PreprocessConfig& preprocess);

}  // namespace occreid
