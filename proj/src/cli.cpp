#include "occreid/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "occreid/checkpoint.hpp"
#include "occreid/datamodel.hpp"
#include "occreid/errors.hpp"
#include "occreid/evaluator.hpp"
#include "occreid/simulator.hpp"
#include "occreid/trainer.hpp"

namespace occreid {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

// Written before any work so a run can be audited even if it fails.
void echo_config(const fs::path& out_dir, const std::string& json_text) {
  fs::create_directories(out_dir);
  write_text(out_dir / "run_config.json", json_text);
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::string quoted;
  for (char c : s) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  return quoted;
}

struct TrainOverrides {
  fs::path config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr_backbone;
  std::optional<double> lr_branches;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::string> schedule;
  std::optional<int> epoch_max;
  bool allow_override = false;
};

void add_train_options(CLI::App* cmd, TrainOverrides& o) {
  cmd->add_option("--config", o.config, "JSON run config (see README)");
  cmd->add_option("--preset", o.preset, "Base preset: tiny or paper (default: config value or tiny)")
      ->check(CLI::IsMember({"tiny", "paper"}));
  cmd->add_option("--seed", o.seed, "Seed for every random stream of the run");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size");
  cmd->add_option("--lr-backbone", o.lr_backbone, "Adam learning rate for the backbone");
  cmd->add_option("--lr-branches", o.lr_branches, "Adam learning rate for both branches");
  cmd->add_option("--alpha", o.alpha, "Classification vs saliency weight");
  cmd->add_option("--beta", o.beta, "Identity vs OBC weight");
  cmd->add_option("--schedule", o.schedule, "Occlusion schedule: growing, constant_0, constant_1")
      ->check(CLI::IsMember({"growing", "constant_0", "constant_1"}));
  cmd->add_option("--epoch-max", o.epoch_max, "Schedule horizon (default: epochs)");
  cmd->add_flag("--allow-weight-override", o.allow_override,
                "Accept loss weights outside the recommended range");
}

TrainConfig resolve_train_config(const TrainOverrides& o, const fs::path& out_dir) {
  std::string text = o.config.empty() ? std::string("{}") : read_text(o.config);
  std::string preset = o.preset;
  if (preset.empty()) {
    try {
      const auto j = nlohmann::json::parse(text);
      if (j.contains("preset")) preset = j.at("preset").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (preset.empty()) preset = "tiny";
  if (preset != "tiny" && preset != "paper") throw ConfigError("config: unknown preset " + preset);
  TrainConfig c = config_from_json(text, preset == "paper" ? TrainConfig::paper() : TrainConfig::toy());
  if (!o.preset.empty() && o.preset != c.preset) {
    const TrainConfig base = o.preset == "paper" ? TrainConfig::paper() : TrainConfig::toy();
    c.preset = base.preset;
    c.stage_channels = base.stage_channels;
    c.cs_channels = base.cs_channels;
    c.preprocess = base.preprocess;
  }
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.lr_backbone) c.lr_backbone = *o.lr_backbone;
  if (o.lr_branches) c.lr_branches = *o.lr_branches;
  if (o.alpha) c.weights.alpha = *o.alpha;
  if (o.beta) c.weights.beta = *o.beta;
  if (o.schedule) c.schedule.mode = parse_schedule_mode(*o.schedule);
  if (o.epoch_max) c.schedule.epoch_max = *o.epoch_max;
  if (o.allow_override) c.allow_weight_override = true;
  c.checkpoint_dir = out_dir / "checkpoints";
  c.log_path = out_dir / "train_log.csv";
  c.validate();
  return c;
}

std::string summary_line(const TrainResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "final_loss=%.10g epochs=%zu steps=%zu", r.final_loss,
                r.epochs.size(), r.steps.size());
  return buf;
}

std::vector<fs::path> png_files(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occluded person re-identification with co-saliency teacher/student training"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // synth-data
  ToyConfig toy;
  toy.n_identities = 4;
  toy.images_per_identity = 5;
  std::uint64_t synth_seed = 0;
  std::string synth_domain = "full_body";
  std::string synth_texture = "noise";
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic person dataset");
  synth->add_option("--ids", toy.n_identities, "Number of identities")->required();
  synth->add_option("--per-id", toy.images_per_identity, "Images per identity (per kind for occluded)")
      ->required();
  synth->add_option("--size", toy.image_size, "Image side in pixels (multiple of 32)");
  synth->add_option("--offset", toy.identity_offset, "First identity label");
  synth->add_option("--palette-seed", toy.figure_palette_seed, "Seed of the appearance palette");
  synth->add_option("--texture", synth_texture, "Background: noise, gradient, checker")
      ->check(CLI::IsMember({"noise", "gradient", "checker"}));
  synth->add_option("--domain", synth_domain, "full_body or occluded")
      ->check(CLI::IsMember({"full_body", "occluded"}));
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output dataset directory")->required();

  // simulate-preview
  fs::path prev_data, prev_out, prev_config;
  std::uint64_t prev_seed = 0;
  double prev_p = 1.0;
  int prev_count = 4;
  auto* preview = app.add_subcommand("simulate-preview", "Write before/after occlusion examples");
  preview->add_option("--data", prev_data, "Full-body dataset directory")->required();
  preview->add_option("--config", prev_config, "Run config; its simulator block is used");
  preview->add_option("--p", prev_p, "Occlusion probability")->check(CLI::Range(0.0, 1.0));
  preview->add_option("--count", prev_count, "Number of records to preview")->check(CLI::PositiveNumber);
  preview->add_option("--seed", prev_seed, "Seed");
  preview->add_option("--out", prev_out, "Output directory")->required();

  // teach
  TrainOverrides teach_o;
  fs::path teach_data, teach_out;
  auto* teach = app.add_subcommand("teach", "Train the teacher on full-body data with the simulator");
  teach->add_option("--data", teach_data, "Full-body dataset directory")->required();
  teach->add_option("--out", teach_out, "Run directory")->required();
  add_train_options(teach, teach_o);

  // distill-masks
  fs::path dist_ckpt, dist_data, dist_out;
  auto* distill = app.add_subcommand("distill-masks", "Replace occluded-domain masks with teacher saliency");
  distill->add_option("--teacher", dist_ckpt, "Teacher checkpoint")->required();
  distill->add_option("--data", dist_data, "Occluded-domain dataset directory")->required();
  distill->add_option("--out", dist_out, "Output dataset directory")->required();

  // study
  TrainOverrides study_o;
  fs::path study_ckpt, study_data, study_out;
  bool from_scratch = false;
  auto* study = app.add_subcommand("study", "Fine-tune the student on the occluded domain");
  study->add_option("--teacher", study_ckpt, "Teacher checkpoint");
  study->add_option("--data", study_data, "Occluded-domain dataset with distilled masks")->required();
  study->add_option("--out", study_out, "Run directory")->required();
  study->add_flag("--from-scratch", from_scratch, "Random initialization instead of the teacher");
  add_train_options(study, study_o);

  // eval-reid
  fs::path ev_ckpt, ev_probes, ev_gallery, ev_data, ev_out;
  int ev_max_rank = 10;
  bool ev_maps = false;
  auto* eval_reid = app.add_subcommand("eval-reid", "CMC and mAP of occluded probes against a gallery");
  eval_reid->add_option("--ckpt", ev_ckpt, "Model checkpoint")->required();
  auto* probes_opt = eval_reid->add_option("--probes", ev_probes, "Probe dataset directory");
  auto* gallery_opt = eval_reid->add_option("--gallery", ev_gallery, "Gallery dataset directory");
  auto* data_opt = eval_reid->add_option("--data", ev_data,
                                         "Single dataset split into occluded probes and the rest");
  probes_opt->needs(gallery_opt);
  gallery_opt->needs(probes_opt);
  data_opt->excludes(probes_opt)->excludes(gallery_opt);
  eval_reid->add_option("--max-rank", ev_max_rank, "Longest CMC rank")->check(CLI::PositiveNumber);
  eval_reid->add_flag("--save-maps", ev_maps, "Also export probe saliency maps");
  eval_reid->add_option("--out", ev_out, "Report directory")->required();

  // eval-saliency
  fs::path es_pred, es_gt, es_out;
  double es_threshold = 0.5;
  auto* eval_sal = app.add_subcommand("eval-saliency", "Precision, recall and F-measure of saliency maps");
  eval_sal->add_option("--pred", es_pred, "Directory of predicted PNG maps")->required();
  eval_sal->add_option("--gt", es_gt, "Directory of ground-truth PNG masks (same relative names)")
      ->required();
  eval_sal->add_option("--threshold", es_threshold, "Binarization threshold")->check(CLI::Range(0.0, 1.0));
  eval_sal->add_option("--out", es_out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error kind=usage message=\"" << one_line(e.what()) << "\"\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      toy.background_texture = parse_background_texture(synth_texture);
      ordered_json echo = {{"subcommand", "synth-data"},
                           {"ids", toy.n_identities},
                           {"per_id", toy.images_per_identity},
                           {"size", toy.image_size},
                           {"offset", toy.identity_offset},
                           {"palette_seed", toy.figure_palette_seed},
                           {"texture", synth_texture},
                           {"domain", synth_domain},
                           {"seed", synth_seed},
                           {"preset", "tiny"},
                           {"out", synth_out.string()}};
      try {
        toy.validate();
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
      echo_config(synth_out, echo.dump(2));
      const Dataset ds = synth_domain == "occluded" ? generate_toy_occluded_dataset(toy, synth_seed)
                                                    : generate_toy_dataset(toy, synth_seed);
      save_dataset(ds, synth_out);
      out << "wrote " << ds.size() << " records to " << synth_out.string() << "\n";
    } else if (preview->parsed()) {
      TrainConfig c = prev_config.empty() ? TrainConfig::toy() : config_from_json(read_text(prev_config));
      c.simulator.validate();
      ordered_json echo = ordered_json::parse(config_to_json(c));
      echo["subcommand"] = "simulate-preview";
      echo["p"] = prev_p;
      echo["count"] = prev_count;
      echo["seed"] = prev_seed;
      echo["out"] = prev_out.string();
      echo_config(prev_out, echo.dump(2));
      const Dataset ds = load_dataset(prev_data, LayoutSpec{Domain::full_body});
      Dataset subset = ds;
      subset.records.resize(std::min<std::size_t>(ds.size(), static_cast<std::size_t>(prev_count)));
      const OccluderBank bank{&ds, c.simulator};
      RandomSource rng(derive_seed(prev_seed, "preview/simulator"));
      for (std::size_t i = 0; i < subset.size(); ++i) {
        const ImageRecord& before = subset.records[i];
        const ImageRecord after = rng.uniform() < prev_p
                                      ? apply_occlusion(before, sample_occluder(bank, before.height(),
                                                                                before.width(), rng),
                                                        rng)
                                      : before;
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%03zu", i);
        write_png(prev_out / (std::string(stem) + "_before.png"), before.image);
        write_png(prev_out / (std::string(stem) + "_before_mask.png"), before.mask);
        write_png(prev_out / (std::string(stem) + "_after.png"), after.image);
        write_png(prev_out / (std::string(stem) + "_after_mask.png"), after.mask);
      }
      out << "wrote " << subset.size() << " preview pairs to " << prev_out.string() << "\n";
    } else if (teach->parsed()) {
      const TrainConfig c = resolve_train_config(teach_o, teach_out);
      echo_config(teach_out, config_to_json(c));
      const Dataset ds = load_dataset(teach_data, LayoutSpec{Domain::full_body});
      const TrainResult r = train_teacher(ds, c);
      save_checkpoint(r.checkpoint, teach_out / "teacher.ckpt");
      out << summary_line(r) << "\n";
    } else if (distill->parsed()) {
      ordered_json echo = {{"subcommand", "distill-masks"},
                           {"teacher", dist_ckpt.string()},
                           {"data", dist_data.string()},
                           {"out", dist_out.string()}};
      echo_config(dist_out, echo.dump(2));
      const Checkpoint teacher = load_checkpoint(dist_ckpt);
      const Dataset ds = load_dataset(dist_data, LayoutSpec{Domain::occluded});
      const int s = teacher.network.input_size;
      const PreprocessConfig pre = s == 224 ? PreprocessConfig::paper() : PreprocessConfig{s + s / 8, s};
      save_dataset(distill_masks(teacher, ds, pre), dist_out);
      out << "distilled " << ds.size() << " masks into " << dist_out.string() << "\n";
    } else if (study->parsed()) {
      if (!from_scratch && study_ckpt.empty())
        throw ConfigError("study: --teacher is required unless --from-scratch is given");
      const TrainConfig c = resolve_train_config(study_o, study_out);
      ordered_json echo = ordered_json::parse(config_to_json(c));
      echo["teacher"] = from_scratch ? std::string() : study_ckpt.string();
      echo["from_scratch"] = from_scratch;
      echo_config(study_out, echo.dump(2));
      const Dataset ds = load_dataset(study_data, LayoutSpec{Domain::occluded});
      const TrainResult r = from_scratch ? train_student_from_scratch(ds, c)
                                         : train_student(load_checkpoint(study_ckpt), ds, c);
      save_checkpoint(r.checkpoint, study_out / "student.ckpt");
      out << summary_line(r) << "\n";
    } else if (eval_reid->parsed()) {
      if (ev_data.empty() && ev_probes.empty())
        throw ConfigError("eval-reid: give --data or both --probes and --gallery");
      ordered_json echo = {{"subcommand", "eval-reid"},
                           {"ckpt", ev_ckpt.string()},
                           {"probes", ev_probes.string()},
                           {"gallery", ev_gallery.string()},
                           {"data", ev_data.string()},
                           {"max_rank", ev_max_rank},
                           {"save_maps", ev_maps},
                           {"out", ev_out.string()}};
      echo_config(ev_out, echo.dump(2));
      const Checkpoint ckpt = load_checkpoint(ev_ckpt);
      const CoSaliencyNet net = restore_network(ckpt);
      Dataset probes, gallery;
      if (!ev_data.empty()) {
        ProbeGallerySplit split = split_probe_gallery(load_dataset(ev_data, LayoutSpec{Domain::occluded}));
        probes = std::move(split.probes);
        gallery = std::move(split.gallery);
      } else {
        probes = load_dataset(ev_probes, LayoutSpec{Domain::occluded});
        gallery = load_dataset(ev_gallery, LayoutSpec{Domain::full_body});
      }
      const int s = ckpt.network.input_size;
      const PreprocessConfig pre = s == 224 ? PreprocessConfig::paper() : PreprocessConfig{s + s / 8, s};
      EvaluationReport report;
      report.retrieval = evaluate_reid(net, probes, gallery, ev_max_rank, pre);
      if (ev_maps) {
        const Checkpoint& teacher_like = ckpt;
        const Dataset maps = distill_masks(teacher_like, probes, pre);
        for (std::size_t i = 0; i < maps.size(); ++i) {
          char name[32];
          std::snprintf(name, sizeof(name), "%05zu", i);
          report.saliency_maps.emplace_back(name, maps.records[i].mask);
        }
      }
      emit_report(report, ev_out);
      const auto& cmc_curve = report.retrieval->cmc;
      out << "rank1=" << (cmc_curve.empty() ? 0.0 : cmc_curve[0]) << " map=" << report.retrieval->map << "\n";
    } else if (eval_sal->parsed()) {
      ordered_json echo = {{"subcommand", "eval-saliency"},
                           {"pred", es_pred.string()},
                           {"gt", es_gt.string()},
                           {"threshold", es_threshold},
                           {"out", es_out.string()}};
      echo_config(es_out, echo.dump(2));
      std::vector<Raster> pred, gt;
      for (const auto& rel : png_files(es_gt)) {
        if (!fs::exists(es_pred / rel)) throw IoError("missing prediction for " + rel.string());
        gt.push_back(read_png_gray(es_gt / rel));
        pred.push_back(read_png_gray(es_pred / rel));
        if (!pred.back().same_size(gt.back())) pred.back() = resize_bilinear(pred.back(), gt.back().height, gt.back().width);
      }
      if (gt.empty()) throw EvaluationSetupError("eval-saliency: no ground-truth PNGs in " + es_gt.string());
      EvaluationReport report;
      report.saliency = saliency_metrics(pred, gt, es_threshold);
      emit_report(report, es_out);
      out << "precision=" << report.saliency->precision << " recall=" << report.saliency->recall
          << " f_measure=" << report.saliency->f_measure << "\n";
    }
  } catch (const ConfigError& e) {
    err << "error kind=" << e.kind() << " message=\"" << one_line(e.what()) << "\"\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error kind=" << e.kind() << " message=\"" << one_line(e.what()) << "\"\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error kind=internal message=\"" << one_line(e.what()) << "\"\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace occreid
