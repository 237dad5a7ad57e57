// Command-line driver: dataset synthesis, training, the hyper-parameter
// sweep, evaluation against baselines, and online adaptation. Every command
// honors --seed, writes a run manifest, and puts outputs only under --out.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "foresee/foresee.hpp"

namespace fs = std::filesystem;
using namespace foresee;

namespace {

constexpr ImageDims kDims{32, 32, 3};

void ensure_out_dir(const std::string& out, bool force, bool refuse_nonempty) {
  if (fs::exists(out) && refuse_nonempty && !force && !fs::is_empty(out))
    throw ContractError(out + " exists and is not empty (use --force to overwrite)");
  fs::create_directories(out);
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

AttnPlacement parse_placement(const std::string& s) {
  if (s == "output") return AttnPlacement::Output;
  if (s == "hidden") return AttnPlacement::Hidden;
  throw ContractError("unknown attention placement '" + s + "'");
}

AttnSteps parse_steps(const std::string& s) {
  if (s == "last") return AttnSteps::Last;
  if (s == "all") return AttnSteps::All;
  throw ContractError("unknown attention steps mode '" + s + "'");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "adagrad") return OptimizerKind::Adagrad;
  throw ContractError("unknown optimizer '" + s + "'");
}

TrainVariant parse_variant(const std::string& s) {
  if (s == "mm1") return TrainVariant::MM1;
  if (s == "mm2") return TrainVariant::MM2;
  throw ContractError("unknown training variant '" + s + "'");
}

BackgroundMode parse_background(const std::string& s, const std::string& where) {
  if (s == "solid") return BackgroundMode::Solid;
  if (s == "gradient") return BackgroundMode::Gradient;
  if (s == "textured") return BackgroundMode::Textured;
  throw FormatError(where + ": unknown background mode '" + s + "'");
}

SyntheticSceneConfig synth_config_from_file(const std::string& path) {
  SyntheticSceneConfig cfg;
  if (path.empty()) return cfg;
  const KvFile kv = parse_kv_file(path);
  cfg.num_videos = static_cast<int>(kv.get_int("num_videos", cfg.num_videos));
  cfg.frames_per_video = static_cast<int>(kv.get_int("frames_per_video", cfg.frames_per_video));
  cfg.num_sprites = static_cast<int>(kv.get_int("num_sprites", cfg.num_sprites));
  cfg.sprite_min_size = kv.get_real("sprite_min_size", cfg.sprite_min_size);
  cfg.sprite_max_size = kv.get_real("sprite_max_size", cfg.sprite_max_size);
  cfg.speed_min = kv.get_real("speed_min", cfg.speed_min);
  cfg.speed_max = kv.get_real("speed_max", cfg.speed_max);
  cfg.direction_change_probability =
      kv.get_real("direction_change_probability", cfg.direction_change_probability);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(cfg.seed)));
  cfg.fps = kv.get_real("fps", cfg.fps);
  if (const auto* e = kv.find("background"))
    cfg.background = parse_background(e->value, path + ":" + std::to_string(e->line));
  cfg.split_ratios[0] = kv.get_real("split_train", cfg.split_ratios[0]);
  cfg.split_ratios[1] = kv.get_real("split_val", cfg.split_ratios[1]);
  cfg.split_ratios[2] = kv.get_real("split_test", cfg.split_ratios[2]);
  return cfg;
}

struct CommonFlags {
  std::string dataset;
  std::string out;
  std::uint64_t seed = 0;
  double gamma = 0.45;
};

PipelineOptions pipeline_options(const CommonFlags& flags) {
  PipelineOptions opts;
  opts.gamma = flags.gamma;
  opts.target_height = kDims.height;
  opts.target_width = kDims.width;
  return opts;
}

void manifest_train_config(RunManifest& man, const TrainConfig& cfg) {
  man.set("variant", to_string(cfg.variant));
  man.set("optimizer", to_string(cfg.optimizer));
  man.set("lr", cfg.learning_rate);
  man.set("epochs", static_cast<long>(cfg.epochs));
  man.set("seed", static_cast<long>(cfg.seed));
  man.set("horizon", static_cast<long>(cfg.rollout_horizon));
  man.set("val_interval", static_cast<long>(cfg.val_interval));
  man.set("max_steps", static_cast<long>(cfg.max_windows_per_epoch));
  man.set("online_window", static_cast<long>(cfg.online_window_frames));
  man.set("online_epochs", static_cast<long>(cfg.online_epochs));
  man.set("input_averaging", cfg.online_input_averaging ? "on" : "off");
}

void manifest_model_config(RunManifest& man, const ModelConfig& cfg) {
  man.set("input_dim", static_cast<long>(cfg.input_dim));
  man.set("hidden", static_cast<long>(cfg.hidden_size));
  man.set("layers", static_cast<long>(cfg.num_layers));
  man.set("seq_len", static_cast<long>(cfg.seq_len));
  man.set("attn_placement", to_string(cfg.attn_placement));
  man.set("attn_steps", to_string(cfg.attn_steps));
  man.set("literal_attn_exp", cfg.literal_attn_exp ? "1" : "0");
}

// --- synth ------------------------------------------------------------------

int cmd_synth(const std::string& config_path, const CommonFlags& flags, bool force,
              bool seed_given) {
  SyntheticSceneConfig cfg = synth_config_from_file(config_path);
  if (seed_given) cfg.seed = flags.seed;
  cfg.validate();
  ensure_out_dir(flags.out, force, /*refuse_nonempty=*/true);

  RunManifest man(flags.out + "/manifest.txt", "synth");
  man.set("config_file", config_path.empty() ? "<defaults>" : config_path);
  man.set("num_videos", static_cast<long>(cfg.num_videos));
  man.set("frames_per_video", static_cast<long>(cfg.frames_per_video));
  man.set("num_sprites", static_cast<long>(cfg.num_sprites));
  man.set("sprite_min_size", cfg.sprite_min_size);
  man.set("sprite_max_size", cfg.sprite_max_size);
  man.set("speed_min", cfg.speed_min);
  man.set("speed_max", cfg.speed_max);
  man.set("direction_change_probability", cfg.direction_change_probability);
  man.set("background", to_string(cfg.background));
  man.set("seed", static_cast<long>(cfg.seed));
  man.set("split_train", cfg.split_ratios[0]);
  man.set("split_val", cfg.split_ratios[1]);
  man.set("split_test", cfg.split_ratios[2]);
  man.set("out", flags.out);
  man.write_running();

  const auto videos = generate_synthetic_dataset<float>(cfg);
  const DatasetSplit<float> split =
      split_dataset(videos, cfg.split_ratios, derive_seed(cfg.seed, 0xdadaULL));

  std::vector<std::pair<std::string, const FrameSequence<float>*>> assignment;
  for (const auto& v : split.train) assignment.emplace_back("train", &v);
  for (const auto& v : split.val) assignment.emplace_back("val", &v);
  for (const auto& v : split.test) assignment.emplace_back("test", &v);
  save_dataset(flags.out, assignment, kDims.height, kDims.width, kDims.channels);

  man.set("videos_written", static_cast<long>(videos.size()));
  man.finalize();
  std::cout << "wrote " << videos.size() << " videos (" << split.train.size() << " train, "
            << split.val.size() << " val, " << split.test.size() << " test) to " << flags.out
            << "\n";
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainFlags {
  std::string arch = "foresee";
  ModelConfig model;
  TrainConfig train;
  bool hidden_given = false;
};

int cmd_train(const CommonFlags& flags, TrainFlags& tf) {
  if (tf.arch == "encdec" && !tf.hidden_given) tf.model.hidden_size = 1024;
  tf.model.validate();
  tf.train.validate();
  ensure_out_dir(flags.out, /*force=*/true, /*refuse_nonempty=*/false);

  RunManifest man(flags.out + "/manifest.txt", "train");
  man.set("dataset", flags.dataset);
  man.set("arch", tf.arch);
  man.set("gamma", flags.gamma);
  manifest_model_config(man, tf.model);
  manifest_train_config(man, tf.train);
  man.set("out", flags.out);
  man.write_running();

  const DatasetSplit<float> data = load_dataset<float>(flags.dataset, pipeline_options(flags));
  if (data.train.empty()) throw ContractError(flags.dataset + ": dataset has no training videos");

  TrainResult result;
  const std::string ckpt_path = flags.out + "/checkpoint.bin";
  if (tf.arch == "foresee") {
    ForeseeModel<float> model(tf.model, tf.train.seed);
    result = train(model, data.train, data.val, tf.train);
    save_checkpoint(model, ckpt_path);
  } else if (tf.arch == "encdec") {
    EncDecLstm<float> model(tf.model, tf.train.seed);
    result = train(model, data.train, data.val, tf.train);
    save_checkpoint(model, ckpt_path);
  } else {
    throw ContractError("unknown --arch '" + tf.arch + "' (expected foresee or encdec)");
  }

  write_loss_history_csv(flags.out + "/loss_history.csv", result.history);
  man.set("checkpoint_sha1", file_content_hash(ckpt_path));
  man.set("final_train_mse", result.final_train_mse);
  if (result.has_val) man.set("final_val_mse", result.final_val_mse);
  man.finalize();

  std::cout << "trained " << tf.arch << " for " << result.history.size()
            << " steps; final train mse " << fmt_real(result.final_train_mse);
  if (result.has_val) std::cout << ", val mse " << fmt_real(result.final_val_mse);
  std::cout << "\ncheckpoint: " << ckpt_path << "\n";
  return 0;
}

// --- sweep ------------------------------------------------------------------

int cmd_sweep(const CommonFlags& flags, const TrainFlags& tf, bool full, int cell_windows) {
  ensure_out_dir(flags.out, true, false);

  RunManifest man(flags.out + "/manifest.txt", "sweep");
  man.set("dataset", flags.dataset);
  man.set("gamma", flags.gamma);
  man.set("seed", static_cast<long>(tf.train.seed));
  man.set("full", full ? "1" : "0");
  man.set("cell_windows", static_cast<long>(cell_windows));
  man.set("epochs", static_cast<long>(tf.train.epochs));
  man.set("out", flags.out);
  man.write_running();

  const DatasetSplit<float> data = load_dataset<float>(flags.dataset, pipeline_options(flags));

  const std::vector<std::pair<int, int>> shapes = {{10, 512}, {20, 512}, {10, 1024}, {20, 1024}};
  const std::vector<AttnPlacement> placements = {AttnPlacement::Hidden, AttnPlacement::Output};
  const std::vector<AttnSteps> step_modes = {AttnSteps::Last, AttnSteps::All};

  std::ofstream csv(flags.out + "/sweep.csv", std::ios::trunc);
  if (!csv) throw FormatError(flags.out + "/sweep.csv: cannot write");
  csv << "seq_len,hidden,attn_placement,attn_steps,val_mse,status\n";

  std::uint64_t cell_index = 0;
  for (const auto& [seq_len, hidden] : shapes) {
    for (const auto placement : placements) {
      for (const auto steps : step_modes) {
        ModelConfig mc = tf.model;
        mc.seq_len = seq_len;
        mc.hidden_size = hidden;
        mc.attn_placement = placement;
        mc.attn_steps = steps;

        TrainConfig tc = tf.train;
        tc.seed = derive_seed(tf.train.seed, 0xce11ULL + cell_index);
        if (!full) {
          tc.epochs = 1;
          tc.max_windows_per_epoch = cell_windows;
          tc.max_val_windows = std::max(1, cell_windows / 2);
        }
        ++cell_index;

        std::string status = "ok";
        std::string value;
        const bool trainable =
            !detail::collect_windows(data.train, seq_len, 1).empty() &&
            !data.val.empty() && !detail::collect_windows(data.val, seq_len, 1).empty();
        if (!trainable) {
          status = "skipped";
        } else {
          ForeseeModel<float> model(mc, tc.seed);
          train_mm2(model, data.train, {}, tc);
          value = fmt_real(validation_mse(model, data.val, tc.max_val_windows));
        }
        csv << seq_len << "," << hidden << "," << to_string(placement) << ","
            << to_string(steps) << "," << value << "," << status << "\n";
        csv.flush();
        std::cout << "cell seq=" << seq_len << " hidden=" << hidden << " "
                  << to_string(placement) << "/" << to_string(steps) << ": "
                  << (status == "ok" ? value : status) << "\n";
      }
    }
  }
  man.finalize();
  std::cout << "sweep written to " << flags.out << "/sweep.csv\n";
  return 0;
}

// --- eval -------------------------------------------------------------------

void write_montage_for(const std::string& path, const RolloutFn<float>& fn,
                       const std::vector<FrameSequence<float>>& videos, int seq_len, int cols) {
  const FrameSequence<float>* pick = nullptr;
  for (const auto& v : videos)
    if (window_count(v.size(), seq_len, 1) > 0) {
      pick = &v;
      break;
    }
  if (!pick) return;
  std::vector<Tensor<float>> targets, predictions;
  const std::size_t n = std::min<std::size_t>(window_count(pick->size(), seq_len, 1),
                                              static_cast<std::size_t>(cols));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Tensor<float>> window(pick->frames.begin() + i,
                                      pick->frames.begin() + i + seq_len);
    targets.push_back(pick->frames[i + seq_len]);
    predictions.push_back(fn(window, 1)[0]);
  }
  save_png(path, build_montage<float>({targets, predictions}, kDims, cols));
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint,
             const std::string& encdec_checkpoint, int horizon, bool baselines,
             int montage_cols) {
  ensure_out_dir(flags.out, true, false);

  RunManifest man(flags.out + "/manifest.txt", "eval");
  man.set("dataset", flags.dataset);
  man.set("checkpoint", checkpoint);
  man.set("checkpoint_sha1", file_content_hash(checkpoint));
  if (!encdec_checkpoint.empty()) {
    man.set("encdec_checkpoint", encdec_checkpoint);
    man.set("encdec_checkpoint_sha1", file_content_hash(encdec_checkpoint));
  }
  man.set("gamma", flags.gamma);
  man.set("horizon", static_cast<long>(horizon));
  man.set("baselines", baselines ? "1" : "0");
  man.set("seed", static_cast<long>(flags.seed));
  man.set("out", flags.out);
  man.write_running();

  const ForeseeModel<float> model = load_foresee_checkpoint<float>(checkpoint);
  const int seq_len = model.config().seq_len;
  const DatasetSplit<float> data = load_dataset<float>(flags.dataset, pipeline_options(flags));
  if (data.test.empty()) throw ContractError(flags.dataset + ": dataset has no test videos");

  std::vector<std::pair<std::string, MetricsReport>> reports;
  reports.emplace_back("foresee",
                       evaluate(model_rollout_fn(model), data.test, seq_len, horizon, kDims));
  write_montage_for(flags.out + "/montage_foresee.png", model_rollout_fn(model), data.test,
                    seq_len, montage_cols);

  if (baselines) {
    reports.emplace_back("copy_last", evaluate(copy_last_rollout_fn<float>(), data.test, seq_len,
                                               horizon, kDims));
    write_montage_for(flags.out + "/montage_copy_last.png", copy_last_rollout_fn<float>(),
                      data.test, seq_len, montage_cols);
    if (!encdec_checkpoint.empty()) {
      const EncDecLstm<float> lstm = load_encdec_checkpoint<float>(encdec_checkpoint);
      if (lstm.config().seq_len != seq_len)
        throw ContractError("encdec checkpoint seq_len differs from foresee checkpoint");
      reports.emplace_back("encdec_lstm",
                           evaluate(model_rollout_fn(lstm), data.test, seq_len, horizon, kDims));
      write_montage_for(flags.out + "/montage_encdec_lstm.png", model_rollout_fn(lstm),
                        data.test, seq_len, montage_cols);
    }
  }

  write_report_csv(flags.out + "/report.csv", reports);
  write_per_video_csv(flags.out + "/report_per_video.csv", reports);
  man.set("windows", reports.front().second.windows());
  man.finalize();

  for (const auto& [approach, report] : reports)
    for (const auto& row : report.overall)
      std::cout << approach << " horizon " << row.horizon << ": mse " << fmt_real(row.mse)
                << ", ssim " << fmt_real(row.ssim_x100) << " (x100), windows " << row.windows
                << "\n";
  return 0;
}

// --- online -----------------------------------------------------------------

int cmd_online(const CommonFlags& flags, const std::string& checkpoint, TrainFlags& tf,
               int stride, int montage_cols) {
  ensure_out_dir(flags.out, true, false);

  RunManifest man(flags.out + "/manifest.txt", "online");
  man.set("dataset", flags.dataset);
  man.set("checkpoint", checkpoint);
  man.set("checkpoint_sha1", file_content_hash(checkpoint));
  man.set("gamma", flags.gamma);
  man.set("stride", static_cast<long>(stride));
  manifest_train_config(man, tf.train);
  man.set("out", flags.out);
  man.write_running();

  const ForeseeModel<float> base = load_foresee_checkpoint<float>(checkpoint);
  const DatasetSplit<float> data = load_dataset<float>(flags.dataset, pipeline_options(flags));
  if (data.test.empty()) throw ContractError(flags.dataset + ": dataset has no test videos");

  const int horizon = tf.train.rollout_horizon;
  std::ofstream csv(flags.out + "/online.csv", std::ios::trunc);
  if (!csv) throw FormatError(flags.out + "/online.csv: cannot write");
  csv << "video,horizon,eval_points,frozen_mse,online_mse,frozen_ssim_x100,online_ssim_x100\n";

  std::vector<KahanSum> fm(horizon), om(horizon), fs(horizon), os(horizon);
  long total_points = 0;
  for (const auto& video : data.test) {
    OnlineFirstPoint<float> first;
    const OnlineVideoReport report =
        online_adapt_and_project(base, video, tf.train, kDims, stride, &first);
    for (int h = 0; h < horizon; ++h) {
      csv << report.video << "," << h + 1 << "," << report.eval_points << ","
          << fmt_real(report.frozen_mse[h]) << "," << fmt_real(report.online_mse[h]) << ","
          << fmt_real(report.frozen_ssim_x100[h]) << ","
          << fmt_real(report.online_ssim_x100[h]) << "\n";
      fm[h].add(report.frozen_mse[h] * report.eval_points);
      om[h].add(report.online_mse[h] * report.eval_points);
      fs[h].add(report.frozen_ssim_x100[h] * report.eval_points);
      os[h].add(report.online_ssim_x100[h] * report.eval_points);
    }
    total_points += report.eval_points;
    save_png(flags.out + "/montage_online_" + report.video + ".png",
             build_montage<float>({first.target, first.frozen, first.online}, kDims,
                                  montage_cols));
  }
  for (int h = 0; h < horizon; ++h) {
    csv << "ALL," << h + 1 << "," << total_points << "," << fmt_real(fm[h].sum / total_points)
        << "," << fmt_real(om[h].sum / total_points) << ","
        << fmt_real(fs[h].sum / total_points) << "," << fmt_real(os[h].sum / total_points)
        << "\n";
    std::cout << "horizon " << h + 1 << ": frozen mse " << fmt_real(fm[h].sum / total_points)
              << ", online mse " << fmt_real(om[h].sum / total_points) << "\n";
  }
  man.set("eval_points", total_points);
  man.finalize();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent video-prediction experiments (GRU + attention)"};
  app.require_subcommand(1);

  CommonFlags flags;
  TrainFlags tf;
  std::string synth_config, checkpoint, encdec_checkpoint;
  std::string optimizer = "adam", variant = "mm2", placement = "output", steps = "all";
  std::string input_averaging = "on";
  bool force = false, full = false, baselines = true;
  int horizon = 1, stride = 1, montage_cols = 8, cell_windows = 120;
  double lr = 1e-3;
  long epochs = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_dataset) {
    if (needs_dataset)
      cmd->add_option("--dataset", flags.dataset, "Dataset root directory")->required();
    cmd->add_option("--out", flags.out, "Output directory")->required();
    cmd->add_option("--seed", flags.seed, "Random seed");
    cmd->add_option("--gamma", flags.gamma, "Gamma correction applied when loading frames");
  };

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--hidden", tf.model.hidden_size, "GRU hidden state size");
    cmd->add_option("--layers", tf.model.num_layers, "Number of stacked recurrent layers");
    cmd->add_option("--seq-len", tf.model.seq_len, "Input window length in frames");
    cmd->add_option("--attn-placement", placement, "Attention placement: output|hidden");
    cmd->add_option("--attn-steps", steps, "Attention steps: last|all");
    cmd->add_flag("--literal-attn-exp", tf.model.literal_attn_exp,
                  "Use the literal softmax(exp(e)) attention composition");
  };

  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--optimizer", optimizer, "Optimizer: adam|adagrad");
    cmd->add_option("--variant", variant, "Training variant: mm1|mm2");
    cmd->add_option("--horizon", tf.train.rollout_horizon,
                    "Decode/rollout horizon (MM-1 training, online projection)");
    cmd->add_option("--val-interval", tf.train.val_interval,
                    "Optimizer steps between validation evaluations (0 = end only)");
    cmd->add_option("--max-steps", tf.train.max_windows_per_epoch,
                    "Cap on windows per epoch (0 = all)");
    cmd->add_option("--val-windows", tf.train.max_val_windows,
                    "Cap on validation windows (0 = all)");
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic sprite dataset");
  synth->add_option("--config", synth_config, "Flat key=value scene config file");
  add_common(synth, false);
  synth->add_flag("--force", force, "Overwrite an existing non-empty output directory");

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train_cmd, true);
  train_cmd->add_option("--arch", tf.arch, "Architecture: foresee|encdec");
  add_model_flags(train_cmd);
  add_train_flags(train_cmd);

  CLI::App* sweep = app.add_subcommand("sweep", "Run the hyper-parameter/attention grid");
  add_common(sweep, true);
  add_train_flags(sweep);
  sweep->add_flag("--full", full, "Full-fidelity cells instead of reduced epochs");
  sweep->add_option("--cell-windows", cell_windows,
                    "Windows per epoch for reduced cells (default 120)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against baselines");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "Foresee checkpoint path")->required();
  eval_cmd->add_option("--encdec-checkpoint", encdec_checkpoint,
                       "Optional Enc-Dec LSTM baseline checkpoint");
  eval_cmd->add_option("--horizon", horizon, "Rollout horizon to score");
  eval_cmd->add_flag("--baselines,!--no-baselines", baselines,
                     "Also score copy-last-frame (and Enc-Dec LSTM when given)");
  eval_cmd->add_option("--montage-cols", montage_cols, "Frames per montage row");

  CLI::App* online = app.add_subcommand("online", "Online adaptation vs frozen model");
  add_common(online, true);
  online->add_option("--checkpoint", checkpoint, "Base Foresee checkpoint path")->required();
  online->add_option("--lr", lr, "Online learning rate");
  online->add_option("--optimizer", optimizer, "Optimizer: adam|adagrad");
  online->add_option("--horizon", tf.train.rollout_horizon, "Projection horizon");
  online->add_option("--online-epochs", tf.train.online_epochs,
                     "Training passes per evaluation time");
  online->add_option("--online-window", tf.train.online_window_frames,
                     "Trailing window length in frames");
  online->add_option("--input-averaging", input_averaging,
                     "Average each GRU input with the previous frame: on|off");
  online->add_option("--stride", stride, "Evaluate every Nth time step");
  online->add_option("--montage-cols", montage_cols, "Frames per montage row");

  try {
    app.parse(argc, argv);

    tf.train.learning_rate = lr;
    tf.train.epochs = static_cast<int>(epochs);
    tf.train.seed = flags.seed;
    tf.train.optimizer = parse_optimizer(optimizer);
    tf.train.variant = parse_variant(variant);
    tf.train.online_input_averaging = [&] {
      if (input_averaging == "on") return true;
      if (input_averaging == "off") return false;
      throw ContractError("--input-averaging expects on|off, got '" + input_averaging + "'");
    }();
    tf.model.attn_placement = parse_placement(placement);
    tf.model.attn_steps = parse_steps(steps);
    tf.hidden_given = train_cmd->count("--hidden") > 0;

    if (synth->parsed()) return cmd_synth(synth_config, flags, force, synth->count("--seed") > 0);
    if (train_cmd->parsed()) return cmd_train(flags, tf);
    if (sweep->parsed()) return cmd_sweep(flags, tf, full, cell_windows);
    if (eval_cmd->parsed())
      return cmd_eval(flags, checkpoint, encdec_checkpoint, horizon, baselines, montage_cols);
    if (online->parsed()) return cmd_online(flags, checkpoint, tf, stride, montage_cols);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
