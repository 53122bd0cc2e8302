// SPDX-License-Identifier: Apache-2.0
//
// reprforge CLI: train / eval / gen-data / explain.
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reprforge/checkpoint.hpp"
#include "reprforge/config.hpp"
#include "reprforge/dataset.hpp"
#include "reprforge/errors.hpp"
#include "reprforge/gradcam.hpp"
#include "reprforge/image_io.hpp"
#include "reprforge/logging.hpp"
#include "reprforge/metrics_log.hpp"
#include "reprforge/trainer.hpp"

namespace fs = std::filesystem;
using namespace reprforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int run_train(const std::string& config_path, const std::string& resume_path,
              const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path);
  Checkpoint resume;
  TrainOptions opts;
  opts.out_dir = out_dir;
  if (!resume_path.empty()) {
    if (!fs::exists(resume_path)) {
      log_error("train: resume checkpoint not found: " + resume_path);
      return kExitUsage;
    }
    resume = load_checkpoint(resume_path);
    opts.resume = &resume;
  }
  const TrainOutput out = train_run(cfg, opts);
  log_info("wrote " + (fs::path(out_dir) / "final.ckpt").string() + " and " +
           (fs::path(out_dir) / "metrics.jsonl").string());
  for (const auto& rec : out.records)
    if (rec.split == "val") std::cout << metric_record_line(rec) << "\n";
  return kExitOk;
}

int run_eval(const std::string& config_path, const std::string& ckpt_path,
             const std::string& split) {
  if (!fs::exists(ckpt_path)) {
    log_error("eval: checkpoint not found: " + ckpt_path);
    return kExitUsage;
  }
  const RunConfig cfg = load_config(config_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  for (const auto& rec : evaluate(cfg, ckpt, split))
    std::cout << metric_record_line(rec) << "\n";
  return kExitOk;
}

int run_gendata(const std::string& spec_path, const std::string& out_dir) {
  const GenDataSpec spec = load_gendata_spec(spec_path);
  const Dataset full = generate(spec.synthetic);
  const auto [train, val] = full.split(spec.val_fraction, spec.synthetic.seed);
  fs::create_directories(out_dir);
  save_dataset(train, (fs::path(out_dir) / "train.dord").string());
  save_dataset(val, (fs::path(out_dir) / "val.dord").string());
  log_info("wrote " + std::to_string(train.size()) + " train / " + std::to_string(val.size()) +
           " val samples to " + out_dir);
  return kExitOk;
}

int run_explain(const std::string& ckpt_path, const std::string& input_path, int target_class,
                const std::string& out_path) {
  if (!fs::exists(ckpt_path)) {
    log_error("explain: checkpoint not found: " + ckpt_path);
    return kExitUsage;
  }
  if (!fs::exists(input_path)) {
    log_error("explain: input image not found: " + input_path);
    return kExitUsage;
  }
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RunConfig cfg = parse_config(ckpt.config_yaml);
  const ModelParams params = params_from_checkpoint(ckpt);

  const ImageU8 png = read_png(input_path);
  if (png.channels != cfg.model.in_channels || png.height != cfg.model.in_height ||
      png.width != cfg.model.in_width) {
    log_error("explain: image is " + std::to_string(png.channels) + "x" +
              std::to_string(png.height) + "x" + std::to_string(png.width) +
              ", model expects " + std::to_string(cfg.model.in_channels) + "x" +
              std::to_string(cfg.model.in_height) + "x" + std::to_string(cfg.model.in_width));
    return kExitUsage;
  }
  const Tensor image = Tensor::from_data({png.channels, png.height, png.width}, to_chw(png));

  if (target_class < 0) {
    // default to the predicted class
    Tensor x = reshape(image.detached_copy(),
                       {1, cfg.model.in_channels, cfg.model.in_height, cfg.model.in_width});
    Tensor z = encode(cfg.model, params, x);
    Tensor logits = params.head.count("bias") ? classify(params, z) : cosine_logits(params, z);
    const auto v = logits.values();
    target_class = 0;
    for (int c = 1; c < logits.dim(1); ++c)
      if (v[static_cast<std::size_t>(c)] > v[static_cast<std::size_t>(target_class)])
        target_class = c;
    log_info("explain: using predicted class " + std::to_string(target_class));
  }

  const Heatmap hm = gradcam(cfg, params, image, target_class);
  render_heatmap(hm, image, out_path);
  log_info("wrote " + out_path);
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"reprforge: config-driven representation learning engine"};
  app.require_subcommand(1);

  std::string config_path, resume_path, out_dir = "run", ckpt_path, split = "val";
  std::string spec_path, data_out, input_path, explain_out = "heatmap.png";
  int target_class = -1;

  auto* train = app.add_subcommand("train", "Train a model from a YAML config");
  train->add_option("--config", config_path, "run config YAML")->required();
  train->add_option("--resume", resume_path, "checkpoint to resume from");
  train->add_option("--out", out_dir, "output directory (checkpoint + metrics log)");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--config", config_path, "run config YAML")->required();
  eval->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  eval->add_option("--split", split, "train or val");

  auto* gendata = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gendata->add_option("--spec", spec_path, "synthetic spec YAML")->required();
  gendata->add_option("--out", data_out, "output directory")->required();

  auto* explain = app.add_subcommand("explain", "Write a Grad-CAM heatmap PNG");
  explain->add_option("--checkpoint", ckpt_path, "checkpoint path")->required();
  explain->add_option("--input", input_path, "input PNG image")->required();
  explain->add_option("--class", target_class, "target class id (default: predicted)");
  explain->add_option("--out", explain_out, "output PNG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(train)) return run_train(config_path, resume_path, out_dir);
    if (app.got_subcommand(eval)) return run_eval(config_path, ckpt_path, split);
    if (app.got_subcommand(gendata)) return run_gendata(spec_path, data_out);
    if (app.got_subcommand(explain))
      return run_explain(ckpt_path, input_path, target_class, explain_out);
  } catch (const ParseError& e) {
    log_error(e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    log_error(e.what());
    return kExitUsage;
  } catch (const Error& e) {
    log_error(e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    log_error(e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
