// SPDX-License-Identifier: Apache-2.0
#include "reprforge/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "reprforge/errors.hpp"

namespace reprforge {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

void reject_unknown_keys(const YAML::Node& node, const std::string& path,
                         const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

template <typename T>
T get_as(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, "invalid value");
  }
}

template <typename T>
void read_field(const YAML::Node& node, const char* key, const std::string& path, T& out) {
  if (node[key]) out = get_as<T>(node[key], path + "." + key);
}

std::vector<int> read_int_list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) fail(path, "expected a list");
  std::vector<int> out;
  for (const auto& item : node) out.push_back(get_as<int>(item, path));
  return out;
}

bool parse_model(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "model", {"encoder", "input", "hidden", "embed_dim", "classes"});
  if (node["encoder"]) {
    const std::string kind = get_as<std::string>(node["encoder"], "model.encoder");
    if (kind == "mlp") {
      cfg.model.kind = EncoderKind::kMlp;
    } else if (kind == "cnn") {
      cfg.model.kind = EncoderKind::kCnn;
    } else {
      fail("model.encoder", "must be 'mlp' or 'cnn'");
    }
  }
  if (node["input"]) {
    const auto dims = read_int_list(node["input"], "model.input");
    if (dims.size() != 3) fail("model.input", "expected [channels, height, width]");
    cfg.model.in_channels = dims[0];
    cfg.model.in_height = dims[1];
    cfg.model.in_width = dims[2];
  }
  if (node["hidden"]) cfg.model.hidden = read_int_list(node["hidden"], "model.hidden");
  read_field(node, "embed_dim", "model", cfg.model.embed_dim);
  read_field(node, "classes", "model", cfg.model_classes);
  return static_cast<bool>(node["input"]);
}

void parse_loss(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "loss",
                      {"name", "eps_smooth", "gamma", "margin", "s", "m", "circle_m",
                       "circle_gamma", "mag_bounds", "mag_lambda_g", "ohem_ratio"});
  if (node["name"])
    cfg.loss.name = loss_kind_from_name(get_as<std::string>(node["name"], "loss.name"));
  read_field(node, "eps_smooth", "loss", cfg.loss.eps_smooth);
  read_field(node, "gamma", "loss", cfg.loss.gamma);
  read_field(node, "margin", "loss", cfg.loss.margin);
  read_field(node, "s", "loss", cfg.loss.scale);
  read_field(node, "m", "loss", cfg.loss.angular_margin);
  read_field(node, "circle_m", "loss", cfg.loss.circle_m);
  read_field(node, "circle_gamma", "loss", cfg.loss.circle_gamma);
  if (node["mag_bounds"]) {
    const auto& b = node["mag_bounds"];
    if (!b.IsSequence() || b.size() != 4)
      fail("loss.mag_bounds", "expected [l_a, u_a, l_m, u_m]");
    cfg.loss.mag.lower_norm = get_as<double>(b[0], "loss.mag_bounds");
    cfg.loss.mag.upper_norm = get_as<double>(b[1], "loss.mag_bounds");
    cfg.loss.mag.lower_margin = get_as<double>(b[2], "loss.mag_bounds");
    cfg.loss.mag.upper_margin = get_as<double>(b[3], "loss.mag_bounds");
  }
  read_field(node, "mag_lambda_g", "loss", cfg.loss.mag_lambda_g);
  if (node["ohem_ratio"])
    cfg.loss.ohem_ratio = get_as<double>(node["ohem_ratio"], "loss.ohem_ratio");
}

void parse_optimizer(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "optimizer",
                      {"name", "lr", "momentum", "weight_decay", "beta1", "beta2", "eps",
                       "sam_rho", "sam_base", "encoder_lr_scale", "head_lr_scale"});
  if (node["name"])
    cfg.optimizer.kind = optim_kind_from_name(get_as<std::string>(node["name"], "optimizer.name"));
  read_field(node, "lr", "optimizer", cfg.optimizer.lr);
  read_field(node, "momentum", "optimizer", cfg.optimizer.momentum);
  read_field(node, "weight_decay", "optimizer", cfg.optimizer.weight_decay);
  read_field(node, "beta1", "optimizer", cfg.optimizer.beta1);
  read_field(node, "beta2", "optimizer", cfg.optimizer.beta2);
  read_field(node, "eps", "optimizer", cfg.optimizer.eps);
  read_field(node, "sam_rho", "optimizer", cfg.optimizer.sam_rho);
  if (node["sam_base"]) {
    const auto base = optim_kind_from_name(get_as<std::string>(node["sam_base"], "optimizer.sam_base"));
    if (base == OptimKind::kSam) fail("optimizer.sam_base", "must be 'sgd' or 'adam'");
    cfg.optimizer.sam_base = base;
  }
  read_field(node, "encoder_lr_scale", "optimizer", cfg.encoder_lr_scale);
  read_field(node, "head_lr_scale", "optimizer", cfg.head_lr_scale);
}

/// Returns whether the block pinned total_epochs explicitly (it otherwise
/// follows train.epochs; an explicit horizon lets a shorter run share the
/// exact schedule of a longer one, which resume relies on).
bool parse_scheduler(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "scheduler",
                      {"kind", "warmup_epochs", "total_epochs", "lr_start", "eta_min"});
  cfg.scheduler.kind = ScheduleKind::kCosineWarmup;  // presence of the block enables it
  if (node["kind"]) {
    const std::string kind = get_as<std::string>(node["kind"], "scheduler.kind");
    if (kind == "constant") {
      cfg.scheduler.kind = ScheduleKind::kConstant;
    } else if (kind == "cosine_warmup") {
      cfg.scheduler.kind = ScheduleKind::kCosineWarmup;
    } else {
      fail("scheduler.kind", "must be 'constant' or 'cosine_warmup'");
    }
  }
  read_field(node, "warmup_epochs", "scheduler", cfg.scheduler.warmup_epochs);
  read_field(node, "lr_start", "scheduler", cfg.scheduler.lr_start);
  read_field(node, "eta_min", "scheduler", cfg.scheduler.eta_min);
  if (node["total_epochs"]) {
    cfg.scheduler.total_epochs = get_as<int>(node["total_epochs"], "scheduler.total_epochs");
    return true;
  }
  return false;
}

void parse_augment(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "augment", {"ops", "aug_epoch", "prog_learn"});
  read_field(node, "aug_epoch", "augment", cfg.augment.aug_epoch);
  read_field(node, "prog_learn", "augment", cfg.augment.prog_learn);
  if (!node["ops"]) return;
  if (!node["ops"].IsSequence()) fail("augment.ops", "expected a list");
  int index = 0;
  for (const auto& entry : node["ops"]) {
    const std::string path = "augment.ops[" + std::to_string(index++) + "]";
    if (!entry.IsMap() || !entry["kind"]) fail(path, "expected {kind: ..., ...}");
    AugOp op;
    op.kind = aug_kind_from_name(get_as<std::string>(entry["kind"], path + ".kind"));
    std::set<std::string> allowed{"kind"};
    switch (op.kind) {
      case AugKind::kRandomCrop: allowed.insert("pad"); break;
      case AugKind::kHFlip: allowed.insert("prob"); break;
      case AugKind::kColorJitter: allowed.insert("max_scale"); break;
      case AugKind::kCutout: allowed.insert({"size", "fill"}); break;
      case AugKind::kMixup: allowed.insert("alpha"); break;
    }
    reject_unknown_keys(entry, path, allowed);
    read_field(entry, "pad", path, op.pad);
    read_field(entry, "prob", path, op.prob);
    read_field(entry, "max_scale", path, op.max_scale);
    read_field(entry, "size", path, op.size);
    read_field(entry, "fill", path, op.fill);
    read_field(entry, "alpha", path, op.alpha);
    cfg.augment.ops.push_back(op);
  }
}

SyntheticSpec parse_synthetic(const YAML::Node& node, const std::string& path) {
  reject_unknown_keys(node, path,
                      {"classes", "per_class", "image", "views_per_identity", "noise_sigma",
                       "blob_sigma", "identity_jitter", "view_jitter", "seed"});
  SyntheticSpec spec;
  read_field(node, "classes", path, spec.classes);
  read_field(node, "per_class", path, spec.per_class);
  if (node["image"]) {
    const auto dims = read_int_list(node["image"], path + ".image");
    if (dims.size() != 3) fail(path + ".image", "expected [channels, height, width]");
    spec.channels = dims[0];
    spec.height = dims[1];
    spec.width = dims[2];
  }
  read_field(node, "views_per_identity", path, spec.views_per_identity);
  read_field(node, "noise_sigma", path, spec.noise_sigma);
  read_field(node, "blob_sigma", path, spec.blob_sigma);
  read_field(node, "identity_jitter", path, spec.identity_jitter);
  read_field(node, "view_jitter", path, spec.view_jitter);
  read_field(node, "seed", path, spec.seed);
  return spec;
}

void parse_data(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "data",
                      {"synthetic", "path", "batch_size", "val_fraction", "sampler"});
  if (node["synthetic"]) cfg.data.synthetic = parse_synthetic(node["synthetic"], "data.synthetic");
  if (node["path"]) cfg.data.path = get_as<std::string>(node["path"], "data.path");
  read_field(node, "batch_size", "data", cfg.data.batch_size);
  read_field(node, "val_fraction", "data", cfg.data.val_fraction);
  if (node["sampler"]) {
    reject_unknown_keys(node["sampler"], "data.sampler", {"identities", "views"});
    read_field(node["sampler"], "identities", "data.sampler", cfg.data.sampler_identities);
    read_field(node["sampler"], "views", "data.sampler", cfg.data.sampler_views);
  }
}

void parse_train(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "train", {"epochs", "seed", "eval_every"});
  read_field(node, "epochs", "train", cfg.train.epochs);
  read_field(node, "seed", "train", cfg.train.seed);
  read_field(node, "eval_every", "train", cfg.train.eval_every);
}

void parse_eval(const YAML::Node& node, RunConfig& cfg) {
  reject_unknown_keys(node, "eval", {"metrics", "k", "metric"});
  if (node["metrics"]) {
    if (!node["metrics"].IsSequence()) fail("eval.metrics", "expected a list");
    cfg.eval.metrics.clear();
    for (const auto& m : node["metrics"])
      cfg.eval.metrics.push_back(get_as<std::string>(m, "eval.metrics"));
  }
  if (node["k"]) cfg.eval.k_values = read_int_list(node["k"], "eval.k");
  if (node["metric"])
    cfg.eval.metric = distance_metric_from_name(get_as<std::string>(node["metric"], "eval.metric"));
}

} // namespace

std::string task_kind_name(TaskKind t) {
  switch (t) {
    case TaskKind::kClassification: return "classification";
    case TaskKind::kFace: return "face";
    case TaskKind::kRetrieval: return "retrieval";
  }
  return "?";
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "classification") return TaskKind::kClassification;
  if (name == "face") return TaskKind::kFace;
  if (name == "retrieval") return TaskKind::kRetrieval;
  throw ValidationError("task: unknown task '" + name + "'");
}

void RunConfig::validate() const {
  model.validate();
  loss.validate();
  scheduler.validate();
  augment.validate(model.in_height, model.in_width);

  // Task/loss compatibility.
  const auto ok = [&](std::initializer_list<LossKind> kinds) {
    return std::find(kinds.begin(), kinds.end(), loss.name) != kinds.end();
  };
  bool compatible = true;
  switch (task) {
    case TaskKind::kClassification:
      compatible = ok({LossKind::kCrossEntropy, LossKind::kFocal});
      break;
    case TaskKind::kFace:
      compatible = ok({LossKind::kArcFace, LossKind::kCircle, LossKind::kMagFace});
      break;
    case TaskKind::kRetrieval:
      compatible = ok({LossKind::kTriplet, LossKind::kArcFace});
      break;
  }
  if (!compatible)
    fail("loss.name", "loss '" + loss_kind_name(loss.name) + "' is not valid for task '" +
                          task_kind_name(task) + "'");

  if (loss.name == LossKind::kCircle && loss.ohem_ratio)
    fail("loss.ohem_ratio", "OHEM needs per-sample losses; circle produces a single batch term");
  if (augment.mixup_alpha()) {
    if (task != TaskKind::kClassification || loss.name != LossKind::kCrossEntropy)
      fail("augment.ops.mixup", "MixUp soft targets require task=classification with loss=ce");
  }

  if (model_classes < 0) fail("model.classes", "must be >= 0");
  if (data.batch_size < 2) fail("data.batch_size", "must be >= 2");
  if (data.val_fraction < 0.0 || data.val_fraction >= 1.0)
    fail("data.val_fraction", "must be in [0,1)");
  if (!data.synthetic && !data.path) fail("data", "needs either 'synthetic' or 'path'");
  if (data.synthetic && data.path) fail("data", "'synthetic' and 'path' are exclusive");
  if (data.synthetic) data.synthetic->validate();
  if (task != TaskKind::kClassification) {
    if (data.sampler_identities < 2) fail("data.sampler.identities", "must be >= 2");
    if (data.sampler_views < 2) fail("data.sampler.views", "must be >= 2");
  }

  if (train.epochs < 0) fail("train.epochs", "must be >= 0");
  if (train.eval_every < 0) fail("train.eval_every", "must be >= 0");

  if (optimizer.lr <= 0.0) fail("optimizer.lr", "must be > 0");
  if (optimizer.momentum < 0.0 || optimizer.momentum >= 1.0)
    fail("optimizer.momentum", "must be in [0,1)");
  if (optimizer.weight_decay < 0.0) fail("optimizer.weight_decay", "must be >= 0");
  if (optimizer.sam_rho < 0.0) fail("optimizer.sam_rho", "must be >= 0");
  if (encoder_lr_scale <= 0.0 || head_lr_scale <= 0.0)
    fail("optimizer.lr_scale", "group multipliers must be > 0");

  for (int k : eval.k_values)
    if (k < 1) fail("eval.k", "entries must be >= 1");
  const std::set<std::string> known_metrics{"top1", "topk", "recall", "auc"};
  for (const auto& m : eval.metrics)
    if (!known_metrics.count(m)) fail("eval.metrics", "unknown metric '" + m + "'");
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  const std::string s = os.str();
  // keep YAML parsing the value back as a float
  if (s.find_first_of(".eEn") == std::string::npos) return s + ".0";
  return s;
}

} // namespace

std::string RunConfig::to_yaml() const {
  std::ostringstream os;
  os << "task: " << task_kind_name(task) << "\n";
  os << "model:\n";
  os << "  encoder: " << (model.kind == EncoderKind::kMlp ? "mlp" : "cnn") << "\n";
  os << "  input: [" << model.in_channels << ", " << model.in_height << ", " << model.in_width
     << "]\n";
  os << "  hidden: [";
  for (std::size_t i = 0; i < model.hidden.size(); ++i)
    os << (i ? ", " : "") << model.hidden[i];
  os << "]\n";
  os << "  embed_dim: " << model.embed_dim << "\n";
  os << "  classes: " << model_classes << "\n";
  os << "loss:\n";
  os << "  name: " << loss_kind_name(loss.name) << "\n";
  os << "  eps_smooth: " << fmt_double(loss.eps_smooth) << "\n";
  os << "  gamma: " << fmt_double(loss.gamma) << "\n";
  os << "  margin: " << fmt_double(loss.margin) << "\n";
  os << "  s: " << fmt_double(loss.scale) << "\n";
  os << "  m: " << fmt_double(loss.angular_margin) << "\n";
  os << "  circle_m: " << fmt_double(loss.circle_m) << "\n";
  os << "  circle_gamma: " << fmt_double(loss.circle_gamma) << "\n";
  os << "  mag_bounds: [" << fmt_double(loss.mag.lower_norm) << ", "
     << fmt_double(loss.mag.upper_norm) << ", " << fmt_double(loss.mag.lower_margin) << ", "
     << fmt_double(loss.mag.upper_margin) << "]\n";
  os << "  mag_lambda_g: " << fmt_double(loss.mag_lambda_g) << "\n";
  if (loss.ohem_ratio) os << "  ohem_ratio: " << fmt_double(*loss.ohem_ratio) << "\n";
  os << "optimizer:\n";
  os << "  name: " << optim_kind_name(optimizer.kind) << "\n";
  os << "  lr: " << fmt_double(optimizer.lr) << "\n";
  os << "  momentum: " << fmt_double(optimizer.momentum) << "\n";
  os << "  weight_decay: " << fmt_double(optimizer.weight_decay) << "\n";
  os << "  beta1: " << fmt_double(optimizer.beta1) << "\n";
  os << "  beta2: " << fmt_double(optimizer.beta2) << "\n";
  os << "  eps: " << fmt_double(optimizer.eps) << "\n";
  os << "  sam_rho: " << fmt_double(optimizer.sam_rho) << "\n";
  os << "  sam_base: " << optim_kind_name(optimizer.sam_base) << "\n";
  os << "  encoder_lr_scale: " << fmt_double(encoder_lr_scale) << "\n";
  os << "  head_lr_scale: " << fmt_double(head_lr_scale) << "\n";
  os << "scheduler:\n";
  os << "  kind: "
     << (scheduler.kind == ScheduleKind::kConstant ? "constant" : "cosine_warmup") << "\n";
  os << "  warmup_epochs: " << scheduler.warmup_epochs << "\n";
  os << "  total_epochs: " << scheduler.total_epochs << "\n";
  os << "  lr_start: " << fmt_double(scheduler.lr_start) << "\n";
  os << "  eta_min: " << fmt_double(scheduler.eta_min) << "\n";
  os << "augment:\n";
  os << "  aug_epoch: " << augment.aug_epoch << "\n";
  os << "  prog_learn: " << (augment.prog_learn ? "true" : "false") << "\n";
  if (!augment.ops.empty()) {
    os << "  ops:\n";
    for (const auto& op : augment.ops) {
      os << "    - {kind: " << aug_kind_name(op.kind);
      switch (op.kind) {
        case AugKind::kRandomCrop: os << ", pad: " << op.pad; break;
        case AugKind::kHFlip: os << ", prob: " << fmt_double(op.prob); break;
        case AugKind::kColorJitter: os << ", max_scale: " << fmt_double(op.max_scale); break;
        case AugKind::kCutout:
          os << ", size: " << op.size << ", fill: " << fmt_double(op.fill);
          break;
        case AugKind::kMixup: os << ", alpha: " << fmt_double(op.alpha); break;
      }
      os << "}\n";
    }
  }
  os << "data:\n";
  if (data.synthetic) {
    const auto& s = *data.synthetic;
    os << "  synthetic:\n";
    os << "    classes: " << s.classes << "\n";
    os << "    per_class: " << s.per_class << "\n";
    os << "    image: [" << s.channels << ", " << s.height << ", " << s.width << "]\n";
    os << "    views_per_identity: " << s.views_per_identity << "\n";
    os << "    noise_sigma: " << fmt_double(s.noise_sigma) << "\n";
    os << "    blob_sigma: " << fmt_double(s.blob_sigma) << "\n";
    os << "    identity_jitter: " << fmt_double(s.identity_jitter) << "\n";
    os << "    view_jitter: " << fmt_double(s.view_jitter) << "\n";
    os << "    seed: " << s.seed << "\n";
  }
  if (data.path) os << "  path: " << *data.path << "\n";
  os << "  batch_size: " << data.batch_size << "\n";
  os << "  val_fraction: " << fmt_double(data.val_fraction) << "\n";
  os << "  sampler: {identities: " << data.sampler_identities << ", views: " << data.sampler_views
     << "}\n";
  os << "train:\n";
  os << "  epochs: " << train.epochs << "\n";
  os << "  seed: " << train.seed << "\n";
  os << "  eval_every: " << train.eval_every << "\n";
  os << "eval:\n";
  if (!eval.metrics.empty()) {
    os << "  metrics: [";
    for (std::size_t i = 0; i < eval.metrics.size(); ++i)
      os << (i ? ", " : "") << eval.metrics[i];
    os << "]\n";
  }
  os << "  k: [";
  for (std::size_t i = 0; i < eval.k_values.size(); ++i)
    os << (i ? ", " : "") << eval.k_values[i];
  os << "]\n";
  os << "  metric: " << distance_metric_name(eval.metric) << "\n";
  return os.str();
}

RunConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("config: malformed YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ParseError("config: top level must be a mapping");
  reject_unknown_keys(
      root, "config",
      {"task", "model", "loss", "optimizer", "scheduler", "augment", "data", "train", "eval"});

  RunConfig cfg;
  if (!root["task"]) fail("task", "missing required key");
  cfg.task = task_kind_from_name(get_as<std::string>(root["task"], "task"));

  // Task-sensitive defaults applied before explicit blocks override them.
  if (cfg.task == TaskKind::kFace) {
    cfg.loss.name = LossKind::kArcFace;
    cfg.eval.metric = DistanceMetric::kCosine;
  } else if (cfg.task == TaskKind::kRetrieval) {
    cfg.loss.name = LossKind::kTriplet;
  }

  bool input_given = false;
  if (root["model"]) input_given = parse_model(root["model"], cfg);
  if (root["loss"]) parse_loss(root["loss"], cfg);
  if (root["optimizer"]) parse_optimizer(root["optimizer"], cfg);
  bool horizon_given = false;
  if (root["scheduler"]) horizon_given = parse_scheduler(root["scheduler"], cfg);
  if (root["augment"]) parse_augment(root["augment"], cfg);
  if (!root["data"]) fail("data", "missing required key");
  parse_data(root["data"], cfg);
  if (!root["train"]) fail("train", "missing required key");
  parse_train(root["train"], cfg);
  if (root["eval"]) parse_eval(root["eval"], cfg);

  // A synthetic data block pins the image geometry when the model block
  // does not say otherwise.
  if (!input_given && cfg.data.synthetic) {
    cfg.model.in_channels = cfg.data.synthetic->channels;
    cfg.model.in_height = cfg.data.synthetic->height;
    cfg.model.in_width = cfg.data.synthetic->width;
  }

  // The schedule spans the configured run unless its horizon was pinned.
  cfg.scheduler.lr_peak = cfg.optimizer.lr;
  if (!horizon_given) cfg.scheduler.total_epochs = std::max(1, cfg.train.epochs);
  if (cfg.train.epochs > cfg.scheduler.total_epochs)
    fail("scheduler.total_epochs", "must cover train.epochs");
  if (cfg.train.epochs > 0 && cfg.scheduler.kind == ScheduleKind::kCosineWarmup &&
      cfg.scheduler.warmup_epochs >= cfg.scheduler.total_epochs)
    fail("scheduler.warmup_epochs", "must be smaller than the schedule horizon");
  if (!horizon_given && cfg.train.epochs == 0)  // no-op run; keep the spec well-formed
    cfg.scheduler.total_epochs = std::max(1, cfg.scheduler.warmup_epochs + 1);

  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

GenDataSpec load_gendata_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("gen-data spec: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  YAML::Node root;
  try {
    root = YAML::Load(buf.str());
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("gen-data spec: malformed YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ParseError("gen-data spec: top level must be a mapping");
  reject_unknown_keys(root, "spec", {"synthetic", "val_fraction"});
  if (!root["synthetic"]) fail("synthetic", "missing required key");
  GenDataSpec spec;
  spec.synthetic = parse_synthetic(root["synthetic"], "synthetic");
  if (root["val_fraction"])
    spec.val_fraction = get_as<double>(root["val_fraction"], "val_fraction");
  if (spec.val_fraction < 0.0 || spec.val_fraction >= 1.0)
    fail("val_fraction", "must be in [0,1)");
  spec.synthetic.validate();
  return spec;
}

} // namespace reprforge
