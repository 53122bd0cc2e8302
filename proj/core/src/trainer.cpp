// SPDX-License-Identifier: Apache-2.0
#include "reprforge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <sstream>

#include "reprforge/errors.hpp"
#include "reprforge/logging.hpp"
#include "reprforge/rng.hpp"

namespace fs = std::filesystem;

namespace reprforge {

namespace {

// Tags for deriving independent per-purpose RNG substreams from the seed.
constexpr std::uint64_t kTagShuffle = 0xB001;
constexpr std::uint64_t kTagSamplerViews = 0xB002;
constexpr std::uint64_t kTagAugment = 0xB003;
constexpr std::uint64_t kTagMixup = 0xB004;
constexpr std::uint64_t kTagVerifPairs = 0xB005;

int task_label(const Sample& s, TaskKind task) {
  return task == TaskKind::kClassification ? s.class_id : s.identity_id;
}

struct Assembled {
  Dataset train_split;
  Dataset val_split;
  std::vector<int> train_labels;
  std::vector<int> val_labels;
  int num_labels = 0;  // head class count (classes or identities)
};

Assembled assemble_data(const RunConfig& cfg) {
  Dataset full;
  Assembled out;
  if (cfg.data.synthetic) {
    full = generate(*cfg.data.synthetic);
    auto [train, val] = full.split(cfg.data.val_fraction, cfg.data.synthetic->seed);
    out.train_split = std::move(train);
    out.val_split = std::move(val);
  } else {
    auto [train, val] = load_dataset_dir(*cfg.data.path);
    out.train_split = std::move(train);
    out.val_split = std::move(val);
  }

  int max_label = -1;
  for (const Dataset* ds : {&out.train_split, &out.val_split})
    for (const auto& s : ds->samples) max_label = std::max(max_label, task_label(s, cfg.task));
  out.num_labels = max_label + 1;
  if (out.num_labels < 1) throw EmptySplit("dataset has no samples");
  if (cfg.model_classes > 0 && cfg.model_classes != out.num_labels)
    throw ValidationError("model.classes: config says " + std::to_string(cfg.model_classes) +
                          " but the dataset has " + std::to_string(out.num_labels));

  for (const auto& s : out.train_split.samples)
    out.train_labels.push_back(task_label(s, cfg.task));
  for (const auto& s : out.val_split.samples)
    out.val_labels.push_back(task_label(s, cfg.task));

  if (cfg.model.in_channels != out.train_split.channels ||
      cfg.model.in_height != out.train_split.height ||
      cfg.model.in_width != out.train_split.width)
    throw ValidationError("model.input: does not match dataset dimensions " +
                          std::to_string(out.train_split.channels) + "x" +
                          std::to_string(out.train_split.height) + "x" +
                          std::to_string(out.train_split.width));
  return out;
}

/// Batches as index lists into the train split, one epoch's worth.
std::vector<std::vector<int>> build_batches(const RunConfig& cfg, const Assembled& data,
                                            int epoch) {
  std::vector<std::vector<int>> batches;
  const int n = data.train_split.size();
  if (n == 0) return batches;

  if (cfg.task == TaskKind::kClassification) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(Rng::mix(cfg.train.seed, kTagShuffle, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (int start = 0; start < n; start += cfg.data.batch_size) {
      const int end = std::min(n, start + cfg.data.batch_size);
      batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
  }

  // P identities x Q views per batch so every anchor has positives and
  // negatives.
  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < n; ++i) by_label[data.train_labels[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<int> identities;
  identities.reserve(by_label.size());
  for (const auto& [label, idx] : by_label) identities.push_back(label);
  Rng rng(Rng::mix(cfg.train.seed, kTagShuffle, static_cast<std::uint64_t>(epoch)));
  rng.shuffle(identities);

  const auto p = static_cast<std::size_t>(cfg.data.sampler_identities);
  const int q = cfg.data.sampler_views;
  for (std::size_t start = 0; start < identities.size(); start += p) {
    const std::size_t end = std::min(identities.size(), start + p);
    if (end - start < 2) break;  // a batch needs >= 2 identities for negatives
    std::vector<int> batch;
    for (std::size_t k = start; k < end; ++k) {
      const int identity = identities[k];
      auto views = by_label.at(identity);
      Rng vr(Rng::mix(cfg.train.seed, kTagSamplerViews, static_cast<std::uint64_t>(epoch),
                      static_cast<std::uint64_t>(identity)));
      vr.shuffle(views);
      for (int v = 0; v < q; ++v)
        batch.push_back(views[static_cast<std::size_t>(v) % views.size()]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

struct BatchData {
  Tensor x;                 // N x C x H x W
  std::vector<int> labels;  // task labels
  Tensor soft_targets;      // defined only when MixUp fired
};

BatchData prepare_batch(const RunConfig& cfg, const Assembled& data,
                        const std::vector<int>& indices, int epoch, int batch_index,
                        double inten, int num_labels) {
  const Dataset& ds = data.train_split;
  const int n = static_cast<int>(indices.size());
  const int c = ds.channels, h = ds.height, w = ds.width;

  std::vector<Tensor> images;
  images.reserve(indices.size());
  for (int i : indices) {
    Tensor img = ds.image(i);
    if (inten > 0.0 && !cfg.augment.ops.empty()) {
      Rng rng(Rng::mix(cfg.train.seed, kTagAugment, static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(i)));
      img = augment_sample(img, cfg.augment, inten, rng);
    }
    images.push_back(std::move(img));
  }

  BatchData out;
  for (int i : indices) out.labels.push_back(data.train_labels[static_cast<std::size_t>(i)]);

  const auto mix_alpha = cfg.augment.mixup_alpha();
  std::vector<double> lambda_mix;
  std::vector<int> perm;
  const bool mixup_active = mix_alpha && inten > 0.0 && n >= 2;
  double lambda = 1.0;
  if (mixup_active) {
    Rng rng(Rng::mix(cfg.train.seed, kTagMixup, static_cast<std::uint64_t>(epoch),
                     static_cast<std::uint64_t>(batch_index)));
    lambda = rng.beta(*mix_alpha, *mix_alpha);
    perm.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
  }

  std::vector<double> xbuf;
  xbuf.reserve(static_cast<std::size_t>(n) * c * h * w);
  for (int i = 0; i < n; ++i) {
    if (mixup_active) {
      Tensor mixed = mixup_images(images[static_cast<std::size_t>(i)],
                                  images[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])],
                                  lambda);
      const auto v = mixed.values();
      xbuf.insert(xbuf.end(), v.begin(), v.end());
    } else {
      const auto v = images[static_cast<std::size_t>(i)].values();
      xbuf.insert(xbuf.end(), v.begin(), v.end());
    }
  }
  out.x = Tensor::from_data({n, c, h, w}, std::move(xbuf));

  if (mixup_active) {
    // Soft targets: lambda * onehot(y_i) + (1-lambda) * onehot(y_perm(i)),
    // with label smoothing folded in first.
    const double eps = cfg.loss.eps_smooth;
    std::vector<double> targets(static_cast<std::size_t>(n) * num_labels, 0.0);
    auto one_hot = [&](int label) {
      std::vector<double> t(static_cast<std::size_t>(num_labels), eps / num_labels);
      t[static_cast<std::size_t>(label)] += 1.0 - eps;
      return t;
    };
    for (int i = 0; i < n; ++i) {
      const auto t = mixup_targets(one_hot(out.labels[static_cast<std::size_t>(i)]),
                                   one_hot(out.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]),
                                   lambda);
      std::copy(t.begin(), t.end(), targets.begin() + static_cast<std::size_t>(i) * num_labels);
    }
    out.soft_targets = Tensor::from_data({n, num_labels}, std::move(targets));
  }
  return out;
}

/// Row norms composed from tape ops: exp(0.5 * log(sum(z^2))).
Tensor embedding_norms(const Tensor& z) {
  return exp(mul_scalar(log(sum_last(mul(z, z))), 0.5));
}

Tensor compute_loss(const RunConfig& cfg, const ModelParams& params, const BatchData& batch) {
  Tensor z = encode(cfg.model, params, batch.x);

  Tensor rows;
  switch (cfg.loss.name) {
    case LossKind::kCrossEntropy: {
      Tensor logits = classify(params, z);
      if (batch.soft_targets.defined()) return cross_entropy_soft(logits, batch.soft_targets);
      rows = cross_entropy_rows(logits, batch.labels, cfg.loss.eps_smooth);
      break;
    }
    case LossKind::kFocal:
      rows = focal_rows(classify(params, z), batch.labels, cfg.loss.gamma);
      break;
    case LossKind::kTriplet:
      rows = triplet_batch_hard_rows(z, batch.labels, cfg.loss.margin);
      break;
    case LossKind::kArcFace:
      rows = arcface_rows(cosine_logits(params, z), batch.labels, cfg.loss.scale,
                          cfg.loss.angular_margin);
      break;
    case LossKind::kMagFace:
      rows = magface_rows(cosine_logits(params, z), batch.labels, embedding_norms(z),
                          cfg.loss.scale, cfg.loss.mag, cfg.loss.mag_lambda_g);
      break;
    case LossKind::kCircle: {
      const int n = z.dim(0);
      Tensor sims = matmul_nt(l2_normalize(z), l2_normalize(z));
      std::vector<int> pos, neg;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          (batch.labels[static_cast<std::size_t>(i)] == batch.labels[static_cast<std::size_t>(j)]
               ? pos
               : neg)
              .push_back(i * n + j);
      Tensor flat = reshape(sims, {n * n});
      return circle(take_rows(flat, pos), take_rows(flat, neg), cfg.loss.circle_m,
                    cfg.loss.circle_gamma);
    }
  }
  if (cfg.loss.ohem_ratio) return ohem_filter(rows, *cfg.loss.ohem_ratio);
  return mean(rows);
}

struct EvalForward {
  int n = 0, d = 0;
  std::vector<double> z;       // N x d embeddings
  std::vector<double> logits;  // N x num_labels (classification only)
};

EvalForward forward_eval(const RunConfig& cfg, const ModelParams& params, const Dataset& ds,
                         int batch_size) {
  EvalForward out;
  out.n = ds.size();
  out.d = cfg.model.embed_dim;
  out.z.reserve(static_cast<std::size_t>(out.n) * out.d);
  const bool with_logits = cfg.task == TaskKind::kClassification;
  for (int start = 0; start < ds.size(); start += batch_size) {
    const int end = std::min(ds.size(), start + batch_size);
    std::vector<double> xbuf;
    for (int i = start; i < end; ++i) {
      const auto& px = ds.samples[static_cast<std::size_t>(i)].pixels;
      xbuf.insert(xbuf.end(), px.begin(), px.end());
    }
    Tensor x = Tensor::from_data({end - start, ds.channels, ds.height, ds.width},
                                 std::move(xbuf));
    Tensor z = encode(cfg.model, params, x);
    out.z.insert(out.z.end(), z.values().begin(), z.values().end());
    if (with_logits) {
      Tensor logits = classify(params, z);
      out.logits.insert(out.logits.end(), logits.values().begin(), logits.values().end());
    }
  }
  return out;
}

std::vector<MetricRecord> eval_metrics(const RunConfig& cfg, const ModelParams& params,
                                       const Dataset& ds, const std::vector<int>& labels,
                                       const std::string& split) {
  if (ds.size() == 0) throw EmptySplit("evaluate: split '" + split + "' is empty");
  const EvalForward fw = forward_eval(cfg, params, ds, cfg.data.batch_size);

  std::vector<std::string> wanted = cfg.eval.metrics;
  if (wanted.empty()) {
    switch (cfg.task) {
      case TaskKind::kClassification: wanted = {"top1", "topk"}; break;
      case TaskKind::kFace: wanted = {"auc", "recall"}; break;
      case TaskKind::kRetrieval: wanted = {"recall"}; break;
    }
  }
  const auto want = [&](const std::string& m) {
    return std::find(wanted.begin(), wanted.end(), m) != wanted.end();
  };

  std::vector<MetricRecord> records;
  const auto push = [&](const std::string& name, double value) {
    records.push_back({0, split, name, value, 0.0});
  };

  try {
    if (cfg.task == TaskKind::kClassification) {
      const int c = static_cast<int>(fw.logits.size()) / fw.n;
      if (want("top1")) push("top1", topk_accuracy(fw.logits, fw.n, c, labels, 1));
      if (want("topk"))
        for (int k : cfg.eval.k_values)
          if (k > 1) push("top" + std::to_string(k), topk_accuracy(fw.logits, fw.n, c, labels, k));
    } else {
      EmbeddingSet set;
      set.dim = fw.d;
      set.embeddings = fw.z;
      set.labels = labels;
      if (cfg.task == TaskKind::kRetrieval) {
        if (want("recall"))
          for (int k : cfg.eval.k_values)
            push("recall@" + std::to_string(k), recall_at_k(set, k, cfg.eval.metric));
      } else {
        if (want("recall")) push("recall@1", recall_at_k(set, 1, DistanceMetric::kCosine));
        if (want("auc")) {
          // All within-identity positives plus an equal-count seeded random
          // sample of negative pairs, scored by cosine similarity.
          std::vector<double> scores;
          std::vector<bool> is_same;
          auto cosine = [&](int i, int j) {
            const double* a = fw.z.data() + static_cast<std::size_t>(i) * fw.d;
            const double* b = fw.z.data() + static_cast<std::size_t>(j) * fw.d;
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (int t = 0; t < fw.d; ++t) {
              dot += a[t] * b[t];
              na += a[t] * a[t];
              nb += b[t] * b[t];
            }
            return dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
          };
          std::size_t n_pos = 0;
          for (int i = 0; i < fw.n; ++i)
            for (int j = i + 1; j < fw.n; ++j)
              if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                scores.push_back(cosine(i, j));
                is_same.push_back(true);
                ++n_pos;
              }
          if (n_pos == 0)
            throw SingleClass("evaluate: split '" + split + "' has no positive pairs");
          Rng rng(Rng::mix(cfg.train.seed, kTagVerifPairs));
          std::size_t drawn = 0;
          while (drawn < n_pos) {
            const int i = static_cast<int>(rng.uniform_int(fw.n));
            const int j = static_cast<int>(rng.uniform_int(fw.n));
            if (i == j ||
                labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)])
              continue;
            scores.push_back(cosine(i, j));
            is_same.push_back(false);
            ++drawn;
          }
          push("auc", roc_auc(scores, is_same));
        }
      }
    }
  } catch (const KOutOfRange& e) {
    throw KOutOfRange(std::string("eval.k: ") + e.what());
  }
  return records;
}

std::vector<ParamRef> make_param_refs(ModelParams& params, const RunConfig& cfg) {
  std::vector<ParamRef> refs;
  for (auto& [name, t] : params.encoder)
    refs.push_back({"encoder/" + name, t, cfg.encoder_lr_scale});
  for (auto& [name, t] : params.head) refs.push_back({"head/" + name, t, cfg.head_lr_scale});
  return refs;
}

void restore_optim_state(const Checkpoint& ckpt, OptimState& optim) {
  optim.step_count = ckpt.optim_step;
  for (const auto& [name, blob] : ckpt.tensors) {
    if (name.rfind("optim/momentum/", 0) == 0)
      optim.momentum[name.substr(15)] = blob.data;
    else if (name.rfind("optim/m/", 0) == 0)
      optim.first_moment[name.substr(8)] = blob.data;
    else if (name.rfind("optim/v/", 0) == 0)
      optim.second_moment[name.substr(8)] = blob.data;
  }
}

} // namespace

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params;
  for (const auto& [name, blob] : ckpt.tensors) {
    if (name.rfind("params/encoder/", 0) == 0)
      params.encoder[name.substr(15)] = Tensor::from_data(blob.shape, blob.data, true);
    else if (name.rfind("params/head/", 0) == 0)
      params.head[name.substr(12)] = Tensor::from_data(blob.shape, blob.data, true);
  }
  return params;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const ModelParams& params,
                           const OptimState& optim, int epoch, std::uint64_t rng_state) {
  Checkpoint ckpt;
  ckpt.config_yaml = cfg.to_yaml();
  ckpt.epoch = epoch;
  ckpt.rng_state = rng_state;
  ckpt.optim_step = optim.step_count;
  for (const auto& [name, t] : params.all()) {
    TensorBlob blob;
    blob.shape = t.shape();
    blob.data.assign(t.values().begin(), t.values().end());
    ckpt.tensors.emplace("params/" + name, std::move(blob));
  }
  const auto add_slots = [&](const char* prefix,
                             const std::map<std::string, std::vector<double>>& slots) {
    for (const auto& [name, data] : slots) {
      TensorBlob blob;
      blob.shape = {static_cast<int>(data.size())};
      blob.data = data;
      ckpt.tensors.emplace(std::string(prefix) + name, std::move(blob));
    }
  };
  add_slots("optim/momentum/", optim.momentum);
  add_slots("optim/m/", optim.first_moment);
  add_slots("optim/v/", optim.second_moment);
  return ckpt;
}

TrainOutput train_run(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Assembled data = assemble_data(cfg);

  Rng master(cfg.train.seed);
  ModelParams params;
  OptimState optim;
  int start_epoch = 0;

  const bool head_bias = cfg.task == TaskKind::kClassification;
  const int head_classes = cfg.loss.name == LossKind::kTriplet ? 0 : data.num_labels;

  if (opts.resume) {
    params = params_from_checkpoint(*opts.resume);
    ModelParams expected = init_params(cfg.model, head_classes, head_bias, master);
    for (const auto& [name, t] : expected.all()) {
      const Tensor* got = nullptr;
      const auto slash = name.find('/');
      const std::string group = name.substr(0, slash), leaf = name.substr(slash + 1);
      if (group == "encoder") {
        auto it = params.encoder.find(leaf);
        if (it != params.encoder.end()) got = &it->second;
      } else {
        auto it = params.head.find(leaf);
        if (it != params.head.end()) got = &it->second;
      }
      if (!got || got->shape() != t.shape())
        throw ValidationError("resume: checkpoint tensor '" + name +
                              "' is missing or does not match the configured model");
    }
    restore_optim_state(*opts.resume, optim);
    start_epoch = opts.resume->epoch;
    master.set_state(opts.resume->rng_state);
  } else {
    params = init_params(cfg.model, head_classes, head_bias, master);
  }

  std::vector<ParamRef> refs = make_param_refs(params, cfg);

  TrainOutput out;
  Checkpoint last_good = make_checkpoint(cfg, params, optim, start_epoch, master.state());

  const auto flush_outputs = [&](const Checkpoint& ckpt) {
    if (opts.out_dir.empty()) return;
    fs::create_directories(opts.out_dir);
    save_checkpoint(ckpt, (fs::path(opts.out_dir) / "final.ckpt").string());
    write_metrics_log(out.records, (fs::path(opts.out_dir) / "metrics.jsonl").string());
  };

  for (int epoch = start_epoch; epoch < cfg.train.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg.scheduler);
    const double inten = intensity(epoch, cfg.augment);
    const auto batches = build_batches(cfg, data, epoch);

    double loss_sum = 0.0;
    int batch_count = 0;
    bool diverged = false;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchData batch = prepare_batch(cfg, data, batches[b], epoch, static_cast<int>(b), inten,
                                      data.num_labels);
      double first_loss = std::numeric_limits<double>::quiet_NaN();
      const auto loss_fn = [&]() {
        for (auto& ref : refs) ref.tensor.zero_grad();
        Tensor loss = compute_loss(cfg, params, batch);
        const double value = loss.item();
        if (std::isnan(first_loss)) first_loss = value;
        if (!std::isfinite(value)) {
          diverged = true;
          return;  // abort after the step, keeping the last good checkpoint
        }
        if (loss.requires_grad()) backward(loss);
      };
      optimizer_step(refs, loss_fn, optim, cfg.optimizer, lr);
      if (diverged || !std::isfinite(first_loss)) {
        flush_outputs(last_good);
        throw NumericalDivergence("train_run: non-finite loss at epoch " +
                                  std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      loss_sum += first_loss;
      ++batch_count;
    }

    const double epoch_loss = batch_count > 0 ? loss_sum / batch_count : 0.0;
    out.records.push_back({epoch, "train", "loss", epoch_loss, elapsed()});
    out.records.push_back({epoch, "train", "lr", lr, elapsed()});
    log_info("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.train.epochs) +
             " loss=" + std::to_string(epoch_loss) + " lr=" + std::to_string(lr));

    if (cfg.train.eval_every > 0 && (epoch + 1) % cfg.train.eval_every == 0 &&
        epoch + 1 < cfg.train.epochs && data.val_split.size() > 0) {
      for (auto rec : eval_metrics(cfg, params, data.val_split, data.val_labels, "val")) {
        rec.epoch = epoch;
        rec.wall_time = elapsed();
        out.records.push_back(std::move(rec));
      }
    }

    last_good = make_checkpoint(cfg, params, optim, epoch + 1, master.state());
  }

  if (cfg.train.epochs > start_epoch && data.val_split.size() > 0) {
    for (auto rec : eval_metrics(cfg, params, data.val_split, data.val_labels, "val")) {
      rec.epoch = cfg.train.epochs - 1;
      rec.wall_time = elapsed();
      out.records.push_back(std::move(rec));
    }
  }

  out.checkpoint = make_checkpoint(cfg, params, optim, cfg.train.epochs, master.state());
  flush_outputs(out.checkpoint);
  return out;
}

std::vector<MetricRecord> evaluate(const RunConfig& cfg, const Checkpoint& ckpt,
                                   const std::string& split) {
  cfg.validate();
  if (split != "train" && split != "val")
    throw EmptySplit("evaluate: split '" + split + "' does not exist");
  Assembled data = assemble_data(cfg);
  ModelParams params = params_from_checkpoint(ckpt);
  const Dataset& ds = split == "train" ? data.train_split : data.val_split;
  const std::vector<int>& labels = split == "train" ? data.train_labels : data.val_labels;
  auto records = eval_metrics(cfg, params, ds, labels, split);
  for (auto& rec : records) rec.epoch = ckpt.epoch;
  return records;
}

} // namespace reprforge
