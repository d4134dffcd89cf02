#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "artifact/augment.hpp"
#include "artifact/eval.hpp"
#include "artifact/jpeg.hpp"
#include "artifact/manifest.hpp"
#include "artifact/modes.hpp"
#include "artifact/nn/adam.hpp"
#include "artifact/nn/loss.hpp"
#include "artifact/nn/net.hpp"
#include "artifact/parallel.hpp"
#include "artifact/rng.hpp"
#include "artifact/split.hpp"

namespace artifact {

struct TrainConfig {
  double lr0 = 1e-4;
  double decay_gamma = 0.9;
  int epochs = 20;
  int batch_size = 32;
  double label_smoothing = 0.05;
  AugmentConfig aug;
  std::uint64_t seed = 0;

  void check() const {
    if (!(lr0 > 0)) throw std::runtime_error("train config: lr0 must be positive");
    if (!(decay_gamma > 0) || decay_gamma > 1)
      throw std::runtime_error("train config: decay_gamma must be in (0,1]");
    if (label_smoothing < 0 || label_smoothing >= 1)
      throw std::runtime_error("train config: label_smoothing must be in [0,1)");
    if (epochs < 1) throw std::runtime_error("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::runtime_error("train config: batch_size must be >= 1");
    aug.check();
  }
};

inline double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw std::runtime_error("lr_at: negative epoch");
  return cfg.lr0 * std::pow(cfg.decay_gamma, static_cast<double>(epoch));
}

struct EpochLog {
  int epoch = 0;
  double loss = 0;
  double lr = 0;
  double val_balanced_accuracy = 0;
};

inline void write_train_log(const std::vector<EpochLog>& log, std::ostream& out,
                            const std::vector<std::string>& header_comments = {}) {
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "epoch,loss,lr,val_balanced_accuracy\n";
  for (const auto& row : log) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.8e,%.6f", row.epoch, row.loss, row.lr,
                  row.val_balanced_accuracy);
    out << buf << "\n";
  }
}

struct TrainFoldResult {
  nn::Net<float> net;
  HeadSpec spec;
  std::vector<EpochLog> log;
};

// Trains one fold's model on the given entries. A stratified tenth of each
// model class is held out of the gradient updates and scored per epoch
// with the binary-converted balanced accuracy. The walk over samples,
// augmentations, and the held-out choice all come from derived rng
// streams, so results do not depend on worker count or entry order.
inline TrainFoldResult train_fold(const std::vector<ManifestEntry>& train_entries,
                                  const ClassTaxonomy& taxonomy, const std::string& data_dir,
                                  TrainMode mode, bool fsr, nn::ModelConfig base_cfg,
                                  const TrainConfig& tcfg, int workers = 1) {
  tcfg.check();
  taxonomy.check();
  const HeadSpec spec = make_head_spec(mode, taxonomy);

  nn::ModelConfig cfg = base_cfg;
  cfg.fsr = fsr;
  cfg.stem_stride = fsr ? cfg.stem_kernel / 2 : cfg.stem_kernel;
  cfg.head_mode = spec.head_mode();
  cfg.num_classes = spec.num_classes;
  cfg.check();

  struct Sample {
    const ManifestEntry* entry;
    int label;
  };
  std::map<std::string, Sample> by_id;  // canonical order and id uniqueness
  for (const auto& e : train_entries) {
    const int lbl = model_label(e, taxonomy, spec);
    if (lbl < 0) continue;
    if (!by_id.emplace(e.entry_id, Sample{&e, lbl}).second)
      throw std::runtime_error("train_fold: duplicate entry id " + e.entry_id);
  }
  if (by_id.empty()) throw std::runtime_error("train_fold: no trainable entries");

  std::vector<long long> class_count(spec.num_classes, 0);
  for (const auto& [id, s] : by_id) ++class_count[s.label];
  if (spec.mode == TrainMode::Binary) {
    if (class_count[0] == 0) throw std::runtime_error("train_fold: training set has no real entries");
    if (class_count[1] == 0) throw std::runtime_error("train_fold: training set has no fake entries");
  } else {
    for (int c = 0; c < spec.num_classes; ++c)
      if (class_count[c] == 0)
        throw std::runtime_error("train_fold: empty class in training set: " +
                                 taxonomy.class_names[c]);
  }

  // stratified held-out slice: one tenth of each class, rounded down
  std::vector<std::string> train_ids, val_ids;
  {
    std::vector<std::vector<std::string>> per_class(spec.num_classes);
    for (const auto& [id, s] : by_id) per_class[s.label].push_back(id);
    for (int c = 0; c < spec.num_classes; ++c) {
      Rng rng = derive_rng(tcfg.seed, "val:" + std::to_string(c));
      detail::seeded_shuffle(per_class[c], rng);
      const std::size_t n_val = per_class[c].size() / 10;
      for (std::size_t i = 0; i < per_class[c].size(); ++i)
        (i < n_val ? val_ids : train_ids).push_back(per_class[c][i]);
    }
    std::sort(train_ids.begin(), train_ids.end());
    std::sort(val_ids.begin(), val_ids.end());
  }

  // decode every image once; training revisits them every epoch
  std::unordered_map<std::string, Image> cache;
  {
    std::vector<const std::string*> ids;
    for (const auto& [id, s] : by_id) {
      cache.emplace(id, Image{});
      ids.push_back(&id);
    }
    parallel_for(ids.size(), workers, [&](std::size_t i) {
      const Sample& s = by_id.at(*ids[i]);
      cache.at(*ids[i]) = load_image(resolve_entry_path(data_dir, s.entry->path));
    });
  }

  nn::Net<float> net(cfg, tcfg.seed);
  nn::Adam<float> adam(net.params());
  nn::Workspace<float> ws;
  nn::Tensor<float> x, dlogits;

  std::vector<EpochLog> log;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, tcfg);
    std::vector<std::string> order = train_ids;
    {
      Rng rng = derive_rng(tcfg.seed, "order:" + std::to_string(epoch));
      detail::seeded_shuffle(order, rng);
    }
    double loss_sum = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take = std::min<std::size_t>(tcfg.batch_size, order.size() - pos);
      net.zero_grads();
      for (std::size_t i = 0; i < take; ++i) {
        const std::string& id = order[pos + i];
        const Sample& s = by_id.at(id);
        Rng arng = derive_rng(tcfg.seed, "aug:" + id + ":" + std::to_string(epoch));
        const Image img = augment(cache.at(id), tcfg.aug, arng);
        nn::image_to_tensor(img, x);
        const auto& logits = net.forward(x, ws);
        loss_sum += nn::smoothed_ce(logits, s.label, tcfg.label_smoothing, spec.num_classes);
        nn::smoothed_ce_grad(logits, s.label, tcfg.label_smoothing, spec.num_classes, dlogits);
        const float inv = 1.0f / static_cast<float>(take);
        for (auto& g : dlogits.data) g *= inv;
        net.backward(dlogits, ws);
      }
      adam.step(net.params(), lr);
      pos += take;
    }

    EpochLog row;
    row.epoch = epoch;
    row.loss = loss_sum / static_cast<double>(order.size());
    row.lr = lr;
    if (!val_ids.empty()) {
      std::vector<int> bt, bp;
      for (const auto& id : val_ids) {
        const Sample& s = by_id.at(id);
        nn::image_to_tensor(cache.at(id), x);
        const auto& logits = net.forward(x, ws);
        const double p_fake = to_binary(nn::softmax_probs(logits), spec.real_model_index);
        bt.push_back(s.entry->class_index != taxonomy.real_index ? 1 : 0);
        bp.push_back(binary_decision(p_fake) ? 1 : 0);
      }
      row.val_balanced_accuracy = recall_mean_present(bt, bp, 2).to_double();
    } else {
      row.val_balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    log.push_back(row);
  }

  return TrainFoldResult{std::move(net), spec, std::move(log)};
}

}  // namespace artifact
