#pragma once

#include <stdexcept>
#include <string>

#include "artifact/manifest.hpp"
#include "artifact/nn/net.hpp"
#include "artifact/taxonomy.hpp"

namespace artifact {

// The three head configurations the ablation exercises. Binary collapses
// every fake entry onto one label; Multi drops unseen-generator entries
// from training; MultiUf trains them as one extra class.
enum class TrainMode { Binary, Multi, MultiUf };

inline std::string mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::Binary: return "binary";
    case TrainMode::Multi: return "multi";
    default: return "multi+uf";
  }
}

struct HeadSpec {
  TrainMode mode = TrainMode::MultiUf;
  int num_classes = 0;
  int real_model_index = 0;

  bool uses_uf() const { return mode == TrainMode::MultiUf; }
  nn::HeadMode head_mode() const {
    return mode == TrainMode::Binary ? nn::HeadMode::Binary : nn::HeadMode::MultiClass;
  }
};

// Multi (without the UF output) reuses taxonomy indices directly, which
// requires the UF class to sit last; the canonical taxonomy layout keeps
// it there.
inline HeadSpec make_head_spec(TrainMode mode, const ClassTaxonomy& tax) {
  tax.check();
  HeadSpec spec;
  spec.mode = mode;
  switch (mode) {
    case TrainMode::Binary:
      spec.num_classes = 2;
      spec.real_model_index = 0;
      break;
    case TrainMode::Multi:
      if (tax.uf_index != tax.num_classes() - 1)
        throw std::runtime_error("head spec: multi mode without UF needs the UF class last");
      spec.num_classes = tax.num_classes() - 1;
      spec.real_model_index = tax.real_index;
      break;
    case TrainMode::MultiUf:
      spec.num_classes = tax.num_classes();
      spec.real_model_index = tax.real_index;
      break;
  }
  return spec;
}

// Model-space label for a manifest entry; -1 marks entries excluded from
// this head (UF entries under plain Multi).
inline int model_label(const ManifestEntry& e, const ClassTaxonomy& tax, const HeadSpec& spec) {
  switch (spec.mode) {
    case TrainMode::Binary: return e.class_index == tax.real_index ? 0 : 1;
    case TrainMode::Multi: return e.class_index == tax.uf_index ? -1 : e.class_index;
    default: return e.class_index;
  }
}

inline HeadSpec head_spec_from_model(const nn::ModelConfig& cfg, const ClassTaxonomy& tax) {
  if (cfg.head_mode == nn::HeadMode::Binary) return make_head_spec(TrainMode::Binary, tax);
  if (cfg.num_classes == tax.num_classes()) return make_head_spec(TrainMode::MultiUf, tax);
  if (cfg.num_classes == tax.num_classes() - 1) return make_head_spec(TrainMode::Multi, tax);
  throw std::runtime_error("head spec: checkpoint classes do not fit the manifest taxonomy");
}

}  // namespace artifact
