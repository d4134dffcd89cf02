#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "artifact/image.hpp"
#include "artifact/jpeg.hpp"
#include "artifact/manifest.hpp"
#include "artifact/modes.hpp"
#include "artifact/nn/loss.hpp"
#include "artifact/nn/net.hpp"
#include "artifact/taxonomy.hpp"

namespace artifact {

// Reduced fraction on 128-bit integers. Balanced accuracy is a mean of
// class recalls, so with desk-scale supports the exact value fits easily;
// keeping it exact lets tests compare against an independent rational
// oracle with no tolerance at all.
struct ExactRatio {
  __int128 num = 0;
  __int128 den = 1;

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  void reduce() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const __int128 g = gcd128(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  void add(__int128 n, __int128 d) {
    num = num * d + n * den;
    den = den * d;
    reduce();
  }

  static std::string int128_str(__int128 v) {
    if (v == 0) return "0";
    const bool neg = v < 0;
    unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : v;
    std::string s;
    while (u != 0) {
      s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
      u /= 10;
    }
    return neg ? "-" + s : s;
  }

  std::string str() const { return int128_str(num) + "/" + int128_str(den); }

  double to_double() const {
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
  }
};

// Complement of the real-class probability. Ties at the 0.5 threshold are
// decided as fake.
inline double to_binary(const std::vector<double>& probs, int real_index) {
  if (real_index < 0 || real_index >= static_cast<int>(probs.size()))
    throw std::runtime_error("to_binary: real_index out of range");
  double sum = 0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::runtime_error("to_binary: negative or non-finite probability");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-6)
    throw std::runtime_error("to_binary: probabilities do not sum to 1");
  return 1.0 - probs[real_index];
}

inline bool binary_decision(double p_fake) { return p_fake >= 0.5; }

namespace detail {

inline ExactRatio recall_mean(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              int n_classes, bool skip_empty) {
  if (y_true.size() != y_pred.size())
    throw std::runtime_error("balanced_accuracy: label vectors differ in length");
  if (n_classes < 1) throw std::runtime_error("balanced_accuracy: need at least one class");
  std::vector<long long> support(n_classes, 0), correct(n_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes)
      throw std::runtime_error("balanced_accuracy: label out of range");
    ++support[t];
    if (t == p) ++correct[t];
  }
  ExactRatio acc;
  int used = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (support[c] == 0) {
      if (!skip_empty)
        throw std::runtime_error("balanced_accuracy: class " + std::to_string(c) +
                                 " has no examples");
      continue;
    }
    acc.add(correct[c], support[c]);
    ++used;
  }
  if (used == 0) throw std::runtime_error("balanced_accuracy: no class has support");
  acc.den *= used;
  acc.reduce();
  return acc;
}

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// Mean per-class recall; every class must appear in y_true.
inline ExactRatio balanced_accuracy_exact(const std::vector<int>& y_true,
                                          const std::vector<int>& y_pred, int n_classes) {
  return detail::recall_mean(y_true, y_pred, n_classes, false);
}

inline double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                int n_classes) {
  return balanced_accuracy_exact(y_true, y_pred, n_classes).to_double();
}

// Report-level variant: classes without support are left out of the mean,
// so per-fold reports stay defined when a small fold misses a class.
inline ExactRatio recall_mean_present(const std::vector<int>& y_true,
                                      const std::vector<int>& y_pred, int n_classes) {
  return detail::recall_mean(y_true, y_pred, n_classes, true);
}

struct EvalReport {
  std::string mode;  // binary | multi | multi+uf
  bool fsr = false;
  bool uf = false;
  int fold = -1;
  int n_model_classes = 0;
  std::vector<std::string> model_class_names;

  std::vector<std::vector<long long>> confusion;  // model space; rows = true
  std::vector<long long> class_support;
  std::vector<long long> class_correct;
  double multi_balanced_accuracy = 0;  // mean recall over classes with support

  long long bin_tp = 0, bin_fn = 0, bin_tn = 0, bin_fp = 0;  // positive = fake
  ExactRatio binary_ba_exact;
  double binary_balanced_accuracy = 0;

  // generator id -> (predicted fake, total) over fake entries
  std::map<std::string, std::pair<long long, long long>> generator_recall;

  struct Row {
    std::string entry_id;
    int class_index = -1;   // taxonomy space
    int model_true = -1;    // model space, -1 = not a head class
    int model_pred = -1;
    double p_fake = 0;
    bool true_fake = false;
    bool pred_fake = false;
    std::optional<std::string> generator_id;
    bool unseen_generator = false;
  };
  std::vector<Row> rows;
};

// Binary balanced accuracy over an entry subset chosen by a predicate on
// the rows (used for seen-only / unseen-only splits of a fold report).
template <typename Pred>
ExactRatio subset_binary_ba(const EvalReport& report, Pred&& pred) {
  std::vector<int> t, p;
  for (const auto& row : report.rows) {
    if (!pred(row)) continue;
    t.push_back(row.true_fake ? 1 : 0);
    p.push_back(row.pred_fake ? 1 : 0);
  }
  return balanced_accuracy_exact(t, p, 2);
}

template <typename S>
EvalReport evaluate_entries(nn::Net<S>& net, const HeadSpec& spec,
                            const std::vector<ManifestEntry>& test_entries,
                            const ClassTaxonomy& tax, const std::string& data_dir, int fold_id) {
  tax.check();
  if (spec.num_classes != net.config().num_classes)
    throw std::runtime_error("evaluate: head spec does not match model");
  EvalReport rep;
  rep.mode = mode_name(spec.mode);
  rep.fsr = net.config().fsr;
  rep.uf = spec.uses_uf();
  rep.fold = fold_id;
  rep.n_model_classes = spec.num_classes;
  if (spec.mode == TrainMode::Binary) {
    rep.model_class_names = {"real", "fake"};
  } else {
    for (int c = 0; c < spec.num_classes; ++c) rep.model_class_names.push_back(tax.class_names[c]);
  }
  rep.confusion.assign(spec.num_classes, std::vector<long long>(spec.num_classes, 0));
  rep.class_support.assign(spec.num_classes, 0);
  rep.class_correct.assign(spec.num_classes, 0);

  nn::Workspace<S> ws;
  nn::Tensor<S> x;
  std::vector<int> bin_true, bin_pred;
  for (const auto& e : test_entries) {
    const Image img = load_image(resolve_entry_path(data_dir, e.path));
    nn::image_to_tensor(img, x);
    const auto& logits = net.forward(x, ws);
    const std::vector<double> probs = nn::softmax_probs(logits);

    EvalReport::Row row;
    row.entry_id = e.entry_id;
    row.class_index = e.class_index;
    row.model_true = model_label(e, tax, spec);
    int arg = 0;
    for (int c = 1; c < spec.num_classes; ++c)
      if (probs[c] > probs[arg]) arg = c;
    row.model_pred = arg;
    row.p_fake = to_binary(probs, spec.real_model_index);
    row.true_fake = e.class_index != tax.real_index;
    row.pred_fake = binary_decision(row.p_fake);
    row.generator_id = e.generator_id;
    if (e.generator_id) {
      const GeneratorInfo* g = tax.find_generator(*e.generator_id);
      if (!g) throw std::runtime_error("evaluate: entry " + e.entry_id + " has unknown generator");
      row.unseen_generator = !g->seen;
      auto& gr = rep.generator_recall[*e.generator_id];
      gr.first += row.pred_fake ? 1 : 0;
      gr.second += 1;
    }

    if (row.model_true >= 0) {
      ++rep.confusion[row.model_true][row.model_pred];
      ++rep.class_support[row.model_true];
      if (row.model_true == row.model_pred) ++rep.class_correct[row.model_true];
    }
    bin_true.push_back(row.true_fake ? 1 : 0);
    bin_pred.push_back(row.pred_fake ? 1 : 0);
    if (row.true_fake && row.pred_fake) ++rep.bin_tp;
    else if (row.true_fake && !row.pred_fake) ++rep.bin_fn;
    else if (!row.true_fake && row.pred_fake) ++rep.bin_fp;
    else ++rep.bin_tn;
    rep.rows.push_back(std::move(row));
  }
  if (rep.rows.empty()) throw std::runtime_error("evaluate: empty test set");

  {
    std::vector<int> mt, mp;
    for (const auto& row : rep.rows) {
      if (row.model_true < 0) continue;
      mt.push_back(row.model_true);
      mp.push_back(row.model_pred);
    }
    if (!mt.empty())
      rep.multi_balanced_accuracy =
          recall_mean_present(mt, mp, spec.num_classes).to_double();
  }
  rep.binary_ba_exact = recall_mean_present(bin_true, bin_pred, 2);
  rep.binary_balanced_accuracy = rep.binary_ba_exact.to_double();
  return rep;
}

// Checkpoint-level entry point enforcing the taxonomy-match precondition.
template <typename S>
EvalReport evaluate_fold(nn::Net<S>& net, const ClassTaxonomy& model_taxonomy,
                         const std::vector<ManifestEntry>& test_entries,
                         const ClassTaxonomy& manifest_taxonomy, const std::string& data_dir,
                         int fold_id) {
  if (model_taxonomy.class_names != manifest_taxonomy.class_names ||
      model_taxonomy.real_index != manifest_taxonomy.real_index ||
      model_taxonomy.uf_index != manifest_taxonomy.uf_index)
    throw std::runtime_error("evaluate: checkpoint taxonomy does not match manifest taxonomy");
  const HeadSpec spec = head_spec_from_model(net.config(), manifest_taxonomy);
  return evaluate_entries(net, spec, test_entries, manifest_taxonomy, data_dir, fold_id);
}

inline void write_eval_csv(const EvalReport& rep, std::ostream& out,
                           const std::vector<std::string>& header_comments = {}) {
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "entry_id,class_index,model_true,model_pred,p_fake,true_label,pred_label,generator\n";
  for (const auto& row : rep.rows) {
    out << row.entry_id << "," << row.class_index << "," << row.model_true << ","
        << row.model_pred << "," << detail::fmt(row.p_fake, 9) << ","
        << (row.true_fake ? "fake" : "real") << "," << (row.pred_fake ? "fake" : "real") << ","
        << (row.generator_id ? *row.generator_id : "-") << "\n";
  }
}

inline void write_eval_text(const EvalReport& rep, std::ostream& out,
                            const std::vector<std::string>& header_comments = {}) {
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "mode=" << rep.mode << " fsr=" << (rep.fsr ? 1 : 0) << " fold=" << rep.fold << "\n";
  out << "binary confusion (positive = fake):\n";
  out << "  tp=" << rep.bin_tp << " fn=" << rep.bin_fn << " fp=" << rep.bin_fp
      << " tn=" << rep.bin_tn << "\n";
  out << "binary balanced accuracy: " << detail::fmt(rep.binary_balanced_accuracy) << " ("
      << rep.binary_ba_exact.str() << ")\n";
  if (rep.mode != "binary") {
    out << "head balanced accuracy:  " << detail::fmt(rep.multi_balanced_accuracy) << "\n";
  }
  out << "per-class recall:\n";
  for (int c = 0; c < rep.n_model_classes; ++c) {
    out << "  " << rep.model_class_names[c] << ": ";
    if (rep.class_support[c] == 0) {
      out << "n/a (no support)\n";
    } else {
      out << detail::fmt(static_cast<double>(rep.class_correct[c]) /
                         static_cast<double>(rep.class_support[c]))
          << " (" << rep.class_correct[c] << "/" << rep.class_support[c] << ")\n";
    }
  }
  if (!rep.generator_recall.empty()) {
    out << "per-generator fake recall:\n";
    for (const auto& [gid, pr] : rep.generator_recall) {
      out << "  " << gid << ": "
          << detail::fmt(static_cast<double>(pr.first) / static_cast<double>(pr.second)) << " ("
          << pr.first << "/" << pr.second << ")\n";
    }
  }
}

}  // namespace artifact
