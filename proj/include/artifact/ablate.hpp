#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "artifact/eval.hpp"
#include "artifact/log.hpp"
#include "artifact/manifest.hpp"
#include "artifact/modes.hpp"
#include "artifact/split.hpp"
#include "artifact/train.hpp"

namespace artifact {

struct AblationRowSpec {
  const char* label;
  TrainMode mode;
  bool fsr;
  double reference_full_scale;  // documentation column, percent
};

// Fixed six-configuration ladder; the reference column carries the
// full-scale percentages for side-by-side reading and is never asserted
// against desk-scale runs.
inline const std::array<AblationRowSpec, 6>& ablation_rows() {
  static const std::array<AblationRowSpec, 6> rows = {{
      {"Binary-class", TrainMode::Binary, false, 78.21},
      {"Binary-class + FSR", TrainMode::Binary, true, 81.30},
      {"Multi-class", TrainMode::Multi, false, 83.12},
      {"Multi-class + UF class", TrainMode::MultiUf, false, 84.98},
      {"Multi-class + FSR", TrainMode::Multi, true, 85.56},
      {"Multi-class + FSR + UF class", TrainMode::MultiUf, true, 87.62},
  }};
  return rows;
}

struct AblationRowResult {
  AblationRowSpec spec;
  bool ok = false;
  std::string error;
  std::vector<double> fold_ba;
  std::vector<std::string> fold_ba_exact;
  std::vector<double> fold_seen_ba;    // real + seen-generator fakes
  std::vector<double> fold_unseen_ba;  // real + unseen-generator fakes
  double mean_ba = 0;
  double mean_seen_ba = 0;
  double mean_unseen_ba = 0;
};

struct AblationResult {
  int n_folds = 0;
  std::vector<AblationRowResult> rows;
  std::vector<std::vector<EvalReport>> reports;          // [row][fold], empty on row failure
  std::vector<std::vector<std::vector<EpochLog>>> logs;  // [row][fold]
};

namespace detail {

inline double nan_mean(const std::vector<double>& v) {
  double sum = 0;
  int n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

}  // namespace detail

inline AblationResult run_ablation(const Manifest& manifest, const FoldAssignment& fa,
                                   const std::string& data_dir, const nn::ModelConfig& base_cfg,
                                   const TrainConfig& tcfg, int workers = 1) {
  AblationResult result;
  result.n_folds = fa.n_folds;
  result.reports.resize(ablation_rows().size());
  result.logs.resize(ablation_rows().size());
  for (std::size_t r = 0; r < ablation_rows().size(); ++r) {
    const AblationRowSpec& spec = ablation_rows()[r];
    AblationRowResult row;
    row.spec = spec;
    try {
      for (int f = 0; f < fa.n_folds; ++f) {
        log_info("ablation row " + std::to_string(r + 1) + "/6 '" + spec.label + "' fold " +
                 std::to_string(f));
        const FoldView fv = fold_view(manifest.entries, fa, f);
        TrainFoldResult tr = train_fold(fv.train, manifest.taxonomy, data_dir, spec.mode,
                                        spec.fsr, base_cfg, tcfg, workers);
        EvalReport rep = evaluate_entries(tr.net, tr.spec, fv.test, manifest.taxonomy, data_dir, f);
        row.fold_ba.push_back(rep.binary_balanced_accuracy);
        row.fold_ba_exact.push_back(rep.binary_ba_exact.str());
        auto subset_or_nan = [&](bool want_unseen) {
          try {
            return subset_binary_ba(rep, [&](const EvalReport::Row& er) {
                     if (!er.true_fake) return true;
                     return er.unseen_generator == want_unseen;
                   })
                .to_double();
          } catch (const std::exception&) {
            return std::numeric_limits<double>::quiet_NaN();
          }
        };
        row.fold_seen_ba.push_back(subset_or_nan(false));
        row.fold_unseen_ba.push_back(subset_or_nan(true));
        result.logs[r].push_back(std::move(tr.log));
        result.reports[r].push_back(std::move(rep));
      }
      row.mean_ba = detail::nan_mean(row.fold_ba);
      row.mean_seen_ba = detail::nan_mean(row.fold_seen_ba);
      row.mean_unseen_ba = detail::nan_mean(row.fold_unseen_ba);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      log_warn(std::string("ablation row failed: ") + spec.label + ": " + e.what());
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

inline void write_ablation_csv(const AblationResult& result, std::ostream& out,
                               const std::vector<std::string>& header_comments = {}) {
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "row,label,mode,fsr,uf,status,mean_binary_balanced_accuracy,seen_ba,unseen_ba,"
         "reference_full_scale,per_fold\n";
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    const auto& row = result.rows[r];
    out << (r + 1) << "," << row.spec.label << ","
        << (row.spec.mode == TrainMode::Binary ? "binary" : "multi") << ","
        << (row.spec.fsr ? 1 : 0) << "," << (row.spec.mode == TrainMode::MultiUf ? 1 : 0) << ","
        << (row.ok ? "ok" : "failed") << ",";
    if (row.ok) {
      out << detail::fmt(row.mean_ba) << "," << detail::fmt(row.mean_seen_ba) << ","
          << detail::fmt(row.mean_unseen_ba);
    } else {
      out << ",,";
    }
    char ref[32];
    std::snprintf(ref, sizeof(ref), "%.2f", row.spec.reference_full_scale);
    out << "," << ref << ",";
    for (std::size_t f = 0; f < row.fold_ba.size(); ++f) {
      if (f) out << ";";
      out << detail::fmt(row.fold_ba[f]);
    }
    out << "\n";
  }
}

inline void write_ablation_text(const AblationResult& result, std::ostream& out,
                                const std::vector<std::string>& header_comments = {}) {
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "ablation over " << result.n_folds << " folds (binary balanced accuracy)\n";
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-3s %-30s %-10s %-10s %-10s %-12s %s\n", "#", "configuration",
                "toy BA", "seen", "unseen", "reference", "status");
  out << buf;
  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    const auto& row = result.rows[r];
    if (row.ok) {
      std::snprintf(buf, sizeof(buf), "%-3zu %-30s %-10.4f %-10.4f %-10.4f %-12.2f %s\n", r + 1,
                    row.spec.label, row.mean_ba, row.mean_seen_ba, row.mean_unseen_ba,
                    row.spec.reference_full_scale, "ok");
    } else {
      std::snprintf(buf, sizeof(buf), "%-3zu %-30s %-10s %-10s %-10s %-12.2f failed: %s\n", r + 1,
                    row.spec.label, "-", "-", "-", row.spec.reference_full_scale,
                    row.error.c_str());
    }
    out << buf;
  }
  out << "reference column: full-scale percentages for comparison only, never asserted here\n";
}

}  // namespace artifact
