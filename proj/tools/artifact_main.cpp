// artifact: command-line front end for the library under include/artifact.
//
// Subcommands:
//   toygen   synthesize a labelled toy dataset with planted generator cues
//   build    impair a source manifest into the standard training corpus
//   split    assign manifest entries to cross-validation folds
//   train    fit one fold's detector and write a checkpoint
//   eval     score a checkpoint on one fold's held-out entries
//   ablate   run the six-row head/stem study over all folds
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "artifact/ablate.hpp"
#include "artifact/config.hpp"
#include "artifact/eval.hpp"
#include "artifact/impair.hpp"
#include "artifact/log.hpp"
#include "artifact/manifest.hpp"
#include "artifact/modes.hpp"
#include "artifact/nn/checkpoint.hpp"
#include "artifact/parallel.hpp"
#include "artifact/split.hpp"
#include "artifact/toyforge.hpp"
#include "artifact/train.hpp"
#include "artifact/version.hpp"

namespace {

using namespace artifact;
namespace fs = std::filesystem;

const char* kUsage =
    "usage: artifact <subcommand> [flags]\n"
    "\n"
    "subcommands:\n"
    "  toygen   synthesize a labelled toy dataset\n"
    "  build    impair a source manifest into a training corpus\n"
    "  split    assign manifest entries to cross-validation folds\n"
    "  train    fit one fold's detector, write a checkpoint\n"
    "  eval     score a checkpoint on one fold's test entries\n"
    "  ablate   run the six-row study over all folds\n"
    "\n"
    "global flags: --version; every subcommand takes --help and\n"
    "--config FILE (key=value lines, flags override the file).\n";

// Every subcommand writes the same provenance block into its artifacts and
// run log: tool and format versions plus the full effective configuration
// with where each value came from.
std::vector<std::string> repro_header(const std::string& sub, const Options& opts) {
  std::vector<std::string> lines;
  lines.push_back(std::string("artifact ") + kToolVersion + " " + sub);
  lines.push_back("formats: manifest=" + std::to_string(kManifestFormatVersion) +
                  " folds=" + std::to_string(kFoldsFormatVersion) +
                  " checkpoint=" + std::to_string(kCheckpointFormatVersion));
  for (const auto& l : opts.effective_lines()) lines.push_back(l);
  return lines;
}

void log_header(const std::vector<std::string>& header) {
  for (const auto& l : header) log_info(l);
}

int finish_help(const Options& opts, const std::string& sub, const std::string& summary) {
  std::cout << "usage: artifact " << sub << " [flags]\n" << summary << "\n" << opts.help_text();
  return 0;
}

bool wants_help(const std::vector<std::string>& args) {
  for (const auto& a : args)
    if (a == "--help" || a == "-h") return true;
  return false;
}

unsigned resolve_workers(const Options& opts, const std::string& ns) {
  const long long w = opts.get_int(ns + ".workers");
  if (w < 0) throw UsageError("workers: must be >= 0");
  return w == 0 ? default_workers() : static_cast<unsigned>(w);
}

void add_workers(Options& opts, const std::string& ns) {
  opts.add(ns + ".workers", "--workers", "0", "worker threads (0 = hardware default)");
}

std::string manifest_dir_of(const std::string& manifest_path) {
  const fs::path parent = fs::path(manifest_path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

void write_text_file(const std::string& path, const std::string& what,
                     const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(what + ": cannot open " + path);
  body(out);
  if (!out) throw std::runtime_error(what + ": write failed for " + path);
}

// ---------------------------------------------------------------- toygen --

int cmd_toygen(const std::vector<std::string>& args) {
  Options opts;
  opts.add("toygen.out", "--out", "", "output directory", false, true);
  opts.add("toygen.generators", "--generators", "7", "number of fake generators");
  opts.add("toygen.seen", "--seen", "5", "generators treated as seen classes");
  opts.add("toygen.per_class", "--per-class", "100", "images per class");
  opts.add("toygen.size", "--size", "64", "square image side in pixels");
  opts.add("toygen.seed", "--seed", "11", "master seed");
  opts.add("toygen.amplitude", "--amplitude", "30", "planted grating strength (0..255)");
  add_workers(opts, "toygen");
  if (wants_help(args))
    return finish_help(opts, "toygen", "Synthesize a labelled toy dataset with planted cues.");
  opts.parse_args(args);

  ToySpec spec;
  spec.n_generators = static_cast<int>(opts.get_int("toygen.generators"));
  spec.k_seen = static_cast<int>(opts.get_int("toygen.seen"));
  spec.images_per_class = static_cast<int>(opts.get_int("toygen.per_class"));
  spec.image_size = static_cast<int>(opts.get_int("toygen.size"));
  spec.seed = opts.get_u64("toygen.seed");
  spec.amplitude = opts.get_real("toygen.amplitude");

  const std::string out_dir = opts.get_str("toygen.out");
  const auto header = repro_header("toygen", opts);
  log_header(header);
  const ToyDataset ds = synth_dataset(spec, out_dir, static_cast<int>(resolve_workers(opts, "toygen")),
                                      header);
  log_info("toygen: wrote " + std::to_string(ds.manifest.entries.size()) + " images to " +
           out_dir);
  return 0;
}

// ----------------------------------------------------------------- build --

int cmd_build(const std::vector<std::string>& args) {
  Options opts;
  opts.add("build.manifest", "--manifest", "", "input manifest (tsv)", false, true);
  opts.add("build.out", "--out", "", "output directory", false, true);
  opts.add("build.seed", "--seed", "0", "master seed");
  opts.add("build.crop_min", "--crop-min", "160", "minimum crop side");
  opts.add("build.crop_max", "--crop-max", "2048", "maximum crop side");
  opts.add("build.ratio", "--ratio", "5/8", "aspect ratio floor, num/den");
  opts.add("build.target", "--target", "200", "resize target side");
  opts.add("build.qmin", "--qmin", "65", "minimum jpeg quality");
  opts.add("build.qmax", "--qmax", "100", "maximum jpeg quality");
  add_workers(opts, "build");
  if (wants_help(args))
    return finish_help(opts, "build", "Impair a source manifest into a training corpus.");
  opts.parse_args(args);

  ImpairmentConfig cfg;
  cfg.master_seed = opts.get_u64("build.seed");
  cfg.crop_min = static_cast<int>(opts.get_int("build.crop_min"));
  cfg.crop_max = static_cast<int>(opts.get_int("build.crop_max"));
  const auto ratio = opts.get_ratio("build.ratio");
  cfg.ratio_num = ratio.first;
  cfg.ratio_den = ratio.second;
  cfg.target_size = static_cast<int>(opts.get_int("build.target"));
  cfg.q_min = static_cast<int>(opts.get_int("build.qmin"));
  cfg.q_max = static_cast<int>(opts.get_int("build.qmax"));

  const std::string manifest_path = opts.get_str("build.manifest");
  const std::string out_dir = opts.get_str("build.out");
  const auto header = repro_header("build", opts);
  log_header(header);

  const Manifest input = read_manifest(manifest_path);
  const BuildResult result = build_dataset(input, manifest_dir_of(manifest_path), cfg, out_dir,
                                           resolve_workers(opts, "build"), header);
  log_info("build: kept " + std::to_string(result.manifest.entries.size()) + " of " +
           std::to_string(input.entries.size()) + " entries (" +
           std::to_string(result.skips.size()) + " skipped)");
  return 0;
}

// ----------------------------------------------------------------- split --

int cmd_split(const std::vector<std::string>& args) {
  Options opts;
  opts.add("split.manifest", "--manifest", "", "input manifest (tsv)", false, true);
  opts.add("split.folds", "--folds", "4", "number of folds");
  opts.add("split.seed", "--seed", "0", "shuffle seed");
  opts.add("split.out", "--out", "", "assignment file to write", false, true);
  if (wants_help(args))
    return finish_help(opts, "split", "Assign manifest entries to cross-validation folds.");
  opts.parse_args(args);

  const Manifest m = read_manifest(opts.get_str("split.manifest"));
  const auto header = repro_header("split", opts);
  log_header(header);
  const FoldAssignment fa =
      assign_folds(m.entries, m.taxonomy, static_cast<int>(opts.get_int("split.folds")),
                   opts.get_u64("split.seed"));
  write_assignment(fa, opts.get_str("split.out"), header);
  log_info("split: assigned " + std::to_string(fa.assignment.size()) + " entries to " +
           std::to_string(fa.n_folds) + " folds");
  return 0;
}

// ----------------------------- shared train/ablate option registration --

void add_model_opts(Options& opts) {
  opts.add("model.stem_kernel", "--stem-kernel", "4", "stem kernel side");
  opts.add("model.depths", "--depths", "1,1,2,1", "blocks per stage, comma separated");
  opts.add("model.widths", "--widths", "32,64,128,256", "channels per stage, comma separated");
  opts.add("model.input_size", "--input-size", "200", "square input side");
}

void add_train_opts(Options& opts, const std::string& ns) {
  opts.add(ns + ".seed", "--seed", "0", "training seed");
  opts.add(ns + ".lr0", "--lr0", "1e-4", "initial learning rate");
  opts.add(ns + ".gamma", "--gamma", "0.9", "per-epoch lr decay factor");
  opts.add(ns + ".epochs", "--epochs", "20", "training epochs");
  opts.add(ns + ".batch", "--batch", "32", "batch size");
  opts.add(ns + ".eps", "--eps", "0.05", "label smoothing");
  opts.add(ns + ".no_augment", "--no-augment", "0", "disable train-time augmentation", true);
}

nn::ModelConfig model_from_opts(const Options& opts) {
  nn::ModelConfig cfg;
  cfg.stem_kernel = static_cast<int>(opts.get_int("model.stem_kernel"));
  cfg.stage_depths = opts.get_int_list("model.depths");
  cfg.stage_widths = opts.get_int_list("model.widths");
  cfg.input_size = static_cast<int>(opts.get_int("model.input_size"));
  return cfg;
}

TrainConfig train_from_opts(const Options& opts, const std::string& ns) {
  TrainConfig tcfg;
  tcfg.seed = opts.get_u64(ns + ".seed");
  tcfg.lr0 = opts.get_real(ns + ".lr0");
  tcfg.decay_gamma = opts.get_real(ns + ".gamma");
  tcfg.epochs = static_cast<int>(opts.get_int(ns + ".epochs"));
  tcfg.batch_size = static_cast<int>(opts.get_int(ns + ".batch"));
  tcfg.label_smoothing = opts.get_real(ns + ".eps");
  if (opts.get_switch(ns + ".no_augment")) tcfg.aug = AugmentConfig::none();
  return tcfg;
}

// ----------------------------------------------------------------- train --

int cmd_train(const std::vector<std::string>& args) {
  Options opts;
  opts.add("train.manifest", "--manifest", "", "input manifest (tsv)", false, true);
  opts.add("train.assignment", "--assignment", "", "fold assignment file", false, true);
  opts.add("train.fold", "--fold", "0", "fold to hold out");
  opts.add("train.mode", "--mode", "", "head mode: binary | multi", false, true);
  opts.add("train.fsr", "--fsr", "0", "halve the stem stride, keep its kernel", true);
  opts.add("train.uf", "--uf", "0", "add the unseen-fake class (multi only)", true);
  opts.add("train.out", "--out", "", "checkpoint directory", false, true);
  add_train_opts(opts, "train");
  add_model_opts(opts);
  add_workers(opts, "train");
  if (wants_help(args))
    return finish_help(opts, "train", "Fit one fold's detector and write a checkpoint.");
  opts.parse_args(args);

  const std::string mode_str = opts.get_str("train.mode");
  const bool uf = opts.get_switch("train.uf");
  TrainMode mode;
  if (mode_str == "binary") {
    if (uf) throw UsageError("--uf requires --mode multi");
    mode = TrainMode::Binary;
  } else if (mode_str == "multi") {
    mode = uf ? TrainMode::MultiUf : TrainMode::Multi;
  } else {
    throw UsageError("--mode must be 'binary' or 'multi', got '" + mode_str + "'");
  }

  const std::string manifest_path = opts.get_str("train.manifest");
  const Manifest m = read_manifest(manifest_path);
  const FoldAssignment fa = read_assignment(opts.get_str("train.assignment"));
  const int fold = static_cast<int>(opts.get_int("train.fold"));
  if (fold < 0 || fold >= fa.n_folds)
    throw UsageError("--fold must be in [0, " + std::to_string(fa.n_folds) + ")");

  const auto header = repro_header("train", opts);
  log_header(header);

  const FoldView fv = fold_view(m.entries, fa, fold);
  log_info("train: fold " + std::to_string(fold) + ", " + std::to_string(fv.train.size()) +
           " train / " + std::to_string(fv.test.size()) + " test entries");

  const TrainFoldResult result = train_fold(
      fv.train, m.taxonomy, manifest_dir_of(manifest_path), mode, opts.get_switch("train.fsr"),
      model_from_opts(opts), train_from_opts(opts, "train"),
      static_cast<int>(resolve_workers(opts, "train")));

  const std::string out_dir = opts.get_str("train.out");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("train: cannot create " + out_dir + ": " + ec.message());
  const std::string ckpt_path = (fs::path(out_dir) / ("fold-" + std::to_string(fold) + ".ckpt"))
                                    .string();
  nn::save_checkpoint(result.net, m.taxonomy, ckpt_path, header);
  const std::string log_path =
      (fs::path(out_dir) / ("train-fold-" + std::to_string(fold) + ".csv")).string();
  write_text_file(log_path, "train",
                  [&](std::ostream& out) { write_train_log(result.log, out, header); });

  if (!result.log.empty()) {
    char buf[120];
    const double val_ba = result.log.back().val_balanced_accuracy;
    if (std::isnan(val_ba)) {
      // too few entries for the stratified tenth; the log column stays nan
      std::snprintf(buf, sizeof(buf), "train: final loss %.6f, no held-out slice at this size",
                    result.log.back().loss);
    } else {
      std::snprintf(buf, sizeof(buf), "train: final loss %.6f, held-out balanced accuracy %.6f",
                    result.log.back().loss, val_ba);
    }
    log_info(buf);
  }
  log_info("train: wrote " + ckpt_path);
  return 0;
}

// ------------------------------------------------------------------ eval --

int cmd_eval(const std::vector<std::string>& args) {
  Options opts;
  opts.add("eval.ckpt", "--ckpt", "", "checkpoint file", false, true);
  opts.add("eval.manifest", "--manifest", "", "input manifest (tsv)", false, true);
  opts.add("eval.assignment", "--assignment", "", "fold assignment file", false, true);
  opts.add("eval.fold", "--fold", "0", "fold whose test half is scored");
  opts.add("eval.report", "--report", "", "report csv to write (text twin at .txt)", false, true);
  if (wants_help(args))
    return finish_help(opts, "eval", "Score a checkpoint on one fold's test entries.");
  opts.parse_args(args);

  const std::string manifest_path = opts.get_str("eval.manifest");
  const Manifest m = read_manifest(manifest_path);
  const FoldAssignment fa = read_assignment(opts.get_str("eval.assignment"));
  const int fold = static_cast<int>(opts.get_int("eval.fold"));
  if (fold < 0 || fold >= fa.n_folds)
    throw UsageError("--fold must be in [0, " + std::to_string(fa.n_folds) + ")");

  const auto header = repro_header("eval", opts);
  log_header(header);

  const nn::Checkpoint ck = nn::load_checkpoint(opts.get_str("eval.ckpt"));
  nn::Net<float> net(ck.cfg, 0);
  nn::load_into(net, ck);

  const FoldView fv = fold_view(m.entries, fa, fold);
  const EvalReport rep =
      evaluate_fold(net, ck.taxonomy, fv.test, m.taxonomy, manifest_dir_of(manifest_path), fold);

  const std::string report_path = opts.get_str("eval.report");
  write_text_file(report_path, "eval",
                  [&](std::ostream& out) { write_eval_csv(rep, out, header); });
  write_text_file(report_path + ".txt", "eval",
                  [&](std::ostream& out) { write_eval_text(rep, out, header); });

  char buf[160];
  std::snprintf(buf, sizeof(buf), "eval: mode=%s fsr=%d fold=%d binary balanced accuracy %.6f",
                rep.mode.c_str(), rep.fsr ? 1 : 0, fold, rep.binary_balanced_accuracy);
  log_info(buf);
  log_info("eval: wrote " + report_path + " and " + report_path + ".txt");
  return 0;
}

// ---------------------------------------------------------------- ablate --

int cmd_ablate(const std::vector<std::string>& args) {
  Options opts;
  opts.add("ablate.manifest", "--manifest", "", "input manifest (tsv)", false, true);
  opts.add("ablate.assignment", "--assignment", "", "fold assignment file", false, true);
  opts.add("ablate.out", "--out", "", "output directory", false, true);
  add_train_opts(opts, "ablate");
  add_model_opts(opts);
  add_workers(opts, "ablate");
  if (wants_help(args))
    return finish_help(opts, "ablate", "Run the six-row head/stem study over all folds.");
  opts.parse_args(args);

  const std::string manifest_path = opts.get_str("ablate.manifest");
  const Manifest m = read_manifest(manifest_path);
  const FoldAssignment fa = read_assignment(opts.get_str("ablate.assignment"));

  const std::string out_dir = opts.get_str("ablate.out");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("ablate: cannot create " + out_dir + ": " + ec.message());

  const auto header = repro_header("ablate", opts);
  log_header(header);

  const AblationResult result =
      run_ablation(m, fa, manifest_dir_of(manifest_path), model_from_opts(opts),
                   train_from_opts(opts, "ablate"), static_cast<int>(resolve_workers(opts, "ablate")));

  write_text_file((fs::path(out_dir) / "ablation.csv").string(), "ablate",
                  [&](std::ostream& out) { write_ablation_csv(result, out, header); });
  write_text_file((fs::path(out_dir) / "ablation.txt").string(), "ablate",
                  [&](std::ostream& out) { write_ablation_text(result, out, header); });

  for (std::size_t r = 0; r < result.rows.size(); ++r) {
    for (std::size_t f = 0; f < result.reports[r].size(); ++f) {
      const std::string stem = "row" + std::to_string(r + 1) + "-fold" + std::to_string(f);
      write_text_file((fs::path(out_dir) / (stem + ".eval.csv")).string(), "ablate",
                      [&](std::ostream& out) { write_eval_csv(result.reports[r][f], out, header); });
      write_text_file((fs::path(out_dir) / (stem + ".train.csv")).string(), "ablate",
                      [&](std::ostream& out) { write_train_log(result.logs[r][f], out, header); });
    }
  }

  int ok = 0;
  for (const auto& row : result.rows) {
    if (row.ok) ++ok;
    char buf[200];
    if (row.ok) {
      std::snprintf(buf, sizeof(buf), "ablate: %-30s mean BA %.4f (reference %.2f)",
                    row.spec.label, row.mean_ba, row.spec.reference_full_scale);
    } else {
      std::snprintf(buf, sizeof(buf), "ablate: %-30s failed: %s", row.spec.label,
                    row.error.c_str());
    }
    log_info(buf);
  }
  log_info("ablate: " + std::to_string(ok) + "/" + std::to_string(result.rows.size()) +
           " rows ok, wrote " + out_dir + "/ablation.csv");
  return ok > 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string sub = args[0];
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    if (sub == "--help" || sub == "-h" || sub == "help") {
      std::cout << kUsage;
      return 0;
    }
    if (sub == "--version") {
      std::cout << "artifact " << artifact::kToolVersion << " (formats: manifest="
                << artifact::kManifestFormatVersion << " folds=" << artifact::kFoldsFormatVersion
                << " checkpoint=" << artifact::kCheckpointFormatVersion << ")\n";
      return 0;
    }
    if (sub == "toygen") return cmd_toygen(rest);
    if (sub == "build") return cmd_build(rest);
    if (sub == "split") return cmd_split(rest);
    if (sub == "train") return cmd_train(rest);
    if (sub == "eval") return cmd_eval(rest);
    if (sub == "ablate") return cmd_ablate(rest);
    throw artifact::UsageError("unknown subcommand '" + sub + "'");
  } catch (const artifact::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << kUsage;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
