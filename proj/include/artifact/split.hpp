#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "artifact/manifest.hpp"
#include "artifact/rng.hpp"
#include "artifact/version.hpp"

namespace artifact {

struct FoldAssignment {
  int n_folds = 0;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignment;  // entry_id -> fold

  int fold_of(const std::string& entry_id) const {
    const auto it = assignment.find(entry_id);
    if (it == assignment.end())
      throw std::runtime_error("fold assignment missing entry " + entry_id);
    return it->second;
  }
};

namespace detail {

// Fisher-Yates over ids, high index down, pinned to our bounded draw.
inline void seeded_shuffle(std::vector<std::string>& ids, Rng& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace detail

// Hybrid K-fold: plain per-class K-fold for the real and seen-fake classes
// (same generators may appear on both sides of a split), group-K-fold by
// generator for the UF class (a generator's images never straddle folds).
// Entries are canonically sorted by entry_id before the seeded shuffle, so
// the assignment does not depend on manifest row order.
inline FoldAssignment assign_folds(const std::vector<ManifestEntry>& entries,
                                   const ClassTaxonomy& taxonomy, int n_folds,
                                   std::uint64_t seed) {
  taxonomy.check();
  if (n_folds < 2) throw std::runtime_error("assign_folds: n_folds must be >= 2");

  std::vector<std::vector<std::string>> per_class(
      static_cast<std::size_t>(taxonomy.num_classes()));
  std::map<std::string, std::vector<std::string>> uf_groups;  // generator -> ids
  for (const auto& e : entries) {
    if (e.class_index < 0 || e.class_index >= taxonomy.num_classes())
      throw std::runtime_error("assign_folds: entry " + e.entry_id + " has bad class index");
    if (e.class_index == taxonomy.uf_index) {
      if (!e.generator_id)
        throw std::runtime_error("assign_folds: UF entry " + e.entry_id + " lacks generator");
      uf_groups[*e.generator_id].push_back(e.entry_id);
    } else {
      per_class[static_cast<std::size_t>(e.class_index)].push_back(e.entry_id);
    }
  }

  FoldAssignment fa;
  fa.n_folds = n_folds;
  fa.seed = seed;

  // KFold per non-UF class: seeded shuffle, then contiguous chunks whose
  // sizes differ by at most one (the first n%k folds take the extra entry).
  for (int c = 0; c < taxonomy.num_classes(); ++c) {
    if (c == taxonomy.uf_index) continue;
    auto& ids = per_class[static_cast<std::size_t>(c)];
    if (ids.empty()) continue;
    if (static_cast<int>(ids.size()) < n_folds)
      throw std::runtime_error("class-too-small: class " + taxonomy.class_names[c] + " has " +
                               std::to_string(ids.size()) + " entries for " +
                               std::to_string(n_folds) + " folds");
    std::sort(ids.begin(), ids.end());
    Rng rng = derive_rng(seed, "class:" + std::to_string(c));
    detail::seeded_shuffle(ids, rng);
    const std::size_t n = ids.size(), k = static_cast<std::size_t>(n_folds);
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t take = n / k + (f < n % k ? 1 : 0);
      for (std::size_t i = 0; i < take; ++i) fa.assignment[ids[pos++]] = static_cast<int>(f);
    }
  }

  // GroupKFold for UF: largest group first into the currently lightest fold
  // (ties to the lowest fold index).
  if (!uf_groups.empty()) {
    if (static_cast<int>(uf_groups.size()) < n_folds)
      throw std::runtime_error("insufficient-groups: " + std::to_string(uf_groups.size()) +
                               " UF generators for " + std::to_string(n_folds) + " folds");
    std::vector<std::pair<std::string, std::size_t>> groups;  // id, size
    groups.reserve(uf_groups.size());
    for (const auto& [gid, ids] : uf_groups) groups.emplace_back(gid, ids.size());
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    std::vector<std::size_t> load(static_cast<std::size_t>(n_folds), 0);
    for (const auto& [gid, size] : groups) {
      std::size_t best = 0;
      for (std::size_t f = 1; f < load.size(); ++f)
        if (load[f] < load[best]) best = f;
      load[best] += size;
      for (const auto& id : uf_groups[gid]) fa.assignment[id] = static_cast<int>(best);
    }
  }

  if (fa.assignment.size() != entries.size())
    throw std::runtime_error("assign_folds: duplicate entry ids in manifest");
  return fa;
}

struct FoldView {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

inline FoldView fold_view(const std::vector<ManifestEntry>& entries, const FoldAssignment& fa,
                          int fold) {
  if (fold < 0 || fold >= fa.n_folds) throw std::runtime_error("fold_view: fold out of range");
  FoldView view;
  for (const auto& e : entries) {
    if (fa.fold_of(e.entry_id) == fold)
      view.test.push_back(e);
    else
      view.train.push_back(e);
  }
  return view;
}

// --- assignment file: header with n_folds/seed, then entry_id \t fold ---

inline void write_assignment(const FoldAssignment& fa, const std::string& path,
                             const std::vector<std::string>& header_comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_assignment: cannot open " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << "artifact-folds\t" << kFoldsFormatVersion << "\n";
  out << "n_folds\t" << fa.n_folds << "\n";
  out << "seed\t" << fa.seed << "\n";
  out << "end-header\n";
  for (const auto& [id, fold] : fa.assignment) out << id << "\t" << fold << "\n";
}

inline FoldAssignment read_assignment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_assignment: cannot open " + path);
  FoldAssignment fa;
  std::string line;
  std::size_t line_no = 0;
  bool saw_magic = false, in_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_tabs(line);
    if (!saw_magic) {
      if (f.size() != 2 || f[0] != "artifact-folds" || std::stoi(f[1]) != kFoldsFormatVersion)
        detail::parse_fail(path, line_no, "expected 'artifact-folds\\t1'");
      saw_magic = true;
      continue;
    }
    if (in_header) {
      if (f[0] == "n_folds" && f.size() == 2) fa.n_folds = std::stoi(f[1]);
      else if (f[0] == "seed" && f.size() == 2) fa.seed = std::stoull(f[1]);
      else if (f[0] == "end-header") in_header = false;
      else detail::parse_fail(path, line_no, "unknown header directive '" + f[0] + "'");
      continue;
    }
    if (f.size() != 2) detail::parse_fail(path, line_no, "record needs entry_id \\t fold");
    const int fold = std::stoi(f[1]);
    if (fold < 0 || fold >= fa.n_folds) detail::parse_fail(path, line_no, "fold out of range");
    if (!fa.assignment.emplace(f[0], fold).second)
      detail::parse_fail(path, line_no, "duplicate entry " + f[0]);
  }
  if (!saw_magic || in_header || fa.n_folds < 2)
    throw std::runtime_error(path + ": malformed assignment file");
  return fa;
}

}  // namespace artifact
