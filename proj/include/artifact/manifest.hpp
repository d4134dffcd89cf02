#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "artifact/taxonomy.hpp"
#include "artifact/version.hpp"

namespace artifact {

struct ManifestEntry {
  std::string entry_id;
  std::string path;  // relative to the manifest's directory
  int class_index = -1;
  std::optional<std::string> generator_id;  // absent for real images
  std::string category;
  std::string source;
  std::optional<int> fold;
};

// Entry paths are stored relative to the directory holding the manifest
// file; absolute paths pass through untouched.
inline std::string resolve_entry_path(const std::string& base_dir, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(base_dir) / p).string();
}

struct Violation {
  std::string entry_id;
  std::string rule;
  std::string detail;
};

inline bool valid_entry_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

// Entry-level invariant check. Violations are data, not failures; an empty
// report means every entry is consistent with the taxonomy.
inline std::vector<Violation> validate_manifest(const std::vector<ManifestEntry>& entries,
                                                const ClassTaxonomy& taxonomy) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (const auto& e : entries) {
    if (!valid_entry_id(e.entry_id)) {
      out.push_back({e.entry_id, "bad-entry-id", "entry ids are [A-Za-z0-9._-]+"});
      continue;
    }
    if (!ids.insert(e.entry_id).second)
      out.push_back({e.entry_id, "duplicate-entry-id", ""});
    if (e.class_index < 0 || e.class_index >= taxonomy.num_classes()) {
      out.push_back({e.entry_id, "class-index-out-of-range",
                     "class_index=" + std::to_string(e.class_index)});
      continue;
    }
    if (e.class_index == taxonomy.real_index) {
      if (e.generator_id)
        out.push_back({e.entry_id, "real-with-generator", "generator=" + *e.generator_id});
      continue;
    }
    if (!e.generator_id) {
      out.push_back({e.entry_id, "fake-without-generator", ""});
      continue;
    }
    const GeneratorInfo* gen = taxonomy.find_generator(*e.generator_id);
    if (!gen) {
      out.push_back({e.entry_id, "unknown-generator", "generator=" + *e.generator_id});
      continue;
    }
    if (e.class_index == taxonomy.uf_index) {
      if (gen->seen)
        out.push_back({e.entry_id, "uf-generator-seen", "generator=" + gen->id});
    } else {
      const auto it = taxonomy.seen_generator_map.find(gen->id);
      if (it == taxonomy.seen_generator_map.end() || it->second != e.class_index)
        out.push_back({e.entry_id, "seen-class-generator-mismatch",
                       "generator=" + gen->id + " class=" + std::to_string(e.class_index)});
    }
  }
  return out;
}

// --- manifest file format v1 ---
//
// Line-oriented UTF-8 text, LF newlines, tab-separated fields. Leading '#'
// lines are comments (reproducibility headers land there). Layout:
//
//   artifact-manifest \t <version>
//   class \t <index> \t <name> \t <REAL|SEEN|UF>
//   generator \t <id> \t <family> \t <manipulation> \t <seen|unseen> \t <class|->
//   end-header
//   <entry_id> \t <path> \t <class> \t <generator|-> \t <category> \t <source> \t <fold|->

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

inline void require_clean_field(const std::string& value, const std::string& what) {
  if (value.find('\t') != std::string::npos || value.find('\n') != std::string::npos)
    throw std::runtime_error("manifest field contains tab/newline: " + what);
}

[[noreturn]] inline void parse_fail(const std::string& what, std::size_t line_no,
                                    const std::string& msg) {
  throw std::runtime_error(what + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace detail

inline void write_manifest(const ClassTaxonomy& taxonomy,
                           const std::vector<ManifestEntry>& entries, std::ostream& out,
                           const std::vector<std::string>& header_comments = {}) {
  taxonomy.check();
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << "artifact-manifest\t" << kManifestFormatVersion << "\n";
  for (int i = 0; i < taxonomy.num_classes(); ++i) {
    const char* marker = i == taxonomy.real_index ? "REAL"
                         : i == taxonomy.uf_index ? "UF"
                                                  : "SEEN";
    detail::require_clean_field(taxonomy.class_names[i], "class name");
    out << "class\t" << i << "\t" << taxonomy.class_names[i] << "\t" << marker << "\n";
  }
  for (const auto& g : taxonomy.generators) {
    detail::require_clean_field(g.id, "generator id");
    const auto it = taxonomy.seen_generator_map.find(g.id);
    out << "generator\t" << g.id << "\t" << to_string(g.family) << "\t"
        << to_string(g.manipulation) << "\t" << (g.seen ? "seen" : "unseen") << "\t";
    if (it != taxonomy.seen_generator_map.end())
      out << it->second;
    else
      out << "-";
    out << "\n";
  }
  out << "end-header\n";
  for (const auto& e : entries) {
    detail::require_clean_field(e.entry_id, "entry_id");
    detail::require_clean_field(e.path, "path of " + e.entry_id);
    detail::require_clean_field(e.category, "category of " + e.entry_id);
    detail::require_clean_field(e.source, "source of " + e.entry_id);
    out << e.entry_id << "\t" << e.path << "\t" << e.class_index << "\t"
        << (e.generator_id ? *e.generator_id : "-") << "\t" << e.category << "\t" << e.source
        << "\t";
    if (e.fold)
      out << *e.fold;
    else
      out << "-";
    out << "\n";
  }
}

inline void write_manifest(const ClassTaxonomy& taxonomy,
                           const std::vector<ManifestEntry>& entries, const std::string& path,
                           const std::vector<std::string>& header_comments = {}) {
  std::ofstream out(path, std::ios::binary);  // binary: LF on every platform
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  write_manifest(taxonomy, entries, out, header_comments);
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

struct Manifest {
  ClassTaxonomy taxonomy;
  std::vector<ManifestEntry> entries;
};

inline Manifest read_manifest(std::istream& in, const std::string& what) {
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  bool saw_magic = false, in_header = true;
  std::vector<std::string> markers;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_tabs(line);
    if (!saw_magic) {
      if (f.size() != 2 || f[0] != "artifact-manifest")
        detail::parse_fail(what, line_no, "expected 'artifact-manifest\\t<version>'");
      if (std::stoi(f[1]) != kManifestFormatVersion)
        detail::parse_fail(what, line_no, "unsupported manifest version " + f[1]);
      saw_magic = true;
      continue;
    }
    if (in_header) {
      if (f[0] == "class") {
        if (f.size() != 4) detail::parse_fail(what, line_no, "class line needs 4 fields");
        const int idx = std::stoi(f[1]);
        if (idx != static_cast<int>(m.taxonomy.class_names.size()))
          detail::parse_fail(what, line_no, "class indices must be dense and ordered");
        m.taxonomy.class_names.push_back(f[2]);
        markers.push_back(f[3]);
        if (f[3] == "REAL") m.taxonomy.real_index = idx;
        else if (f[3] == "UF") m.taxonomy.uf_index = idx;
        else if (f[3] != "SEEN") detail::parse_fail(what, line_no, "unknown class marker " + f[3]);
      } else if (f[0] == "generator") {
        if (f.size() != 6) detail::parse_fail(what, line_no, "generator line needs 6 fields");
        GeneratorInfo g;
        g.id = f[1];
        try {
          g.family = family_from_string(f[2]);
          g.manipulation = manipulation_from_string(f[3]);
        } catch (const std::exception& e) {
          detail::parse_fail(what, line_no, e.what());
        }
        if (f[4] == "seen") g.seen = true;
        else if (f[4] == "unseen") g.seen = false;
        else detail::parse_fail(what, line_no, "generator seen flag must be seen|unseen");
        if (f[5] != "-") {
          const int cls = std::stoi(f[5]);
          if (cls < 0 || cls >= static_cast<int>(m.taxonomy.class_names.size()))
            detail::parse_fail(what, line_no, "generator maps to unknown class index " + f[5]);
          m.taxonomy.seen_generator_map[g.id] = cls;
        }
        m.taxonomy.generators.push_back(g);
      } else if (f[0] == "end-header") {
        in_header = false;
        try {
          m.taxonomy.check();
        } catch (const std::exception& e) {
          detail::parse_fail(what, line_no, e.what());
        }
      } else {
        detail::parse_fail(what, line_no, "unknown header directive '" + f[0] + "'");
      }
      continue;
    }
    if (f.size() != 7) detail::parse_fail(what, line_no, "record needs 7 tab-separated fields");
    ManifestEntry e;
    e.entry_id = f[0];
    if (!seen_ids.insert(e.entry_id).second)
      detail::parse_fail(what, line_no, "duplicate entry id " + e.entry_id);
    e.path = f[1];
    try {
      e.class_index = std::stoi(f[2]);
    } catch (const std::exception&) {
      detail::parse_fail(what, line_no, "class_index is not an integer: " + f[2]);
    }
    if (e.class_index < 0 || e.class_index >= m.taxonomy.num_classes())
      detail::parse_fail(what, line_no, "class index " + f[2] + " not in taxonomy");
    if (f[3] != "-") e.generator_id = f[3];
    e.category = f[4];
    e.source = f[5];
    if (f[6] != "-") {
      try {
        e.fold = std::stoi(f[6]);
      } catch (const std::exception&) {
        detail::parse_fail(what, line_no, "fold is not an integer: " + f[6]);
      }
    }
    m.entries.push_back(std::move(e));
  }
  if (!saw_magic) detail::parse_fail(what, line_no, "missing manifest magic line");
  if (in_header) detail::parse_fail(what, line_no, "missing end-header");
  return m;
}

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
  return read_manifest(in, path);
}

}  // namespace artifact
