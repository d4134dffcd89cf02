#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace artifact {

enum class GeneratorFamily { GAN, Diffusion, Other };
enum class Manipulation { Full, Partial };

struct GeneratorInfo {
  std::string id;
  GeneratorFamily family = GeneratorFamily::Other;
  Manipulation manipulation = Manipulation::Full;
  bool seen = false;  // unseen generators may only feed the UF class
};

inline const char* to_string(GeneratorFamily f) {
  switch (f) {
    case GeneratorFamily::GAN: return "GAN";
    case GeneratorFamily::Diffusion: return "Diffusion";
    default: return "Other";
  }
}

inline const char* to_string(Manipulation m) {
  return m == Manipulation::Full ? "Full" : "Partial";
}

inline GeneratorFamily family_from_string(const std::string& s) {
  if (s == "GAN") return GeneratorFamily::GAN;
  if (s == "Diffusion") return GeneratorFamily::Diffusion;
  if (s == "Other") return GeneratorFamily::Other;
  throw std::runtime_error("unknown generator family: " + s);
}

inline Manipulation manipulation_from_string(const std::string& s) {
  if (s == "Full") return Manipulation::Full;
  if (s == "Partial") return Manipulation::Partial;
  throw std::runtime_error("unknown manipulation: " + s);
}

// Ordered class set: one real class, K seen-fake classes, one unseen-fake
// (UF) class. Canonical layout is real at 0, seen fakes next, UF last,
// but any layout satisfying the invariants is accepted.
struct ClassTaxonomy {
  std::vector<std::string> class_names;
  int real_index = -1;
  int uf_index = -1;
  std::vector<GeneratorInfo> generators;
  std::map<std::string, int> seen_generator_map;  // generator id -> class index

  int num_classes() const { return static_cast<int>(class_names.size()); }
  int k_seen() const { return num_classes() - 2; }

  bool is_seen_class(int idx) const { return idx != real_index && idx != uf_index; }

  const GeneratorInfo* find_generator(const std::string& id) const {
    for (const auto& g : generators)
      if (g.id == id) return &g;
    return nullptr;
  }

  // Throws on structural violations. Entry-level rules live in
  // validate_manifest.
  void check() const {
    const int n = num_classes();
    if (n < 3) throw std::runtime_error("taxonomy: need at least real + 1 seen + UF classes");
    if (real_index < 0 || real_index >= n) throw std::runtime_error("taxonomy: real_index out of bounds");
    if (uf_index < 0 || uf_index >= n) throw std::runtime_error("taxonomy: uf_index out of bounds");
    if (real_index == uf_index) throw std::runtime_error("taxonomy: real_index equals uf_index");
    std::map<std::string, int> names;
    for (const auto& name : class_names) {
      if (name.empty()) throw std::runtime_error("taxonomy: empty class name");
      if (++names[name] > 1) throw std::runtime_error("taxonomy: duplicate class name " + name);
    }
    std::map<std::string, int> ids;
    for (const auto& g : generators) {
      if (g.id.empty()) throw std::runtime_error("taxonomy: empty generator id");
      if (++ids[g.id] > 1) throw std::runtime_error("taxonomy: duplicate generator id " + g.id);
      const auto it = seen_generator_map.find(g.id);
      if (g.seen && it == seen_generator_map.end())
        throw std::runtime_error("taxonomy: seen generator " + g.id + " has no class mapping");
      if (!g.seen && it != seen_generator_map.end())
        throw std::runtime_error("taxonomy: unseen generator " + g.id + " mapped to a seen class");
    }
    for (const auto& [gid, cls] : seen_generator_map) {
      if (cls < 0 || cls >= n || !is_seen_class(cls))
        throw std::runtime_error("taxonomy: generator " + gid + " mapped to non-seen class");
      if (!find_generator(gid))
        throw std::runtime_error("taxonomy: mapping references unknown generator " + gid);
    }
  }
};

// Canonical taxonomy: real at 0, one class per seen generator in the given
// order, UF last. The reference configuration is five seen generators,
// giving seven classes.
inline ClassTaxonomy make_taxonomy(const std::vector<GeneratorInfo>& generators) {
  ClassTaxonomy tax;
  tax.generators = generators;
  tax.class_names.push_back("real");
  tax.real_index = 0;
  for (const auto& g : generators) {
    if (!g.seen) continue;
    tax.seen_generator_map[g.id] = static_cast<int>(tax.class_names.size());
    tax.class_names.push_back("fake_" + g.id);
  }
  tax.class_names.push_back("unseen_fake");
  tax.uf_index = static_cast<int>(tax.class_names.size()) - 1;
  tax.check();
  return tax;
}

}  // namespace artifact
