#include "artifact/manifest.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "artifact/taxonomy.hpp"

namespace {

using namespace artifact;

std::vector<GeneratorInfo> demo_generators() {
  return {
      {"stylegan", GeneratorFamily::GAN, Manipulation::Full, true},
      {"ldm", GeneratorFamily::Diffusion, Manipulation::Full, true},
      {"faceswap", GeneratorFamily::Other, Manipulation::Partial, true},
      {"sd21", GeneratorFamily::Diffusion, Manipulation::Full, false},
      {"vqgan", GeneratorFamily::GAN, Manipulation::Full, false},
  };
}

TEST(Taxonomy, MakeTaxonomyLayout) {
  const ClassTaxonomy t = make_taxonomy(demo_generators());
  // real first, one class per seen generator, unseen-fake last.
  ASSERT_EQ(t.num_classes(), 5);
  EXPECT_EQ(t.real_index, 0);
  EXPECT_EQ(t.uf_index, 4);
  EXPECT_EQ(t.k_seen(), 3);
  EXPECT_EQ(t.class_names[0], "real");
  EXPECT_EQ(t.class_names[1], "fake_stylegan");
  EXPECT_EQ(t.class_names[4], "unseen_fake");
  EXPECT_EQ(t.seen_generator_map.at("ldm"), 2);
  EXPECT_EQ(t.seen_generator_map.count("sd21"), 0u);
  EXPECT_TRUE(t.is_seen_class(1));
  EXPECT_FALSE(t.is_seen_class(0));
  EXPECT_FALSE(t.is_seen_class(4));
}

TEST(Taxonomy, ChecksReject) {
  ClassTaxonomy t = make_taxonomy(demo_generators());
  t.real_index = 2;
  EXPECT_THROW(t.check(), std::exception);
  t = make_taxonomy(demo_generators());
  t.class_names[1] = t.class_names[2];
  EXPECT_THROW(t.check(), std::exception);
  auto gens = demo_generators();
  gens.push_back(gens[0]);
  EXPECT_THROW(make_taxonomy(gens), std::exception);
}

Manifest demo_manifest() {
  Manifest m;
  m.taxonomy = make_taxonomy(demo_generators());
  ManifestEntry e;
  e.entry_id = "r-0";
  e.path = "images/r-0.ppm";
  e.class_index = 0;
  e.category = "portrait";
  e.source = "camera";
  m.entries.push_back(e);
  e.entry_id = "f-0";
  e.path = "images/f-0.ppm";
  e.class_index = 1;
  e.generator_id = "stylegan";
  e.source = "zoo";
  e.fold = 2;
  m.entries.push_back(e);
  e = ManifestEntry{};
  e.entry_id = "u-0";
  e.path = "images/u-0.ppm";
  e.class_index = 4;
  e.generator_id = "sd21";
  e.category = "scenery";
  e.source = "zoo";
  m.entries.push_back(e);
  return m;
}

TEST(Manifest, RoundTripPreservesEverything) {
  const Manifest m = demo_manifest();
  std::ostringstream out;
  write_manifest(m.taxonomy, m.entries, out, {"demo header", "second line"});
  const std::string text = out.str();
  EXPECT_NE(text.find("# demo header"), std::string::npos);

  std::istringstream in(text);
  const Manifest back = read_manifest(in, "buffer");
  ASSERT_EQ(back.entries.size(), m.entries.size());
  EXPECT_EQ(back.taxonomy.class_names, m.taxonomy.class_names);
  EXPECT_EQ(back.taxonomy.real_index, m.taxonomy.real_index);
  EXPECT_EQ(back.taxonomy.uf_index, m.taxonomy.uf_index);
  ASSERT_EQ(back.taxonomy.generators.size(), m.taxonomy.generators.size());
  for (std::size_t i = 0; i < m.taxonomy.generators.size(); ++i) {
    EXPECT_EQ(back.taxonomy.generators[i].id, m.taxonomy.generators[i].id);
    EXPECT_EQ(back.taxonomy.generators[i].family, m.taxonomy.generators[i].family);
    EXPECT_EQ(back.taxonomy.generators[i].manipulation, m.taxonomy.generators[i].manipulation);
    EXPECT_EQ(back.taxonomy.generators[i].seen, m.taxonomy.generators[i].seen);
  }
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].entry_id, m.entries[i].entry_id);
    EXPECT_EQ(back.entries[i].path, m.entries[i].path);
    EXPECT_EQ(back.entries[i].class_index, m.entries[i].class_index);
    EXPECT_EQ(back.entries[i].generator_id, m.entries[i].generator_id);
    EXPECT_EQ(back.entries[i].category, m.entries[i].category);
    EXPECT_EQ(back.entries[i].source, m.entries[i].source);
    EXPECT_EQ(back.entries[i].fold, m.entries[i].fold);
  }
}

TEST(Manifest, RejectsMalformedInput) {
  const Manifest m = demo_manifest();
  std::ostringstream out;
  write_manifest(m.taxonomy, m.entries, out);
  const std::string good = out.str();

  {
    std::istringstream in(std::string("bogus\t9\n") + good);
    EXPECT_THROW(read_manifest(in, "buffer"), std::exception);
  }
  {
    // Truncated record line.
    std::string bad = good + "x-1\timages/x.ppm\t0\n";
    std::istringstream in(bad);
    EXPECT_THROW(read_manifest(in, "buffer"), std::exception);
  }
  {
    // Class index outside the taxonomy.
    std::string bad = good + "x-1\timages/x.ppm\t9\t-\tc\ts\t-\n";
    std::istringstream in(bad);
    EXPECT_THROW(read_manifest(in, "buffer"), std::exception);
  }
  {
    // Duplicate entry id.
    std::string bad = good + "r-0\timages/r-0.ppm\t0\t-\tc\ts\t-\n";
    std::istringstream in(bad);
    EXPECT_THROW(read_manifest(in, "buffer"), std::exception);
  }
}

TEST(Manifest, RejectsFieldWithTabOrNewline) {
  Manifest m = demo_manifest();
  m.entries[0].category = "has\ttab";
  std::ostringstream out;
  EXPECT_THROW(write_manifest(m.taxonomy, m.entries, out), std::exception);
}

TEST(Manifest, ResolveEntryPath) {
  EXPECT_EQ(resolve_entry_path("/data/set", "images/a.ppm"), "/data/set/images/a.ppm");
  EXPECT_EQ(resolve_entry_path(".", "a.ppm"), "./a.ppm");
  EXPECT_EQ(resolve_entry_path("/data", "/abs/b.ppm"), "/abs/b.ppm");
}

}  // namespace
