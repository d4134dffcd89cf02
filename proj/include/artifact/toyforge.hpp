#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "artifact/image.hpp"
#include "artifact/manifest.hpp"
#include "artifact/parallel.hpp"
#include "artifact/rng.hpp"
#include "artifact/taxonomy.hpp"

namespace artifact {

// Each pseudo-generator stamps one sinusoidal grating at a frequency pair
// unique to it onto an otherwise shared texture family. Seen generators'
// frequencies appear in training; unseen ones never do, which gives the
// dataset a genuine generalization axis.
struct ToyGenSpec {
  std::string id;
  int fx = 0, fy = 0;   // cycles per image side
  double phase = 0;     // radians
  GeneratorFamily family = GeneratorFamily::Other;
  bool seen = false;
};

struct ToySpec {
  int n_generators = 7;
  int k_seen = 5;
  int images_per_class = 100;
  int image_size = 64;
  double amplitude = 30.0;  // grating strength out of 255
  std::uint64_t seed = 11;

  // texture family (filtered two-octave noise)
  double texture_base = 128.0;
  double texture_contrast = 55.0;

  void check() const {
    if (n_generators < 1) throw std::runtime_error("toy spec: need at least one generator");
    if (k_seen < 1 || k_seen >= n_generators)
      throw std::runtime_error("toy spec: k_seen must be in [1, n_generators)");
    if (images_per_class < 1) throw std::runtime_error("toy spec: images_per_class must be >= 1");
    if (image_size < 16) throw std::runtime_error("toy spec: image_size must be >= 16");
    if (amplitude < 0) throw std::runtime_error("toy spec: amplitude must be >= 0");
    const int max_cycles = 2 + 12;
    if (image_size < 2 * (max_cycles + 5))
      throw std::runtime_error("toy spec: image_size too small for the frequency table");
  }

  // Distinct frequency pairs, low enough to survive resampling and mild
  // JPEG, high enough to sit above the texture's energy. Phases walk the
  // golden angle so no two generators align.
  std::vector<ToyGenSpec> generators() const {
    check();
    std::vector<ToyGenSpec> out;
    for (int k = 0; k < n_generators; ++k) {
      ToyGenSpec g;
      g.id = "g" + std::to_string(k);
      g.fx = 2 + (3 * k) % 13;
      g.fy = 2 + (5 * k + 3 * (k / 13)) % 13;
      g.phase = std::fmod(2.399963229728653 * k, 6.283185307179586);
      switch (k % 3) {
        case 0: g.family = GeneratorFamily::GAN; break;
        case 1: g.family = GeneratorFamily::Diffusion; break;
        default: g.family = GeneratorFamily::Other; break;
      }
      g.seen = k < k_seen;
      out.push_back(std::move(g));
    }
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = a + 1; b < out.size(); ++b)
        if (out[a].fx == out[b].fx && out[a].fy == out[b].fy)
          throw std::runtime_error("toy spec: frequency collision between " + out[a].id + " and " +
                                   out[b].id);
    return out;
  }

  ClassTaxonomy taxonomy() const {
    std::vector<GeneratorInfo> infos;
    for (const auto& g : generators()) {
      GeneratorInfo gi;
      gi.id = g.id;
      gi.family = g.family;
      gi.manipulation = Manipulation::Full;
      gi.seen = g.seen;
      infos.push_back(std::move(gi));
    }
    return make_taxonomy(infos);
  }
};

namespace toy_detail {

// Two octaves of bilinearly upsampled gaussian grid noise: a cheap cloudy
// texture with most energy at low frequencies.
inline std::vector<double> cloudy_texture(int size, Rng& rng, double base, double contrast) {
  auto octave = [&](int grid) {
    std::vector<double> g(static_cast<std::size_t>(grid + 1) * (grid + 1));
    for (auto& v : g) v = rng.normal();
    std::vector<double> out(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y) {
      const double gy = static_cast<double>(y) * grid / size;
      const int y0 = static_cast<int>(gy);
      const double ay = gy - y0;
      for (int x = 0; x < size; ++x) {
        const double gx = static_cast<double>(x) * grid / size;
        const int x0 = static_cast<int>(gx);
        const double ax = gx - x0;
        const double v00 = g[static_cast<std::size_t>(y0) * (grid + 1) + x0];
        const double v01 = g[static_cast<std::size_t>(y0) * (grid + 1) + x0 + 1];
        const double v10 = g[static_cast<std::size_t>(y0 + 1) * (grid + 1) + x0];
        const double v11 = g[static_cast<std::size_t>(y0 + 1) * (grid + 1) + x0 + 1];
        out[static_cast<std::size_t>(y) * size + x] =
            (v00 * (1 - ax) + v01 * ax) * (1 - ay) + (v10 * (1 - ax) + v11 * ax) * ay;
      }
    }
    return out;
  };
  const std::vector<double> coarse = octave(4);
  const std::vector<double> fine = octave(8);
  std::vector<double> tex(static_cast<std::size_t>(size) * size);
  for (std::size_t i = 0; i < tex.size(); ++i)
    tex[i] = base + contrast * (0.75 * coarse[i] + 0.35 * fine[i]);
  return tex;
}

}  // namespace toy_detail

// One toy image. A null generator (nullptr) produces a real image; with a
// generator the grating is added equally to all three channels so it
// survives chroma subsampling.
inline Image toy_image(const ToySpec& spec, const ToyGenSpec* gen, Rng& rng) {
  const int n = spec.image_size;
  const std::vector<double> tex =
      toy_detail::cloudy_texture(n, rng, spec.texture_base, spec.texture_contrast);
  // small per-image, per-channel tint so real images are not grayscale
  const double tint[3] = {8.0 * rng.normal(), 8.0 * rng.normal(), 8.0 * rng.normal()};
  Image img;
  img.width = n;
  img.height = n;
  img.pixels.resize(static_cast<std::size_t>(n) * n * 3);
  const double tau = 6.283185307179586;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = tex[static_cast<std::size_t>(y) * n + x];
      if (gen)
        v += spec.amplitude *
             std::sin(tau * (gen->fx * static_cast<double>(x) + gen->fy * static_cast<double>(y)) /
                          n +
                      gen->phase);
      for (int c = 0; c < 3; ++c)
        img.pixels[(static_cast<std::size_t>(y) * n + x) * 3 + c] = clamp_u8(v + tint[c]);
    }
  }
  return img;
}

struct ToyDataset {
  Manifest manifest;
  std::vector<ToyGenSpec> generator_specs;
};

// Emits real and per-generator fake images as lossless PPM plus the
// manifest. The unseen-fake class count is images_per_class total, spread
// over the unseen generators (earlier generators take the remainder).
inline ToyDataset synth_dataset(const ToySpec& spec, const std::string& out_dir, int workers = 1,
                                const std::vector<std::string>& header_comments = {}) {
  spec.check();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw std::runtime_error("synth_dataset: cannot create " + out_dir);

  ToyDataset ds;
  ds.generator_specs = spec.generators();
  ds.manifest.taxonomy = spec.taxonomy();
  const ClassTaxonomy& tax = ds.manifest.taxonomy;

  static const char* kCategories[3] = {"texture-a", "texture-b", "texture-c"};

  struct Job {
    std::string entry_id;
    const ToyGenSpec* gen;  // nullptr = real
    int class_index;
    int serial;
  };
  std::vector<Job> jobs;
  char name[64];
  for (int i = 0; i < spec.images_per_class; ++i) {
    std::snprintf(name, sizeof(name), "real-%04d", i);
    jobs.push_back({name, nullptr, tax.real_index, i});
  }
  std::vector<const ToyGenSpec*> unseen;
  for (const auto& g : ds.generator_specs) {
    if (!g.seen) {
      unseen.push_back(&g);
      continue;
    }
    const int cls = tax.seen_generator_map.at(g.id);
    for (int i = 0; i < spec.images_per_class; ++i) {
      std::snprintf(name, sizeof(name), "%s-%04d", g.id.c_str(), i);
      jobs.push_back({name, &g, cls, i});
    }
  }
  {
    const int n_unseen = static_cast<int>(unseen.size());
    const int per = spec.images_per_class / n_unseen;
    const int extra = spec.images_per_class % n_unseen;
    for (int u = 0; u < n_unseen; ++u) {
      const int count = per + (u < extra ? 1 : 0);
      for (int i = 0; i < count; ++i) {
        std::snprintf(name, sizeof(name), "%s-%04d", unseen[u]->id.c_str(), i);
        jobs.push_back({name, unseen[u], tax.uf_index, i});
      }
    }
  }

  std::vector<ManifestEntry> entries(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const Job& job = jobs[j];
    Rng rng = derive_rng(spec.seed, job.entry_id);
    const Image img = toy_image(spec, job.gen, rng);
    const std::string rel = "images/" + job.entry_id + ".ppm";
    write_ppm(img, (fs::path(out_dir) / rel).string());
    ManifestEntry e;
    e.entry_id = job.entry_id;
    e.path = rel;
    e.class_index = job.class_index;
    if (job.gen) e.generator_id = job.gen->id;
    e.category = kCategories[job.serial % 3];
    e.source = "toyforge";
    entries[j] = std::move(e);
  });
  ds.manifest.entries = std::move(entries);

  const auto violations = validate_manifest(ds.manifest.entries, tax);
  if (!violations.empty())
    throw std::runtime_error("synth_dataset: generated manifest violates " +
                             violations.front().rule);
  write_manifest(tax, ds.manifest.entries, (fs::path(out_dir) / "manifest.tsv").string(),
                 header_comments);
  return ds;
}

// Spectral magnitude of the luma plane at one frequency bin, normalized by
// the mean magnitude of all non-DC bins. Row-column direct transform; desk
// scale needs no FFT.
inline double artifact_energy(const Image& img, int fx, int fy) {
  const int n = img.width;
  if (img.height != n) throw std::runtime_error("artifact_energy: image must be square");
  std::vector<double> luma(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    luma[i] = 0.299 * img.pixels[i * 3] + 0.587 * img.pixels[i * 3 + 1] +
              0.114 * img.pixels[i * 3 + 2];
  }
  const double tau = 6.283185307179586;
  using cd = std::complex<double>;
  std::vector<cd> twiddle(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k)
    for (int t = 0; t < n; ++t)
      twiddle[static_cast<std::size_t>(k) * n + t] = std::polar(1.0, -tau * k * t / n);
  // rows
  std::vector<cd> rowft(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int k = 0; k < n; ++k) {
      cd acc = 0;
      for (int x = 0; x < n; ++x) acc += luma[static_cast<std::size_t>(y) * n + x] *
                                         twiddle[static_cast<std::size_t>(k) * n + x];
      rowft[static_cast<std::size_t>(y) * n + k] = acc;
    }
  }
  // columns
  std::vector<double> mag(static_cast<std::size_t>(n) * n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      cd acc = 0;
      for (int y = 0; y < n; ++y)
        acc += rowft[static_cast<std::size_t>(y) * n + k] *
               twiddle[static_cast<std::size_t>(l) * n + y];
      mag[static_cast<std::size_t>(l) * n + k] = std::abs(acc);
    }
  }
  double mean = 0;
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      if (l != 0 || k != 0) mean += mag[static_cast<std::size_t>(l) * n + k];
  mean /= static_cast<double>(n) * n - 1;
  const int bx = ((fx % n) + n) % n;
  const int by = ((fy % n) + n) % n;
  if (mean == 0) return 0;
  return mag[static_cast<std::size_t>(by) * n + bx] / mean;
}

}  // namespace artifact
