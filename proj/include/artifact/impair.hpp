#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "artifact/image.hpp"
#include "artifact/jpeg.hpp"
#include "artifact/manifest.hpp"
#include "artifact/parallel.hpp"
#include "artifact/rng.hpp"

namespace artifact {

// Crop(ratio-bounded sides in [crop_min, crop_max]) -> resize(target^2) ->
// JPEG(quality in [q_min, q_max]). The crop ratio is an aspect-ratio floor
// min(w,h)/max(w,h) >= num/den, kept rational so bounds are exact integers.
struct ImpairmentConfig {
  int ratio_num = 5;
  int ratio_den = 8;
  int crop_min = 160;
  int crop_max = 2048;
  int target_size = 200;
  int q_min = 65;
  int q_max = 100;
  std::uint64_t master_seed = 0;

  void check() const {
    if (ratio_num < 1 || ratio_den < 1 || ratio_num > ratio_den)
      throw std::runtime_error("impair: ratio must satisfy 0 < num/den <= 1");
    if (crop_min < 1 || crop_min > crop_max)
      throw std::runtime_error("impair: need 1 <= crop_min <= crop_max");
    if (q_min < 1 || q_min > q_max || q_max > 100)
      throw std::runtime_error("impair: need 1 <= q_min <= q_max <= 100");
    if (target_size < 1) throw std::runtime_error("impair: target_size must be positive");
  }
};

struct CropBox {
  int x = 0, y = 0, w = 0, h = 0;
};

class ImageTooSmall : public std::runtime_error {
 public:
  explicit ImageTooSmall(const std::string& msg) : std::runtime_error(msg) {}
};

// Draw order is pinned (w, h, x, y) so seeded runs stay reproducible.
// w is capped so that a ratio-compatible h always exists.
inline CropBox sample_crop(int width, int height, const ImpairmentConfig& cfg, Rng& rng) {
  cfg.check();
  if (width < cfg.crop_min || height < cfg.crop_min)
    throw ImageTooSmall("image-too-small: " + std::to_string(width) + "x" +
                        std::to_string(height) + " < crop_min " + std::to_string(cfg.crop_min));
  const std::int64_t num = cfg.ratio_num, den = cfg.ratio_den;
  auto min3 = [](std::int64_t a, std::int64_t b, std::int64_t c) {
    return std::min(a, std::min(b, c));
  };
  // ceil(v*num/den) and floor(v*den/num) in exact integer arithmetic
  auto ceil_ratio = [&](std::int64_t v) { return (v * num + den - 1) / den; };
  auto floor_inv_ratio = [&](std::int64_t v) { return v * den / num; };

  const std::int64_t w_hi = min3(cfg.crop_max, width, floor_inv_ratio(height));
  CropBox box;
  box.w = static_cast<int>(rng.uniform_int(cfg.crop_min, w_hi));
  const std::int64_t h_lo = std::max<std::int64_t>(cfg.crop_min, ceil_ratio(box.w));
  const std::int64_t h_hi = min3(cfg.crop_max, height, floor_inv_ratio(box.w));
  box.h = static_cast<int>(rng.uniform_int(h_lo, h_hi));
  box.x = static_cast<int>(rng.uniform_int(0, width - box.w));
  box.y = static_cast<int>(rng.uniform_int(0, height - box.h));
  return box;
}

struct ImpairResult {
  std::vector<unsigned char> jpeg;
  CropBox crop;
  int quality = 0;
};

// Consumes the crop draws then one quality draw from the same stream.
inline ImpairResult apply_impairment(const Image& img, const ImpairmentConfig& cfg, Rng& rng) {
  ImpairResult res;
  res.crop = sample_crop(img.width, img.height, cfg, rng);
  res.quality = static_cast<int>(rng.uniform_int(cfg.q_min, cfg.q_max));
  const Image cropped = crop_image(img, res.crop.x, res.crop.y, res.crop.w, res.crop.h);
  const Image resized = resize_bilinear(cropped, cfg.target_size, cfg.target_size);
  res.jpeg = encode_jpeg(resized, res.quality);
  return res;
}

struct SkipRecord {
  std::string entry_id;
  std::string reason;
};

struct BuildResult {
  Manifest manifest;  // output taxonomy + surviving entries
  std::vector<SkipRecord> skips;
};

// Impairs every manifest entry into <out_dir>/images/<entry_id>.jpg and
// writes <out_dir>/manifest.tsv plus <out_dir>/skipped.tsv. Per-entry RNG
// streams make the output independent of the worker count; entry order is
// preserved. Unreadable or undersized sources are skipped, not fatal.
inline BuildResult build_dataset(const Manifest& input, const std::string& manifest_dir,
                                 const ImpairmentConfig& cfg, const std::string& out_dir,
                                 unsigned workers,
                                 const std::vector<std::string>& header_comments = {}) {
  cfg.check();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw std::runtime_error("build_dataset: cannot create " + out_dir + ": " + ec.message());

  struct Slot {
    bool ok = false;
    ManifestEntry entry;
    std::string skip_reason;
  };
  std::vector<Slot> slots(input.entries.size());

  parallel_for(input.entries.size(), workers, [&](std::size_t i) {
    const ManifestEntry& src = input.entries[i];
    Slot& slot = slots[i];
    Image img;
    try {
      img = load_image((fs::path(manifest_dir) / src.path).string());
    } catch (const std::exception&) {
      slot.skip_reason = "unreadable-source";
      return;
    }
    if (img.width < cfg.crop_min || img.height < cfg.crop_min) {
      slot.skip_reason = "image-too-small";
      return;
    }
    Rng rng = derive_rng(cfg.master_seed, src.entry_id);
    ImpairResult res;
    try {
      res = apply_impairment(img, cfg, rng);
    } catch (const ImageTooSmall&) {
      slot.skip_reason = "image-too-small";
      return;
    } catch (const std::exception& e) {
      throw std::runtime_error("build_dataset: entry " + src.entry_id + ": " + e.what());
    }
    const std::string rel = "images/" + src.entry_id + ".jpg";
    write_bytes(res.jpeg, (fs::path(out_dir) / rel).string());
    slot.entry = src;
    slot.entry.path = rel;
    slot.ok = true;
  });

  BuildResult result;
  result.manifest.taxonomy = input.taxonomy;
  for (auto& slot : slots) {
    if (slot.ok)
      result.manifest.entries.push_back(std::move(slot.entry));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].ok)
      result.skips.push_back({input.entries[i].entry_id, slots[i].skip_reason});
  }

  write_manifest(result.manifest.taxonomy, result.manifest.entries,
                 (fs::path(out_dir) / "manifest.tsv").string(), header_comments);
  std::ofstream skipped((fs::path(out_dir) / "skipped.tsv").string(), std::ios::binary);
  if (!skipped) throw std::runtime_error("build_dataset: cannot write skip report");
  for (const auto& c : header_comments) skipped << "# " << c << "\n";
  for (const auto& s : result.skips) skipped << s.entry_id << "\t" << s.reason << "\n";
  return result;
}

}  // namespace artifact
