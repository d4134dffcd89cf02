#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "artifact/image.hpp"
#include "artifact/rng.hpp"

namespace artifact {

// Four independent op groups, each gated by an enable flag and an
// application probability: affine (scale-shift-rotate-shear), photometric
// (hue-contrast-brightness), flips, cutout. Draw order is fixed so a given
// rng stream always produces the same picture.
struct AugmentConfig {
  bool affine = true;
  double p_affine = 0.5;
  double max_rotate_deg = 15.0;
  double max_shift_frac = 0.10;
  double scale_lo = 0.9;
  double scale_hi = 1.1;
  double max_shear_deg = 10.0;

  bool photometric = true;
  double p_photometric = 0.5;
  double max_brightness = 0.2;
  double max_contrast = 0.2;
  double max_hue = 0.05;

  bool hflip = true;
  double p_hflip = 0.5;
  bool vflip = true;
  double p_vflip = 0.5;

  bool cutout = true;
  double p_cutout = 0.5;
  int cutout_holes = 1;
  double cutout_max_frac = 0.25;

  void check() const {
    auto prob = [](double p, const char* what) {
      if (p < 0 || p > 1) throw std::runtime_error(std::string("augment config: ") + what +
                                                   " probability outside [0,1]");
    };
    prob(p_affine, "affine");
    prob(p_photometric, "photometric");
    prob(p_hflip, "hflip");
    prob(p_vflip, "vflip");
    prob(p_cutout, "cutout");
    if (max_rotate_deg < 0 || max_shift_frac < 0 || max_shear_deg < 0)
      throw std::runtime_error("augment config: negative magnitude");
    if (scale_lo > scale_hi || scale_lo <= 0)
      throw std::runtime_error("augment config: bad scale range");
    if (max_brightness < 0 || max_contrast < 0 || max_hue < 0)
      throw std::runtime_error("augment config: negative photometric magnitude");
    if (cutout_holes < 0) throw std::runtime_error("augment config: negative hole count");
    if (cutout_max_frac < 0 || cutout_max_frac > 1)
      throw std::runtime_error("augment config: cutout fraction outside [0,1]");
  }

  bool any_enabled() const { return affine || photometric || hflip || vflip || cutout; }

  static AugmentConfig none() {
    AugmentConfig c;
    c.affine = c.photometric = c.hflip = c.vflip = c.cutout = false;
    return c;
  }
};

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

inline double sample_clamped(const Image& img, double fx, double fy, int ch) {
  const int x0f = static_cast<int>(std::floor(fx));
  const int y0f = static_cast<int>(std::floor(fy));
  const double ax = fx - x0f, ay = fy - y0f;
  auto at = [&](int x, int y) -> double {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3 + ch];
  };
  const double top = at(x0f, y0f) * (1 - ax) + at(x0f + 1, y0f) * ax;
  const double bot = at(x0f, y0f + 1) * (1 - ax) + at(x0f + 1, y0f + 1) * ax;
  return top * (1 - ay) + bot * ay;
}

inline void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  const double d = mx - mn;
  s = mx == 0 ? 0 : d / mx;
  if (d == 0) {
    h = 0;
    return;
  }
  if (mx == r) h = std::fmod((g - b) / d, 6.0);
  else if (mx == g) h = (b - r) / d + 2.0;
  else h = (r - g) / d + 4.0;
  h /= 6.0;
  if (h < 0) h += 1.0;
}

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const double c = v * s;
  const double hp = h * 6.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r1 = 0, g1 = 0, b1 = 0;
  if (hp < 1) r1 = c, g1 = x;
  else if (hp < 2) r1 = x, g1 = c;
  else if (hp < 3) g1 = c, b1 = x;
  else if (hp < 4) g1 = x, b1 = c;
  else if (hp < 5) r1 = x, b1 = c;
  else r1 = c, b1 = x;
  const double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

}  // namespace detail

// Deterministic given the rng stream; all ops disabled copies the input
// byte for byte. Output dimensions always equal input dimensions.
inline Image augment(const Image& img, const AugmentConfig& cfg, Rng& rng) {
  cfg.check();
  Image out = img;

  if (cfg.affine && rng.bernoulli(cfg.p_affine)) {
    const double rot = (2 * rng.uniform_real() - 1) * cfg.max_rotate_deg * detail::kPi / 180.0;
    const double shear = (2 * rng.uniform_real() - 1) * cfg.max_shear_deg * detail::kPi / 180.0;
    const double scale = cfg.scale_lo + rng.uniform_real() * (cfg.scale_hi - cfg.scale_lo);
    const double tx = (2 * rng.uniform_real() - 1) * cfg.max_shift_frac * img.width;
    const double ty = (2 * rng.uniform_real() - 1) * cfg.max_shift_frac * img.height;
    // forward map: p' = R(rot) * Shear(shear) * scale * (p - c) + c + t
    const double cosr = std::cos(rot), sinr = std::sin(rot), sh = std::tan(shear);
    const double a00 = scale * cosr, a01 = scale * (cosr * sh - sinr);
    const double a10 = scale * sinr, a11 = scale * (sinr * sh + cosr);
    const double det = a00 * a11 - a01 * a10;
    const double i00 = a11 / det, i01 = -a01 / det;
    const double i10 = -a10 / det, i11 = a00 / det;
    const double cx = (img.width - 1) / 2.0, cy = (img.height - 1) / 2.0;
    Image warped;
    warped.width = out.width;
    warped.height = out.height;
    warped.pixels.resize(out.pixels.size());
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        const double dx = x - cx - tx, dy = y - cy - ty;
        const double sxf = i00 * dx + i01 * dy + cx;
        const double syf = i10 * dx + i11 * dy + cy;
        for (int ch = 0; ch < 3; ++ch) {
          warped.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3 + ch] =
              clamp_u8(detail::sample_clamped(out, sxf, syf, ch));
        }
      }
    }
    out = std::move(warped);
  }

  if (cfg.photometric && rng.bernoulli(cfg.p_photometric)) {
    const double hue = (2 * rng.uniform_real() - 1) * cfg.max_hue;
    const double con = (2 * rng.uniform_real() - 1) * cfg.max_contrast;
    const double bri = (2 * rng.uniform_real() - 1) * cfg.max_brightness;
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t i = 0; i < n; ++i) {
      double r = out.pixels[i * 3] / 255.0;
      double g = out.pixels[i * 3 + 1] / 255.0;
      double b = out.pixels[i * 3 + 2] / 255.0;
      double h, s, v;
      detail::rgb_to_hsv(r, g, b, h, s, v);
      detail::hsv_to_rgb(h + hue, s, v, r, g, b);
      double vals[3] = {r * 255.0, g * 255.0, b * 255.0};
      for (int ch = 0; ch < 3; ++ch) {
        double u = (vals[ch] - 128.0) * (1.0 + con) + 128.0;
        u += 255.0 * bri;
        out.pixels[i * 3 + ch] = clamp_u8(u);
      }
    }
  }

  if (cfg.hflip && rng.bernoulli(cfg.p_hflip)) {
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width / 2; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          std::swap(out.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3 + ch],
                    out.pixels[(static_cast<std::size_t>(y) * out.width + (out.width - 1 - x)) * 3 +
                               ch]);
        }
      }
    }
  }

  if (cfg.vflip && rng.bernoulli(cfg.p_vflip)) {
    for (int y = 0; y < out.height / 2; ++y) {
      for (int x = 0; x < out.width; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          std::swap(out.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3 + ch],
                    out.pixels[(static_cast<std::size_t>(out.height - 1 - y) * out.width + x) * 3 +
                               ch]);
        }
      }
    }
  }

  if (cfg.cutout && rng.bernoulli(cfg.p_cutout)) {
    for (int hole = 0; hole < cfg.cutout_holes; ++hole) {
      const int max_side =
          std::max(1, static_cast<int>(std::floor(std::min(out.width, out.height) *
                                                  cfg.cutout_max_frac)));
      const int side = static_cast<int>(rng.uniform_int(1, max_side));
      const int cx = static_cast<int>(rng.uniform_int(0, out.width - 1));
      const int cy = static_cast<int>(rng.uniform_int(0, out.height - 1));
      const int x0 = std::max(0, cx - side / 2), x1 = std::min(out.width, cx - side / 2 + side);
      const int y0 = std::max(0, cy - side / 2), y1 = std::min(out.height, cy - side / 2 + side);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
          for (int ch = 0; ch < 3; ++ch)
            out.pixels[(static_cast<std::size_t>(y) * out.width + x) * 3 + ch] = 128;
    }
  }

  return out;
}

}  // namespace artifact
