#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace artifact {

// 8-bit RGB raster, HWC layout.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const { return pixels.empty(); }
};

inline std::uint8_t clamp_u8(double v) {
  if (v <= 0.0) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);  // round half up
}

// --- PPM (binary P6, maxval 255) ---

inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

inline std::vector<unsigned char> ppm_bytes(const Image& img) {
  std::ostringstream head;
  head << "P6\n" << img.width << " " << img.height << "\n255\n";
  const std::string h = head.str();
  std::vector<unsigned char> out(h.begin(), h.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline Image read_ppm_stream(std::istream& in, const std::string& what) {
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("read_ppm: not a P6 file: " + what);
  auto next_token = [&]() -> long {
    // skip whitespace and '#' comments
    for (;;) {
      int ch = in.peek();
      if (ch == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(ch)) {
        in.get();
      } else {
        break;
      }
    }
    long v = -1;
    in >> v;
    return v;
  };
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (!in || w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("read_ppm: bad header in " + what);
  in.get();  // single whitespace after maxval
  Image img(static_cast<int>(w), static_cast<int>(h));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw std::runtime_error("read_ppm: truncated pixel data in " + what);
  return img;
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path);
  return read_ppm_stream(in, path);
}

// --- geometry ---

inline Image crop_image(const Image& img, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > img.width || y + h > img.height)
    throw std::runtime_error("crop_image: box out of bounds");
  Image out(w, h);
  for (int row = 0; row < h; ++row) {
    const std::uint8_t* src = &img.pixels[(static_cast<std::size_t>(y + row) * img.width + x) * 3];
    std::copy(src, src + static_cast<std::size_t>(w) * 3,
              &out.pixels[static_cast<std::size_t>(row) * w * 3]);
  }
  return out;
}

// Bilinear resize, pinned arithmetic: source coordinate of an output pixel
// center is (o + 0.5) * src/dst - 0.5 (half-pixel alignment), clamped to the
// source frame; interpolation in double; round half up to u8.
inline Image resize_bilinear(const Image& img, int tw, int th) {
  if (tw <= 0 || th <= 0) throw std::runtime_error("resize_bilinear: bad target");
  if (tw == img.width && th == img.height) return img;
  Image out(tw, th);
  const double sx = static_cast<double>(img.width) / tw;
  const double sy = static_cast<double>(img.height) / th;
  for (int oy = 0; oy < th; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    if (fy > img.height - 1) fy = img.height - 1;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < tw; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      if (fx > img.width - 1) fx = img.width - 1;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(ox, oy, c) = clamp_u8(top * (1.0 - wy) + bot * wy);
      }
    }
  }
  return out;
}

}  // namespace artifact
