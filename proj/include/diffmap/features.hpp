#pragma once

// Visual descriptors: 73-bin edge direction histogram, 144-bin HSV color
// auto-correlogram and 225-value LAB block-wise color moments, plus the
// binary PPM reader/writer they are fed from.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "diffmap/numerics.hpp"

namespace diffmap {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Row-major 8-bit RGB image.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw Error("image must be at least 1x1, got " + std::to_string(width) + "x" +
                  std::to_string(height));
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }

  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
  const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
  const std::vector<Rgb>& pixels() const { return pixels_; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

// ---------------------------------------------------------------------------
// PPM (P6) I/O

namespace detail {

inline void skip_ppm_space(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline int read_ppm_int(std::istream& in, const std::string& what) {
  skip_ppm_space(in);
  int v = -1;
  if (!(in >> v) || v < 0) throw Error("malformed PPM header: bad " + what);
  return v;
}

}  // namespace detail

inline RgbImage read_ppm(std::istream& in) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') throw Error("not a binary PPM (P6) image");
  const int width = detail::read_ppm_int(in, "width");
  const int height = detail::read_ppm_int(in, "height");
  const int maxval = detail::read_ppm_int(in, "maxval");
  if (maxval < 1 || maxval > 255) throw Error("only 8-bit PPM images are supported");
  in.get();  // single whitespace before the raster
  RgbImage img(width, height);
  std::vector<unsigned char> raster(img.size() * 3);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    throw Error("truncated PPM raster");
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
      auto scale = [&](unsigned char v) {
        return static_cast<std::uint8_t>(maxval == 255 ? v : (v * 255 + maxval / 2) / maxval);
      };
      img.at(x, y) = {scale(raster[o]), scale(raster[o + 1]), scale(raster[o + 2])};
    }
  }
  return img;
}

inline RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image " + path);
  try {
    return read_ppm(in);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_ppm(std::ostream& out, const RgbImage& img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (const Rgb& p : img.pixels()) {
    const char bytes[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    out.write(bytes, 3);
  }
}

inline void write_ppm(const std::string& path, const RgbImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image " + path);
  write_ppm(out, img);
}

// ---------------------------------------------------------------------------
// color spaces

struct Hsv {
  double h = 0, s = 0, v = 0;  ///< h in [0, 360), s and v in [0, 1]
};

inline Hsv rgb_to_hsv(Rgb p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h = 0.0;
    if (mx == r)
      h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
      h = 60.0 * ((b - r) / delta + 2.0);
    else
      h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

struct Lab {
  double l = 0, a = 0, b = 0;
};

/// sRGB -> linear RGB -> XYZ (D65) -> CIE L*a*b*.
inline Lab rgb_to_lab(Rgb p) {
  auto linear = [](std::uint8_t c) {
    const double v = c / 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = linear(p.r), g = linear(p.g), b = linear(p.b);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  auto f = [](double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

// ---------------------------------------------------------------------------
// feature vectors

enum class FeatureKind { Edh73, Corr144, Cm225 };

inline std::size_t feature_length(FeatureKind k) {
  switch (k) {
    case FeatureKind::Edh73: return 73;
    case FeatureKind::Corr144: return 144;
    case FeatureKind::Cm225: return 225;
  }
  return 0;
}

inline std::string_view feature_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::Edh73: return "edh73";
    case FeatureKind::Corr144: return "corr144";
    case FeatureKind::Cm225: return "cm225";
  }
  return "?";
}

inline FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "edh73" || s == "edh") return FeatureKind::Edh73;
  if (s == "corr144" || s == "corr") return FeatureKind::Corr144;
  if (s == "cm225" || s == "cm") return FeatureKind::Cm225;
  throw Error("unknown feature kind '" + std::string(s) + "' (expected edh73, corr144 or cm225)");
}

struct FeatureVector {
  FeatureKind kind = FeatureKind::Edh73;
  std::vector<double> values;
};

// ---------------------------------------------------------------------------
// edge direction histogram

/// Grayscale plane with replicate-border reads.
class GrayPlane {
 public:
  GrayPlane(int width, int height) : w_(width), h_(height), v_(static_cast<std::size_t>(width) * height) {}

  explicit GrayPlane(const RgbImage& img) : GrayPlane(img.width(), img.height()) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const Rgb p = img.at(x, y);
        (*this)(x, y) = 0.299 * p.r + 0.587 * p.g + 0.114 * p.b;
      }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  double& operator()(int x, int y) { return v_[static_cast<std::size_t>(y) * w_ + x]; }
  double operator()(int x, int y) const { return v_[static_cast<std::size_t>(y) * w_ + x]; }
  double clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, w_ - 1), std::clamp(y, 0, h_ - 1));
  }
  const std::vector<double>& data() const { return v_; }

 private:
  int w_, h_;
  std::vector<double> v_;
};

inline GrayPlane gaussian_blur(const GrayPlane& in, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += k[static_cast<std::size_t>(i + radius)];
  }
  for (double& v : k) v /= total;
  GrayPlane tmp(in.width(), in.height());
  GrayPlane out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += k[static_cast<std::size_t>(i + radius)] * in.clamped(x + i, y);
      tmp(x, y) = s;
    }
  for (int y = 0; y < in.height(); ++y)
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i) s += k[static_cast<std::size_t>(i + radius)] * tmp.clamped(x, y + i);
      out(x, y) = s;
    }
  return out;
}

/// 3x3 Sobel response at (x, y); y grows downwards.
inline std::pair<double, double> sobel_at(const GrayPlane& g, int x, int y) {
  const double gx = (g.clamped(x + 1, y - 1) + 2.0 * g.clamped(x + 1, y) + g.clamped(x + 1, y + 1)) -
                    (g.clamped(x - 1, y - 1) + 2.0 * g.clamped(x - 1, y) + g.clamped(x - 1, y + 1));
  const double gy = (g.clamped(x - 1, y + 1) + 2.0 * g.clamped(x, y + 1) + g.clamped(x + 1, y + 1)) -
                    (g.clamped(x - 1, y - 1) + 2.0 * g.clamped(x, y - 1) + g.clamped(x + 1, y - 1));
  return {gx, gy};
}

struct CannyParams {
  double blur_sigma = 1.4;
  double low_percentile = 0.70;
  double high_percentile = 0.90;
};

struct EdgeMap {
  std::vector<std::uint8_t> edge;  ///< 1 where an edge was detected
  std::vector<double> gx, gy;      ///< Sobel gradient of the smoothed image
};

inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  const auto pos = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(pos), values.end());
  return values[pos];
}

/// Canny detector: Gaussian smoothing, Sobel gradient, non-maximum
/// suppression, then hysteresis with percentile thresholds of the gradient
/// magnitude. Only pixels with a strictly positive gradient can be edges.
inline EdgeMap canny(const RgbImage& img, const CannyParams& params = {}) {
  const int w = img.width(), h = img.height();
  const GrayPlane smooth = gaussian_blur(GrayPlane(img), params.blur_sigma);
  const std::size_t count = img.size();
  EdgeMap out;
  out.gx.resize(count);
  out.gy.resize(count);
  std::vector<double> mag(count);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto [gx, gy] = sobel_at(smooth, x, y);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.gx[i] = gx;
      out.gy[i] = gy;
      mag[i] = std::hypot(gx, gy);
    }
  auto mag_at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };

  // non-maximum suppression along the gradient direction quantized to 45 degrees;
  // ties keep the pixel on the "before" side so plateaus yield one-pixel lines
  std::vector<double> thin(count, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      if (mag[i] <= 0.0) continue;
      double angle = std::atan2(out.gy[i], out.gx[i]) * 180.0 / 3.14159265358979323846;
      if (angle < 0.0) angle += 180.0;
      int dx = 0, dy = 0;
      if (angle < 22.5 || angle >= 157.5) {
        dx = 1;
      } else if (angle < 67.5) {
        dx = 1;
        dy = 1;
      } else if (angle < 112.5) {
        dy = 1;
      } else {
        dx = -1;
        dy = 1;
      }
      if (mag[i] > mag_at(x - dx, y - dy) && mag[i] >= mag_at(x + dx, y + dy)) thin[i] = mag[i];
    }

  const double low = percentile(mag, params.low_percentile);
  const double high = percentile(mag, params.high_percentile);
  out.edge.assign(count, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < count; ++i)
    if (thin[i] > 0.0 && thin[i] > high) {
      out.edge[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % static_cast<std::size_t>(w));
    const int y = static_cast<int>(i / static_cast<std::size_t>(w));
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        const int nx = x + ox, ny = y + oy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (!out.edge[j] && thin[j] > 0.0 && thin[j] > low) {
          out.edge[j] = 1;
          stack.push_back(j);
        }
      }
  }
  return out;
}

/// Direction of a gradient in degrees, in [0, 360).
inline double gradient_direction_deg(double gx, double gy) {
  double a = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

/// Bins 0..71 count edge pixels by gradient direction in 5 degree steps,
/// normalized by the number of edge pixels (all zero when there are none);
/// bin 72 is the fraction of non-edge pixels.
inline FeatureVector edge_direction_histogram(const RgbImage& img, const CannyParams& params = {}) {
  if (img.width() < 3 || img.height() < 3)
    throw Error("edge histogram needs an image of at least 3x3, got " +
                std::to_string(img.width()) + "x" + std::to_string(img.height()));
  const EdgeMap edges = canny(img, params);
  FeatureVector out{FeatureKind::Edh73, std::vector<double>(73, 0.0)};
  std::size_t edge_count = 0;
  for (std::size_t i = 0; i < edges.edge.size(); ++i) {
    if (!edges.edge[i]) continue;
    ++edge_count;
    const double deg = gradient_direction_deg(edges.gx[i], edges.gy[i]);
    const auto bin = std::min<std::size_t>(71, static_cast<std::size_t>(deg / 5.0));
    out.values[bin] += 1.0;
  }
  if (edge_count > 0)
    for (std::size_t b = 0; b < 72; ++b) out.values[b] /= static_cast<double>(edge_count);
  out.values[72] = static_cast<double>(img.size() - edge_count) / static_cast<double>(img.size());
  return out;
}

// ---------------------------------------------------------------------------
// color auto-correlogram

inline constexpr std::array<int, 4> kCorrelogramDistances = {1, 3, 5, 7};
inline constexpr int kHsvBins = 36;

/// 36 HSV colors: 6 hue sectors x 3 saturation levels x 2 value levels,
/// index = hue * 6 + saturation * 2 + value.
inline int hsv_bin(Rgb p) {
  const Hsv c = rgb_to_hsv(p);
  const int hi = std::min(5, static_cast<int>(c.h / 60.0));
  const int si = std::min(2, static_cast<int>(c.s * 3.0));
  const int vi = std::min(1, static_cast<int>(c.v * 2.0));
  return hi * 6 + si * 2 + vi;
}

/// For each color c and distance d in {1, 3, 5, 7}: among ordered pixel
/// pairs (p1, p2) with p1 of color c and chessboard distance exactly d (p2
/// inside the image), the fraction where p2 also has color c. Output index
/// is c * 4 + distance slot; colors that never occur give 0.
inline FeatureVector color_autocorrelogram(const RgbImage& img) {
  const int w = img.width(), h = img.height();
  const int need = kCorrelogramDistances.back() + 1;
  if (w < need || h < need)
    throw Error("correlogram needs an image of at least " + std::to_string(need) + "x" +
                std::to_string(need) + ", got " + std::to_string(w) + "x" + std::to_string(h));
  std::vector<int> color(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) color[i] = hsv_bin(img.pixels()[i]);

  FeatureVector out{FeatureKind::Corr144, std::vector<double>(kHsvBins * 4, 0.0)};
  for (std::size_t slot = 0; slot < kCorrelogramDistances.size(); ++slot) {
    const int d = kCorrelogramDistances[slot];
    std::vector<std::uint64_t> same(kHsvBins, 0), total(kHsvBins, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int c = color[static_cast<std::size_t>(y) * w + x];
        auto visit = [&](int nx, int ny) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
          ++total[static_cast<std::size_t>(c)];
          if (color[static_cast<std::size_t>(ny) * w + nx] == c) ++same[static_cast<std::size_t>(c)];
        };
        // the square ring at chessboard distance d: top and bottom rows, then the sides
        for (int ox = -d; ox <= d; ++ox) {
          visit(x + ox, y - d);
          visit(x + ox, y + d);
        }
        for (int oy = -d + 1; oy <= d - 1; ++oy) {
          visit(x - d, y + oy);
          visit(x + d, y + oy);
        }
      }
    for (int c = 0; c < kHsvBins; ++c)
      if (total[static_cast<std::size_t>(c)] > 0)
        out.values[static_cast<std::size_t>(c) * 4 + slot] =
            static_cast<double>(same[static_cast<std::size_t>(c)]) /
            static_cast<double>(total[static_cast<std::size_t>(c)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// block-wise color moments

inline constexpr int kMomentGrid = 5;

/// Boundaries of the 5 x 5 grid along one axis: round(i * extent / 5).
inline std::array<int, kMomentGrid + 1> grid_bounds(int extent) {
  std::array<int, kMomentGrid + 1> b{};
  for (int i = 0; i <= kMomentGrid; ++i)
    b[static_cast<std::size_t>(i)] =
        static_cast<int>(std::lround(static_cast<double>(i) * extent / kMomentGrid));
  return b;
}

/// Mean, standard deviation and signed cube root of the third central
/// moment of one sample. The mean is accumulated relative to the first
/// value so that constant input gives exactly zero spread.
inline std::array<double, 3> moments(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double shift = v.front();
  double acc = 0.0;
  for (double x : v) acc += x - shift;
  const double mean = shift + acc / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double dev = x - mean;
    m2 += dev * dev;
    m3 += dev * dev * dev;
  }
  return {mean, std::sqrt(m2 / n), std::cbrt(m3 / n)};
}

/// Output layout: block (row-major over the grid), then L/a/b channel, then
/// (mean, std, skew).
inline FeatureVector color_moments(const RgbImage& img) {
  if (img.width() < kMomentGrid || img.height() < kMomentGrid)
    throw Error("color moments need an image of at least 5x5, got " + std::to_string(img.width()) +
                "x" + std::to_string(img.height()));
  std::vector<Lab> lab(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) lab[i] = rgb_to_lab(img.pixels()[i]);
  const auto xb = grid_bounds(img.width());
  const auto yb = grid_bounds(img.height());

  FeatureVector out{FeatureKind::Cm225, std::vector<double>(225, 0.0)};
  std::array<std::vector<double>, 3> channel;
  for (int by = 0; by < kMomentGrid; ++by)
    for (int bx = 0; bx < kMomentGrid; ++bx) {
      for (auto& c : channel) c.clear();
      for (int y = yb[static_cast<std::size_t>(by)]; y < yb[static_cast<std::size_t>(by) + 1]; ++y)
        for (int x = xb[static_cast<std::size_t>(bx)]; x < xb[static_cast<std::size_t>(bx) + 1]; ++x) {
          const Lab& p = lab[static_cast<std::size_t>(y) * img.width() + x];
          channel[0].push_back(p.l);
          channel[1].push_back(p.a);
          channel[2].push_back(p.b);
        }
      const std::size_t block = static_cast<std::size_t>(by * kMomentGrid + bx);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const auto m = moments(channel[ch]);
        for (std::size_t k = 0; k < 3; ++k) out.values[block * 9 + ch * 3 + k] = m[k];
      }
    }
  return out;
}

inline FeatureVector extract_features(const RgbImage& img, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Edh73: return edge_direction_histogram(img);
    case FeatureKind::Corr144: return color_autocorrelogram(img);
    case FeatureKind::Cm225: return color_moments(img);
  }
  throw Error("unhandled feature kind");
}

}  // namespace diffmap
