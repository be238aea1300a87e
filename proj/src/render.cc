// Copyright 2026 The Drivescene Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drivescene/render.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "drivescene/errors.h"
#include "drivescene/rng.h"

namespace drivescene {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(std::size_t(w) * h * 3) {
  for (std::size_t k = 0; k < pixels.size(); k += 3) {
    pixels[k] = fill[0];
    pixels[k + 1] = fill[1];
    pixels[k + 2] = fill[2];
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t k = (std::size_t(y) * width + x) * 3;
  return {pixels[k], pixels[k + 1], pixels[k + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (!contains(x, y)) return;
  const std::size_t k = (std::size_t(y) * width + x) * 3;
  pixels[k] = c[0];
  pixels[k + 1] = c[1];
  pixels[k + 2] = c[2];
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width - 1);
  y1 = std::min(y1, img.height - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) img.set(x, y, c);
  }
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c, int stroke) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  const int lo = -(stroke - 1) / 2, hi = stroke / 2;
  int err = dx + dy;
  while (true) {
    fill_rect(img, x0 + lo, y0 + lo, x0 + hi, y0 + hi, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void stroke_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c, int stroke) {
  for (int k = 0; k < stroke; ++k) {
    fill_rect(img, x0 + k, y0 + k, x1 - k, y0 + k, c);
    fill_rect(img, x0 + k, y1 - k, x1 - k, y1 - k, c);
    fill_rect(img, x0 + k, y0 + k, x0 + k, y1 - k, c);
    fill_rect(img, x1 - k, y0 + k, x1 - k, y1 - k, c);
  }
}

void fill_convex(Image& img, const std::vector<Vec2d>& poly, Rgb c) {
  if (poly.size() < 3) return;
  double ymin = poly[0].y(), ymax = poly[0].y();
  for (const auto& p : poly) {
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const int y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(ymax - 0.5)));
  for (int y = y0; y <= y1; ++y) {
    const double yc = y + 0.5;
    double lo = 1e300, hi = -1e300;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const Vec2d& a = poly[k];
      const Vec2d& b = poly[(k + 1) % poly.size()];
      if ((a.y() <= yc && b.y() > yc) || (b.y() <= yc && a.y() > yc)) {
        const double x = a.x() + (yc - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    if (lo > hi) continue;
    // Pixel x is covered when its centre x + 0.5 lies in [lo, hi).
    const int x0 = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(hi - 0.5)) - 1);
    for (int x = x0; x <= x1; ++x) img.set(x, y, c);
  }
}

void stroke_polygon(Image& img, const std::vector<Vec2d>& poly, Rgb c, int stroke) {
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2d& a = poly[k];
    const Vec2d& b = poly[(k + 1) % poly.size()];
    draw_line(img, static_cast<int>(std::floor(a.x())), static_cast<int>(std::floor(a.y())),
              static_cast<int>(std::floor(b.x())), static_cast<int>(std::floor(b.y())), c, stroke);
  }
}

namespace {

using Glyph = std::array<std::uint8_t, 7>;

const Glyph& glyph(char ch) {
  static const std::map<char, Glyph> font = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'#', {0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
      {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
      {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
  };
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  auto it = font.find(up);
  return it == font.end() ? font.at('?') : it->second;
}

}  // namespace

int text_width(const std::string& text, int scale) {
  return text.empty() ? 0 : (6 * static_cast<int>(text.size()) - 1) * scale;
}

void draw_text(Image& img, int x, int y, const std::string& text, Rgb c, int scale) {
  for (std::size_t k = 0; k < text.size(); ++k) {
    const Glyph& g = glyph(text[k]);
    const int gx = x + static_cast<int>(k) * 6 * scale;
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if (g[row] & (0x10 >> col)) {
          fill_rect(img, gx + col * scale, y + row * scale, gx + (col + 1) * scale - 1,
                    y + (row + 1) * scale - 1, c);
        }
      }
    }
  }
}

void blit(Image& dst, const Image& src, int x, int y) {
  for (int r = 0; r < src.height; ++r) {
    for (int q = 0; q < src.width; ++q) dst.set(x + q, y + r, src.at(q, r));
  }
}

Image resize_nearest(const Image& src, int w, int h) {
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(src.height - 1, static_cast<int>((y + 0.5) * src.height / h));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(src.width - 1, static_cast<int>((x + 0.5) * src.width / w));
      out.set(x, y, src.at(sx, sy));
    }
  }
  return out;
}

namespace {

void png_append(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

void png_flush_noop(png_structp) {}

struct PngReader {
  const std::string* bytes;
  std::size_t offset = 0;
};

void png_consume(png_structp png, png_bytep data, png_size_t length) {
  auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
  if (r->offset + length > r->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(data, r->bytes->data() + r->offset, length);
  r->offset += length;
}

}  // namespace

std::string encode_png(const Image& img) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_append, png_flush_noop);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 3);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.pixels.data() + std::size_t(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(const std::string& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8)) {
    throw Error("not a PNG stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  PngReader reader{&bytes};
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("PNG decoding failed");
  }
  png_set_read_fn(png, &reader, png_consume);
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  img = Image(w, h);
  for (int y = 0; y < h; ++y) png_read_row(png, img.pixels.data() + std::size_t(y) * w * 3, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = encode_png(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingImage(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_png(ss.str());
}

Rgb category_color(Category c) {
  switch (c) {
    case Category::kCar: return {70, 130, 255};
    case Category::kTruck: return {255, 160, 40};
    case Category::kPedestrian: return {60, 230, 90};
    case Category::kCyclist: return {230, 80, 230};
    case Category::kTrafficCone: return {255, 230, 40};
    case Category::kBarrier: return {200, 200, 200};
    case Category::kOther: return {150, 110, 80};
  }
  return {255, 255, 255};
}

void BevStyle::validate() const {
  if (!(extent > 0) || !(resolution > 0)) throw InvariantError("style", "extent and resolution must be positive");
  if (!labels.empty() && labels.size() != highlight.size()) {
    throw InvariantError("style.labels", "labels must parallel highlight");
  }
}

Vec2d bev_pixel(const Vec3d& p, const BevStyle& style) {
  const double half = std::round(style.extent * style.resolution);
  return {half + p.x() * style.resolution, half - p.y() * style.resolution};
}

namespace {

std::vector<Vec2d> bev_box(const Vec3d& c, const Vec3d& size, double yaw, const BevStyle& style) {
  const Vec3d f = forward_axis(yaw) * (size.x() / 2);
  const Vec3d l = -right_axis(yaw) * (size.y() / 2);
  return {bev_pixel(c + f + l, style), bev_pixel(c + f - l, style), bev_pixel(c - f - l, style),
          bev_pixel(c - f + l, style)};
}

}  // namespace

Image render_bev(const Scene& scene, int t, const BevStyle& style) {
  style.validate();
  const Frame& frame = scene.frames.at(t);
  const int n = static_cast<int>(2 * std::round(style.extent * style.resolution));
  Image img(n, n, kBackground);
  if (style.show_lanes) {
    for (const Polyline& lane : frame.lanes) {
      for (std::size_t k = 1; k < lane.size(); ++k) {
        const Vec2d a = bev_pixel(Vec3d(lane[k - 1].x(), lane[k - 1].y(), 0), style);
        const Vec2d b = bev_pixel(Vec3d(lane[k].x(), lane[k].y(), 0), style);
        draw_line(img, int(std::floor(a.x())), int(std::floor(a.y())), int(std::floor(b.x())),
                  int(std::floor(b.y())), {90, 90, 100});
      }
    }
  }
  for (const ObjectAnnotation& o : frame.objects) {
    const auto poly = bev_box(o.center, o.size, o.yaw, style);
    fill_convex(img, poly, category_color(o.category));
    const Vec2d c = bev_pixel(o.center, style);
    const Vec2d nose = bev_pixel(o.center + forward_axis(o.yaw) * (0.4 * o.size.x()), style);
    draw_line(img, int(std::floor(c.x())), int(std::floor(c.y())), int(std::floor(nose.x())),
              int(std::floor(nose.y())), {250, 250, 250});
  }
  for (std::size_t k = 0; k < style.highlight.size(); ++k) {
    const ObjectAnnotation& o = frame.objects.at(style.highlight[k]);
    const auto poly = bev_box(o.center, o.size, o.yaw, style);
    stroke_polygon(img, poly, kHighlight, 2);
    const std::string label =
        style.labels.empty() ? "#" + std::to_string(style.highlight[k]) : style.labels[k];
    double right = poly[0].x(), top = poly[0].y();
    for (const auto& p : poly) {
      right = std::max(right, p.x());
      top = std::min(top, p.y());
    }
    draw_text(img, int(right) + 2, int(top) - 9, label, kHighlight);
  }
  // Ego marker: a wedge the size of the ego footprint, nose along +x.
  const Vec3d ego = ego_size(scene.metadata.ego_type);
  const std::vector<Vec2d> wedge = {bev_pixel(Vec3d(ego.x() / 2, 0, 0), style),
                                    bev_pixel(Vec3d(-ego.x() / 2, -ego.y() / 2, 0), style),
                                    bev_pixel(Vec3d(-ego.x() / 2, ego.y() / 2, 0), style)};
  fill_convex(img, wedge, kEgoColor);
  return img;
}

namespace {

int tile_height(const CameraCalibration& cam, int tile_width) {
  return std::max(1, static_cast<int>(std::lround(double(tile_width) * cam.height / cam.width)));
}

Image placeholder_view(const Frame& frame, const CameraCalibration& cam, int index, int tw) {
  const int th = tile_height(cam, tw);
  Image img(tw, th);
  const std::uint8_t tint = static_cast<std::uint8_t>(12 * (index % 6));
  for (int y = 0; y < th; ++y) {
    for (int x = 0; x < tw; ++x) {
      const bool dark = ((x / 16) + (y / 16)) % 2 == 0;
      const std::uint8_t v = dark ? 48 : 64;
      img.set(x, y, {v, v, static_cast<std::uint8_t>(v + tint)});
    }
  }
  const double s = double(tw) / cam.width;
  // Far objects first so nearer boxes paint over them.
  std::vector<std::pair<double, const ObjectAnnotation*>> order;
  const Mat4d cfe = cam.camera_from_ego();
  for (const ObjectAnnotation& o : frame.objects) {
    if (o.projection_in(cam.camera_name)) order.push_back({-transform_point(cfe, o.center).z(), &o});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [depth, o] : order) {
    const Projection* p = o->projection_in(cam.camera_name);
    fill_rect(img, int(p->box[0] * s), int(p->box[1] * s), int(p->box[2] * s), int(p->box[3] * s),
              category_color(o->category));
  }
  return img;
}

}  // namespace

Image render_camera_view(const Scene& scene, int t, const std::string& camera,
                         const TileOptions& opts) {
  const Frame& frame = scene.frames.at(t);
  const CameraCalibration* cam = frame.camera(camera);
  if (!cam) throw NotFound("camera " + camera + " not in frame " + std::to_string(t));
  if (opts.placeholder) {
    const auto& order = canonical_camera_order(scene.metadata.source);
    const int index = static_cast<int>(std::find(order.begin(), order.end(), camera) - order.begin());
    return placeholder_view(frame, *cam, index, opts.tile_width);
  }
  auto ref = frame.image_refs.find(camera);
  if (ref == frame.image_refs.end()) {
    throw MissingImage(scene.scene_id + "/" + std::to_string(t) + "/" + camera);
  }
  const std::filesystem::path path = opts.asset_root / ref->second;
  if (!std::filesystem::exists(path)) throw MissingImage(path.string());
  return resize_nearest(read_png(path), opts.tile_width, tile_height(*cam, opts.tile_width));
}

namespace {

struct GridLayout {
  int cols = 1;
  int rows = 1;
  int tw = 0;
  int th = 0;
  int cell_h() const { return th + kTileHeader; }
  std::array<int, 2> origin(int k) const { return {(k % cols) * tw, (k / cols) * cell_h() + kTileHeader}; }
};

GridLayout layout_for(int n, int tw, int th) {
  GridLayout g;
  g.rows = n >= 2 ? 2 : 1;
  g.cols = (n + g.rows - 1) / g.rows;
  g.tw = tw;
  g.th = th;
  return g;
}

constexpr Rgb kHeaderFill = {10, 10, 12};
constexpr Rgb kHeaderText = {230, 230, 230};

}  // namespace

MultiviewImage render_multiview(const Scene& scene, int t, const std::vector<int>& highlight,
                                const std::vector<std::string>& labels, const TileOptions& opts,
                                const std::optional<std::string>& masked_camera,
                                const std::vector<std::string>& highlight_cameras) {
  if (!labels.empty() && labels.size() != highlight.size()) {
    throw InvariantError("labels", "labels must parallel highlight");
  }
  if (!highlight_cameras.empty() && highlight_cameras.size() != highlight.size()) {
    throw InvariantError("highlight_cameras", "must parallel highlight");
  }
  const Frame& frame = scene.frames.at(t);
  const auto& order = canonical_camera_order(scene.metadata.source);
  std::vector<std::string> cams;
  for (const auto& name : order) {
    if (frame.camera(name)) cams.push_back(name);
  }
  const CameraCalibration& first = *frame.camera(cams.front());
  const GridLayout g = layout_for(int(cams.size()), opts.tile_width, tile_height(first, opts.tile_width));
  MultiviewImage out;
  out.image = Image(g.cols * g.tw, g.rows * g.cell_h(), kHeaderFill);
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const auto [x, y] = g.origin(int(k));
    out.tile_origin[cams[k]] = {x, y};
    const bool masked = masked_camera && *masked_camera == cams[k];
    draw_text(out.image, x + 2, y - kTileHeader + 2, masked ? "MASKED " + cams[k] : cams[k], kHeaderText);
    if (masked) {
      fill_rect(out.image, x, y, x + g.tw - 1, y + g.th - 1, kMaskFill);
      continue;
    }
    blit(out.image, render_camera_view(scene, t, cams[k], opts), x, y);
  }
  for (std::size_t h = 0; h < highlight.size(); ++h) {
    const ObjectAnnotation& o = frame.objects.at(highlight[h]);
    const std::string label = labels.empty() ? "#" + std::to_string(highlight[h]) : labels[h];
    for (const Projection& p : o.projections) {
      if (p.visibility < opts.view_threshold) continue;
      if (masked_camera && *masked_camera == p.camera_name) continue;
      if (!highlight_cameras.empty() && !highlight_cameras[h].empty() &&
          highlight_cameras[h] != p.camera_name) {
        continue;
      }
      auto it = out.tile_origin.find(p.camera_name);
      if (it == out.tile_origin.end()) continue;
      const CameraCalibration& cam = *frame.camera(p.camera_name);
      const double s = double(g.tw) / cam.width;
      const auto [x, y] = it->second;
      Overlay ov;
      ov.object = highlight[h];
      ov.camera = p.camera_name;
      ov.tile_x = x;
      ov.tile_y = y;
      ov.box = {x + std::clamp(int(std::lround(p.box[0] * s)), 0, g.tw - 1),
                y + std::clamp(int(std::lround(p.box[1] * s)), 0, g.th - 1),
                x + std::clamp(int(std::lround(p.box[2] * s)), 0, g.tw - 1),
                y + std::clamp(int(std::lround(p.box[3] * s)), 0, g.th - 1)};
      stroke_rect(out.image, ov.box[0], ov.box[1], ov.box[2], ov.box[3], kHighlight, 2);
      const int ty = std::max(y, ov.box[1] - 9);
      draw_text(out.image, ov.box[0], ty, label, kHighlight);
      out.overlays.push_back(ov);
    }
  }
  return out;
}

CameraGrid compose_camera_grid(const std::vector<CameraView>& views, const std::vector<int>& order) {
  if (views.empty()) throw InvariantError("views", "no camera views");
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k] != int(k)) throw InvariantError("order", "not a permutation of the views");
  }
  if (sorted.size() != views.size()) throw InvariantError("order", "not a permutation of the views");
  int tw = 0, th = 0;
  for (const auto& v : views) {
    tw = std::max(tw, v.image.width);
    th = std::max(th, v.image.height);
  }
  const GridLayout g = layout_for(int(views.size()), tw, th);
  CameraGrid out;
  out.image = Image(g.cols * g.tw, g.rows * g.cell_h(), kHeaderFill);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const char letter = static_cast<char>('A' + k);
    const auto [x, y] = g.origin(int(k));
    blit(out.image, views[order[k]].image, x, y);
    fill_rect(out.image, x, y, x + 17, y + 19, {0, 0, 0});
    draw_text(out.image, x + 4, y + 3, std::string(1, letter), {255, 255, 255}, 2);
    out.lookup[letter] = views[order[k]].camera;
  }
  return out;
}

std::vector<Image> mask_camera_sequence(const Scene& scene, int t0, int n, const std::string& camera,
                                        const TileOptions& opts) {
  if (n < 2) throw InvariantError("length", "sequence needs at least two frames");
  if (t0 < 0 || t0 + n > static_cast<int>(scene.frames.size())) {
    throw InvariantError("frames", "sequence exceeds scene length");
  }
  if (camera == front_camera(scene.metadata.source)) {
    throw InvariantError("camera", "the front camera cannot be masked");
  }
  if (!scene.frames[t0].camera(camera)) throw NotFound("camera " + camera);
  std::vector<Image> out;
  for (int k = 0; k < n; ++k) {
    out.push_back(render_multiview(scene, t0 + k, {}, {}, opts,
                                   k == 0 ? std::nullopt : std::optional<std::string>(camera))
                      .image);
  }
  return out;
}

namespace {

std::string short_hash(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx",
                static_cast<unsigned long long>(hash_string(s) & 0xffffffffULL));
  return buf;
}

std::string highlight_suffix(const AssetSpec& a) {
  if (a.highlight.empty()) return "";
  nlohmann::json j = {{"h", a.highlight}, {"l", a.labels}};
  if (!a.highlight_cameras.empty()) j["c"] = a.highlight_cameras;
  return "-" + short_hash(j.dump());
}

}  // namespace

std::vector<std::string> AssetSpec::paths() const {
  const std::string base = scene_id + "/";
  auto at = [&](int f, const std::string& name) { return base + std::to_string(f) + "/" + name + ".png"; };
  if (kind == "bev") return {at(frame, "bev" + highlight_suffix(*this))};
  if (kind == "multiview") return {at(frame, "multiview" + highlight_suffix(*this))};
  if (kind == "camera") return {at(frame, "camera-" + camera)};
  if (kind == "camera_grid") return {at(frame, "camera_grid-" + short_hash(nlohmann::json(order).dump()))};
  if (kind == "video" || kind == "masked") {
    std::vector<std::string> out = {at(frame, "multiview" + highlight_suffix(*this))};
    for (int k = 1; k < length; ++k) {
      out.push_back(kind == "video" ? at(frame + k, "multiview") : at(frame + k, "masked-" + camera));
    }
    return out;
  }
  throw InvariantError("kind", "unknown asset kind " + kind);
}

nlohmann::json AssetSpec::to_json() const {
  nlohmann::json j = {{"kind", kind}, {"scene_id", scene_id}, {"frame", frame}};
  if (!camera.empty()) j["camera"] = camera;
  if (!highlight.empty()) j["highlight"] = highlight;
  if (!labels.empty()) j["labels"] = labels;
  if (!highlight_cameras.empty()) j["highlight_cameras"] = highlight_cameras;
  if (!order.empty()) j["order"] = order;
  if (length != 1) j["length"] = length;
  return j;
}

AssetSpec AssetSpec::from_json(const nlohmann::json& j) {
  AssetSpec a;
  a.kind = j.at("kind").get<std::string>();
  a.scene_id = j.at("scene_id").get<std::string>();
  a.frame = j.at("frame").get<int>();
  a.camera = j.value("camera", std::string());
  a.highlight = j.value("highlight", std::vector<int>());
  a.labels = j.value("labels", std::vector<std::string>());
  a.highlight_cameras = j.value("highlight_cameras", std::vector<std::string>());
  a.order = j.value("order", std::vector<int>());
  a.length = j.value("length", 1);
  return a;
}

std::vector<Image> render_asset(const Scene& scene, const AssetSpec& spec, const TileOptions& opts,
                                const BevStyle& bev) {
  if (spec.kind == "bev") {
    BevStyle style = bev;
    style.highlight = spec.highlight;
    style.labels = spec.labels;
    return {render_bev(scene, spec.frame, style)};
  }
  if (spec.kind == "multiview") {
    return {render_multiview(scene, spec.frame, spec.highlight, spec.labels, opts, std::nullopt,
                             spec.highlight_cameras)
                .image};
  }
  if (spec.kind == "camera") return {render_camera_view(scene, spec.frame, spec.camera, opts)};
  if (spec.kind == "camera_grid") {
    std::vector<CameraView> views;
    for (const auto& name : canonical_camera_order(scene.metadata.source)) {
      views.push_back({name, render_camera_view(scene, spec.frame, name, opts)});
    }
    return {compose_camera_grid(views, spec.order).image};
  }
  if (spec.kind == "video") {
    std::vector<Image> out;
    for (int k = 0; k < spec.length; ++k) {
      out.push_back(k == 0 ? render_multiview(scene, spec.frame, spec.highlight, spec.labels, opts).image
                           : render_multiview(scene, spec.frame + k, {}, {}, opts).image);
    }
    return out;
  }
  if (spec.kind == "masked") return mask_camera_sequence(scene, spec.frame, spec.length, spec.camera, opts);
  throw InvariantError("kind", "unknown asset kind " + spec.kind);
}

}  // namespace drivescene
