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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivescene/schema.h"

namespace drivescene {

using Rgb = std::array<std::uint8_t, 3>;

// 8-bit RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, Rgb fill = {0, 0, 0});

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  bool operator==(const Image&) const = default;
};

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c);
void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb c, int stroke = 1);
void stroke_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c, int stroke = 1);
// Fills the convex polygon given in pixel coordinates (pixel centers sampled).
void fill_convex(Image& img, const std::vector<Vec2d>& poly, Rgb c);
void stroke_polygon(Image& img, const std::vector<Vec2d>& poly, Rgb c, int stroke = 1);
// 5x7 glyphs at the given integer scale; lowercase is drawn as uppercase.
void draw_text(Image& img, int x, int y, const std::string& text, Rgb c, int scale = 1);
int text_width(const std::string& text, int scale = 1);
void blit(Image& dst, const Image& src, int x, int y);
Image resize_nearest(const Image& src, int w, int h);

std::string encode_png(const Image& img);
Image decode_png(const std::string& bytes);
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

Rgb category_color(Category c);
inline constexpr Rgb kBackground = {24, 24, 28};
inline constexpr Rgb kHighlight = {255, 40, 40};
inline constexpr Rgb kEgoColor = {40, 220, 255};
inline constexpr Rgb kMaskFill = {96, 96, 96};

struct BevStyle {
  double extent = 40.0;     // half-width in meters
  double resolution = 8.0;  // px per meter
  bool show_lanes = true;
  std::vector<int> highlight;       // object indices in the frame
  std::vector<std::string> labels;  // parallel to highlight; "#i" when empty

  void validate() const;
};

// Ego-frame meters to BEV pixels: +x to the right, +y (left) upward.
Vec2d bev_pixel(const Vec3d& p, const BevStyle& style);

Image render_bev(const Scene& scene, int t, const BevStyle& style = {});

struct TileOptions {
  bool placeholder = true;
  std::filesystem::path asset_root;
  int tile_width = 240;
  double view_threshold = 0.1;
};

inline constexpr int kTileHeader = 11;

// One camera image scaled to tile width, without header.
Image render_camera_view(const Scene& scene, int t, const std::string& camera,
                         const TileOptions& opts);

struct Overlay {
  int object = 0;
  std::string camera;
  int tile_x = 0;  // image-area origin of the tile in the composed grid
  int tile_y = 0;
  std::array<int, 4> box{};  // x0 y0 x1 y1 in grid pixels
};

struct MultiviewImage {
  Image image;
  std::vector<Overlay> overlays;
  std::map<std::string, std::array<int, 2>> tile_origin;  // image area of each camera
};

// Grid of camera tiles in canonical clockwise order with highlighted 2D boxes.
// A non-empty highlight_cameras[k] restricts highlight[k] to that one camera.
MultiviewImage render_multiview(const Scene& scene, int t, const std::vector<int>& highlight,
                                const std::vector<std::string>& labels, const TileOptions& opts,
                                const std::optional<std::string>& masked_camera = std::nullopt,
                                const std::vector<std::string>& highlight_cameras = {});

struct CameraView {
  std::string camera;
  Image image;
};

struct CameraGrid {
  Image image;
  std::map<char, std::string> lookup;  // letter to camera name
};

// Tiles placed in the given order, stamped A, B, C ...
CameraGrid compose_camera_grid(const std::vector<CameraView>& views, const std::vector<int>& order);

// Frames t0..t0+n-1; every frame after the first has `camera` masked.
std::vector<Image> mask_camera_sequence(const Scene& scene, int t0, int n, const std::string& camera,
                                        const TileOptions& opts);

// Declarative description of a rendered asset; QA items store these.
struct AssetSpec {
  std::string kind;  // bev, multiview, camera, camera_grid, masked
  std::string scene_id;
  int frame = 0;
  std::string camera;
  std::vector<int> highlight;
  std::vector<std::string> labels;
  std::vector<std::string> highlight_cameras;
  std::vector<int> order;
  int length = 1;

  std::vector<std::string> paths() const;
  nlohmann::json to_json() const;
  static AssetSpec from_json(const nlohmann::json& j);
  bool operator==(const AssetSpec&) const = default;
};

std::vector<Image> render_asset(const Scene& scene, const AssetSpec& spec, const TileOptions& opts,
                                const BevStyle& bev = {});

}  // namespace drivescene
