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

#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "drivescene/errors.h"
#include "drivescene/rng.h"
#include "drivescene/synthetic.h"
#include "test_scenes.h"

namespace drivescene {
namespace {

using testing::box;
using testing::empty_frame;
using testing::scene_of;

TEST(Raster, PngRoundTripAndDeterminism) {
  Rng rng(1);
  Image img(37, 23);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
  const std::string a = encode_png(img);
  EXPECT_EQ(a, encode_png(img));
  EXPECT_EQ(decode_png(a), img);
  EXPECT_THROW(decode_png("garbage!"), Error);
}

TEST(Raster, TextAndRects) {
  Image img(40, 12);
  draw_text(img, 1, 1, "A1", {255, 255, 255});
  int lit = 0;
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 40; ++x) lit += img.at(x, y)[0] == 255;
  EXPECT_GT(lit, 10);
  EXPECT_EQ(text_width("A1"), 11);
  Image r(10, 10);
  stroke_rect(r, 2, 2, 7, 7, {9, 9, 9}, 1);
  EXPECT_EQ(r.at(2, 5), (Rgb{9, 9, 9}));
  EXPECT_EQ(r.at(4, 4), (Rgb{0, 0, 0}));
}

std::vector<std::pair<int, int>> pixels_not(const Image& img, Rgb bg) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) != bg) out.push_back({x, y});
  return out;
}

TEST(RenderBev, EmptyFrameHasOnlyEgoMarker) {
  const Scene s = scene_of({empty_frame(0, 0.0)});
  BevStyle style;
  const Image img = render_bev(s, 0, style);
  ASSERT_EQ(img.width, 640);
  const auto lit = pixels_not(img, kBackground);
  ASSERT_FALSE(lit.empty());
  const double half = 320, ex = 4.6 / 2 * 8, ey = 1.9 / 2 * 8;
  for (auto [x, y] : lit) {
    EXPECT_EQ(img.at(x, y), kEgoColor);
    EXPECT_GE(x + 0.5, half - ex);
    EXPECT_LE(x + 0.5, half + ex);
    EXPECT_GE(y + 0.5, half - ey);
    EXPECT_LE(y + 0.5, half + ey);
  }
  // The wedge narrows toward +x: more pixels on the rear half.
  int rear = 0;
  for (auto [x, y] : lit) rear += x < half;
  EXPECT_GT(rear, static_cast<int>(lit.size()) / 2);
}

std::array<double, 2> centroid_of(const Image& img, Rgb c) {
  double sx = 0, sy = 0;
  int n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) == c) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
  return {sx / n, sy / n};
}

TEST(RenderBev, ObjectAheadDrawnToTheRight) {
  Frame f = empty_frame(0, 0.0);
  f.objects.push_back(box("a", Category::kCar, Vec3d(10, 0, 0), 0, Vec3d(4, 2, 1.5)));
  const Scene s = scene_of({f});
  BevStyle style;
  const Image img = render_bev(s, 0, style);
  // Rectangle spans 10 +/- 2 m by +/- 1 m: 32 x 16 px around (400, 320).
  int n = 0;
  double sx = 0, sy = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const Rgb c = img.at(x, y);
      if (c == category_color(Category::kCar) || c == Rgb{250, 250, 250}) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
    }
  EXPECT_EQ(n, 32 * 16);
  EXPECT_DOUBLE_EQ(sx / n, 320 + 10 * style.resolution);
  EXPECT_DOUBLE_EQ(sy / n, 320.0);
}

TEST(RenderBev, IsometryOfCenters) {
  Rng rng(2);
  BevStyle style;
  style.resolution = rng.uniform(4, 10);
  for (int k = 0; k < 100; ++k) {
    Vec3d a, b;
    do {
      a = Vec3d(rng.uniform(-35, 35), rng.uniform(-35, 35), 0);
      b = Vec3d(rng.uniform(-35, 35), rng.uniform(-35, 35), 0);
    } while ((a - b).norm() < 2 || a.head<2>().norm() < 4 || b.head<2>().norm() < 4);
    Frame f = empty_frame(0, 0.0);
    f.objects.push_back(box("a", Category::kCar, a, rng.uniform(-3, 3), Vec3d(1, 0.6, 1)));
    f.objects.push_back(box("b", Category::kPedestrian, b, rng.uniform(-3, 3), Vec3d(1, 0.6, 1)));
    for (auto& o : f.objects) o.size = Vec3d(0.6, 0.6, 1);  // no heading tick beyond centre
    const Image img = render_bev(scene_of({f}), 0, style);
    auto ca = centroid_of(img, category_color(Category::kCar));
    auto cb = centroid_of(img, category_color(Category::kPedestrian));
    const double px = std::hypot(ca[0] - cb[0], ca[1] - cb[1]);
    EXPECT_NEAR(px, (a - b).norm() * style.resolution, 1.0);
  }
}

TEST(RenderBev, DeterministicAndHighlighted) {
  const auto pool = make_fixture_pool(1);
  const Scene s = calibrate_scene(pool[0].scene);
  int nearest = 0;
  for (std::size_t i = 0; i < s.frames[0].objects.size(); ++i) {
    if (s.frames[0].objects[i].center.norm() < s.frames[0].objects[nearest].center.norm()) nearest = int(i);
  }
  BevStyle style;
  style.highlight = {nearest};
  style.labels = {"(1)"};
  const Image a = render_bev(s, 0, style);
  EXPECT_EQ(encode_png(a), encode_png(render_bev(s, 0, style)));
  EXPECT_FALSE(pixels_not(a, kBackground).empty());
  bool red = false;
  for (auto [x, y] : pixels_not(a, kBackground)) red |= a.at(x, y) == kHighlight;
  EXPECT_TRUE(red);
  BevStyle bad;
  bad.extent = 0;
  EXPECT_THROW(render_bev(s, 0, bad), InvariantError);
}

// Picks an object whose projections at or above the view threshold cover exactly `n` cameras.
std::optional<int> object_with_views(const Frame& f, std::size_t n) {
  for (std::size_t i = 0; i < f.objects.size(); ++i) {
    std::size_t views = 0;
    for (const auto& p : f.objects[i].projections) views += p.visibility >= 0.1;
    if (views == n) return static_cast<int>(i);
  }
  return std::nullopt;
}

struct FixtureFrame {
  Scene scene;
  int t = 0;
  int object = 0;
};

FixtureFrame find_two_view_object() {
  for (const auto& fx : make_fixture_pool(1)) {
    const Scene s = calibrate_scene(fx.scene);
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      if (auto i = object_with_views(s.frames[t], 2)) return {s, static_cast<int>(t), *i};
    }
  }
  throw std::runtime_error("fixture pool has no two-view object");
}

TEST(RenderMultiview, OverlayOnlyInVisibleTiles) {
  const FixtureFrame ff = find_two_view_object();
  TileOptions opts;
  const MultiviewImage mv = render_multiview(ff.scene, ff.t, {ff.object}, {"(1)"}, opts);
  std::set<std::string> expected, got;
  for (const auto& p : ff.scene.frames[ff.t].objects[ff.object].projections) {
    if (p.visibility >= 0.1) expected.insert(p.camera_name);
  }
  for (const auto& ov : mv.overlays) got.insert(ov.camera);
  EXPECT_EQ(got, expected);
  // Highlight-coloured pixels only inside those tiles.
  const int tw = opts.tile_width;
  const int th = static_cast<int>(std::lround(tw * 900.0 / 1600.0));
  std::set<std::string> painted;
  for (auto [x, y] : pixels_not(mv.image, {1, 2, 3})) {
    if (mv.image.at(x, y) != kHighlight) continue;
    for (const auto& [cam, o] : mv.tile_origin) {
      if (x >= o[0] && x < o[0] + tw && y >= o[1] && y < o[1] + th) painted.insert(cam);
    }
  }
  EXPECT_EQ(painted, expected);
}

TEST(RenderMultiview, OverlayBoxesMatchStoredProjections) {
  TileOptions opts;
  const double s = opts.tile_width / 1600.0;
  int checked = 0;
  for (const auto& fx : make_fixture_pool(2)) {
    if (checked > 300) break;
    const Scene sc = calibrate_scene(fx.scene);
    const Frame& f = sc.frames[0];
    std::vector<int> all;
    for (std::size_t i = 0; i < f.objects.size(); ++i) all.push_back(static_cast<int>(i));
    const MultiviewImage mv = render_multiview(sc, 0, all, {}, opts);
    for (const Overlay& ov : mv.overlays) {
      const Projection* p = f.objects[ov.object].projection_in(ov.camera);
      ASSERT_NE(p, nullptr);
      const auto o = mv.tile_origin.at(ov.camera);
      for (int k = 0; k < 4; ++k) {
        const double want = o[k % 2] + p->box[k] * s;
        EXPECT_LE(std::abs(ov.box[k] - want), 2.0);
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(RenderMultiview, EmptyHighlightIsPlainGrid) {
  const auto pool = make_fixture_pool(1);
  const Scene s = calibrate_scene(pool[0].scene);
  const MultiviewImage mv = render_multiview(s, 0, {}, {}, TileOptions{});
  EXPECT_TRUE(mv.overlays.empty());
  for (auto [x, y] : pixels_not(mv.image, {1, 2, 3})) ASSERT_NE(mv.image.at(x, y), kHighlight);
  EXPECT_EQ(mv.tile_origin.size(), 6u);
}

TEST(RenderMultiview, RealImagesOrMissing) {
  const auto dir = std::filesystem::temp_directory_path() / "drivescene_render_test";
  std::filesystem::remove_all(dir);
  Frame f = empty_frame(0, 0.0);
  Scene s = scene_of({f});
  TileOptions opts;
  opts.placeholder = false;
  opts.asset_root = dir;
  EXPECT_THROW(render_multiview(s, 0, {}, {}, opts), MissingImage);
  for (const auto& cam : canonical_camera_order(Source::kNuscenes)) {
    s.frames[0].image_refs[cam] = "img/" + cam + ".png";
    write_png(dir / "img" / (cam + ".png"), Image(160, 90, {200, 10, 10}));
  }
  const MultiviewImage mv = render_multiview(s, 0, {}, {}, opts);
  const auto o = mv.tile_origin.at("CAM_FRONT");
  EXPECT_EQ(mv.image.at(o[0] + 50, o[1] + 50), (Rgb{200, 10, 10}));
  std::filesystem::remove_all(dir);
}

TEST(CameraGrid, LookupFollowsOrder) {
  std::vector<CameraView> views;
  const auto& names = canonical_camera_order(Source::kNuscenes);
  for (std::size_t k = 0; k < names.size(); ++k) {
    views.push_back({names[k], Image(40, 20, {std::uint8_t(k * 30), 0, 0})});
  }
  const CameraGrid id = compose_camera_grid(views, {0, 1, 2, 3, 4, 5});
  ASSERT_EQ(id.lookup.size(), 6u);
  for (std::size_t k = 0; k < names.size(); ++k) EXPECT_EQ(id.lookup.at(char('A' + k)), names[k]);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> order = {0, 1, 2, 3, 4, 5};
    rng.shuffle(order);
    const CameraGrid g = compose_camera_grid(views, order);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const std::string& cam = g.lookup.at(char('A' + k));
      const auto idx = std::find(names.begin(), names.end(), cam) - names.begin();
      EXPECT_EQ(idx, order[k]);
    }
  }
  EXPECT_THROW(compose_camera_grid(views, {0, 0, 1, 2, 3, 4}), InvariantError);
}

TEST(MaskSequence, MasksAllButFirstFrame) {
  const auto pool = make_fixture_pool(1);
  const Scene s = calibrate_scene(pool[0].scene);
  TileOptions opts;
  const auto frames = mask_camera_sequence(s, 2, 6, "CAM_BACK", opts);
  ASSERT_EQ(frames.size(), 6u);
  const auto origin = render_multiview(s, 2, {}, {}, opts).tile_origin.at("CAM_BACK");
  const int tw = opts.tile_width, th = static_cast<int>(std::lround(tw * 900.0 / 1600.0));
  int masked = 0;
  for (const Image& img : frames) {
    std::map<Rgb, int> hist;
    for (int y = origin[1]; y < origin[1] + th; ++y)
      for (int x = origin[0]; x < origin[0] + tw; ++x) hist[img.at(x, y)]++;
    if (hist.size() == 1 && hist.begin()->first == kMaskFill) ++masked;
  }
  EXPECT_EQ(masked, 5);
  EXPECT_THROW(mask_camera_sequence(s, 0, 6, "CAM_FRONT", opts), InvariantError);
  EXPECT_THROW(mask_camera_sequence(s, 0, 1, "CAM_BACK", opts), InvariantError);
  EXPECT_THROW(mask_camera_sequence(s, 14, 6, "CAM_BACK", opts), InvariantError);
}

TEST(AssetSpec, PathsAndJson) {
  AssetSpec a;
  a.kind = "video";
  a.scene_id = "x";
  a.frame = 2;
  a.length = 3;
  a.highlight = {1};
  a.labels = {"(1)"};
  const auto paths = a.paths();
  ASSERT_EQ(paths.size(), 3u);
  EXPECT_EQ(paths[0].rfind("x/2/multiview-", 0), 0u);
  EXPECT_EQ(paths[1], "x/3/multiview.png");
  EXPECT_EQ(AssetSpec::from_json(a.to_json()), a);
  AssetSpec bev{"bev", "x", 0};
  EXPECT_EQ(bev.paths(), std::vector<std::string>{"x/0/bev.png"});
  const auto pool = make_fixture_pool(1);
  const Scene s = calibrate_scene(pool[0].scene);
  a.scene_id = s.scene_id;
  EXPECT_EQ(render_asset(s, a, TileOptions{}).size(), 3u);
}

}  // namespace
}  // namespace drivescene
