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

// Document validator that walks the raw tree and collects every issue. It is
// deliberately independent of the typed reader in schema.cc.

#include <cmath>
#include <set>

#include "drivescene/schema.h"

namespace drivescene {
namespace {

using nlohmann::json;

class Walker {
 public:
  std::vector<ValidationIssue> issues;

  void schema(const std::string& path, const std::string& msg) {
    issues.push_back({path, msg, true});
  }
  void invariant(const std::string& path, const std::string& msg) {
    issues.push_back({path, msg, false});
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string item(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

  // Returns nullptr (and records) when absent.
  const json* field(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      schema(join(path, key), "missing field");
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json* v, const std::string& path) {
    if (!v) return std::nullopt;
    if (!v->is_number() || !std::isfinite(v->get<double>())) {
      schema(path, "expected finite number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  template <typename E>
  bool enumeration(const json* v, const std::string& path) {
    if (!v) return false;
    if (!v->is_string() || !enum_from_string<E>(v->get<std::string>())) {
      schema(path, "bad enumeration value");
      return false;
    }
    return true;
  }

  std::optional<std::vector<double>> numbers(const json* v, std::size_t n,
                                             const std::string& path) {
    if (!v) return std::nullopt;
    if (!v->is_array() || v->size() != n) {
      schema(path, "expected " + std::to_string(n) + " numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      auto d = number(&(*v)[i], item(path, i));
      ok = ok && d.has_value();
      out.push_back(d.value_or(0.0));
    }
    if (!ok) return std::nullopt;
    return out;
  }

  void rigid(const std::vector<double>& m, const std::string& path) {
    Mat4d t;
    for (int i = 0; i < 16; ++i) t(i / 4, i % 4) = m[i];
    const bool bottom = m[12] == 0.0 && m[13] == 0.0 && m[14] == 0.0 && m[15] == 1.0;
    const Mat3d r = t.topLeftCorner<3, 3>();
    const double ortho = (r.transpose() * r - Mat3d::Identity()).cwiseAbs().maxCoeff();
    if (!bottom || !(ortho <= 1e-6) || !(std::abs(r.determinant() - 1.0) <= 1e-6)) {
      invariant(path, "not a rigid transform");
    }
  }

  template <typename E>
  void labeled(const json& meta, const std::string& key) {
    const std::string p = join("metadata", key);
    auto it = meta.find(key);
    if (it == meta.end() || it->is_null()) return;
    if (!it->is_object()) {
      schema(p, "expected object or null");
      return;
    }
    enumeration<E>(field(*it, "value", p), join(p, "value"));
    enumeration<Provenance>(field(*it, "provenance", p), join(p, "provenance"));
  }

  // Returns the camera name when readable.
  std::optional<std::string> camera(const json& c, const std::string& p) {
    if (!c.is_object()) {
      schema(p, "expected object");
      return std::nullopt;
    }
    std::optional<std::string> name;
    if (const json* n = field(c, "camera_name", p)) {
      if (!n->is_string()) {
        schema(join(p, "camera_name"), "expected string");
      } else {
        name = n->get<std::string>();
        if (name->empty()) invariant(join(p, "camera_name"), "empty camera name");
      }
    }
    if (auto k = numbers(field(c, "intrinsics", p), 9, join(p, "intrinsics"))) {
      if ((*k)[8] != 1.0 || !((*k)[0] > 0.0) || !((*k)[4] > 0.0)) {
        invariant(join(p, "intrinsics"), "bad intrinsics");
      }
    }
    if (auto e = numbers(field(c, "extrinsic", p), 16, join(p, "extrinsic"))) {
      rigid(*e, join(p, "extrinsic"));
    }
    enumeration<FrameConvention>(field(c, "frame_convention", p), join(p, "frame_convention"));
    if (const json* s = field(c, "image_size", p)) {
      if (!s->is_array() || s->size() != 2 || !(*s)[0].is_number_integer() ||
          !(*s)[1].is_number_integer()) {
        schema(join(p, "image_size"), "expected two integers");
      } else if ((*s)[0].get<int>() <= 0 || (*s)[1].get<int>() <= 0) {
        invariant(join(p, "image_size"), "image size must be positive");
      }
    }
    return name;
  }

  void object(const json& o, const std::string& p, const std::set<std::string>& cams) {
    if (!o.is_object()) {
      schema(p, "expected object");
      return;
    }
    if (auto it = o.find("track_id"); it != o.end() && !it->is_null()) {
      if (!it->is_string()) {
        schema(join(p, "track_id"), "expected string");
      } else if (it->get<std::string>().empty()) {
        invariant(join(p, "track_id"), "empty track id");
      }
    }
    enumeration<Category>(field(o, "category", p), join(p, "category"));
    numbers(field(o, "center", p), 3, join(p, "center"));
    if (auto s = numbers(field(o, "size", p), 3, join(p, "size"))) {
      if (!((*s)[0] > 0.0 && (*s)[1] > 0.0 && (*s)[2] > 0.0)) {
        invariant(join(p, "size"), "sizes must be > 0");
      }
    }
    if (auto yaw = number(field(o, "yaw", p), join(p, "yaw"))) {
      if (*yaw < -kPi<double> || *yaw > kPi<double>) invariant(join(p, "yaw"), "yaw range");
    }
    if (auto it = o.find("velocity"); it != o.end() && !it->is_null()) {
      numbers(&*it, 3, join(p, "velocity"));
    }
    const json* projs = field(o, "projections", p);
    if (!projs) return;
    if (!projs->is_array()) {
      schema(join(p, "projections"), "expected array");
      return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < projs->size(); ++i) {
      const json& pr = (*projs)[i];
      const std::string pp = item(join(p, "projections"), i);
      if (!pr.is_object()) {
        schema(pp, "expected object");
        continue;
      }
      if (const json* n = field(pr, "camera_name", pp)) {
        if (!n->is_string()) {
          schema(join(pp, "camera_name"), "expected string");
        } else {
          const std::string name = n->get<std::string>();
          if (!cams.count(name)) invariant(join(pp, "camera_name"), "unknown camera");
          if (!seen.insert(name).second) invariant(join(pp, "camera_name"), "duplicate camera");
        }
      }
      if (auto b = numbers(field(pr, "box", pp), 4, join(pp, "box"))) {
        if (!((*b)[0] <= (*b)[2] && (*b)[1] <= (*b)[3])) invariant(join(pp, "box"), "box order");
      }
      if (auto v = number(field(pr, "visibility", pp), join(pp, "visibility"))) {
        if (*v < 0.0 || *v > 1.0) invariant(join(pp, "visibility"), "visibility range");
      }
    }
  }

  void document(const json& doc) {
    if (!doc.is_object()) {
      schema("$", "expected object");
      return;
    }
    if (const json* v = field(doc, "format_version", "")) {
      if (!v->is_string() || v->get<std::string>() != kFormatVersion) {
        schema("format_version", "unsupported format version");
      }
    }
    if (const json* id = field(doc, "scene_id", "")) {
      if (!id->is_string()) {
        schema("scene_id", "expected string");
      } else if (id->get<std::string>().empty()) {
        invariant("scene_id", "empty scene id");
      }
    }
    if (const json* c = field(doc, "calibrated", ""); c && !c->is_boolean()) {
      schema("calibrated", "expected boolean");
    }
    if (const json* meta = field(doc, "metadata", "")) {
      if (!meta->is_object()) {
        schema("metadata", "expected object");
      } else {
        enumeration<Source>(field(*meta, "source", "metadata"), "metadata.source");
        enumeration<EgoType>(field(*meta, "ego_type", "metadata"), "metadata.ego_type");
        labeled<Weather>(*meta, "weather");
        labeled<TimeOfDay>(*meta, "time_of_day");
        labeled<SceneType>(*meta, "scene_type");
      }
    }
    const json* frames = field(doc, "frames", "");
    if (!frames) return;
    if (!frames->is_array()) {
      schema("frames", "expected array");
      return;
    }
    if (frames->empty()) invariant("frames", "frames must be non-empty");
    std::optional<std::set<std::string>> first_cams;
    std::optional<long long> prev_index;
    std::optional<double> prev_time;
    for (std::size_t t = 0; t < frames->size(); ++t) {
      const json& f = (*frames)[t];
      const std::string fp = item("frames", t);
      if (!f.is_object()) {
        schema(fp, "expected object");
        prev_index.reset();
        prev_time.reset();
        continue;
      }
      std::optional<long long> index;
      if (const json* fi = field(f, "frame_index", fp)) {
        if (!fi->is_number_integer()) {
          schema(join(fp, "frame_index"), "expected integer");
        } else {
          index = fi->get<long long>();
          if (*index < 0) invariant(join(fp, "frame_index"), "must be >= 0");
          if (prev_index && *index <= *prev_index) {
            invariant(join(fp, "frame_index"), "frame indices must increase");
          }
        }
      }
      auto ts = number(field(f, "timestamp", fp), join(fp, "timestamp"));
      if (ts && prev_time && !(*ts > *prev_time)) {
        invariant(join(fp, "timestamp"), "timestamps must strictly increase");
      }
      prev_index = index;
      prev_time = ts;
      if (auto pose = numbers(field(f, "ego_pose", fp), 16, join(fp, "ego_pose"))) {
        rigid(*pose, join(fp, "ego_pose"));
      }
      std::set<std::string> names;
      bool names_complete = true;
      if (const json* cams = field(f, "cameras", fp)) {
        if (!cams->is_array()) {
          schema(join(fp, "cameras"), "expected array");
          names_complete = false;
        } else {
          for (std::size_t i = 0; i < cams->size(); ++i) {
            const std::string cp = item(join(fp, "cameras"), i);
            auto name = camera((*cams)[i], cp);
            if (!name) {
              names_complete = false;
            } else if (!names.insert(*name).second) {
              invariant(join(cp, "camera_name"), "duplicate camera");
            }
          }
        }
      } else {
        names_complete = false;
      }
      if (names_complete) {
        if (!first_cams) {
          if (t == 0) first_cams = names;
        } else if (names != *first_cams) {
          invariant(join(fp, "cameras"), "camera set differs from frames[0]");
        }
      }
      if (auto it = f.find("image_refs"); it != f.end() && !it->is_null()) {
        if (!it->is_object()) {
          schema(join(fp, "image_refs"), "expected object");
        } else {
          for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) schema(join(join(fp, "image_refs"), k), "expected string");
            if (names_complete && !names.count(k)) {
              invariant(join(join(fp, "image_refs"), k), "unknown camera");
            }
          }
        }
      }
      if (auto it = f.find("lanes"); it != f.end() && !it->is_null()) {
        if (!it->is_array()) {
          schema(join(fp, "lanes"), "expected array");
        } else {
          for (std::size_t i = 0; i < it->size(); ++i) {
            const json& line = (*it)[i];
            const std::string lp = item(join(fp, "lanes"), i);
            if (!line.is_array()) {
              schema(lp, "expected array of points");
              continue;
            }
            for (std::size_t k = 0; k < line.size(); ++k) numbers(&line[k], 2, item(lp, k));
          }
        }
      }
      if (const json* objs = field(f, "objects", fp)) {
        if (!objs->is_array()) {
          schema(join(fp, "objects"), "expected array");
        } else {
          for (std::size_t i = 0; i < objs->size(); ++i) {
            object((*objs)[i], item(join(fp, "objects"), i), names);
          }
        }
      }
    }
  }
};

}  // namespace

std::vector<ValidationIssue> validate_document(std::string_view text) {
  Walker w;
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    w.schema("$", "not a well-formed document");
    return w.issues;
  }
  w.document(doc);
  return w.issues;
}

}  // namespace drivescene
