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

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace drivescene {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Mat4d = Mat4<double>;

template <typename Scalar>
constexpr Scalar kPi = Scalar(3.14159265358979323846264338327950288);

// Wraps into [-pi, pi]. Values already in range are returned untouched.
template <typename Scalar>
Scalar normalize_angle(Scalar a) {
  if (a >= -kPi<Scalar> && a <= kPi<Scalar>) return a;
  using std::atan2;
  using std::cos;
  using std::sin;
  return atan2(sin(a), cos(a));
}

// Rotation about +z by `a`.
template <typename Scalar>
Mat3<Scalar> yaw_rotation(Scalar a) {
  using std::cos;
  using std::sin;
  Mat3<Scalar> r;
  r << cos(a), -sin(a), Scalar(0),
       sin(a), cos(a), Scalar(0),
       Scalar(0), Scalar(0), Scalar(1);
  return r;
}

template <typename Scalar>
Mat4<Scalar> yaw_transform(Scalar a) {
  Mat4<Scalar> t = Mat4<Scalar>::Identity();
  t.template topLeftCorner<3, 3>() = yaw_rotation(a);
  return t;
}

template <typename Scalar>
Mat4<Scalar> make_transform(const Mat3<Scalar>& r, const Vec3<Scalar>& p) {
  Mat4<Scalar> t = Mat4<Scalar>::Identity();
  t.template topLeftCorner<3, 3>() = r;
  t.template topRightCorner<3, 1>() = p;
  return t;
}

// Heading unit vector f = [cos, sin, 0].
template <typename Scalar>
Vec3<Scalar> forward_axis(Scalar yaw) {
  using std::cos;
  using std::sin;
  return Vec3<Scalar>(cos(yaw), sin(yaw), Scalar(0));
}

// Right-hand unit vector r = [sin, -cos, 0].
template <typename Scalar>
Vec3<Scalar> right_axis(Scalar yaw) {
  using std::cos;
  using std::sin;
  return Vec3<Scalar>(sin(yaw), -cos(yaw), Scalar(0));
}

template <typename Derived>
Vec3<typename Derived::Scalar> transform_point(
    const Eigen::MatrixBase<Derived>& t, const Vec3<typename Derived::Scalar>& p) {
  return t.template topLeftCorner<3, 3>() * p + t.template topRightCorner<3, 1>();
}

template <typename Derived>
Vec3<typename Derived::Scalar> transform_vector(
    const Eigen::MatrixBase<Derived>& t, const Vec3<typename Derived::Scalar>& v) {
  return t.template topLeftCorner<3, 3>() * v;
}

// Inverse of a rigid transform without a general 4x4 inversion.
template <typename Derived>
Mat4<typename Derived::Scalar> rigid_inverse(const Eigen::MatrixBase<Derived>& t) {
  using Scalar = typename Derived::Scalar;
  Mat4<Scalar> inv = Mat4<Scalar>::Identity();
  const Mat3<Scalar> rt = t.template topLeftCorner<3, 3>().transpose();
  inv.template topLeftCorner<3, 3>() = rt;
  inv.template topRightCorner<3, 1>() = -rt * t.template topRightCorner<3, 1>();
  return inv;
}

// Yaw of the rotation block, atan2(R10, R00).
template <typename Derived>
typename Derived::Scalar yaw_of(const Eigen::MatrixBase<Derived>& t) {
  using std::atan2;
  return atan2(t(1, 0), t(0, 0));
}

template <typename Derived>
bool is_rigid(const Eigen::MatrixBase<Derived>& t, typename Derived::Scalar tol) {
  using Scalar = typename Derived::Scalar;
  if (t(3, 0) != Scalar(0) || t(3, 1) != Scalar(0) || t(3, 2) != Scalar(0) ||
      t(3, 3) != Scalar(1)) {
    return false;
  }
  const Mat3<Scalar> r = t.template topLeftCorner<3, 3>();
  if (!((r.transpose() * r - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol)) {
    return false;
  }
  using std::abs;
  return abs(r.determinant() - Scalar(1)) <= tol;
}

// Planar angle between two xy directions, in [0, pi].
template <typename Scalar>
Scalar planar_angle_between(const Vec3<Scalar>& a, const Vec3<Scalar>& b) {
  using std::acos;
  using std::max;
  using std::min;
  const Vec2<Scalar> a2 = a.template head<2>();
  const Vec2<Scalar> b2 = b.template head<2>();
  const Scalar denom = a2.norm() * b2.norm();
  if (denom == Scalar(0)) return Scalar(0);
  return acos(max(Scalar(-1), min(Scalar(1), a2.dot(b2) / denom)));
}

}  // namespace drivescene
