// Small fixed-size linear algebra for a single magnetic moment: 3-vectors,
// dense 3x3 matrices, the cross-product operator and the combined
// damping/precession operator used by both diffusion formulations.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace spinsim {

struct Vec3 {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  constexpr double operator[](std::size_t i) const {
    return i == 0 ? x1 : (i == 1 ? x2 : x3);
  }
  constexpr double& operator[](std::size_t i) {
    return i == 0 ? x1 : (i == 1 ? x2 : x3);
  }

  constexpr Vec3& operator+=(const Vec3& o) {
    x1 += o.x1;
    x2 += o.x2;
    x3 += o.x3;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x1 -= o.x1;
    x2 -= o.x2;
    x3 -= o.x3;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x1 *= s;
    x2 *= s;
    x3 *= s;
    return *this;
  }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x1, -a.x2, -a.x3}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(const Vec3& a, double s) {
  return {a.x1 / s, a.x2 / s, a.x3 / s};
}

constexpr double dot(const Vec3& a, const Vec3& b) {
  return a.x1 * b.x1 + a.x2 * b.x2 + a.x3 * b.x3;
}

/// a ∧ b
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.x2 * b.x3 - a.x3 * b.x2, a.x3 * b.x1 - a.x1 * b.x3,
          a.x1 * b.x2 - a.x2 * b.x1};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline bool is_finite(const Vec3& a) {
  return std::isfinite(a.x1) && std::isfinite(a.x2) && std::isfinite(a.x3);
}

constexpr Vec3 e1{1.0, 0.0, 0.0};
constexpr Vec3 e2{0.0, 1.0, 0.0};
constexpr Vec3 e3{0.0, 0.0, 1.0};

/// Dense row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> a{};

  constexpr double operator()(std::size_t r, std::size_t c) const {
    return a[3 * r + c];
  }
  constexpr double& operator()(std::size_t r, std::size_t c) {
    return a[3 * r + c];
  }

  constexpr Vec3 row(std::size_t r) const {
    return {a[3 * r], a[3 * r + 1], a[3 * r + 2]};
  }
  constexpr Vec3 col(std::size_t c) const { return {a[c], a[3 + c], a[6 + c]}; }

  static constexpr Mat3 identity() {
    return Mat3{{1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0}};
  }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Mat3 operator+(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = x.a[i] + y.a[i];
  return r;
}
constexpr Mat3 operator-(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = x.a[i] - y.a[i];
  return r;
}
constexpr Mat3 operator*(double s, const Mat3& x) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.a[i] = s * x.a[i];
  return r;
}

constexpr Vec3 operator*(const Mat3& m, const Vec3& v) {
  return {m.a[0] * v.x1 + m.a[1] * v.x2 + m.a[2] * v.x3,
          m.a[3] * v.x1 + m.a[4] * v.x2 + m.a[5] * v.x3,
          m.a[6] * v.x1 + m.a[7] * v.x2 + m.a[8] * v.x3};
}

constexpr Mat3 operator*(const Mat3& x, const Mat3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += x(i, k) * y(k, j);
      r(i, j) = s;
    }
  return r;
}

constexpr Mat3 transpose(const Mat3& m) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = m(j, i);
  return r;
}

constexpr double trace(const Mat3& m) { return m.a[0] + m.a[4] + m.a[8]; }

/// x yᵀ
constexpr Mat3 outer(const Vec3& x, const Vec3& y) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) r(i, j) = x[i] * y[j];
  return r;
}

inline bool is_finite(const Mat3& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

/// Antisymmetric matrix of the cross product: lmat(x) * y == cross(x, y).
constexpr Mat3 lmat(const Vec3& x) {
  return Mat3{{0.0, -x.x3, x.x2, x.x3, 0.0, -x.x1, -x.x2, x.x1, 0.0}};
}

/// alpha I - alpha x xᵀ - lmat(x). For unit x, amat(x, alpha) * w equals
/// -x ∧ w - alpha x ∧ (x ∧ w).
constexpr Mat3 amat(const Vec3& x, double alpha) {
  const double ax1 = alpha * x.x1, ax2 = alpha * x.x2, ax3 = alpha * x.x3;
  return Mat3{{alpha - ax1 * x.x1, -ax1 * x.x2 + x.x3, -ax1 * x.x3 - x.x2,
               -ax2 * x.x1 - x.x3, alpha - ax2 * x.x2, -ax2 * x.x3 + x.x1,
               -ax3 * x.x1 + x.x2, -ax3 * x.x2 - x.x1, alpha - ax3 * x.x3}};
}

}  // namespace spinsim
