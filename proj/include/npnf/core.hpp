#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace npnf {

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveDepth : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientValidDepth : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateCloud : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoVisibleOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptyMask : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct Vec3T {
  T x{}, y{}, z{};
};

using Vec3 = Vec3T<double>;

template <class T>
Vec3T<T> operator+(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class T>
Vec3T<T> operator-(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class T, class S>
Vec3T<T> operator*(const Vec3T<T>& a, const S& s) {
  return {a.x * s, a.y * s, a.z * s};
}
template <class T>
T dot3(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <class T>
Vec3T<T> cross3(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }
inline Vec3 normalized3(const Vec3& a) {
  double n = norm3(a);
  return {a.x / n, a.y / n, a.z / n};
}

// Row-major 3x3.
template <class T>
struct Mat3T {
  T m[9];
  T& operator()(int r, int c) { return m[3 * r + c]; }
  const T& operator()(int r, int c) const { return m[3 * r + c]; }
};
using Mat3 = Mat3T<double>;

template <class T>
Vec3T<T> matvec(const Mat3T<T>& M, const Vec3T<T>& v) {
  return {M.m[0] * v.x + M.m[1] * v.y + M.m[2] * v.z,
          M.m[3] * v.x + M.m[4] * v.y + M.m[5] * v.z,
          M.m[6] * v.x + M.m[7] * v.y + M.m[8] * v.z};
}
template <class T>
Mat3T<T> matmul(const Mat3T<T>& A, const Mat3T<T>& B) {
  Mat3T<T> C;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      C(r, c) = A(r, 0) * B(0, c) + A(r, 1) * B(1, c) + A(r, 2) * B(2, c);
  return C;
}
template <class T>
Mat3T<T> transposed(const Mat3T<T>& A) {
  return Mat3T<T>{{A.m[0], A.m[3], A.m[6], A.m[1], A.m[4], A.m[7], A.m[2],
                   A.m[5], A.m[8]}};
}
inline Mat3 mat3_identity() {
  return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}};
}

// RGB image, values in [0,1], row-major, channel-interleaved.
struct Image {
  int width = 0, height = 0;
  std::vector<double> rgb;  // 3 * width * height

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(3 * size_t(w) * h, 0.0) {}
  double* pixel(int u, int v) { return &rgb[3 * (size_t(v) * width + u)]; }
  const double* pixel(int u, int v) const {
    return &rgb[3 * (size_t(v) * width + u)];
  }
};

// Scalar depth grid, row-major. Values are world units for true depth or
// pseudo-units for distorted mono-depth.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(size_t(w) * h, fill) {}
  double& at(int u, int v) { return values[size_t(v) * width + u]; }
  double at(int u, int v) const { return values[size_t(v) * width + u]; }
};

// value_of: extracts a plain double from either a double or an AD variable;
// used by templated code that branches on magnitudes.
inline double value_of(double x) { return x; }

}  // namespace npnf
