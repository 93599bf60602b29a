#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>

namespace sls::geom {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }
    Vec3 normalized() const {
        double n = norm();
        return n > 0 ? *this / n : *this;
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }
    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
                r(i, j) = s;
            }
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    Vec3 transposed_times(const Vec3& v) const {
        return {m[0] * v.x + m[3] * v.y + m[6] * v.z, m[1] * v.x + m[4] * v.y + m[7] * v.z,
                m[2] * v.x + m[5] * v.y + m[8] * v.z};
    }
    // max |R^T R - I| entry
    double orthonormality_error() const;
};

// Rodrigues; series fallback keeps the map smooth through w = 0.
Mat3 rotation_exp(const Vec3& w);

// SE(3) exponential of a 6-vector (axis-angle, translation tangent).
struct RigidTransform {
    Mat3 R;
    Vec3 t;
};
RigidTransform se3_exp(const std::array<double, 6>& delta);

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
};

// World-to-camera extrinsics: x_cam = R x_world + t. Camera looks along +z,
// x right, y down. The trainable delta is a se(3) tangent applied on the
// left: [R|t]_eff = exp(delta) * [R|t]_base.
struct CameraPose {
    Mat3 base_rotation = Mat3::identity();
    Vec3 base_translation{};
    std::array<double, 6> delta{}; // 3 axis-angle + 3 translation

    Mat3 rotation() const;
    Vec3 translation() const;
    Vec3 center() const;       // camera center in world coordinates
    Vec3 optical_axis() const; // +z axis in world coordinates

    // fold the current delta into the base (delta becomes zero)
    CameraPose collapsed() const;
};

struct PixelCoord {
    double u = 0, v = 0;
};

struct Ray {
    Vec3 origin;
    Vec3 direction; // unit
    double t_near = 0, t_far = 0;
    bool bounded = true; // false when the bounding-sphere intersection is empty

    Vec3 at(double t) const { return origin + direction * t; }
};

// Ray through a pixel; [t_near, t_far] from intersecting the unit sphere
// (bounded=false on a miss).
Ray ray_through_pixel(const CameraIntrinsics& K, const CameraPose& pose, const PixelCoord& px);

// Pinhole projection; nullopt when the point is behind the camera (z <= eps).
std::optional<PixelCoord> project(const Vec3& point, const CameraIntrinsics& K,
                                  const CameraPose& pose);

// Closest points between two skew ray lines; nullopt when nearly parallel
// (|v_a x v_b| <= 1e-8).
std::optional<std::pair<Vec3, Vec3>> closest_points_between_rays(const Ray& a, const Ray& b);

inline constexpr double kParallelRayEps = 1e-8;

struct PoseError {
    double direction_deg = 0; // angle between optical axes
    double position = 0;      // distance between camera centers
};
PoseError pose_error(const CameraPose& estimated, const CameraPose& ground_truth);

} // namespace sls::geom
