#include "sls/geometry.hpp"

#include <algorithm>

namespace sls::geom {

double Mat3::orthonormality_error() const {
    Mat3 g = transposed() * (*this);
    double err = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) err = std::max(err, std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return err;
}

namespace {

Mat3 skew(const Vec3& w) {
    Mat3 s;
    s.m = {0, -w.z, w.y, w.z, 0, -w.x, -w.y, w.x, 0};
    return s;
}

// sin(t)/t, (1-cos t)/t^2, (t-sin t)/t^3 as smooth functions of t^2
struct RotCoeffs {
    double A, B, C;
};
RotCoeffs rot_coeffs(double theta_sq) {
    if (theta_sq < 1e-8) {
        // Taylor in theta^2; truncation < 1e-24 at the switch point
        double t2 = theta_sq;
        return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
    }
    double theta = std::sqrt(theta_sq);
    return {std::sin(theta) / theta, (1.0 - std::cos(theta)) / theta_sq,
            (theta - std::sin(theta)) / (theta_sq * theta)};
}

} // namespace

Mat3 rotation_exp(const Vec3& w) {
    RotCoeffs c = rot_coeffs(w.squared_norm());
    Mat3 K = skew(w);
    Mat3 K2 = K * K;
    Mat3 R = Mat3::identity();
    for (int i = 0; i < 9; ++i) R.m[i] += c.A * K.m[i] + c.B * K2.m[i];
    return R;
}

RigidTransform se3_exp(const std::array<double, 6>& d) {
    Vec3 w{d[0], d[1], d[2]};
    Vec3 u{d[3], d[4], d[5]};
    RotCoeffs c = rot_coeffs(w.squared_norm());
    Mat3 K = skew(w);
    Mat3 K2 = K * K;
    Mat3 R = Mat3::identity();
    Mat3 V = Mat3::identity();
    for (int i = 0; i < 9; ++i) {
        R.m[i] += c.A * K.m[i] + c.B * K2.m[i];
        V.m[i] += c.B * K.m[i] + c.C * K2.m[i];
    }
    return {R, V * u};
}

Mat3 CameraPose::rotation() const {
    RigidTransform d = se3_exp(delta);
    return d.R * base_rotation;
}

Vec3 CameraPose::translation() const {
    RigidTransform d = se3_exp(delta);
    return d.R * base_translation + d.t;
}

Vec3 CameraPose::center() const {
    return -rotation().transposed_times(translation());
}

Vec3 CameraPose::optical_axis() const {
    return rotation().transposed_times(Vec3{0, 0, 1});
}

CameraPose CameraPose::collapsed() const {
    CameraPose p;
    p.base_rotation = rotation();
    p.base_translation = translation();
    return p;
}

Ray ray_through_pixel(const CameraIntrinsics& K, const CameraPose& pose, const PixelCoord& px) {
    Vec3 d_cam{(px.u - K.cx) / K.fx, (px.v - K.cy) / K.fy, 1.0};
    Mat3 R = pose.rotation();
    Vec3 t = pose.translation();

    Ray ray;
    ray.origin = -R.transposed_times(t);
    ray.direction = R.transposed_times(d_cam).normalized();

    // unit-sphere bounding interval: |o + t v| = 1
    double b = ray.origin.dot(ray.direction);
    double c = ray.origin.squared_norm() - 1.0;
    double disc = b * b - c;
    if (disc <= 0.0) {
        ray.bounded = false;
        ray.t_near = ray.t_far = 0.0;
    } else {
        double s = std::sqrt(disc);
        ray.t_near = std::max(0.0, -b - s);
        ray.t_far = -b + s;
        ray.bounded = ray.t_far > 0.0;
    }
    return ray;
}

std::optional<PixelCoord> project(const Vec3& point, const CameraIntrinsics& K,
                                  const CameraPose& pose) {
    Vec3 pc = pose.rotation() * point + pose.translation();
    if (pc.z <= 1e-9) return std::nullopt;
    return PixelCoord{K.fx * pc.x / pc.z + K.cx, K.fy * pc.y / pc.z + K.cy};
}

std::optional<std::pair<Vec3, Vec3>> closest_points_between_rays(const Ray& a, const Ray& b) {
    Vec3 n = a.direction.cross(b.direction);
    if (n.norm() <= kParallelRayEps) return std::nullopt;
    Vec3 n1 = b.direction.cross(n);
    Vec3 n2 = a.direction.cross(n);
    Vec3 ya = a.origin + a.direction * ((b.origin - a.origin).dot(n1) / a.direction.dot(n1));
    Vec3 yb = b.origin + b.direction * ((a.origin - b.origin).dot(n2) / b.direction.dot(n2));
    return std::make_pair(ya, yb);
}

PoseError pose_error(const CameraPose& estimated, const CameraPose& ground_truth) {
    Vec3 ae = estimated.optical_axis().normalized();
    Vec3 ag = ground_truth.optical_axis().normalized();
    double c = std::clamp(ae.dot(ag), -1.0, 1.0);
    PoseError e;
    e.direction_deg = std::acos(c) * 180.0 / 3.14159265358979323846;
    e.position = (estimated.center() - ground_truth.center()).norm();
    return e;
}

} // namespace sls::geom
