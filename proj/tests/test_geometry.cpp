#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sls/geometry.hpp"
#include "sls/rng.hpp"

using namespace sls;
using namespace sls::geom;

namespace {

CameraPose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up_hint) {
    Vec3 fwd = (target - eye).normalized(); // camera +z in world
    Vec3 right = fwd.cross(up_hint).normalized();
    Vec3 down = fwd.cross(right).normalized(); // +y is down in camera frame
    CameraPose p;
    // rows of R are the camera axes expressed in world coordinates
    p.base_rotation.m = {right.x, right.y, right.z, down.x, down.y, down.z, fwd.x, fwd.y, fwd.z};
    p.base_translation = -(p.base_rotation * eye);
    return p;
}

Mat3 axis_angle(const Vec3& axis, double angle_rad) {
    return rotation_exp(axis.normalized() * angle_rad);
}

} // namespace

TEST_CASE("principal ray for identity pose") {
    CameraIntrinsics K{1, 1, 0, 0, 1, 1};
    CameraPose pose;
    Ray r = ray_through_pixel(K, pose, {0, 0});
    CHECK(r.origin.norm() == doctest::Approx(0.0));
    CHECK(r.direction.x == doctest::Approx(0.0));
    CHECK(r.direction.y == doctest::Approx(0.0));
    CHECK(r.direction.z == doctest::Approx(1.0));
}

TEST_CASE("pixel at principal point gives the optical axis") {
    CameraIntrinsics K{123.4, 117.9, 31.25, 29.75, 64, 64};
    CameraPose pose = look_at_pose({1.2, -0.7, 1.9}, {0, 0, 0}, {0, 0, 1});
    Ray r = ray_through_pixel(K, pose, {K.cx, K.cy});
    Vec3 axis = pose.optical_axis();
    CHECK(r.direction.dot(axis) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pure translation delta shifts the center per homogeneous composition") {
    CameraIntrinsics K{100, 100, 31.5, 31.5, 64, 64};
    CameraPose pose = look_at_pose({0, -2, 0.5}, {0, 0, 0}, {0, 0, 1});
    pose.delta = {0, 0, 0, 0.1, 0, 0};

    // oracle: compose 4x4 matrices exp(delta) * base explicitly
    RigidTransform d = se3_exp(pose.delta);
    Mat3 Re = d.R * pose.base_rotation;
    Vec3 te = d.R * pose.base_translation + d.t;
    Vec3 center_expected = -Re.transposed_times(te);

    Ray r = ray_through_pixel(K, pose, {10, 20});
    CHECK((r.origin - center_expected).norm() < 1e-12);
    // delta is a camera-frame shift: world-frame move is -R^T * u
    Vec3 base_center = CameraPose{pose.base_rotation, pose.base_translation, {}}.center();
    Vec3 moved = base_center - pose.base_rotation.transposed_times(Vec3{0.1, 0, 0});
    CHECK((r.origin - moved).norm() < 1e-12);
}

TEST_CASE("project: point on optical axis lands at the principal point") {
    CameraIntrinsics K{250, 260, 31.5, 30.5, 64, 64};
    CameraPose pose = look_at_pose({2, 0, 0.4}, {0, 0, 0}, {0, 0, 1});
    Vec3 p = pose.center() + pose.optical_axis() * 1.7;
    auto px = project(p, K, pose);
    REQUIRE(px.has_value());
    CHECK(px->u == doctest::Approx(K.cx).epsilon(1e-10));
    CHECK(px->v == doctest::Approx(K.cy).epsilon(1e-10));
}

TEST_CASE("project then ray_through_pixel round trip") {
    Rng rng(31);
    CameraIntrinsics K{150, 160, 30.5, 33.5, 64, 64};
    for (int i = 0; i < 50; ++i) {
        CameraPose pose = look_at_pose({rng.uniform(1.5, 2.5), rng.uniform(-1, 1), rng.uniform(0, 1.5)},
                                       {0, 0, 0}, {0, 0, 1});
        pose.delta = {rng.normal(0, 0.02), rng.normal(0, 0.02), rng.normal(0, 0.02),
                      rng.normal(0, 0.02), rng.normal(0, 0.02), rng.normal(0, 0.02)};
        Vec3 p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        auto px = project(p, K, pose);
        REQUIRE(px.has_value());
        Ray r = ray_through_pixel(K, pose, *px);
        double depth = (p - r.origin).dot(r.direction);
        CHECK((r.at(depth) - p).norm() < 1e-9);
        // and the reprojection of any point along the ray returns to the pixel
        auto px2 = project(r.at(depth * 0.7 + 0.05), K, pose);
        REQUIRE(px2.has_value());
        CHECK(std::fabs(px2->u - px->u) < 1e-6);
        CHECK(std::fabs(px2->v - px->v) < 1e-6);
    }
}

TEST_CASE("project matches explicit 3x4 matrix arithmetic") {
    Rng rng(77);
    CameraIntrinsics K{180, 175, 32.1, 30.9, 64, 64};
    for (int i = 0; i < 20; ++i) {
        CameraPose pose = look_at_pose({rng.uniform(1.5, 3.0), rng.uniform(-2, 2), rng.uniform(-1, 2)},
                                       {rng.uniform(-0.1, 0.1), 0, 0}, {0, 0, 1});
        Vec3 p{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};

        // oracle: P = K [R|t], dehomogenize
        Mat3 R = pose.rotation();
        Vec3 t = pose.translation();
        double X[4] = {p.x, p.y, p.z, 1.0};
        double Km[9] = {K.fx, 0, K.cx, 0, K.fy, K.cy, 0, 0, 1};
        double P[12];
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += Km[r * 3 + k] * R(k, c);
                P[r * 4 + c] = s;
            }
            double s = 0;
            double tv[3] = {t.x, t.y, t.z};
            for (int k = 0; k < 3; ++k) s += Km[r * 3 + k] * tv[k];
            P[r * 4 + 3] = s;
        }
        double h[3];
        for (int r = 0; r < 3; ++r)
            h[r] = P[r * 4] * X[0] + P[r * 4 + 1] * X[1] + P[r * 4 + 2] * X[2] + P[r * 4 + 3] * X[3];

        auto px = project(p, K, pose);
        REQUIRE(px.has_value());
        CHECK(px->u == doctest::Approx(h[0] / h[2]).epsilon(1e-10));
        CHECK(px->v == doctest::Approx(h[1] / h[2]).epsilon(1e-10));
    }
}

TEST_CASE("behind-camera points are rejected") {
    CameraIntrinsics K{100, 100, 31.5, 31.5, 64, 64};
    CameraPose pose = look_at_pose({2, 0, 0}, {0, 0, 0}, {0, 0, 1});
    Vec3 behind = pose.center() - pose.optical_axis() * 0.5;
    CHECK(!project(behind, K, pose).has_value());
}

TEST_CASE("closest points: intersecting rays coincide at the intersection") {
    Ray a{{0, 0, 0}, Vec3{1, 0, 0}.normalized(), 0, 10};
    Ray b{{1, -1, 0}, Vec3{0, 1, 0}.normalized(), 0, 10};
    auto cp = closest_points_between_rays(a, b);
    REQUIRE(cp.has_value());
    CHECK((cp->first - Vec3{1, 0, 0}).norm() < 1e-12);
    CHECK((cp->second - Vec3{1, 0, 0}).norm() < 1e-12);
}

TEST_CASE("closest points: documented skew example") {
    Ray a{{0, 0, 0}, {1, 0, 0}, 0, 10};
    Ray b{{0, 1, 1}, {0, 0, 1}, 0, 10};
    auto cp = closest_points_between_rays(a, b);
    REQUIRE(cp.has_value());
    CHECK((cp->first - Vec3{0, 0, 0}).norm() < 1e-12);
    CHECK((cp->second - Vec3{0, 1, 0}).norm() < 1e-12);
}

TEST_CASE("closest points: parallel rays signal degeneracy") {
    Ray a{{0, 0, 0}, {1, 0, 0}, 0, 10};
    Ray b{{0, 1, 0}, {1, 0, 0}, 0, 10};
    CHECK(!closest_points_between_rays(a, b).has_value());
}

TEST_CASE("closest points match dense search + normal equations on 1000 random pairs") {
    Rng rng(2024);
    int tested = 0;
    while (tested < 1000) {
        Ray a{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
              Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized(),
              0,
              10};
        Ray b{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
              Vec3{rng.normal(), rng.normal(), rng.normal()}.normalized(),
              0,
              10};
        if (a.direction.cross(b.direction).norm() < 1e-3) continue;
        ++tested;

        auto cp = closest_points_between_rays(a, b);
        REQUIRE(cp.has_value());

        // oracle: minimize |(oa + ta va) - (ob + tb vb)|^2 via 2x2 normal equations
        Vec3 w = a.origin - b.origin;
        double A11 = 1.0, A22 = 1.0;
        double A12 = -a.direction.dot(b.direction);
        double b1 = -w.dot(a.direction);
        double b2 = w.dot(b.direction);
        double det = A11 * A22 - A12 * A12;
        double ta = (b1 * A22 - A12 * b2) / det;
        double tb = (A11 * b2 - A12 * b1) / det;
        CHECK((cp->first - a.at(ta)).norm() < 1e-6);
        CHECK((cp->second - b.at(tb)).norm() < 1e-6);

        // orthogonality of the connecting segment
        Vec3 seg = cp->second - cp->first;
        CHECK(std::fabs(seg.dot(a.direction)) < 1e-9);
        CHECK(std::fabs(seg.dot(b.direction)) < 1e-9);
    }
}

TEST_CASE("pose error: identical poses give zeros") {
    CameraPose p = look_at_pose({2, 1, 1}, {0, 0, 0}, {0, 0, 1});
    auto e = pose_error(p, p);
    CHECK(e.direction_deg == doctest::Approx(0.0));
    CHECK(e.position == doctest::Approx(0.0));
}

TEST_CASE("pose error: 0.070 degree axis rotation reports 0.070") {
    CameraPose p = look_at_pose({2, 0, 1}, {0, 0, 0}, {0, 0, 1});
    Vec3 axis = p.rotation().transposed_times(Vec3{1, 0, 0}); // camera x-axis in world
    CameraPose q = p;
    double angle = 0.070 * 3.14159265358979323846 / 180.0;
    Mat3 rot = axis_angle(axis, angle);
    q.base_rotation = p.base_rotation * rot.transposed();
    q.base_translation = p.base_translation;
    auto e = pose_error(q, p);
    CHECK(e.direction_deg == doctest::Approx(0.070).epsilon(1e-6));
}

TEST_CASE("pose error: translated center reports the euclidean distance") {
    CameraPose p = look_at_pose({2, 0, 1}, {0, 0, 0}, {0, 0, 1});
    CameraPose q = p;
    Vec3 c = p.center() + Vec3{0.075, 0, 0};
    q.base_translation = -(q.base_rotation * c);
    auto e = pose_error(q, p);
    CHECK(e.position == doctest::Approx(0.075).epsilon(1e-9));
    CHECK(e.direction_deg == doctest::Approx(0.0));
}

TEST_CASE("se3 exp at zero is the identity; effective rotations stay orthonormal") {
    RigidTransform d = se3_exp({0, 0, 0, 0, 0, 0});
    CHECK(d.R.orthonormality_error() < 1e-15);
    CHECK(d.t.norm() == 0.0);

    Rng rng(4);
    CameraPose p = look_at_pose({2, 1, 0.5}, {0, 0, 0}, {0, 0, 1});
    for (int i = 0; i < 100; ++i) {
        for (auto& dv : p.delta) dv = rng.normal(0, 0.3);
        CHECK(p.rotation().orthonormality_error() < 1e-6);
    }
}

TEST_CASE("unit-sphere ray bounds") {
    CameraIntrinsics K{100, 100, 31.5, 31.5, 64, 64};
    CameraPose pose = look_at_pose({0, -2, 0}, {0, 0, 0}, {0, 0, 1});
    Ray center_ray = ray_through_pixel(K, pose, {31.5, 31.5});
    REQUIRE(center_ray.bounded);
    CHECK(center_ray.t_near == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(center_ray.t_far == doctest::Approx(3.0).epsilon(1e-9));

    Ray miss = ray_through_pixel(K, pose, {0, 0});
    // corner pixel at this fov still hits; steeper pixel misses
    CameraIntrinsics narrow{20, 20, 31.5, 31.5, 64, 64};
    Ray miss2 = ray_through_pixel(narrow, pose, {0, 0});
    CHECK(!miss2.bounded);
    (void)miss;
}
