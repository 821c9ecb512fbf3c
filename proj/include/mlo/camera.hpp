#pragma once

#include "mlo/geometry.hpp"

namespace mlo {

/// Pinhole camera. Camera space is +z forward, y down, x right; a point with
/// camera-space depth Z projects to u = fx*X/Z + cx, v = fy*Y/Z + cy (pixels).
/// Pixel (i, j) samples the continuous location (i + 0.5, j + 0.5).
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;
    RigidTransform world_to_camera;
    double z_near = 0.01;
    double z_far = 100.0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera focal lengths must be > 0");
        if (width < 1 || height < 1) throw ValidationError("camera resolution must be >= 1");
        if (!(0.0 < z_near && z_near < z_far)) {
            throw ValidationError("camera requires 0 < near < far");
        }
        world_to_camera.validate();
    }

    Vec3 to_camera(const Vec3& world) const { return world_to_camera.apply(world); }

    Eigen::Vector2d project(const Vec3& camera_point) const {
        return {fx * camera_point.x() / camera_point.z() + cx,
                fy * camera_point.y() / camera_point.z() + cy};
    }
};

/// Camera at `eye` looking toward `target`. `up_hint` fixes the roll; it must
/// not be parallel to the view direction.
Camera make_look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                           double fx, double fy, int width, int height,
                           double z_near, double z_far);

}  // namespace mlo
