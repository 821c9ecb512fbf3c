#include "mlo/camera.hpp"

namespace mlo {

Camera make_look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                           double fx, double fy, int width, int height,
                           double z_near, double z_far) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up_hint);
    const double len = right.norm();
    if (len < 1e-12) throw ValidationError("look-at up hint is parallel to the view direction");
    right /= len;
    const Vec3 down = forward.cross(right);  // y points down in camera space

    Eigen::Matrix3d r;
    r.row(0) = right;
    r.row(1) = down;
    r.row(2) = forward;

    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;
    cam.z_near = z_near;
    cam.z_far = z_far;
    cam.world_to_camera.rotation = Eigen::Quaterniond(r).normalized();
    cam.world_to_camera.translation = -(cam.world_to_camera.rotation * eye);
    cam.validate();
    return cam;
}

}  // namespace mlo
