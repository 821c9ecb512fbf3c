#include "mlo/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mlo {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

struct Vertex {
    Vec3 pos;     // camera space
    Vec3 attr_a;  // camera-space normal
    Vec3 attr_b;  // albedo
};

// Clips a triangle against the plane z = z_min (keep z >= z_min) and appends
// the resulting fan. Attributes are interpolated linearly in camera space.
void clip_near(const std::array<Vertex, 3>& tri, double z_min, std::vector<Vertex>& out_fan) {
    std::array<Vertex, 4> poly;
    int count = 0;
    for (int i = 0; i < 3; ++i) {
        const Vertex& a = tri[static_cast<std::size_t>(i)];
        const Vertex& b = tri[static_cast<std::size_t>((i + 1) % 3)];
        const bool a_in = a.pos.z() >= z_min;
        const bool b_in = b.pos.z() >= z_min;
        if (a_in) poly[static_cast<std::size_t>(count++)] = a;
        if (a_in != b_in) {
            const double t = (z_min - a.pos.z()) / (b.pos.z() - a.pos.z());
            Vertex m;
            m.pos = a.pos + t * (b.pos - a.pos);
            m.attr_a = a.attr_a + t * (b.attr_a - a.attr_a);
            m.attr_b = a.attr_b + t * (b.attr_b - a.attr_b);
            poly[static_cast<std::size_t>(count++)] = m;
        }
    }
    for (int i = 1; i + 1 < count; ++i) {
        out_fan.push_back(poly[0]);
        out_fan.push_back(poly[static_cast<std::size_t>(i)]);
        out_fan.push_back(poly[static_cast<std::size_t>(i + 1)]);
    }
}

struct ScreenVertex {
    double x, y;       // pixel coordinates
    double inv_z;      // 1 / camera z
    Vec3 a_over_z;     // normal / z
    Vec3 b_over_z;     // albedo / z
};

double edge_function(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Boundary ownership for the fill rule. Antisymmetric in the edge direction,
// so a pixel center lying exactly on an edge shared by two triangles is
// painted exactly once (top-left convention for the orientation used below).
bool top_left(const ScreenVertex& a, const ScreenVertex& b) {
    if (a.y == b.y) return b.x > a.x;
    return b.y > a.y;
}

struct Buffers {
    int width = 0;
    int height = 0;
    std::vector<float> depth;
    std::vector<float> normal;
    std::vector<float> color;
    std::vector<std::uint8_t> mask;
    bool shaded = false;
};

void raster_triangle(const std::array<Vertex, 3>& tri, const Camera& cam, Buffers& buf) {
    ScreenVertex sv[3];
    for (int i = 0; i < 3; ++i) {
        const Vertex& v = tri[static_cast<std::size_t>(i)];
        sv[i].x = cam.fx * v.pos.x() / v.pos.z() + cam.cx;
        sv[i].y = cam.fy * v.pos.y() / v.pos.z() + cam.cy;
        sv[i].inv_z = 1.0 / v.pos.z();
        sv[i].a_over_z = v.attr_a * sv[i].inv_z;
        sv[i].b_over_z = v.attr_b * sv[i].inv_z;
    }

    double area2 = edge_function(sv[0], sv[1], sv[2].x, sv[2].y);
    if (area2 == 0.0) return;
    if (area2 < 0.0) {
        std::swap(sv[1], sv[2]);
        area2 = -area2;
    }

    const double min_x = std::min({sv[0].x, sv[1].x, sv[2].x});
    const double max_x = std::max({sv[0].x, sv[1].x, sv[2].x});
    const double min_y = std::min({sv[0].y, sv[1].y, sv[2].y});
    const double max_y = std::max({sv[0].y, sv[1].y, sv[2].y});
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x1 = std::min(buf.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y1 = std::min(buf.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
    if (x0 > x1 || y0 > y1) return;

    const bool tl01 = top_left(sv[0], sv[1]);
    const bool tl12 = top_left(sv[1], sv[2]);
    const bool tl20 = top_left(sv[2], sv[0]);

    for (int py = y0; py <= y1; ++py) {
        const double sy = py + 0.5;
        for (int px = x0; px <= x1; ++px) {
            const double sx = px + 0.5;
            const double w0 = edge_function(sv[1], sv[2], sx, sy);
            const double w1 = edge_function(sv[2], sv[0], sx, sy);
            const double w2 = edge_function(sv[0], sv[1], sx, sy);
            const bool inside = (w0 > 0.0 || (w0 == 0.0 && tl12)) &&
                                (w1 > 0.0 || (w1 == 0.0 && tl20)) &&
                                (w2 > 0.0 || (w2 == 0.0 && tl01));
            if (!inside) continue;

            const double l0 = w0 / area2;
            const double l1 = w1 / area2;
            const double l2 = w2 / area2;
            const double inv_z = l0 * sv[0].inv_z + l1 * sv[1].inv_z + l2 * sv[2].inv_z;
            if (inv_z <= 0.0) continue;
            const double z = 1.0 / inv_z;
            const float fz = static_cast<float>(z);
            if (fz < cam.z_near || fz > cam.z_far) continue;

            const std::size_t idx = static_cast<std::size_t>(py) * static_cast<std::size_t>(buf.width) +
                                    static_cast<std::size_t>(px);
            if (!(fz < buf.depth[idx])) continue;

            Vec3 normal = (l0 * sv[0].a_over_z + l1 * sv[1].a_over_z + l2 * sv[2].a_over_z) * z;
            const double nlen = normal.norm();
            if (nlen > 1e-20) {
                normal /= nlen;
            } else {
                normal = Vec3(0.0, 0.0, -1.0);
            }
            // Flip toward the camera along the pixel's view ray.
            const Vec3 ray((sx - cam.cx) / cam.fx, (sy - cam.cy) / cam.fy, 1.0);
            if (normal.dot(ray) > 0.0) normal = -normal;

            buf.depth[idx] = fz;
            buf.mask[idx] = 1;
            if (buf.shaded) {
                const Vec3 albedo = (l0 * sv[0].b_over_z + l1 * sv[1].b_over_z + l2 * sv[2].b_over_z) * z;
                const double lambert = std::max(0.0, -normal.dot(ray.normalized()));
                for (int c = 0; c < 3; ++c) {
                    buf.color[idx * 3 + static_cast<std::size_t>(c)] =
                        static_cast<float>(std::clamp(albedo[c] * lambert, 0.0, 1.0));
                }
            } else {
                for (int c = 0; c < 3; ++c) {
                    buf.normal[idx * 3 + static_cast<std::size_t>(c)] =
                        static_cast<float>(normal[c] * 0.5 + 0.5);
                }
            }
        }
    }
}

void raster_mesh(const TriMesh& mesh, const Camera& cam, Buffers& buf) {
    const std::vector<Vec3>* normals = &mesh.vertex_normals;
    std::vector<Vec3> computed;
    if (!mesh.has_normals()) {
        computed = vertex_normals(mesh);
        normals = &computed;
    }
    const Eigen::Matrix3d r = cam.world_to_camera.rotation_matrix();
    const Vec3 t = cam.world_to_camera.translation;

    std::vector<Vertex> fan;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (mesh.face_degenerate(static_cast<int>(f))) continue;
        const auto& fv = mesh.faces[f];
        std::array<Vertex, 3> tri;
        bool any_front = false;
        for (int i = 0; i < 3; ++i) {
            const int vi = fv[static_cast<std::size_t>(i)];
            tri[static_cast<std::size_t>(i)].pos = r * mesh.vertices[static_cast<std::size_t>(vi)] + t;
            tri[static_cast<std::size_t>(i)].attr_a = r * (*normals)[static_cast<std::size_t>(vi)];
            tri[static_cast<std::size_t>(i)].attr_b =
                mesh.has_colors() ? mesh.vertex_colors[static_cast<std::size_t>(vi)]
                                  : Vec3(0.7, 0.7, 0.7);
            if (tri[static_cast<std::size_t>(i)].pos.z() >= cam.z_near) any_front = true;
        }
        if (!any_front) continue;

        fan.clear();
        clip_near(tri, cam.z_near, fan);
        for (std::size_t i = 0; i + 3 <= fan.size(); i += 3) {
            raster_triangle({fan[i], fan[i + 1], fan[i + 2]}, cam, buf);
        }
    }
}

Buffers make_buffers(const Camera& cam, bool shaded) {
    Buffers buf;
    buf.width = cam.width;
    buf.height = cam.height;
    buf.shaded = shaded;
    const std::size_t n = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
    buf.depth.assign(n, kInf);
    buf.mask.assign(n, 0);
    if (shaded) {
        buf.color.assign(n * 3, 0.0f);
    } else {
        buf.normal.assign(n * 3, 0.0f);
    }
    return buf;
}

}  // namespace

RenderTarget RenderTarget::empty(int width, int height) {
    RenderTarget rt;
    rt.width = width;
    rt.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    rt.normal_map.assign(n * 3, 0.0f);
    rt.depth_map.assign(n, kInf);
    rt.mask.assign(n, 0);
    return rt;
}

ShadedImage ShadedImage::empty(int width, int height) {
    ShadedImage img;
    img.width = width;
    img.height = height;
    img.rgb.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 0.0f);
    return img;
}

LayerStack LayerStack::zeros(int width, int height) {
    LayerStack stack;
    stack.width = width;
    stack.height = height;
    for (int i = 0; i < kLayerCount; ++i) {
        stack.layers[static_cast<std::size_t>(i)] = RenderTarget::empty(width, height);
        stack.confidence[static_cast<std::size_t>(i)]
            .assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f);
    }
    return stack;
}

const char* to_string(MloLayer layer) {
    static const char* names[LayerStack::kLayerCount] = {
        "object",
        "left_palm", "left_thumb", "left_index", "left_middle", "left_ring", "left_little",
        "right_palm", "right_thumb", "right_index", "right_middle", "right_ring", "right_little",
    };
    return names[static_cast<int>(layer)];
}

MloLayer hand_part_layer(HandSide side, HandPart part) {
    const int base = side == HandSide::Left ? 1 : 7;
    return static_cast<MloLayer>(base + static_cast<int>(part));
}

RenderTarget render_layer(const std::vector<const TriMesh*>& meshes, const Camera& camera) {
    camera.validate();
    Buffers buf = make_buffers(camera, /*shaded=*/false);
    for (const TriMesh* mesh : meshes) {
        if (mesh == nullptr) continue;
        raster_mesh(*mesh, camera, buf);
    }
    RenderTarget rt;
    rt.width = camera.width;
    rt.height = camera.height;
    rt.depth_map = std::move(buf.depth);
    rt.normal_map = std::move(buf.normal);
    rt.mask = std::move(buf.mask);
    return rt;
}

RenderTarget render_layer(const TriMesh& mesh, const Camera& camera) {
    return render_layer(std::vector<const TriMesh*>{&mesh}, camera);
}

ShadedImage render_shaded(const TriMesh& mesh, const Camera& camera) {
    camera.validate();
    Buffers buf = make_buffers(camera, /*shaded=*/true);
    raster_mesh(mesh, camera, buf);
    ShadedImage img;
    img.width = camera.width;
    img.height = camera.height;
    img.rgb = std::move(buf.color);
    return img;
}

std::vector<float> occlusion_confidence(const RenderTarget& target, const Camera& camera) {
    const float near = static_cast<float>(camera.z_near);
    const float range = static_cast<float>(camera.z_far - camera.z_near);
    std::vector<float> conf(target.mask.size(), 0.0f);
    for (std::size_t i = 0; i < target.mask.size(); ++i) {
        if (!target.mask[i]) continue;
        const float c = 1.0f - (target.depth_map[i] - near) / range;
        conf[i] = std::clamp(c, 1e-6f, 1.0f);
    }
    return conf;
}

std::array<TriMesh, kHandPartCount> split_hand_parts(const PosedHandGeometry& hand) {
    // All parts share the full hand's vertices and smooth normals, so a part
    // rendered alone shades identically to the same triangles inside a
    // whole-scene render.
    const std::vector<Vec3> normals =
        hand.mesh.has_normals() ? hand.mesh.vertex_normals : vertex_normals(hand.mesh);
    std::array<TriMesh, kHandPartCount> parts;
    for (auto& p : parts) {
        p.vertices = hand.mesh.vertices;
        p.vertex_normals = normals;
    }
    for (const auto& f : hand.mesh.faces) {
        const HandPart l0 = hand.labels[static_cast<std::size_t>(f[0])];
        const HandPart l1 = hand.labels[static_cast<std::size_t>(f[1])];
        const HandPart l2 = hand.labels[static_cast<std::size_t>(f[2])];
        HandPart owner = HandPart::Palm;  // three-way ties go to the palm
        if (l0 == l1 || l0 == l2) {
            owner = l0;
        } else if (l1 == l2) {
            owner = l1;
        }
        parts[static_cast<std::size_t>(owner)].faces.push_back(f);
    }
    return parts;
}

LayerStack build_mlo(const PosedHandGeometry* left_hand, const PosedHandGeometry* right_hand,
                     const TriMesh* object, const Camera& camera) {
    if (left_hand == nullptr && right_hand == nullptr && object == nullptr) {
        throw ValidationError("build_mlo needs at least one entity");
    }
    camera.validate();

    LayerStack stack = LayerStack::zeros(camera.width, camera.height);
    auto render_into = [&](MloLayer layer, const TriMesh& mesh) {
        const auto i = static_cast<std::size_t>(layer);
        stack.layers[i] = render_layer(mesh, camera);
        stack.confidence[i] = occlusion_confidence(stack.layers[i], camera);
    };

    if (object != nullptr) render_into(MloLayer::Object, *object);
    const std::pair<const PosedHandGeometry*, HandSide> hands[] = {
        {left_hand, HandSide::Left}, {right_hand, HandSide::Right}};
    for (const auto& [hand, side] : hands) {
        if (hand == nullptr) continue;
        const auto parts = split_hand_parts(*hand);
        for (int p = 0; p < kHandPartCount; ++p) {
            render_into(hand_part_layer(side, static_cast<HandPart>(p)),
                        parts[static_cast<std::size_t>(p)]);
        }
    }
    return stack;
}

RenderTarget composite_layers(const LayerStack& stack) {
    RenderTarget out = RenderTarget::empty(stack.width, stack.height);
    const std::size_t n = out.mask.size();
    for (std::size_t i = 0; i < n; ++i) {
        float best = kInf;
        int best_layer = -1;
        for (int l = 0; l < LayerStack::kLayerCount; ++l) {
            const RenderTarget& rt = stack.layers[static_cast<std::size_t>(l)];
            if (!rt.mask[i]) continue;
            if (rt.depth_map[i] < best) {
                best = rt.depth_map[i];
                best_layer = l;
            }
        }
        if (best_layer < 0) continue;
        const RenderTarget& rt = stack.layers[static_cast<std::size_t>(best_layer)];
        out.mask[i] = 1;
        out.depth_map[i] = rt.depth_map[i];
        for (std::size_t c = 0; c < 3; ++c) {
            out.normal_map[i * 3 + c] = rt.normal_map[i * 3 + c];
        }
    }
    return out;
}

}  // namespace mlo
