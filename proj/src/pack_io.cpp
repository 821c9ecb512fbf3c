#include "mlo/pack_io.hpp"

#include <fstream>
#include <ostream>

#include "mlo/image_io.hpp"
#include "mlo/tensor_io.hpp"
#include "json.hpp"

namespace mlo {

namespace {

using Json = nlohmann::json;

std::string frame_name(const char* prefix, int frame, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s%04d%s", prefix, frame, ext);
    return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory: " + dir.string());
}

std::vector<float> shaded_tensor(const ShadedImage& img) { return img.rgb; }

}  // namespace

std::vector<float> layer_stack_tensor(const LayerStack& stack) {
    const std::size_t hw = static_cast<std::size_t>(stack.width) *
                           static_cast<std::size_t>(stack.height);
    std::vector<float> out(static_cast<std::size_t>(LayerStack::kLayerCount) * hw * 4);
    std::size_t pos = 0;
    for (int l = 0; l < LayerStack::kLayerCount; ++l) {
        const RenderTarget& rt = stack.layers[static_cast<std::size_t>(l)];
        const std::vector<float>& conf = stack.confidence[static_cast<std::size_t>(l)];
        for (std::size_t p = 0; p < hw; ++p) {
            out[pos++] = rt.normal_map[p * 3];
            out[pos++] = rt.normal_map[p * 3 + 1];
            out[pos++] = rt.normal_map[p * 3 + 2];
            out[pos++] = conf[p];
        }
    }
    return out;
}

void save_motion_json(const ObjectMotion& motion, std::ostream& out) {
    Json doc;
    doc["q"] = Json::array();
    doc["l"] = Json::array();
    for (std::size_t i = 0; i < motion.rotations.size(); ++i) {
        const Eigen::Quaterniond& q = motion.rotations[i];
        doc["q"].push_back(Json::array({q.x(), q.y(), q.z(), q.w()}));
        const Vec3& l = motion.translations[i];
        doc["l"].push_back(Json::array({l.x(), l.y(), l.z()}));
    }
    out << doc.dump(1) << '\n';
}

ObjectMotion load_motion_json(std::istream& in) {
    Json doc;
    try {
        in >> doc;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("motion parse failure: ") + e.what());
    }
    if (!doc.contains("q") || !doc.contains("l") || doc["q"].size() != doc["l"].size()) {
        throw ValidationError("motion document needs matching 'q' and 'l' arrays");
    }
    ObjectMotion motion;
    for (std::size_t i = 0; i < doc["q"].size(); ++i) {
        const Json& q = doc["q"][i];
        const Json& l = doc["l"][i];
        if (q.size() != 4 || l.size() != 3) {
            throw ValidationError("motion entries must be q[4] and l[3]");
        }
        motion.rotations.emplace_back(q[3].get<double>(), q[0].get<double>(),
                                      q[1].get<double>(), q[2].get<double>());
        motion.translations.emplace_back(l[0].get<double>(), l[1].get<double>(),
                                         l[2].get<double>());
    }
    motion.validate();
    return motion;
}

void save_object_rep(const ObjectRep& rep, const std::filesystem::path& dir,
                     const Camera& scene_camera) {
    ensure_dir(dir);
    ensure_dir(dir / "views");
    ensure_dir(dir / "normals");
    ensure_dir(dir / "depth");

    for (int i = 0; i < kReferenceViewCount; ++i) {
        const ShadedImage& view = rep.reference_views[static_cast<std::size_t>(i)];
        write_ppm(dir / "views" / (std::string(to_string(static_cast<ViewDirection>(i))) + ".ppm"),
                  view.width, view.height, view.rgb);
    }

    std::vector<double> pts;
    pts.reserve(rep.point_cloud.points.size() * 3);
    for (const Vec3& p : rep.point_cloud.points) {
        pts.push_back(p.x());
        pts.push_back(p.y());
        pts.push_back(p.z());
    }
    const std::uint64_t point_shape[2] = {rep.point_cloud.points.size(), 3};
    write_mlot(dir / "points.mlot", point_shape, std::span<const double>(pts));

    {
        std::ofstream out(dir / "motion.json");
        if (!out) throw IoError("cannot write motion.json");
        save_motion_json(rep.motion, out);
    }

    const float near = static_cast<float>(scene_camera.z_near);
    const float range = static_cast<float>(scene_camera.z_far - scene_camera.z_near);
    for (std::size_t f = 0; f < rep.motion_normals.size(); ++f) {
        const RenderTarget& rt = rep.motion_normals[f];
        write_ppm(dir / "normals" / frame_name("frame_", static_cast<int>(f), ".ppm"),
                  rt.width, rt.height, rt.normal_map);
        std::vector<float> depth01(rt.depth_map.size(), 1.0f);  // off-mask pins to far
        for (std::size_t i = 0; i < rt.depth_map.size(); ++i) {
            if (rt.mask[i]) depth01[i] = (rt.depth_map[i] - near) / range;
        }
        write_pgm16(dir / "depth" / frame_name("frame_", static_cast<int>(f), ".pgm"),
                    rt.width, rt.height, depth01);
    }
}

void save_condition_pack(const ConditionPack& pack, const std::filesystem::path& dir) {
    ensure_dir(dir);
    Json manifest;
    manifest["kind"] = to_string(pack.kind);
    manifest["frames"] = pack.frames;
    manifest["width"] = pack.width;
    manifest["height"] = pack.height;
    Json slots = Json::object();

    auto record = [&](const char* slot, const char* file, bool zero,
                      std::span<const std::uint64_t> shape) {
        Json entry;
        entry["file"] = file;
        entry["zero"] = zero;
        entry["shape"] = Json::array();
        for (std::uint64_t s : shape) entry["shape"].push_back(s);
        slots[slot] = std::move(entry);
    };

    {
        std::vector<float> mlo;
        for (const LayerStack& stack : pack.mlo) {
            const std::vector<float> frame = layer_stack_tensor(stack);
            mlo.insert(mlo.end(), frame.begin(), frame.end());
        }
        const std::uint64_t shape[5] = {static_cast<std::uint64_t>(pack.frames),
                                        LayerStack::kLayerCount,
                                        static_cast<std::uint64_t>(pack.height),
                                        static_cast<std::uint64_t>(pack.width), 4};
        write_mlot(dir / "mlo.mlot", shape, std::span<const float>(mlo));
        // The object layer and hand layers live in one tensor; both flags are
        // recorded so consumers know which slices are zeroed.
        record("mlo", "mlo.mlot",
               pack.zero_flags.mlo_object_layer && pack.zero_flags.mlo_hand_layers, shape);
        slots["mlo"]["zero_object_layer"] = pack.zero_flags.mlo_object_layer;
        slots["mlo"]["zero_hand_layers"] = pack.zero_flags.mlo_hand_layers;
    }

    {
        const ObjectRep& rep = pack.object_rep;
        const int vh = rep.reference_views[0].height;
        const int vw = rep.reference_views[0].width;
        std::vector<float> views;
        for (const ShadedImage& v : rep.reference_views) {
            const auto t = shaded_tensor(v);
            views.insert(views.end(), t.begin(), t.end());
        }
        const std::uint64_t vshape[4] = {kReferenceViewCount, static_cast<std::uint64_t>(vh),
                                         static_cast<std::uint64_t>(vw), 3};
        write_mlot(dir / "object_views.mlot", vshape, std::span<const float>(views));
        record("object_views", "object_views.mlot", pack.zero_flags.object_rep, vshape);

        std::vector<double> pts;
        for (const Vec3& p : rep.point_cloud.points) {
            pts.push_back(p.x());
            pts.push_back(p.y());
            pts.push_back(p.z());
        }
        const std::uint64_t pshape[2] = {rep.point_cloud.points.size(), 3};
        write_mlot(dir / "object_points.mlot", pshape, std::span<const double>(pts));
        record("object_points", "object_points.mlot", pack.zero_flags.object_rep, pshape);

        std::vector<double> motion;
        for (std::size_t i = 0; i < rep.motion.rotations.size(); ++i) {
            const Eigen::Quaterniond& q = rep.motion.rotations[i];
            const Vec3& l = rep.motion.translations[i];
            motion.insert(motion.end(), {q.x(), q.y(), q.z(), q.w(), l.x(), l.y(), l.z()});
        }
        const std::uint64_t mshape[2] = {rep.motion.rotations.size(), 7};
        write_mlot(dir / "object_motion.mlot", mshape, std::span<const double>(motion));
        record("object_motion", "object_motion.mlot", pack.zero_flags.object_rep, mshape);

        const int nh = rep.motion_normals.empty() ? pack.height : rep.motion_normals[0].height;
        const int nw = rep.motion_normals.empty() ? pack.width : rep.motion_normals[0].width;
        std::vector<float> normals;
        for (const RenderTarget& rt : rep.motion_normals) {
            for (std::size_t p = 0; p < rt.mask.size(); ++p) {
                normals.push_back(rt.normal_map[p * 3]);
                normals.push_back(rt.normal_map[p * 3 + 1]);
                normals.push_back(rt.normal_map[p * 3 + 2]);
                normals.push_back(rt.mask[p] ? 1.0f : 0.0f);
            }
        }
        const std::uint64_t nshape[4] = {rep.motion_normals.size(),
                                         static_cast<std::uint64_t>(nh),
                                         static_cast<std::uint64_t>(nw), 4};
        write_mlot(dir / "object_normals.mlot", nshape, std::span<const float>(normals));
        record("object_normals", "object_normals.mlot", pack.zero_flags.object_rep, nshape);
    }

    {
        const std::uint64_t shape[3] = {static_cast<std::uint64_t>(pack.background_ref.height),
                                        static_cast<std::uint64_t>(pack.background_ref.width), 3};
        write_mlot(dir / "background.mlot", shape,
                   std::span<const float>(pack.background_ref.rgb));
        record("background", "background.mlot", pack.zero_flags.background_ref, shape);
    }
    {
        const std::uint64_t shape[3] = {static_cast<std::uint64_t>(pack.first_frame_object.height),
                                        static_cast<std::uint64_t>(pack.first_frame_object.width), 3};
        write_mlot(dir / "first_frame.mlot", shape,
                   std::span<const float>(pack.first_frame_object.rgb));
        record("first_frame", "first_frame.mlot", pack.zero_flags.first_frame_object, shape);
    }
    {
        const int c_s = pack.skeleton.empty() ? 3 : pack.skeleton.front().channels;
        std::vector<float> skel;
        for (const ImageTensor& map : pack.skeleton) {
            for (double v : map.data) skel.push_back(static_cast<float>(v));
        }
        const std::uint64_t shape[4] = {pack.skeleton.size(),
                                        static_cast<std::uint64_t>(pack.height),
                                        static_cast<std::uint64_t>(pack.width),
                                        static_cast<std::uint64_t>(c_s)};
        write_mlot(dir / "skeleton.mlot", shape, std::span<const float>(skel));
        record("skeleton", "skeleton.mlot", pack.zero_flags.skeleton, shape);
    }

    manifest["slots"] = std::move(slots);
    manifest["zero_flags"] = {
        {"mlo_object_layer", pack.zero_flags.mlo_object_layer},
        {"mlo_hand_layers", pack.zero_flags.mlo_hand_layers},
        {"object_rep", pack.zero_flags.object_rep},
        {"background_ref", pack.zero_flags.background_ref},
        {"first_frame_object", pack.zero_flags.first_frame_object},
        {"skeleton", pack.zero_flags.skeleton},
    };
    std::ofstream out(dir / "pack.json");
    if (!out) throw IoError("cannot write pack.json");
    out << manifest.dump(1) << '\n';
}

}  // namespace mlo
