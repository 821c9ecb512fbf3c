// Python bindings for the conditioning toolkit: mesh utilities, the toy hand,
// MLO rendering, object motion, window planning and the attention reference
// ops. Arrays cross the boundary as copies; everything stays deterministic.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlo/camera.hpp"
#include "mlo/cond_embed.hpp"
#include "mlo/geometry.hpp"
#include "mlo/hand_model.hpp"
#include "mlo/object_rep.hpp"
#include "mlo/pipeline.hpp"
#include "mlo/raster.hpp"

namespace py = pybind11;
using namespace mlo;

namespace {

std::vector<Vec3> to_vec3_list(const py::array_t<double>& arr, const char* what) {
    const auto buf = arr.request();
    if (buf.ndim != 2 || buf.shape[1] != 3) {
        throw ValidationError(std::string(what) + " must be an (n, 3) float array");
    }
    const double* p = static_cast<const double*>(buf.ptr);
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(buf.shape[0]));
    for (py::ssize_t i = 0; i < buf.shape[0]; ++i) {
        out.emplace_back(p[3 * i], p[3 * i + 1], p[3 * i + 2]);
    }
    return out;
}

py::array_t<double> from_vec3_list(const std::vector<Vec3>& pts) {
    py::array_t<double> arr({static_cast<py::ssize_t>(pts.size()), static_cast<py::ssize_t>(3)});
    double* p = static_cast<double*>(arr.request().ptr);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        p[3 * i] = pts[i].x();
        p[3 * i + 1] = pts[i].y();
        p[3 * i + 2] = pts[i].z();
    }
    return arr;
}

py::array_t<double> from_matrix(const Eigen::MatrixXd& m) {
    py::array_t<double> arr({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
    double* p = static_cast<double*>(arr.request().ptr);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) p[r * m.cols() + c] = m(r, c);
    }
    return arr;
}

Eigen::MatrixXd to_matrix(const py::array_t<double>& arr, const char* what) {
    const auto buf = arr.request();
    if (buf.ndim != 2) throw ValidationError(std::string(what) + " must be a 2-d float array");
    Eigen::MatrixXd m(buf.shape[0], buf.shape[1]);
    const double* p = static_cast<const double*>(buf.ptr);
    for (py::ssize_t r = 0; r < buf.shape[0]; ++r) {
        for (py::ssize_t c = 0; c < buf.shape[1]; ++c) m(r, c) = p[r * buf.shape[1] + c];
    }
    return m;
}

TriMesh mesh_from_arrays(const py::array_t<double>& vertices, const py::array_t<int>& faces) {
    TriMesh mesh;
    mesh.vertices = to_vec3_list(vertices, "vertices");
    const auto fb = faces.request();
    if (fb.ndim != 2 || fb.shape[1] != 3) {
        throw ValidationError("faces must be an (m, 3) int array");
    }
    const int* fp = static_cast<const int*>(fb.ptr);
    for (py::ssize_t i = 0; i < fb.shape[0]; ++i) {
        mesh.faces.push_back({fp[3 * i], fp[3 * i + 1], fp[3 * i + 2]});
    }
    mesh.validate();
    return mesh;
}

py::dict target_to_dict(const RenderTarget& rt) {
    py::array_t<float> normal({rt.height, rt.width, 3});
    py::array_t<float> depth({rt.height, rt.width});
    py::array_t<bool> mask({rt.height, rt.width});
    std::memcpy(normal.request().ptr, rt.normal_map.data(), rt.normal_map.size() * sizeof(float));
    std::memcpy(depth.request().ptr, rt.depth_map.data(), rt.depth_map.size() * sizeof(float));
    bool* mp = static_cast<bool*>(mask.request().ptr);
    for (std::size_t i = 0; i < rt.mask.size(); ++i) mp[i] = rt.mask[i] != 0;
    py::dict out;
    out["normal"] = normal;
    out["depth"] = depth;
    out["mask"] = mask;
    return out;
}

HandPose pose_from_arrays(const HandModel& model, const py::array_t<double>& theta,
                          const py::array_t<double>& beta,
                          const py::array_t<double>& translation) {
    HandPose pose;
    const auto tb = theta.request();
    pose.theta = Eigen::VectorXd::Zero(3 * model.joint_count());
    if (tb.size != 0) {
        if (tb.size != pose.theta.size()) throw ValidationError("theta length mismatch");
        std::memcpy(pose.theta.data(), tb.ptr, sizeof(double) * static_cast<std::size_t>(tb.size));
    }
    const auto bb = beta.request();
    pose.beta = Eigen::VectorXd::Zero(model.shape_dim());
    if (bb.size != 0) {
        if (bb.size != pose.beta.size()) throw ValidationError("beta length mismatch");
        std::memcpy(pose.beta.data(), bb.ptr, sizeof(double) * static_cast<std::size_t>(bb.size));
    }
    const auto rb = translation.request();
    if (rb.size == 3) {
        const double* p = static_cast<const double*>(rb.ptr);
        pose.root_translation = Vec3(p[0], p[1], p[2]);
    } else if (rb.size != 0) {
        throw ValidationError("translation must have 3 entries");
    }
    return pose;
}

ToyWeights weights_for(std::uint64_t seed) { return make_toy_weights(seed); }

}  // namespace

PYBIND11_MODULE(pymlo, m) {
    m.doc() = "Hand-object conditioning toolkit: layered occlusion rendering, toy hand "
              "skinning, object motion, window planning and attention reference ops.";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_IOError);

    py::class_<TriMesh>(m, "Mesh")
        .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("faces"))
        .def_property_readonly("vertices",
                               [](const TriMesh& mesh) { return from_vec3_list(mesh.vertices); })
        .def_property_readonly("face_count",
                               [](const TriMesh& mesh) { return mesh.faces.size(); });
    m.def("load_mesh", [](const std::string& path) { return load_mesh(std::filesystem::path(path)); },
          py::arg("path"));

    m.def("sample_surface",
          [](const TriMesh& mesh, int count, std::uint64_t seed) {
              const PointCloud cloud = sample_surface(mesh, count, seed);
              py::dict out;
              out["points"] = from_vec3_list(cloud.points);
              out["face"] = py::array_t<int>(py::array::ShapeContainer{static_cast<py::ssize_t>(cloud.source_face.size())},
                                             cloud.source_face.data());
              out["barycentric"] = from_vec3_list(cloud.barycentric);
              return out;
          },
          py::arg("mesh"), py::arg("count") = kDefaultPointCount, py::arg("seed") = 0);

    m.def("vertex_normals",
          [](const TriMesh& mesh) { return from_vec3_list(vertex_normals(mesh)); },
          py::arg("mesh"));

    m.def("kabsch_solve",
          [](const py::array_t<double>& src, const py::array_t<double>& dst) {
              const auto s = to_vec3_list(src, "src");
              const auto d = to_vec3_list(dst, "dst");
              const RigidTransform t = kabsch_solve(s, d);
              py::array_t<double> quat(py::array::ShapeContainer{4});
              double* qp = static_cast<double*>(quat.request().ptr);
              qp[0] = t.rotation.x();
              qp[1] = t.rotation.y();
              qp[2] = t.rotation.z();
              qp[3] = t.rotation.w();
              py::array_t<double> trans(py::array::ShapeContainer{3});
              double* tp = static_cast<double*>(trans.request().ptr);
              tp[0] = t.translation.x();
              tp[1] = t.translation.y();
              tp[2] = t.translation.z();
              return py::make_tuple(quat, trans);
          },
          py::arg("src"), py::arg("dst"),
          "Least-squares rigid alignment; returns (quaternion [a,b,c,w], translation).");

    py::class_<HandModel>(m, "HandModel")
        .def_property_readonly("joint_count", &HandModel::joint_count)
        .def_property_readonly("vertex_count", &HandModel::vertex_count)
        .def_property_readonly("template_vertices",
                               [](const HandModel& model) {
                                   return from_matrix(model.template_vertices);
                               })
        .def_property_readonly("side", [](const HandModel& model) {
            return std::string(to_string(model.side));
        });
    m.def("make_toy_hand",
          [](const std::string& side) {
              if (side == "left" || side == "LEFT") return make_toy_hand(HandSide::Left);
              if (side == "right" || side == "RIGHT") return make_toy_hand(HandSide::Right);
              throw ValidationError("side must be 'left' or 'right'");
          },
          py::arg("side") = "right");
    m.def("load_hand_model",
          [](const std::string& path) { return load_hand_model(std::filesystem::path(path)); },
          py::arg("path"));

    m.def("pose_hand",
          [](const HandModel& model, const py::array_t<double>& theta,
             const py::array_t<double>& beta, const py::array_t<double>& translation) {
              const PosedHand posed =
                  pose_hand(model, pose_from_arrays(model, theta, beta, translation));
              return py::make_tuple(from_matrix(posed.vertices), from_matrix(posed.joints));
          },
          py::arg("model"), py::arg("theta") = py::array_t<double>(py::array::ShapeContainer{0}),
          py::arg("beta") = py::array_t<double>(py::array::ShapeContainer{0}),
          py::arg("translation") = py::array_t<double>(py::array::ShapeContainer{0}),
          "Linear blend skinning; returns (vertices, joints).");

    m.def("part_labels", [](const HandModel& model) {
        const auto labels = part_labels(model);
        py::array_t<int> out(py::array::ShapeContainer{static_cast<py::ssize_t>(labels.size())});
        int* p = static_cast<int*>(out.request().ptr);
        for (std::size_t i = 0; i < labels.size(); ++i) p[i] = static_cast<int>(labels[i]);
        return out;
    });
    m.def("fingertip_vertices", [](const HandModel& model) {
        const auto tips = fingertip_vertices(model);
        return std::vector<int>(tips.begin(), tips.end());
    });

    py::class_<Camera>(m, "Camera")
        .def_property_readonly("width", [](const Camera& c) { return c.width; })
        .def_property_readonly("height", [](const Camera& c) { return c.height; });
    m.def("look_at_camera",
          [](const py::array_t<double>& eye, const py::array_t<double>& target,
             const py::array_t<double>& up, double fx, double fy, int width, int height,
             double z_near, double z_far) {
              auto vec = [](const py::array_t<double>& a, const char* what) {
                  const auto b = a.request();
                  if (b.size != 3) throw ValidationError(std::string(what) + " needs 3 entries");
                  const double* p = static_cast<const double*>(b.ptr);
                  return Vec3(p[0], p[1], p[2]);
              };
              return make_look_at_camera(vec(eye, "eye"), vec(target, "target"), vec(up, "up"),
                                         fx, fy, width, height, z_near, z_far);
          },
          py::arg("eye"), py::arg("target"), py::arg("up"), py::arg("fx"), py::arg("fy"),
          py::arg("width"), py::arg("height"), py::arg("near") = 0.01, py::arg("far") = 100.0);
    m.def("canonical_cameras",
          [](const TriMesh& mesh, int resolution, double margin) {
              const auto cams = canonical_cameras(mesh, resolution, margin);
              return std::vector<Camera>(cams.begin(), cams.end());
          },
          py::arg("mesh"), py::arg("resolution"), py::arg("margin") = 1.2);

    m.def("render_layer",
          [](const TriMesh& mesh, const Camera& camera) {
              return target_to_dict(render_layer(mesh, camera));
          },
          py::arg("mesh"), py::arg("camera"));

    py::class_<PosedHandGeometry>(m, "PosedHandGeometry");
    m.def("posed_hand_geometry",
          [](const HandModel& model, const py::array_t<double>& theta,
             const py::array_t<double>& beta, const py::array_t<double>& translation) {
              return posed_hand_geometry(model,
                                         pose_from_arrays(model, theta, beta, translation));
          },
          py::arg("model"), py::arg("theta") = py::array_t<double>(py::array::ShapeContainer{0}),
          py::arg("beta") = py::array_t<double>(py::array::ShapeContainer{0}),
          py::arg("translation") = py::array_t<double>(py::array::ShapeContainer{0}));

    py::class_<LayerStack>(m, "LayerStack")
        .def_property_readonly("layer_names",
                               [](const LayerStack&) {
                                   std::vector<std::string> names;
                                   for (int l = 0; l < LayerStack::kLayerCount; ++l) {
                                       names.emplace_back(to_string(static_cast<MloLayer>(l)));
                                   }
                                   return names;
                               })
        .def("layer",
             [](const LayerStack& stack, int index) {
                 if (index < 0 || index >= LayerStack::kLayerCount) {
                     throw ValidationError("layer index out of range");
                 }
                 py::dict out = target_to_dict(stack.layers[static_cast<std::size_t>(index)]);
                 const auto& conf = stack.confidence[static_cast<std::size_t>(index)];
                 py::array_t<float> confidence({stack.height, stack.width});
                 std::memcpy(confidence.request().ptr, conf.data(), conf.size() * sizeof(float));
                 out["confidence"] = confidence;
                 return out;
             },
             py::arg("index"))
        .def("composite",
             [](const LayerStack& stack) { return target_to_dict(composite_layers(stack)); });

    m.def("build_mlo",
          [](const PosedHandGeometry* left, const PosedHandGeometry* right, const TriMesh* object,
             const Camera& camera) { return build_mlo(left, right, object, camera); },
          py::arg("left") = nullptr, py::arg("right") = nullptr, py::arg("object") = nullptr,
          py::arg("camera"), py::keep_alive<0, 1>(), py::keep_alive<0, 2>(),
          py::keep_alive<0, 3>());

    m.def("simulate_motion",
          [](std::uint64_t seed, int frames, double rot_rate_max,
             const py::array_t<double>& lo, const py::array_t<double>& hi) {
              Aabb bounds;
              const auto lb = lo.request();
              const auto hb = hi.request();
              if (lb.size != 3 || hb.size != 3) {
                  throw ValidationError("bounds need 3 entries each");
              }
              const double* lp = static_cast<const double*>(lb.ptr);
              const double* hp = static_cast<const double*>(hb.ptr);
              bounds.min = Vec3(lp[0], lp[1], lp[2]);
              bounds.max = Vec3(hp[0], hp[1], hp[2]);
              const ObjectMotion motion = simulate_motion(seed, frames, rot_rate_max, bounds);
              py::array_t<double> q({frames, 4});
              py::array_t<double> l({frames, 3});
              double* qp = static_cast<double*>(q.request().ptr);
              double* tp = static_cast<double*>(l.request().ptr);
              for (int i = 0; i < frames; ++i) {
                  const auto& rot = motion.rotations[static_cast<std::size_t>(i)];
                  qp[4 * i] = rot.x();
                  qp[4 * i + 1] = rot.y();
                  qp[4 * i + 2] = rot.z();
                  qp[4 * i + 3] = rot.w();
                  const Vec3& t = motion.translations[static_cast<std::size_t>(i)];
                  tp[3 * i] = t.x();
                  tp[3 * i + 1] = t.y();
                  tp[3 * i + 2] = t.z();
              }
              return py::make_tuple(q, l);
          },
          py::arg("seed"), py::arg("frames"), py::arg("rot_rate_max") = 0.1,
          py::arg("bounds_min"), py::arg("bounds_max"),
          "Quaternions return in (a, b, c, w) order.");

    m.def("plan_windows",
          [](int frames, int window, int stride, const std::string& mode) {
              const PlanMode pm = mode == "tail" ? PlanMode::Tail : PlanMode::Strict;
              if (mode != "tail" && mode != "strict") {
                  throw ValidationError("mode must be strict or tail");
              }
              return plan_windows(frames, window, stride, pm).windows;
          },
          py::arg("frames"), py::arg("window"), py::arg("stride"), py::arg("mode") = "strict");

    m.def("overlap_average",
          [](const std::vector<py::array_t<double>>& outputs, int frames, int window, int stride,
             const std::string& mode) {
              const PlanMode pm = mode == "tail" ? PlanMode::Tail : PlanMode::Strict;
              const WindowPlan plan = plan_windows(frames, window, stride, pm);
              std::vector<FrameSequence> seqs;
              for (const auto& arr : outputs) {
                  const auto buf = arr.request();
                  if (buf.ndim != 2) throw ValidationError("window outputs must be 2-d arrays");
                  FrameSequence seq;
                  const double* p = static_cast<const double*>(buf.ptr);
                  for (py::ssize_t f = 0; f < buf.shape[0]; ++f) {
                      seq.emplace_back(p + f * buf.shape[1], p + (f + 1) * buf.shape[1]);
                  }
                  seqs.push_back(std::move(seq));
              }
              const FrameSequence merged = overlap_average(seqs, plan);
              const py::ssize_t payload =
                  merged.empty() ? 0 : static_cast<py::ssize_t>(merged.front().size());
              py::array_t<double> out({static_cast<py::ssize_t>(merged.size()), payload});
              double* p = static_cast<double*>(out.request().ptr);
              for (std::size_t f = 0; f < merged.size(); ++f) {
                  for (std::size_t c = 0; c < merged[f].size(); ++c) {
                      p[f * static_cast<std::size_t>(payload) + c] = merged[f][c];
                  }
              }
              return out;
          },
          py::arg("outputs"), py::arg("frames"), py::arg("window"), py::arg("stride"),
          py::arg("mode") = "strict");

    m.def("cross_attention",
          [](const py::array_t<double>& z, const py::array_t<double>& e, std::uint64_t seed) {
              const ToyWeights w = weights_for(seed);
              return from_matrix(cross_attention(to_matrix(z, "z"), to_matrix(e, "e"), w));
          },
          py::arg("z"), py::arg("e"), py::arg("seed") = 0);
    m.def("attention_weights",
          [](const py::array_t<double>& z, const py::array_t<double>& e, std::uint64_t seed) {
              const ToyWeights w = weights_for(seed);
              return from_matrix(attention_weights(to_matrix(z, "z"), to_matrix(e, "e"), w));
          },
          py::arg("z"), py::arg("e"), py::arg("seed") = 0);
    m.def("cross_attention_grad",
          [](const py::array_t<double>& z, const py::array_t<double>& e,
             const py::array_t<double>& upstream, std::uint64_t seed) {
              const ToyWeights w = weights_for(seed);
              return from_matrix(cross_attention_grad(to_matrix(z, "z"), to_matrix(e, "e"), w,
                                                      to_matrix(upstream, "upstream")));
          },
          py::arg("z"), py::arg("e"), py::arg("upstream"), py::arg("seed") = 0);
    m.attr("EMBED_DIM") = ToyConfig{}.embed_dim;
    m.attr("LAYER_COUNT") = LayerStack::kLayerCount;
}
