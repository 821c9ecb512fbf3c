#include "mlo/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"

namespace mlo {

namespace {

using Json = nlohmann::json;

Eigen::Matrix3d rodrigues(const Vec3& axis_angle) {
    const double angle = axis_angle.norm();
    if (angle < 1e-12) return Eigen::Matrix3d::Identity();
    const Vec3 axis = axis_angle / angle;
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

struct Affine {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return r * p + t; }
};

const char* kPartNames[kHandPartCount] = {"PALM", "THUMB", "INDEX", "MIDDLE", "RING", "LITTLE"};

HandPart part_from_string(const std::string& name) {
    for (int i = 0; i < kHandPartCount; ++i) {
        if (name == kPartNames[i]) return static_cast<HandPart>(i);
    }
    throw ValidationError("unknown hand part '" + name + "'");
}

// --- toy hand construction ---------------------------------------------------

struct MeshBuilder {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> joint_of_vertex;   // one-hot skinning assignment
    std::vector<HandPart> part_of_vertex;

    int add_vertex(const Vec3& p, int joint, HandPart part) {
        vertices.push_back(p);
        joint_of_vertex.push_back(joint);
        part_of_vertex.push_back(part);
        return static_cast<int>(vertices.size()) - 1;
    }

    void add_face(int a, int b, int c) { faces.push_back({a, b, c}); }
};

// Axis-aligned box surface sampled on an (nx, ny, 2) grid, outward winding.
void append_box_grid(MeshBuilder& mb, const Vec3& lo, const Vec3& hi, int nx, int ny,
                     int joint, HandPart part) {
    const int nz = 2;
    std::vector<int> idx(static_cast<std::size_t>(nx * ny * nz));
    auto at = [&](int ix, int iy, int iz) -> int& {
        return idx[static_cast<std::size_t>((ix * ny + iy) * nz + iz)];
    };
    for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
            for (int iz = 0; iz < nz; ++iz) {
                const Vec3 p(lo.x() + (hi.x() - lo.x()) * ix / (nx - 1),
                             lo.y() + (hi.y() - lo.y()) * iy / (ny - 1),
                             iz == 0 ? lo.z() : hi.z());
                at(ix, iy, iz) = mb.add_vertex(p, joint, part);
            }
        }
    }
    for (int ix = 0; ix + 1 < nx; ++ix) {
        for (int iy = 0; iy + 1 < ny; ++iy) {
            // top (+z) and bottom (-z)
            mb.add_face(at(ix, iy, 1), at(ix + 1, iy, 1), at(ix + 1, iy + 1, 1));
            mb.add_face(at(ix, iy, 1), at(ix + 1, iy + 1, 1), at(ix, iy + 1, 1));
            mb.add_face(at(ix, iy, 0), at(ix + 1, iy + 1, 0), at(ix + 1, iy, 0));
            mb.add_face(at(ix, iy, 0), at(ix, iy + 1, 0), at(ix + 1, iy + 1, 0));
        }
    }
    for (int ix = 0; ix + 1 < nx; ++ix) {
        // y = lo side (-y out), y = hi side (+y out)
        mb.add_face(at(ix, 0, 0), at(ix + 1, 0, 0), at(ix + 1, 0, 1));
        mb.add_face(at(ix, 0, 0), at(ix + 1, 0, 1), at(ix, 0, 1));
        mb.add_face(at(ix, ny - 1, 0), at(ix + 1, ny - 1, 1), at(ix + 1, ny - 1, 0));
        mb.add_face(at(ix, ny - 1, 0), at(ix, ny - 1, 1), at(ix + 1, ny - 1, 1));
    }
    for (int iy = 0; iy + 1 < ny; ++iy) {
        // x = lo side (-x out), x = hi side (+x out)
        mb.add_face(at(0, iy, 0), at(0, iy + 1, 1), at(0, iy + 1, 0));
        mb.add_face(at(0, iy, 0), at(0, iy, 1), at(0, iy + 1, 1));
        mb.add_face(at(nx - 1, iy, 0), at(nx - 1, iy + 1, 0), at(nx - 1, iy + 1, 1));
        mb.add_face(at(nx - 1, iy, 0), at(nx - 1, iy + 1, 1), at(nx - 1, iy, 1));
    }
}

struct SegmentFrame {
    Vec3 base;
    Vec3 u;  // axial
    Vec3 v;  // cross
    Vec3 w;  // cross
};

// Square prism with rings at 0, L/2 and L. Ring vertices are weighted to
// ring_joints[r]; an apex cap is added when tip_ext > 0 (weighted like the
// distal ring). Returns the apex vertex index or -1.
int append_segment(MeshBuilder& mb, const SegmentFrame& frame, double length, double half,
                   const std::array<int, 3>& ring_joints, int cap_prox, int cap_dist,
                   double tip_ext, HandPart part) {
    const double s_of_ring[3] = {0.0, 0.5 * length, length};
    int ring[3][4];
    for (int r = 0; r < 3; ++r) {
        const Vec3 c = frame.base + s_of_ring[r] * frame.u;
        const Vec3 corner[4] = {c + half * frame.v + half * frame.w,
                                c - half * frame.v + half * frame.w,
                                c - half * frame.v - half * frame.w,
                                c + half * frame.v - half * frame.w};
        for (int kcol = 0; kcol < 4; ++kcol) {
            ring[r][kcol] = mb.add_vertex(corner[kcol], ring_joints[static_cast<std::size_t>(r)], part);
        }
    }
    for (int r = 0; r < 2; ++r) {
        for (int kcol = 0; kcol < 4; ++kcol) {
            const int kn = (kcol + 1) % 4;
            mb.add_face(ring[r][kcol], ring[r][kn], ring[r + 1][kn]);
            mb.add_face(ring[r][kcol], ring[r + 1][kn], ring[r + 1][kcol]);
        }
    }
    if (cap_prox >= 0) {
        mb.add_face(ring[0][0], ring[0][3], ring[0][2]);
        mb.add_face(ring[0][0], ring[0][2], ring[0][1]);
    }
    int apex = -1;
    if (tip_ext > 0.0) {
        apex = mb.add_vertex(frame.base + (length + tip_ext) * frame.u,
                             ring_joints[2], part);
        for (int kcol = 0; kcol < 4; ++kcol) {
            mb.add_face(ring[2][kcol], ring[2][(kcol + 1) % 4], apex);
        }
    } else if (cap_dist >= 0) {
        mb.add_face(ring[2][0], ring[2][1], ring[2][2]);
        mb.add_face(ring[2][0], ring[2][2], ring[2][3]);
    }
    return apex;
}

}  // namespace

const char* to_string(HandPart part) { return kPartNames[static_cast<int>(part)]; }

const char* to_string(HandSide side) { return side == HandSide::Left ? "LEFT" : "RIGHT"; }

void HandModel::validate() const {
    const int v = vertex_count();
    const int j = joint_count();
    if (v < 1 || j < 1) throw ValidationError("hand model needs vertices and joints");
    if (!template_vertices.allFinite()) throw ValidationError("template has non-finite entries");

    if (joint_regressor.rows() != j || joint_regressor.cols() != v) {
        throw ValidationError("joint regressor must be J x V");
    }
    for (int r = 0; r < j; ++r) {
        const double s = joint_regressor.row(r).sum();
        if (std::abs(s - 1.0) > 1e-3) {
            throw ValidationError("joint regressor row " + std::to_string(r) +
                                  " sums to " + std::to_string(s));
        }
    }

    if (skinning_weights.rows() != v || skinning_weights.cols() != j) {
        throw ValidationError("skinning weights must be V x J");
    }
    for (int r = 0; r < v; ++r) {
        const double s = skinning_weights.row(r).sum();
        if (std::abs(s - 1.0) > 1e-4) {
            throw ValidationError("skinning weight row " + std::to_string(r) +
                                  " sums to " + std::to_string(s));
        }
        if (skinning_weights.row(r).minCoeff() < -1e-12) {
            throw ValidationError("skinning weights must be non-negative");
        }
    }

    if (static_cast<int>(parents.size()) != j) throw ValidationError("parents must have length J");
    int roots = 0;
    for (int i = 0; i < j; ++i) {
        const int p = parents[static_cast<std::size_t>(i)];
        if (p == -1) {
            ++roots;
        } else if (p < 0 || p >= j || p == i) {
            throw ValidationError("parent index out of range at joint " + std::to_string(i));
        }
    }
    if (roots != 1) throw ValidationError("parents must contain exactly one root");
    for (int i = 0; i < j; ++i) {
        int cur = i;
        for (int steps = 0; cur != -1; ++steps) {
            if (steps > j) throw ValidationError("parents contain a cycle");
            cur = parents[static_cast<std::size_t>(cur)];
        }
    }

    for (const auto& basis : shape_basis) {
        if (basis.rows() != v) throw ValidationError("shape basis dimension mismatch");
    }
    if (!pose_basis.empty() && static_cast<int>(pose_basis.size()) != 9 * (j - 1)) {
        throw ValidationError("pose basis must have 9*(J-1) entries or be empty");
    }
    for (const auto& basis : pose_basis) {
        if (basis.rows() != v) throw ValidationError("pose basis dimension mismatch");
    }

    if (static_cast<int>(part_of_joint.size()) != j) {
        throw ValidationError("part_of_joint must have length J");
    }
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= v) throw ValidationError("hand face index out of range");
        }
    }
}

HandModel load_hand_model(std::istream& in) {
    Json doc;
    try {
        in >> doc;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("hand asset parse failure: ") + e.what());
    }

    auto require = [&](const char* key) -> const Json& {
        if (!doc.contains(key)) throw ValidationError(std::string("hand asset missing key '") + key + "'");
        return doc[key];
    };
    auto to_matrix = [](const Json& arr, const char* what) {
        if (!arr.is_array() || arr.empty()) {
            throw ValidationError(std::string("hand asset field '") + what + "' must be a 2-d array");
        }
        const std::size_t rows = arr.size();
        const std::size_t cols = arr[0].size();
        Eigen::MatrixXd m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            if (!arr[r].is_array() || arr[r].size() != cols) {
                throw ValidationError(std::string("ragged rows in hand asset field '") + what + "'");
            }
            for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = arr[r][c].get<double>();
        }
        return m;
    };

    HandModel model;
    const Eigen::MatrixXd tmpl = to_matrix(require("template"), "template");
    if (tmpl.cols() != 3) throw ValidationError("hand template must be V x 3");
    model.template_vertices = tmpl;

    for (const auto& b : require("shape_basis")) {
        const Eigen::MatrixXd m = to_matrix(b, "shape_basis");
        if (m.cols() != 3) throw ValidationError("shape basis entries must be V x 3");
        model.shape_basis.push_back(m);
    }
    for (const auto& b : require("pose_basis")) {
        const Eigen::MatrixXd m = to_matrix(b, "pose_basis");
        if (m.cols() != 3) throw ValidationError("pose basis entries must be V x 3");
        model.pose_basis.push_back(m);
    }
    model.joint_regressor = to_matrix(require("joint_regressor"), "joint_regressor");
    for (const auto& p : require("parents")) model.parents.push_back(p.get<int>());
    model.skinning_weights = to_matrix(require("weights"), "weights");
    for (const auto& p : require("part_of_joint")) {
        model.part_of_joint.push_back(part_from_string(p.get<std::string>()));
    }
    const std::string side = require("side").get<std::string>();
    if (side == "LEFT") {
        model.side = HandSide::Left;
    } else if (side == "RIGHT") {
        model.side = HandSide::Right;
    } else {
        throw ValidationError("hand asset side must be LEFT or RIGHT");
    }
    if (doc.contains("faces")) {
        for (const auto& f : doc["faces"]) {
            if (!f.is_array() || f.size() != 3) throw ValidationError("hand faces must be triples");
            model.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
        }
    }
    model.validate();
    return model;
}

HandModel load_hand_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hand asset: " + path.string());
    return load_hand_model(in);
}

void save_hand_model(const HandModel& model, std::ostream& out) {
    Json doc;
    auto matrix_to_json = [](const Eigen::MatrixXd& m) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    doc["template"] = matrix_to_json(model.template_vertices);
    doc["shape_basis"] = Json::array();
    for (const auto& b : model.shape_basis) doc["shape_basis"].push_back(matrix_to_json(b));
    doc["pose_basis"] = Json::array();
    for (const auto& b : model.pose_basis) doc["pose_basis"].push_back(matrix_to_json(b));
    doc["joint_regressor"] = matrix_to_json(model.joint_regressor);
    doc["parents"] = model.parents;
    doc["weights"] = matrix_to_json(model.skinning_weights);
    doc["part_of_joint"] = Json::array();
    for (HandPart p : model.part_of_joint) doc["part_of_joint"].push_back(to_string(p));
    doc["side"] = to_string(model.side);
    doc["faces"] = Json::array();
    for (const auto& f : model.faces) doc["faces"].push_back(Json::array({f[0], f[1], f[2]}));
    out << doc.dump(1);
}

HandModel make_toy_hand(HandSide side) {
    MeshBuilder mb;

    // Palm block; the wrist joint sits at the centroid of its x = 0 face.
    const double palm_len = 0.09;
    const double palm_half_y = 0.045;
    const double palm_half_z = 0.013;
    append_box_grid(mb, Vec3(0.0, -palm_half_y, -palm_half_z),
                    Vec3(palm_len, palm_half_y, palm_half_z), 5, 5, 0, HandPart::Palm);

    struct FingerSpec {
        HandPart part;
        Vec3 base;
        Vec3 axis;
        double len1, len2;
    };
    const double c40 = std::cos(40.0 * std::numbers::pi / 180.0);
    const double s40 = std::sin(40.0 * std::numbers::pi / 180.0);
    const std::array<FingerSpec, 5> fingers = {{
        {HandPart::Thumb, Vec3(0.03, palm_half_y, 0.0), Vec3(c40, s40, 0.0), 0.034, 0.030},
        {HandPart::Index, Vec3(palm_len, 0.033, 0.0), Vec3(1.0, 0.0, 0.0), 0.035, 0.030},
        {HandPart::Middle, Vec3(palm_len, 0.011, 0.0), Vec3(1.0, 0.0, 0.0), 0.038, 0.032},
        {HandPart::Ring, Vec3(palm_len, -0.011, 0.0), Vec3(1.0, 0.0, 0.0), 0.036, 0.030},
        {HandPart::Little, Vec3(palm_len, -0.033, 0.0), Vec3(1.0, 0.0, 0.0), 0.028, 0.024},
    }};

    const int joint_count = 16;
    Eigen::MatrixX3d joints(joint_count, 3);
    joints.row(0) = Vec3(0.0, 0.0, 0.0);
    std::vector<int> parents(joint_count, -1);
    std::vector<HandPart> part_of_joint(static_cast<std::size_t>(joint_count), HandPart::Palm);

    const double finger_half = 0.008;
    for (int f = 0; f < 5; ++f) {
        const FingerSpec& spec = fingers[static_cast<std::size_t>(f)];
        const int mcp = 1 + 3 * f;
        const int pip = mcp + 1;
        const int dip = mcp + 2;
        parents[static_cast<std::size_t>(mcp)] = 0;
        parents[static_cast<std::size_t>(pip)] = mcp;
        parents[static_cast<std::size_t>(dip)] = pip;
        part_of_joint[static_cast<std::size_t>(mcp)] = spec.part;
        part_of_joint[static_cast<std::size_t>(pip)] = spec.part;
        part_of_joint[static_cast<std::size_t>(dip)] = spec.part;

        const Vec3 u = spec.axis;
        const Vec3 w(0.0, 0.0, 1.0);
        const Vec3 v = w.cross(u).normalized();
        joints.row(mcp) = spec.base;
        joints.row(pip) = spec.base + spec.len1 * u;
        joints.row(dip) = spec.base + (spec.len1 + 0.5 * spec.len2) * u;

        SegmentFrame seg1{spec.base, u, v, w};
        append_segment(mb, seg1, spec.len1, finger_half, {mcp, mcp, mcp}, /*cap_prox=*/1,
                       /*cap_dist=*/1, /*tip_ext=*/0.0, spec.part);
        SegmentFrame seg2{spec.base + spec.len1 * u, u, v, w};
        append_segment(mb, seg2, spec.len2, finger_half, {pip, dip, dip}, /*cap_prox=*/1,
                       /*cap_dist=*/-1, /*tip_ext=*/0.006, spec.part);
    }

    const int v_count = static_cast<int>(mb.vertices.size());
    HandModel model;
    model.template_vertices.resize(v_count, 3);
    for (int i = 0; i < v_count; ++i) model.template_vertices.row(i) = mb.vertices[static_cast<std::size_t>(i)];
    model.faces = mb.faces;
    model.parents = parents;
    model.part_of_joint = part_of_joint;
    model.side = HandSide::Right;

    model.skinning_weights = Eigen::MatrixXd::Zero(v_count, joint_count);
    for (int i = 0; i < v_count; ++i) {
        model.skinning_weights(i, mb.joint_of_vertex[static_cast<std::size_t>(i)]) = 1.0;
    }

    // Regressor rows average the vertices one-hot-bound to each joint whose
    // positions are symmetric about it, so regressor * template reproduces the
    // designed joint locations. The wrist uses the palm's x = 0 vertex column.
    model.joint_regressor = Eigen::MatrixXd::Zero(joint_count, v_count);
    {
        std::vector<int> wrist_ring;
        for (int i = 0; i < v_count; ++i) {
            if (mb.part_of_vertex[static_cast<std::size_t>(i)] == HandPart::Palm &&
                mb.vertices[static_cast<std::size_t>(i)].x() == 0.0) {
                wrist_ring.push_back(i);
            }
        }
        for (int i : wrist_ring) model.joint_regressor(0, i) = 1.0 / static_cast<double>(wrist_ring.size());
    }
    for (int f = 0; f < 5; ++f) {
        const int mcp = 1 + 3 * f;
        for (int jj : {mcp, mcp + 1, mcp + 2}) {
            std::vector<int> ring;
            const Vec3 jpos = joints.row(jj);
            for (int i = 0; i < v_count; ++i) {
                if (mb.joint_of_vertex[static_cast<std::size_t>(i)] != jj) continue;
                // Keep only the ring centered on the joint (zero axial offset).
                const Vec3 d = mb.vertices[static_cast<std::size_t>(i)] - jpos;
                if (std::abs(d.dot(fingers[static_cast<std::size_t>(f)].axis)) < 1e-9) ring.push_back(i);
            }
            if (ring.empty()) throw ValidationError("toy hand construction: empty regressor ring");
            for (int i : ring) model.joint_regressor(jj, i) = 1.0 / static_cast<double>(ring.size());
        }
    }

    // Ten deterministic shape directions: global scale about the wrist plus
    // smooth sinusoidal fields.
    model.shape_basis.resize(10);
    model.shape_basis[0] = model.template_vertices;
    for (int b = 1; b < 10; ++b) {
        Eigen::MatrixX3d basis = Eigen::MatrixX3d::Zero(v_count, 3);
        const int axis = b % 3;
        const double freq = 20.0 + 3.0 * b;
        const double phase = 0.7 * b;
        for (int i = 0; i < v_count; ++i) {
            basis(i, axis) = 0.003 * std::sin(freq * model.template_vertices(i, 0) + phase);
        }
        model.shape_basis[static_cast<std::size_t>(b)] = basis;
    }

    model.validate();
    if (side == HandSide::Left) return mirror_hand_model(model);
    return model;
}

HandModel mirror_hand_model(const HandModel& model) {
    HandModel out = model;
    out.template_vertices.col(0) *= -1.0;
    for (auto& basis : out.shape_basis) basis.col(0) *= -1.0;
    for (auto& basis : out.pose_basis) basis.col(0) *= -1.0;
    for (auto& f : out.faces) std::swap(f[1], f[2]);  // keep outward winding
    out.side = model.side == HandSide::Right ? HandSide::Left : HandSide::Right;
    return out;
}

PosedHand pose_hand(const HandModel& model, const HandPose& pose) {
    model.validate();
    const int v_count = model.vertex_count();
    const int j_count = model.joint_count();
    if (pose.theta.size() != 3 * j_count) {
        throw ValidationError("theta must have length 3*J");
    }
    if (pose.beta.size() != model.shape_dim()) {
        throw ValidationError("beta must match the shape basis dimension");
    }
    if (!pose.theta.allFinite() || !pose.beta.allFinite() || !pose.root_translation.allFinite()) {
        throw ValidationError("pose parameters must be finite");
    }
    if (pose.theta.head<3>().norm() > std::numbers::pi + 1e-9) {
        throw ValidationError("global orientation magnitude exceeds pi");
    }

    Eigen::MatrixX3d shaped = model.template_vertices;
    for (int b = 0; b < model.shape_dim(); ++b) {
        shaped += pose.beta[b] * model.shape_basis[static_cast<std::size_t>(b)];
    }

    std::vector<Eigen::Matrix3d> local_rot(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) {
        local_rot[static_cast<std::size_t>(j)] = rodrigues(pose.theta.segment<3>(3 * j));
    }

    if (!model.pose_basis.empty()) {
        int p = 0;
        for (int j = 1; j < j_count; ++j) {
            const Eigen::Matrix3d offs = local_rot[static_cast<std::size_t>(j)] - Eigen::Matrix3d::Identity();
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c, ++p) {
                    shaped += offs(r, c) * model.pose_basis[static_cast<std::size_t>(p)];
                }
            }
        }
    }

    const Eigen::MatrixX3d rest_joints = model.joint_regressor * shaped;

    // Forward kinematics in dependency order: each joint rotates about its own
    // rest position within the parent frame.
    std::vector<Affine> global(static_cast<std::size_t>(j_count));
    std::vector<bool> done(static_cast<std::size_t>(j_count), false);
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(j_count));
    while (static_cast<int>(order.size()) < j_count) {
        for (int j = 0; j < j_count; ++j) {
            if (done[static_cast<std::size_t>(j)]) continue;
            const int parent = model.parents[static_cast<std::size_t>(j)];
            if (parent == -1 || done[static_cast<std::size_t>(parent)]) {
                order.push_back(j);
                done[static_cast<std::size_t>(j)] = true;
            }
        }
    }
    for (int j : order) {
        const int parent = model.parents[static_cast<std::size_t>(j)];
        const Eigen::Matrix3d& rot = local_rot[static_cast<std::size_t>(j)];
        Affine g;
        if (parent == -1) {
            g.r = rot;
            g.t = rest_joints.row(j);
        } else {
            const Affine& gp = global[static_cast<std::size_t>(parent)];
            const Vec3 offset = rest_joints.row(j) - rest_joints.row(parent);
            g.r = gp.r * rot;
            g.t = gp.r * offset + gp.t;
        }
        global[static_cast<std::size_t>(j)] = g;
    }

    PosedHand out;
    out.joints.resize(j_count, 3);
    for (int j = 0; j < j_count; ++j) {
        out.joints.row(j) = global[static_cast<std::size_t>(j)].t + pose.root_translation;
    }

    out.vertices.resize(v_count, 3);
    for (int i = 0; i < v_count; ++i) {
        const Vec3 v = shaped.row(i);
        Vec3 acc = Vec3::Zero();
        for (int j = 0; j < j_count; ++j) {
            const double w = model.skinning_weights(i, j);
            if (w == 0.0) continue;
            const Affine& g = global[static_cast<std::size_t>(j)];
            const Vec3 rest = rest_joints.row(j);
            acc += w * (g.r * (v - rest) + g.t);
        }
        out.vertices.row(i) = acc + pose.root_translation;
    }
    return out;
}

std::vector<HandPart> part_labels(const HandModel& model) {
    std::vector<HandPart> labels(static_cast<std::size_t>(model.vertex_count()));
    for (int i = 0; i < model.vertex_count(); ++i) {
        int best = 0;
        double best_w = model.skinning_weights(i, 0);
        for (int j = 1; j < model.joint_count(); ++j) {
            if (model.skinning_weights(i, j) > best_w) {
                best_w = model.skinning_weights(i, j);
                best = j;
            }
        }
        labels[static_cast<std::size_t>(i)] = model.part_of_joint[static_cast<std::size_t>(best)];
    }
    return labels;
}

std::array<int, 5> fingertip_vertices(const HandModel& model) {
    const std::vector<HandPart> labels = part_labels(model);
    int root = -1;
    for (int j = 0; j < model.joint_count(); ++j) {
        if (model.parents[static_cast<std::size_t>(j)] == -1) root = j;
    }
    const Vec3 root_pos = model.joint_regressor.row(root) * model.template_vertices;

    std::array<int, 5> tips{};
    const HandPart finger_parts[5] = {HandPart::Thumb, HandPart::Index, HandPart::Middle,
                                      HandPart::Ring, HandPart::Little};
    for (int f = 0; f < 5; ++f) {
        int best = -1;
        double best_d = -1.0;
        for (int i = 0; i < model.vertex_count(); ++i) {
            if (labels[static_cast<std::size_t>(i)] != finger_parts[f]) continue;
            const double d = (Vec3(model.template_vertices.row(i)) - root_pos).squaredNorm();
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best < 0) throw ValidationError(std::string("hand model has no vertices labelled ") +
                                            to_string(finger_parts[f]));
        tips[static_cast<std::size_t>(f)] = best;
    }
    return tips;
}

std::array<Keypoint2D, 21> project_joints(const Eigen::MatrixX3d& joints,
                                          const Eigen::MatrixX3d& fingertips,
                                          const Camera& camera) {
    if (joints.rows() != 16 || fingertips.rows() != 5) {
        throw ValidationError("expected 16 joints and 5 fingertips");
    }
    camera.validate();
    std::array<Keypoint2D, 21> out{};
    for (int i = 0; i < 21; ++i) {
        const Vec3 world = i < 16 ? Vec3(joints.row(i)) : Vec3(fingertips.row(i - 16));
        const Vec3 cam = camera.to_camera(world);
        if (cam.z() <= camera.z_near) {
            out[static_cast<std::size_t>(i)] = {0.0, 0.0, false};
            continue;
        }
        const Eigen::Vector2d uv = camera.project(cam);
        out[static_cast<std::size_t>(i)] = {uv.x(), uv.y(), true};
    }
    return out;
}

PosedHandGeometry posed_hand_geometry(const HandModel& model, const HandPose& pose) {
    if (model.faces.empty()) {
        throw ValidationError("hand model carries no triangles to render");
    }
    const PosedHand posed = pose_hand(model, pose);
    PosedHandGeometry geo;
    geo.mesh.vertices.reserve(static_cast<std::size_t>(posed.vertices.rows()));
    for (Eigen::Index i = 0; i < posed.vertices.rows(); ++i) {
        geo.mesh.vertices.push_back(posed.vertices.row(i));
    }
    geo.mesh.faces = model.faces;
    geo.labels = part_labels(model);
    return geo;
}

}  // namespace mlo
