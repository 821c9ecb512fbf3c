#include "mlo/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mlo/rng.hpp"
#include "json.hpp"

namespace mlo {

namespace {

double parse_number(const std::string& token, int line_no) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                              ": bad number '" + token + "'");
    }
    if (pos != token.size()) {
        throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                              ": bad number '" + token + "'");
    }
    return value;
}

long parse_index(const std::string& token, int line_no) {
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(token, &pos);
    } catch (const std::exception&) {
        throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                              ": bad face index '" + token + "'");
    }
    if (pos != token.size()) {
        throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                              ": bad face index '" + token + "'");
    }
    return value;
}

}  // namespace

double TriMesh::face_area(int face) const {
    const auto& f = faces[static_cast<std::size_t>(face)];
    const Vec3 e1 = vertices[f[1]] - vertices[f[0]];
    const Vec3 e2 = vertices[f[2]] - vertices[f[0]];
    return 0.5 * e1.cross(e2).norm();
}

Vec3 TriMesh::face_normal(int face) const {
    const auto& f = faces[static_cast<std::size_t>(face)];
    const Vec3 e1 = vertices[f[1]] - vertices[f[0]];
    const Vec3 e2 = vertices[f[2]] - vertices[f[0]];
    const Vec3 n = e1.cross(e2);
    const double len = n.norm();
    if (len < 2.0 * kDegenerateFaceArea) return Vec3(0.0, 0.0, 1.0);
    return n / len;
}

void TriMesh::validate() const {
    const int vcount = static_cast<int>(vertices.size());
    for (const Vec3& v : vertices) {
        if (!v.allFinite()) throw ValidationError("mesh has a non-finite vertex coordinate");
    }
    for (const auto& f : faces) {
        for (int idx : f) {
            if (idx < 0 || idx >= vcount) {
                throw ValidationError("face index " + std::to_string(idx) +
                                      " out of range for " + std::to_string(vcount) + " vertices");
            }
        }
    }
    if (!vertex_colors.empty() && vertex_colors.size() != vertices.size()) {
        throw ValidationError("vertex color count does not match vertex count");
    }
    for (const Vec3& c : vertex_colors) {
        if (!c.allFinite() || c.minCoeff() < 0.0 || c.maxCoeff() > 1.0) {
            throw ValidationError("vertex color outside [0,1]");
        }
    }
    if (!vertex_normals.empty() && vertex_normals.size() != vertices.size()) {
        throw ValidationError("vertex normal count does not match vertex count");
    }
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform out;
    out.rotation = rotation.conjugate();
    out.translation = -(out.rotation * translation);
    return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
}

RigidTransform RigidTransform::from_quat_abcw(double a, double b, double c, double w,
                                              const Vec3& t) {
    RigidTransform out;
    out.rotation = Eigen::Quaterniond(w, a, b, c);  // Eigen ctor is (w, x, y, z)
    out.translation = t;
    return out;
}

void RigidTransform::validate() const {
    if (std::abs(rotation.norm() - 1.0) > 1e-6) {
        throw ValidationError("quaternion is not unit length");
    }
    if (!translation.allFinite()) {
        throw ValidationError("translation is not finite");
    }
}

void PointCloud::validate() const {
    if (points.empty()) throw ValidationError("point cloud is empty");
    if (source_face.size() != points.size() || barycentric.size() != points.size()) {
        throw ValidationError("point cloud provenance arrays out of sync");
    }
    for (const Vec3& b : barycentric) {
        if (b.minCoeff() < 0.0 || std::abs(b.sum() - 1.0) > 1e-9) {
            throw ValidationError("barycentric coordinates must be non-negative and sum to 1");
        }
    }
}

TriMesh load_mesh(std::istream& in) {
    TriMesh mesh;
    bool any_color = false;
    bool any_plain_vertex = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;  // blank line
        if (tag == "#" || tag[0] == '#' || tag == "vn" || tag == "vt" || tag == "usemtl") {
            continue;
        }
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tag == "v") {
            if (tokens.size() != 3 && tokens.size() != 6) {
                throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                                      ": vertex needs 3 or 6 numbers");
            }
            Vec3 p(parse_number(tokens[0], line_no), parse_number(tokens[1], line_no),
                   parse_number(tokens[2], line_no));
            if (!p.allFinite()) {
                throw ValidationError("non-finite vertex coordinate at line " +
                                      std::to_string(line_no));
            }
            mesh.vertices.push_back(p);
            if (tokens.size() == 6) {
                Vec3 c(parse_number(tokens[3], line_no), parse_number(tokens[4], line_no),
                       parse_number(tokens[5], line_no));
                if (!c.allFinite()) {
                    throw ValidationError("non-finite vertex color at line " +
                                          std::to_string(line_no));
                }
                mesh.vertex_colors.push_back(c);
                any_color = true;
            } else {
                any_plain_vertex = true;
            }
        } else if (tag == "f") {
            if (tokens.size() != 3) {
                throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                                      ": only triangle faces are supported");
            }
            std::array<int, 3> f{};
            for (int i = 0; i < 3; ++i) {
                const long idx = parse_index(tokens[static_cast<std::size_t>(i)], line_no);
                if (idx < 1) {
                    throw ValidationError("face index must be positive (line " +
                                          std::to_string(line_no) + ")");
                }
                f[static_cast<std::size_t>(i)] = static_cast<int>(idx - 1);
            }
            mesh.faces.push_back(f);
        } else {
            throw ValidationError("mesh parse failure at line " + std::to_string(line_no) +
                                  ": unsupported directive '" + tag + "'");
        }
    }
    if (any_color && any_plain_vertex) {
        throw ValidationError("mesh mixes colored and uncolored vertices");
    }
    mesh.validate();
    return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path.string());
    return load_mesh(in);
}

void save_mesh_obj(const TriMesh& mesh, std::ostream& out) {
    out.precision(17);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
        if (mesh.has_colors()) {
            const Vec3& c = mesh.vertex_colors[i];
            out << ' ' << c.x() << ' ' << c.y() << ' ' << c.z();
        }
        out << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

std::vector<std::vector<Vec3>> load_marker_tracks(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("marker tracks parse failure: ") + e.what());
    }
    if (!doc.contains("markers") || !doc["markers"].is_array()) {
        throw ValidationError("marker tracks document needs a 'markers' array");
    }
    std::vector<std::vector<Vec3>> tracks;
    std::size_t marker_count = 0;
    for (const auto& frame : doc["markers"]) {
        std::vector<Vec3> pts;
        for (const auto& p : frame) {
            if (!p.is_array() || p.size() != 3) {
                throw ValidationError("marker entry must be [x, y, z]");
            }
            Vec3 v(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
            if (!v.allFinite()) throw ValidationError("non-finite marker coordinate");
            pts.push_back(v);
        }
        if (tracks.empty()) {
            marker_count = pts.size();
        } else if (pts.size() != marker_count) {
            throw ValidationError("marker count varies between frames");
        }
        tracks.push_back(std::move(pts));
    }
    if (tracks.empty()) throw ValidationError("marker tracks document has no frames");
    return tracks;
}

PointCloud sample_surface(const TriMesh& mesh, int count, std::uint64_t seed) {
    mesh.validate();
    if (count < 1) throw ValidationError("sample count must be >= 1");

    std::vector<double> cdf;
    std::vector<int> face_of_bin;
    cdf.reserve(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const double a = mesh.face_area(static_cast<int>(f));
        if (a < kDegenerateFaceArea) continue;
        total += a;
        cdf.push_back(total);
        face_of_bin.push_back(static_cast<int>(f));
    }
    if (cdf.empty()) throw ValidationError("mesh has no non-degenerate faces to sample");

    SeededRng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(count));
    cloud.source_face.reserve(static_cast<std::size_t>(count));
    cloud.barycentric.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform() * total;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t bin = std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
        const int face = face_of_bin[bin];
        const auto& fv = mesh.faces[static_cast<std::size_t>(face)];

        // Uniform barycentric sampling via the square-root warp.
        const double s = std::sqrt(rng.uniform());
        const double t = rng.uniform();
        const Vec3 bary(1.0 - s, s * (1.0 - t), s * t);
        cloud.points.push_back(bary[0] * mesh.vertices[fv[0]] + bary[1] * mesh.vertices[fv[1]] +
                               bary[2] * mesh.vertices[fv[2]]);
        cloud.source_face.push_back(face);
        cloud.barycentric.push_back(bary);
    }
    cloud.validate();
    return cloud;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
    mesh.validate();
    std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (mesh.face_degenerate(static_cast<int>(f))) continue;
        const auto& fv = mesh.faces[f];
        const Vec3 e1 = mesh.vertices[fv[1]] - mesh.vertices[fv[0]];
        const Vec3 e2 = mesh.vertices[fv[2]] - mesh.vertices[fv[0]];
        const Vec3 weighted = 0.5 * e1.cross(e2);  // area-weighted face normal
        normals[fv[0]] += weighted;
        normals[fv[1]] += weighted;
        normals[fv[2]] += weighted;
    }
    for (Vec3& n : normals) {
        const double len = n.norm();
        if (len < 1e-20) {
            n = Vec3(0.0, 0.0, 1.0);
        } else {
            n /= len;
        }
    }
    return normals;
}

RigidTransform kabsch_solve(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size()) throw ValidationError("kabsch: point counts differ");
    const std::size_t k = src.size();
    if (k < 3) throw ValidationError("kabsch: needs at least 3 points");

    Vec3 src_mean = Vec3::Zero();
    Vec3 dst_mean = Vec3::Zero();
    for (std::size_t i = 0; i < k; ++i) {
        src_mean += src[i];
        dst_mean += dst[i];
    }
    src_mean /= static_cast<double>(k);
    dst_mean /= static_cast<double>(k);

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    double src_scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const Vec3 s = src[i] - src_mean;
        const Vec3 d = dst[i] - dst_mean;
        cov += d * s.transpose();
        src_scale += s.squaredNorm();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();

    // Rank of the centered source configuration: collinear markers leave the
    // rotation about the line unconstrained.
    Eigen::Matrix3d src_cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < k; ++i) {
        const Vec3 s = src[i] - src_mean;
        src_cov += s * s.transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> src_svd(src_cov);
    const Eigen::Vector3d ssv = src_svd.singularValues();
    if (ssv(1) <= 1e-12 * std::max(ssv(0), 1e-30)) {
        throw ValidationError("kabsch: degenerate (collinear) source configuration");
    }
    (void)sv;

    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((u * v.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d r = u * d * v.transpose();

    RigidTransform out;
    out.rotation = Eigen::Quaterniond(r).normalized();
    out.translation = dst_mean - out.rotation * src_mean;
    return out;
}

namespace {

// Ericson-style closest point on a triangle.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return a + ab * v + ac * w;
}

double tracking_objective(const std::vector<std::vector<Vec3>>& tracks,
                          const std::vector<Vec3>& offsets,
                          std::vector<RigidTransform>& poses) {
    const std::size_t frames = tracks.size();
    poses.resize(frames);
    double objective = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
        poses[t] = kabsch_solve(offsets, tracks[t]);
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            objective += (poses[t].apply(offsets[i]) - tracks[t][i]).squaredNorm();
        }
    }
    return objective;
}

}  // namespace

Vec3 closest_surface_point(const TriMesh& mesh, const Vec3& query) {
    double best_dist = std::numeric_limits<double>::infinity();
    Vec3 best = query;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (mesh.face_degenerate(static_cast<int>(f))) continue;
        const auto& fv = mesh.faces[f];
        const Vec3 cand = closest_point_on_triangle(query, mesh.vertices[fv[0]],
                                                    mesh.vertices[fv[1]], mesh.vertices[fv[2]]);
        const double d = (cand - query).squaredNorm();
        if (d < best_dist) {
            best_dist = d;
            best = cand;
        }
    }
    if (!std::isfinite(best_dist)) throw ValidationError("mesh has no usable surface");
    return best;
}

MarkerRefinement refine_marker_correspondence(const TriMesh& mesh,
                                              const std::vector<std::vector<Vec3>>& marker_tracks,
                                              std::vector<Vec3> init_offsets,
                                              int max_iter) {
    if (marker_tracks.empty()) throw ValidationError("marker refinement needs T >= 1 frames");
    const std::size_t k = init_offsets.size();
    if (k < 3) throw ValidationError("marker refinement needs k >= 3 markers");
    for (const auto& frame : marker_tracks) {
        if (frame.size() != k) throw ValidationError("marker count varies between frames");
    }

    MarkerRefinement result;
    result.offsets = std::move(init_offsets);
    if (max_iter == 0) {
        result.objective = tracking_objective(marker_tracks, result.offsets, result.poses);
        result.objective_history.push_back(result.objective);
        return result;
    }

    // Offsets live on the surface; off-surface initial guesses are projected
    // before the first objective evaluation.
    for (Vec3& o : result.offsets) o = closest_surface_point(mesh, o);
    double objective = tracking_objective(marker_tracks, result.offsets, result.poses);
    result.objective_history.push_back(objective);

    for (int iter = 0; iter < max_iter; ++iter) {
        // Pull every observed marker back into the object frame and average.
        // Rotations preserve distances, so per marker the tracking cost given
        // the poses equals T * |o - mean_pullback|^2 plus a constant; the
        // exact constrained block minimum is the surface point nearest that
        // mean, which keeps the objective non-increasing without line search.
        std::vector<Vec3> pullback(k, Vec3::Zero());
        for (std::size_t t = 0; t < marker_tracks.size(); ++t) {
            const RigidTransform inv = result.poses[t].inverse();
            for (std::size_t i = 0; i < k; ++i) {
                pullback[i] += inv.apply(marker_tracks[t][i]);
            }
        }
        for (Vec3& p : pullback) p /= static_cast<double>(marker_tracks.size());

        for (std::size_t i = 0; i < k; ++i) {
            result.offsets[i] = closest_surface_point(mesh, pullback[i]);
        }
        const double next = tracking_objective(marker_tracks, result.offsets, result.poses);
        const double improvement = objective - next;
        objective = next;
        result.objective_history.push_back(objective);
        if (improvement < 1e-9 * std::max(objective, 1e-30)) break;
    }
    result.objective = objective;
    return result;
}

Aabb bounding_box(const TriMesh& mesh) {
    if (mesh.vertices.empty()) throw ValidationError("bounding box of an empty mesh");
    Aabb box;
    box.min = mesh.vertices[0];
    box.max = mesh.vertices[0];
    for (const Vec3& v : mesh.vertices) {
        box.min = box.min.cwiseMin(v);
        box.max = box.max.cwiseMax(v);
    }
    return box;
}

TriMesh transformed(const TriMesh& mesh, const RigidTransform& pose) {
    TriMesh out = mesh;
    for (Vec3& v : out.vertices) v = pose.apply(v);
    if (out.has_normals()) {
        for (Vec3& n : out.vertex_normals) n = pose.rotation * n;
    }
    return out;
}

}  // namespace mlo
