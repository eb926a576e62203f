#include "rdme/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rdme/rng.hpp"

namespace rdme {
namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

double tri_area2(const Eigen::MatrixXd& v, int a, int b, int c) {
    // twice the signed area
    return (v(b, 0) - v(a, 0)) * (v(c, 1) - v(a, 1)) -
           (v(c, 0) - v(a, 0)) * (v(b, 1) - v(a, 1));
}

struct EdgeKey {
    int a, b;
    bool operator<(const EdgeKey& o) const { return a != o.a ? a < o.a : b < o.b; }
};
EdgeKey edge_key(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

// per edge: incident elements and the vertex opposite the edge in each
std::map<EdgeKey, std::vector<std::pair<int, int>>> edge_incidence(const Mesh& mesh) {
    std::map<EdgeKey, std::vector<std::pair<int, int>>> edges;
    for (int e = 0; e < mesh.num_elements(); ++e) {
        const int a = mesh.elements(e, 0), b = mesh.elements(e, 1), c = mesh.elements(e, 2);
        edges[edge_key(a, b)].push_back({e, c});
        edges[edge_key(b, c)].push_back({e, a});
        edges[edge_key(c, a)].push_back({e, b});
    }
    return edges;
}

double vertex_angle(const Eigen::MatrixXd& v, int at, int p, int q) {
    const Eigen::Vector2d u1 = (v.row(p) - v.row(at)).head<2>();
    const Eigen::Vector2d u2 = (v.row(q) - v.row(at)).head<2>();
    const double cosv = u1.dot(u2) / (u1.norm() * u2.norm());
    return std::acos(std::clamp(cosv, -1.0, 1.0));
}

}  // namespace

std::vector<int> Mesh::boundary_vertices() const {
    std::vector<int> out;
    for (int i = 0; i < num_vertices(); ++i)
        if (on_boundary[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

void validate_mesh(const Mesh& mesh) {
    const int K = mesh.num_vertices();
    const int E = mesh.num_elements();
    if (K == 0 || E == 0) fail("mesh: empty vertex or element list");
    if (mesh.dim != 1 && mesh.dim != 2) fail("mesh: dim must be 1 or 2");
    if (mesh.elements.cols() != mesh.dim + 1) fail("mesh: element arity does not match dim");
    for (int e = 0; e < E; ++e)
        for (int j = 0; j < mesh.elements.cols(); ++j) {
            const int v = mesh.elements(e, j);
            if (v < 0 || v >= K)
                fail("mesh: element " + std::to_string(e) + " references vertex " +
                     std::to_string(v) + " outside [0," + std::to_string(K) + ")");
        }

    double h_max = 0.0;
    for (int e = 0; e < E; ++e)
        for (int i = 0; i < mesh.elements.cols(); ++i)
            for (int j = i + 1; j < mesh.elements.cols(); ++j) {
                const double h =
                    (mesh.vertices.row(mesh.elements(e, i)) - mesh.vertices.row(mesh.elements(e, j)))
                        .norm();
                h_max = std::max(h_max, h);
            }

    for (int e = 0; e < E; ++e) {
        double measure;
        if (mesh.dim == 1) {
            measure = mesh.vertices(mesh.elements(e, 1), 0) - mesh.vertices(mesh.elements(e, 0), 0);
            if (measure <= 0.0) fail("mesh: 1d element " + std::to_string(e) + " has nonpositive length");
        } else {
            measure = 0.5 * std::abs(tri_area2(mesh.vertices, mesh.elements(e, 0),
                                               mesh.elements(e, 1), mesh.elements(e, 2)));
        }
        if (measure < 1e-14 * h_max * h_max)
            fail("mesh: element " + std::to_string(e) + " is degenerate");
    }

    // connectivity over shared vertices
    std::vector<int> parent(static_cast<std::size_t>(K));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    for (int e = 0; e < E; ++e)
        for (int j = 1; j < mesh.elements.cols(); ++j)
            parent[static_cast<std::size_t>(find(mesh.elements(e, j)))] = find(mesh.elements(e, 0));
    const int root = find(0);
    for (int i = 1; i < K; ++i)
        if (find(i) != root) fail("mesh: vertex " + std::to_string(i) + " is disconnected");
}

namespace {

void normalize_and_flag(Mesh& mesh, const std::vector<int>& explicit_boundary) {
    // CCW orientation in 2D
    if (mesh.dim == 2) {
        for (int e = 0; e < mesh.num_elements(); ++e)
            if (tri_area2(mesh.vertices, mesh.elements(e, 0), mesh.elements(e, 1),
                          mesh.elements(e, 2)) < 0.0)
                std::swap(mesh.elements(e, 1), mesh.elements(e, 2));
    }
    validate_mesh(mesh);

    // structural boundary: edge (2D) or vertex (1D) incident to one element
    mesh.on_boundary.assign(static_cast<std::size_t>(mesh.num_vertices()), 0);
    if (mesh.dim == 2) {
        std::map<EdgeKey, int> count;
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const int a = mesh.elements(e, 0), b = mesh.elements(e, 1), c = mesh.elements(e, 2);
            ++count[edge_key(a, b)];
            ++count[edge_key(b, c)];
            ++count[edge_key(c, a)];
        }
        for (const auto& [key, n] : count) {
            if (n == 1) {
                mesh.on_boundary[static_cast<std::size_t>(key.a)] = 1;
                mesh.on_boundary[static_cast<std::size_t>(key.b)] = 1;
            } else if (n > 2) {
                fail("mesh: edge shared by more than two triangles");
            }
        }
    } else {
        std::vector<int> incident(static_cast<std::size_t>(mesh.num_vertices()), 0);
        for (int e = 0; e < mesh.num_elements(); ++e) {
            ++incident[static_cast<std::size_t>(mesh.elements(e, 0))];
            ++incident[static_cast<std::size_t>(mesh.elements(e, 1))];
        }
        for (int i = 0; i < mesh.num_vertices(); ++i)
            if (incident[static_cast<std::size_t>(i)] == 1)
                mesh.on_boundary[static_cast<std::size_t>(i)] = 1;
    }
    for (int i : explicit_boundary) {
        if (i < 0 || i >= mesh.num_vertices())
            fail("mesh: boundary marker references vertex " + std::to_string(i));
        mesh.on_boundary[static_cast<std::size_t>(i)] = 1;
    }
}

}  // namespace

Mesh parse_mesh(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto next_data_line = [&](std::string& out) {
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream probe(line);
            std::string tok;
            if (probe >> tok) {
                out = line;
                return true;
            }
        }
        return false;
    };
    auto parse_fail = [&](const std::string& what) {
        fail("mesh parse error at line " + std::to_string(lineno) + ": " + what);
    };

    std::string data;
    if (!next_data_line(data)) fail("mesh parse error: empty input");
    Mesh mesh;
    int K = 0, E = 0;
    {
        std::istringstream h(data);
        if (!(h >> mesh.dim >> K >> E)) parse_fail("expected header 'dim K E'");
        if (mesh.dim != 1 && mesh.dim != 2) parse_fail("dim must be 1 or 2");
        if (K <= 0 || E <= 0) parse_fail("vertex/element counts must be positive");
    }
    mesh.vertices.resize(K, mesh.dim);
    for (int i = 0; i < K; ++i) {
        if (!next_data_line(data)) parse_fail("unexpected end of input in vertex block");
        std::istringstream v(data);
        for (int d = 0; d < mesh.dim; ++d)
            if (!(v >> mesh.vertices(i, d))) parse_fail("bad vertex coordinates");
        std::string extra;
        if (v >> extra) parse_fail("trailing tokens after vertex coordinates");
    }
    mesh.elements.resize(E, mesh.dim + 1);
    for (int e = 0; e < E; ++e) {
        if (!next_data_line(data)) parse_fail("unexpected end of input in element block");
        std::istringstream t(data);
        for (int j = 0; j < mesh.dim + 1; ++j)
            if (!(t >> mesh.elements(e, j))) parse_fail("bad element indices");
        std::string extra;
        if (t >> extra) parse_fail("trailing tokens after element indices");
    }
    std::vector<int> explicit_boundary;
    while (next_data_line(data)) {
        std::istringstream b(data);
        std::string kw;
        int idx;
        if (!(b >> kw >> idx) || kw != "boundary") parse_fail("expected 'boundary <vertex>'");
        explicit_boundary.push_back(idx);
    }
    normalize_and_flag(mesh, explicit_boundary);
    return mesh;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("mesh: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_mesh(buf.str());
}

std::string serialize_mesh(const Mesh& mesh) {
    std::ostringstream out;
    out.precision(17);
    out << mesh.dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        for (int d = 0; d < mesh.dim; ++d) out << (d ? " " : "") << mesh.vertices(i, d);
        out << '\n';
    }
    for (int e = 0; e < mesh.num_elements(); ++e) {
        for (int j = 0; j < mesh.dim + 1; ++j) out << (j ? " " : "") << mesh.elements(e, j);
        out << '\n';
    }
    for (int i = 0; i < mesh.num_vertices(); ++i)
        if (mesh.on_boundary[static_cast<std::size_t>(i)]) out << "boundary " << i << '\n';
    return out.str();
}

Mesh build_1d_mesh(const std::vector<double>& node_positions) {
    const int K = static_cast<int>(node_positions.size());
    if (K < 2) fail("mesh: 1d mesh needs at least two nodes");
    for (int i = 1; i < K; ++i)
        if (!(node_positions[static_cast<std::size_t>(i)] >
              node_positions[static_cast<std::size_t>(i - 1)]))
            fail("mesh: 1d node positions must be strictly ascending");
    Mesh mesh;
    mesh.dim = 1;
    mesh.vertices.resize(K, 1);
    for (int i = 0; i < K; ++i) mesh.vertices(i, 0) = node_positions[static_cast<std::size_t>(i)];
    mesh.elements.resize(K - 1, 2);
    for (int e = 0; e + 1 < K; ++e) {
        mesh.elements(e, 0) = e;
        mesh.elements(e, 1) = e + 1;
    }
    normalize_and_flag(mesh, {});
    return mesh;
}

Mesh build_structured_unit_square(int n, double origin_x, double origin_y) {
    if (n < 1) fail("mesh: grid size must be >= 1");
    Mesh mesh;
    mesh.dim = 2;
    const int side = n + 1;
    mesh.vertices.resize(side * side, 2);
    auto id = [side](int i, int j) { return j * side + i; };
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) {
            mesh.vertices(id(i, j), 0) = origin_x + static_cast<double>(i) / n;
            mesh.vertices(id(i, j), 1) = origin_y + static_cast<double>(j) / n;
        }
    mesh.elements.resize(2 * n * n, 3);
    int e = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            mesh.elements.row(e++) << id(i, j), id(i + 1, j), id(i + 1, j + 1);
            mesh.elements.row(e++) << id(i, j), id(i + 1, j + 1), id(i, j + 1);
        }
    normalize_and_flag(mesh, {});
    return mesh;
}

Mesh build_crisscross_unit_square(int n, double origin_x, double origin_y) {
    if (n < 1) fail("mesh: grid size must be >= 1");
    Mesh mesh;
    mesh.dim = 2;
    const int side = n + 1;
    mesh.vertices.resize(side * side + n * n, 2);
    auto id = [side](int i, int j) { return j * side + i; };
    auto cid = [side, n](int i, int j) { return side * side + j * n + i; };
    for (int j = 0; j < side; ++j)
        for (int i = 0; i < side; ++i) {
            mesh.vertices(id(i, j), 0) = origin_x + static_cast<double>(i) / n;
            mesh.vertices(id(i, j), 1) = origin_y + static_cast<double>(j) / n;
        }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            mesh.vertices(cid(i, j), 0) = origin_x + (i + 0.5) / n;
            mesh.vertices(cid(i, j), 1) = origin_y + (j + 0.5) / n;
        }
    mesh.elements.resize(4 * n * n, 3);
    int e = 0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int c = cid(i, j);
            mesh.elements.row(e++) << id(i, j), id(i + 1, j), c;
            mesh.elements.row(e++) << id(i + 1, j), id(i + 1, j + 1), c;
            mesh.elements.row(e++) << id(i + 1, j + 1), id(i, j + 1), c;
            mesh.elements.row(e++) << id(i, j + 1), id(i, j), c;
        }
    normalize_and_flag(mesh, {});
    return mesh;
}

namespace {

// Triangulate the annulus between two angle-sorted rings by always advancing
// the side whose next vertex comes first in angle; deterministic and valid
// for modest count ratios.
void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_angles,
                  const std::vector<int>& outer, const std::vector<double>& outer_angles,
                  std::vector<std::array<int, 3>>& tris) {
    const std::size_t ni = inner.size(), no = outer.size();
    std::size_t i = 0, j = 0;
    auto angle_at = [](const std::vector<double>& a, std::size_t k) {
        return a[k % a.size()] + 2.0 * M_PI * static_cast<double>(k / a.size());
    };
    while (i < ni || j < no) {
        const bool can_i = i < ni;
        const bool can_j = j < no;
        bool advance_inner;
        if (can_i && can_j)
            advance_inner = angle_at(inner_angles, i + 1) <= angle_at(outer_angles, j + 1);
        else
            advance_inner = can_i;
        if (advance_inner) {
            tris.push_back({inner[i % ni], outer[j % no], inner[(i + 1) % ni]});
            ++i;
        } else {
            tris.push_back({inner[i % ni], outer[j % no], outer[(j + 1) % no]});
            ++j;
        }
    }
}

Mesh disk_from_rings(const std::vector<int>& ring_counts, const std::vector<double>& radii,
                     const std::vector<double>& phases) {
    const int rings = static_cast<int>(ring_counts.size());
    int K = 1;
    for (int c : ring_counts) {
        if (c < 3) fail("mesh: disk rings need at least 3 vertices");
        K += c;
    }
    Mesh mesh;
    mesh.dim = 2;
    mesh.vertices.resize(K, 2);
    mesh.vertices.row(0).setZero();
    std::vector<std::vector<int>> ring_ids(static_cast<std::size_t>(rings));
    std::vector<std::vector<double>> ring_angles(static_cast<std::size_t>(rings));
    int next = 1;
    for (int r = 0; r < rings; ++r) {
        const int c = ring_counts[static_cast<std::size_t>(r)];
        for (int k = 0; k < c; ++k) {
            const double th = phases[static_cast<std::size_t>(r)] + 2.0 * M_PI * k / c;
            mesh.vertices(next, 0) = radii[static_cast<std::size_t>(r)] * std::cos(th);
            mesh.vertices(next, 1) = radii[static_cast<std::size_t>(r)] * std::sin(th);
            ring_ids[static_cast<std::size_t>(r)].push_back(next);
            ring_angles[static_cast<std::size_t>(r)].push_back(th);
            ++next;
        }
    }
    std::vector<std::array<int, 3>> tris;
    const auto& r0 = ring_ids[0];
    for (std::size_t k = 0; k < r0.size(); ++k)
        tris.push_back({0, r0[k], r0[(k + 1) % r0.size()]});
    for (int r = 0; r + 1 < rings; ++r)
        stitch_rings(ring_ids[static_cast<std::size_t>(r)], ring_angles[static_cast<std::size_t>(r)],
                     ring_ids[static_cast<std::size_t>(r + 1)],
                     ring_angles[static_cast<std::size_t>(r + 1)], tris);
    mesh.elements.resize(static_cast<int>(tris.size()), 3);
    for (std::size_t t = 0; t < tris.size(); ++t)
        mesh.elements.row(static_cast<int>(t)) << tris[t][0], tris[t][1], tris[t][2];
    normalize_and_flag(mesh, {});
    return mesh;
}

}  // namespace

Mesh build_disk_mesh(const std::vector<int>& ring_counts, double radius) {
    if (ring_counts.empty()) fail("mesh: disk needs at least one ring");
    const int rings = static_cast<int>(ring_counts.size());
    std::vector<double> radii, phases;
    for (int r = 0; r < rings; ++r) {
        radii.push_back(radius * (r + 1) / rings);
        // stagger successive rings so triangles alternate instead of aligning
        phases.push_back(0.5 * M_PI * r / rings);
    }
    return disk_from_rings(ring_counts, radii, phases);
}

Mesh build_hex_disk_mesh(int rings, double radius) {
    if (rings < 1) fail("mesh: hex disk needs at least one ring");
    std::vector<int> counts;
    std::vector<double> radii, phases;
    for (int r = 1; r <= rings; ++r) {
        counts.push_back(6 * r);
        radii.push_back(radius * r / rings);
        phases.push_back(r % 2 ? 0.0 : M_PI / (6.0 * r));
    }
    return disk_from_rings(counts, radii, phases);
}

Mesh perturb_interior_vertices(const Mesh& mesh, double rel_amplitude, std::uint64_t seed) {
    Mesh out = mesh;
    Rng rng(seed);
    std::vector<double> min_edge(static_cast<std::size_t>(mesh.num_vertices()),
                                 std::numeric_limits<double>::infinity());
    for (int e = 0; e < mesh.num_elements(); ++e)
        for (int i = 0; i < mesh.elements.cols(); ++i)
            for (int j = 0; j < mesh.elements.cols(); ++j) {
                if (i == j) continue;
                const int a = mesh.elements(e, i), b = mesh.elements(e, j);
                const double h = (mesh.vertices.row(a) - mesh.vertices.row(b)).norm();
                min_edge[static_cast<std::size_t>(a)] = std::min(min_edge[static_cast<std::size_t>(a)], h);
            }
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        if (mesh.on_boundary[static_cast<std::size_t>(i)]) continue;
        for (int d = 0; d < mesh.dim; ++d)
            out.vertices(i, d) +=
                rel_amplitude * min_edge[static_cast<std::size_t>(i)] * (2.0 * rng.uniform() - 1.0);
    }
    std::vector<int> markers;
    for (int i = 0; i < mesh.num_vertices(); ++i)
        if (mesh.on_boundary[static_cast<std::size_t>(i)]) markers.push_back(i);
    normalize_and_flag(out, markers);
    return out;
}

DualGeometry dual_areas(const Mesh& mesh) {
    DualGeometry dual;
    dual.areas = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.dim == 1) {
            const double h =
                mesh.vertices(mesh.elements(e, 1), 0) - mesh.vertices(mesh.elements(e, 0), 0);
            dual.areas(mesh.elements(e, 0)) += 0.5 * h;
            dual.areas(mesh.elements(e, 1)) += 0.5 * h;
        } else {
            // the max-barycentric-coordinate region of each vertex covers
            // exactly a third of the triangle
            const double area = 0.5 * std::abs(tri_area2(mesh.vertices, mesh.elements(e, 0),
                                                         mesh.elements(e, 1), mesh.elements(e, 2)));
            for (int j = 0; j < 3; ++j) dual.areas(mesh.elements(e, j)) += area / 3.0;
        }
    }
    dual.total = dual.areas.sum();
    return dual;
}

QualityReport quality_report(const Mesh& mesh) {
    if (mesh.dim != 2) fail("mesh: quality report requires a 2d mesh");
    QualityReport rep;
    rep.min_angle = std::numeric_limits<double>::infinity();
    rep.h_min = std::numeric_limits<double>::infinity();

    for (int e = 0; e < mesh.num_elements(); ++e) {
        const int a = mesh.elements(e, 0), b = mesh.elements(e, 1), c = mesh.elements(e, 2);
        const double area = 0.5 * std::abs(tri_area2(mesh.vertices, a, b, c));
        rep.total_area += area;
        const int vs[3] = {a, b, c};
        for (int j = 0; j < 3; ++j) {
            const double ang = vertex_angle(mesh.vertices, vs[j], vs[(j + 1) % 3], vs[(j + 2) % 3]);
            rep.min_angle = std::min(rep.min_angle, ang);
            rep.max_angle = std::max(rep.max_angle, ang);
            const double opposite =
                (mesh.vertices.row(vs[(j + 1) % 3]) - mesh.vertices.row(vs[(j + 2) % 3])).norm();
            rep.h_max = std::max(rep.h_max, opposite);
            rep.h_min = std::min(rep.h_min, 2.0 * area / opposite);   // altitude from vs[j]
        }
    }

    for (const auto& [key, inc] : edge_incidence(mesh)) {
        if (inc.size() != 2) continue;
        ++rep.interior_edges;
        EdgeAngles ea;
        ea.v0 = key.a;
        ea.v1 = key.b;
        ea.alpha = vertex_angle(mesh.vertices, inc[0].second, key.a, key.b);
        ea.beta = vertex_angle(mesh.vertices, inc[1].second, key.a, key.b);
        // small slack keeps exact-threshold pairs (two right angles, as on
        // tensor grids and hex lattices) from flickering on rounding noise
        if (ea.alpha + ea.beta > M_PI + 1e-9) rep.violations.push_back(ea);
    }
    return rep;
}

}  // namespace rdme
