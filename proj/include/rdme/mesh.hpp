#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rdme {

// Simplicial mesh: segments in 1D, triangles in 2D. Vertices double as the
// centers of the dual cells that hold copy numbers, so "cell j" and
// "vertex j" are used interchangeably throughout.
struct Mesh {
    int dim = 2;                       // 1 or 2
    Eigen::MatrixXd vertices;          // K x dim
    Eigen::MatrixXi elements;          // E x (dim+1), zero-based, CCW in 2D
    std::vector<char> on_boundary;     // K flags (structural + explicit markers)

    int num_vertices() const { return static_cast<int>(vertices.rows()); }
    int num_elements() const { return static_cast<int>(elements.rows()); }
    std::vector<int> boundary_vertices() const;
};

// Interior-edge angle data: alpha/beta are the angles opposite the edge in
// its two incident triangles; their sum exceeding pi makes the stiffness
// off-diagonal for that edge negative.
struct EdgeAngles {
    int v0 = 0, v1 = 0;
    double alpha = 0.0, beta = 0.0;
};

struct QualityReport {
    double h_min = 0.0;        // min vertex-to-opposing-edge distance
    double h_max = 0.0;        // max edge length
    double min_angle = 0.0;    // radians
    double max_angle = 0.0;
    double total_area = 0.0;
    int interior_edges = 0;
    std::vector<EdgeAngles> violations;   // edges with alpha + beta > pi
};

struct DualGeometry {
    Eigen::VectorXd areas;   // |C_j| per vertex (length in 1D)
    double total = 0.0;
};

// Text format ingestion (see README for the line format). Throws
// std::runtime_error with a line number on malformed input, out-of-range
// indices, degenerate elements, or a disconnected mesh.
Mesh load_mesh(const std::string& path);
Mesh parse_mesh(const std::string& text);
std::string serialize_mesh(const Mesh& mesh);

// Built-in generators.
Mesh build_1d_mesh(const std::vector<double>& node_positions);
Mesh build_structured_unit_square(int n, double origin_x = 0.0, double origin_y = 0.0);
Mesh build_crisscross_unit_square(int n, double origin_x = 0.0, double origin_y = 0.0);
// Concentric-ring disk: ring i holds ring_counts[i] vertices at radius
// (i+1)/rings * radius, plus a center vertex; rings are triangulated by a
// deterministic angular sweep.
Mesh build_disk_mesh(const std::vector<int>& ring_counts, double radius);
// Convenience: hexagonal-ring disk with 6*i vertices on ring i (near
// equilateral triangles), K = 1 + 3n(n+1).
Mesh build_hex_disk_mesh(int rings, double radius);

// Deterministically jitter interior vertices by at most rel_amplitude *
// (local shortest incident edge); used to fuzz operator identities over
// families of valid unstructured meshes.
Mesh perturb_interior_vertices(const Mesh& mesh, double rel_amplitude, std::uint64_t seed);

DualGeometry dual_areas(const Mesh& mesh);
QualityReport quality_report(const Mesh& mesh);

// Validation shared by the parser and the generators; throws on violation.
void validate_mesh(const Mesh& mesh);

}  // namespace rdme
