#include "rdme/fem.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rdme {
namespace {

using Triplet = Eigen::Triplet<double>;

void element_stiffness_2d(const Eigen::MatrixXd& v, int a, int b, int c,
                          std::vector<Triplet>& out) {
    const Eigen::Vector2d p[3] = {v.row(a).head<2>(), v.row(b).head<2>(), v.row(c).head<2>()};
    const double area2 = (p[1] - p[0]).x() * (p[2] - p[0]).y() -
                         (p[2] - p[0]).x() * (p[1] - p[0]).y();   // CCW: positive
    Eigen::Vector2d g[3];
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d e = p[(i + 2) % 3] - p[(i + 1) % 3];
        g[i] = Eigen::Vector2d(-e.y(), e.x()) / area2;
    }
    const int ids[3] = {a, b, c};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            out.emplace_back(ids[i], ids[j], -0.5 * area2 * g[i].dot(g[j]));
}

}  // namespace

SparseMat assemble_stiffness(const Mesh& mesh) {
    const int K = mesh.num_vertices();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_elements()) * 9);
    for (int e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.dim == 1) {
            const int a = mesh.elements(e, 0), b = mesh.elements(e, 1);
            const double h = mesh.vertices(b, 0) - mesh.vertices(a, 0);
            trips.emplace_back(a, a, -1.0 / h);
            trips.emplace_back(b, b, -1.0 / h);
            trips.emplace_back(a, b, 1.0 / h);
            trips.emplace_back(b, a, 1.0 / h);
        } else {
            element_stiffness_2d(mesh.vertices, mesh.elements(e, 0), mesh.elements(e, 1),
                                 mesh.elements(e, 2), trips);
        }
    }
    SparseMat S(K, K);
    S.setFromTriplets(trips.begin(), trips.end());
    S.makeCompressed();
    return S;
}

Eigen::VectorXd assemble_lumped_mass(const Mesh& mesh) { return dual_areas(mesh).areas; }

SignReport sign_report(const SparseMat& S) {
    SignReport rep;
    double max_diag = 0.0;
    for (int k = 0; k < S.outerSize(); ++k)
        for (SparseMat::InnerIterator it(S, k); it; ++it)
            if (it.row() == it.col()) max_diag = std::max(max_diag, std::abs(it.value()));
    const double tol = 1e-12 * std::max(max_diag, 1.0);
    for (int k = 0; k < S.outerSize(); ++k)
        for (SparseMat::InnerIterator it(S, k); it; ++it) {
            if (it.row() >= it.col()) continue;   // count each edge once
            if (it.value() < -tol) {
                ++rep.negative_offdiagonals;
                rep.worst = std::min(rep.worst, it.value());
                rep.edges.push_back({static_cast<int>(it.row()), static_cast<int>(it.col())});
            }
        }
    return rep;
}

SparseMat clamp_negative_offdiagonals(const SparseMat& S, SignReport& report) {
    // Removing S_jk (e_j - e_k)(e_j - e_k)^T for each offending edge zeroes
    // the off-diagonal pair and shifts the (negative) mass onto both
    // diagonals: row sums and negative semi-definiteness survive.
    SparseMat out = S;
    report.clamped = 0;
    for (const auto& [j, k] : report.edges) {
        const double bad = out.coeff(j, k);
        if (bad >= 0.0) continue;
        out.coeffRef(j, k) = 0.0;
        out.coeffRef(k, j) = 0.0;
        out.coeffRef(j, j) += bad;
        out.coeffRef(k, k) += bad;
        ++report.clamped;
    }
    out.prune(0.0);
    out.makeCompressed();
    return out;
}

bool DiffusionOperator::is_fixed(int cell) const {
    for (int f : fixed_cells)
        if (f == cell) return true;
    return false;
}

DiffusionOperator build_operator(const Mesh& mesh, double gamma, BoundaryCondition bc,
                                 SignPolicy policy) {
    if (gamma <= 0.0) throw std::runtime_error("fem: gamma must be positive");
    DiffusionOperator op;
    op.gamma = gamma;
    op.bc = bc;
    op.S = assemble_stiffness(mesh);
    op.A = assemble_lumped_mass(mesh);
    op.sign = sign_report(op.S);
    if (policy == SignPolicy::Clamp && op.sign.negative_offdiagonals > 0)
        op.S = clamp_negative_offdiagonals(op.S, op.sign);

    const int K = op.size();
    op.D = op.S;
    for (int k = 0; k < op.D.outerSize(); ++k)
        for (SparseMat::InnerIterator it(op.D, k); it; ++it)
            it.valueRef() /= op.A(it.row());
    op.Q = SparseMat(gamma * SparseMat(op.D.transpose()));
    op.Q.makeCompressed();

    if (bc == BoundaryCondition::Dirichlet) op.fixed_cells = mesh.boundary_vertices();

    if (mesh.dim == 2) {
        op.h_min = quality_report(mesh).h_min;
    } else {
        double h = std::numeric_limits<double>::infinity();
        for (int e = 0; e < mesh.num_elements(); ++e)
            h = std::min(h, mesh.vertices(mesh.elements(e, 1), 0) -
                                mesh.vertices(mesh.elements(e, 0), 0));
        op.h_min = h;
    }
    return op;
}

void export_operator(const DiffusionOperator& op, const std::string& directory) {
    auto dump = [&](const SparseMat& m, const std::string& name) {
        std::ofstream out(directory + "/" + name + ".txt");
        if (!out) throw std::runtime_error("fem: cannot write " + directory + "/" + name + ".txt");
        out.precision(17);
        for (int k = 0; k < m.outerSize(); ++k)
            for (SparseMat::InnerIterator it(m, k); it; ++it)
                out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    };
    dump(op.S, "S");
    dump(op.D, "D");
    dump(op.Q, "Q");
    std::ofstream out(directory + "/A.txt");
    if (!out) throw std::runtime_error("fem: cannot write " + directory + "/A.txt");
    out.precision(17);
    for (int j = 0; j < op.A.size(); ++j) out << j << ' ' << j << ' ' << op.A(j) << '\n';
}

}  // namespace rdme
