#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "rdme/mesh.hpp"

namespace rdme {

using SparseMat = Eigen::SparseMatrix<double>;

enum class BoundaryCondition { Reflecting, Dirichlet };

enum class SignPolicy { Keep, Clamp };

struct SignReport {
    int negative_offdiagonals = 0;     // entries S_jk < 0, j != k (counted once per edge)
    double worst = 0.0;                // most negative off-diagonal value
    int clamped = 0;                   // edges zeroed under SignPolicy::Clamp
    std::vector<std::pair<int, int>> edges;   // offending vertex pairs
};

// Jump-rate operators built from the P1 stiffness/lumped-mass pair.
//
// Sign conventions: S is assembled negative semi-definite (row sums zero,
// off-diagonals >= 0 exactly when the mesh satisfies the edge angle
// condition). D = A^{-1} S has row sums zero and nonnegative off-diagonals
// on a good mesh; gamma * D_jk is the per-molecule jump rate from cell j to
// cell k, and Q = gamma * S A^{-1} = gamma * D^T pushes concentration-scale
// states forward: xbar' = Q xbar (columns of Q sum to zero, so e1^T x is
// conserved).
struct DiffusionOperator {
    SparseMat S;                 // stiffness, negative semi-definite
    Eigen::VectorXd A;           // lumped mass = dual areas (diagonal)
    SparseMat D;                 // A^{-1} S (per-molecule jump rates / gamma)
    SparseMat Q;                 // gamma * S * A^{-1}
    double gamma = 0.0;
    BoundaryCondition bc = BoundaryCondition::Reflecting;
    std::vector<int> fixed_cells;   // Dirichlet set; empty when reflecting
    double h_min = 0.0;             // carried from the mesh for step bounds
    SignReport sign;

    int size() const { return static_cast<int>(A.size()); }
    bool is_fixed(int cell) const;
};

SparseMat assemble_stiffness(const Mesh& mesh);
Eigen::VectorXd assemble_lumped_mass(const Mesh& mesh);

SignReport sign_report(const SparseMat& S);

DiffusionOperator build_operator(const Mesh& mesh, double gamma,
                                 BoundaryCondition bc = BoundaryCondition::Reflecting,
                                 SignPolicy policy = SignPolicy::Keep);

// Zero violating off-diagonals of S and fold the removed mass into the
// diagonal; keeps row sums (hence D row sums) and negative semi-definiteness.
SparseMat clamp_negative_offdiagonals(const SparseMat& S, SignReport& report);

// Text export, one "row col value" triplet per line, for offline inspection.
void export_operator(const DiffusionOperator& op, const std::string& directory);

}  // namespace rdme
