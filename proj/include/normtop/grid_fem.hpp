#pragma once

// Regular-grid Q4 plane-stress finite element model: node/DOF numbering,
// the unit-square element stiffness matrix, SIMP-weighted global assembly,
// support handling by system reduction, and the sparse SPD solve.
//
// Numbering convention (chosen so the classical benchmark index listings
// hold verbatim): nodes are counted column by column, top to bottom,
//   node(col, row) = col*(nely+1) + row + 1,   1-based,
// and node n owns DOFs (2n-1, 2n) = (horizontal, vertical), 1-based.
// Element (elx, ely), both 1-based with ely counting from the top row,
// gathers its 8 DOFs in the order upper-left, upper-right, lower-right,
// lower-left node, (x, y) each.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "normtop/errors.hpp"

namespace normtop {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using DesignField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct GridMesh {
  int nelx = 1;  // elements along x
  int nely = 1;  // elements along y

  int node_count() const { return (nelx + 1) * (nely + 1); }
  int dof_count() const { return 2 * node_count(); }
  int element_count() const { return nelx * nely; }

  // 1-based node id of grid position (col, row), col in [0, nelx],
  // row in [0, nely], row 0 at the top of the domain.
  int node_id(int col, int row) const { return col * (nely + 1) + row + 1; }

  // Linear element index, ely fastest (column-major over the grid of
  // elements); elx, ely are 1-based. Design fields use this layout.
  int element_index(int elx, int ely) const {
    return (elx - 1) * nely + (ely - 1);
  }
};

inline void validate(const GridMesh& mesh) {
  if (mesh.nelx < 1 || mesh.nely < 1)
    throw ParameterError("mesh must have at least one element per direction");
}

struct MaterialModel {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.3;
  double x_min = 0.001;  // lower density bound, keeps K(x) nonsingular
  double penal = 3.0;    // SIMP exponent
};

inline void validate(const MaterialModel& mat) {
  if (!(mat.poisson_ratio > 0.0 && mat.poisson_ratio < 0.5))
    throw ParameterError("poisson_ratio must lie in (0, 0.5)");
  if (!(mat.youngs_modulus > 0.0))
    throw ParameterError("youngs_modulus must be positive");
  if (!(mat.x_min > 0.0 && mat.x_min < 1.0))
    throw ParameterError("x_min must lie in (0, 1)");
  if (!(mat.penal >= 1.0)) throw ParameterError("penal must be >= 1");
}

// Unit-density element stiffness matrix of the bilinear quadrilateral.
struct ElementStiffness {
  Mat8 matrix;
};

// Point loads as (1-based DOF index, force value) pairs.
struct LoadCase {
  std::vector<std::pair<int, double>> entries;
};

// Homogeneous Dirichlet DOFs, 1-based, strictly ascending.
struct Supports {
  std::vector<int> fixed_dofs;
};

inline void validate(const LoadCase& lc, int dof_count) {
  std::vector<int> seen;
  for (const auto& [dof, value] : lc.entries) {
    (void)value;
    if (dof < 1 || dof > dof_count)
      throw ParameterError("load DOF " + std::to_string(dof) +
                           " outside [1, " + std::to_string(dof_count) + "]");
    seen.push_back(dof);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw ParameterError("duplicate DOF index within one load case");
}

inline void validate(const Supports& sup, int dof_count) {
  if (sup.fixed_dofs.empty())
    throw ParameterError("supports must fix at least one DOF");
  for (std::size_t i = 0; i < sup.fixed_dofs.size(); ++i) {
    int dof = sup.fixed_dofs[i];
    if (dof < 1 || dof > dof_count)
      throw ParameterError("fixed DOF " + std::to_string(dof) +
                           " outside [1, " + std::to_string(dof_count) + "]");
    if (i > 0 && sup.fixed_dofs[i - 1] >= dof)
      throw ParameterError("fixed DOFs must be strictly ascending");
  }
}

// 1-based DOF indices of element (elx, ely) in gather order:
// (2n1-1, 2n1, 2n2-1, 2n2, 2n2+1, 2n2+2, 2n1+1, 2n1+2) with
// n1 = (nely+1)*(elx-1) + ely the upper-left and n2 = (nely+1)*elx + ely
// the upper-right node.
inline std::array<int, 8> element_dof_indices(const GridMesh& mesh, int elx,
                                              int ely) {
  if (elx < 1 || elx > mesh.nelx || ely < 1 || ely > mesh.nely)
    throw ParameterError("element coordinates out of range");
  const int n1 = (mesh.nely + 1) * (elx - 1) + ely;
  const int n2 = (mesh.nely + 1) * elx + ely;
  return {2 * n1 - 1, 2 * n1, 2 * n2 - 1, 2 * n2,
          2 * n2 + 1, 2 * n2 + 2, 2 * n1 + 1, 2 * n1 + 2};
}

// Closed-form plane-stress stiffness matrix of a unit square element at
// unit density (classical 8-coefficient pattern). Thickness 1.
inline ElementStiffness build_element_stiffness(const MaterialModel& mat) {
  validate(mat);
  const double nu = mat.poisson_ratio;
  const double s = mat.youngs_modulus / (1.0 - nu * nu);
  const std::array<double, 8> k = {
      0.5 - nu / 6.0,   0.125 + nu / 8.0, -0.25 - nu / 12.0,
      -0.125 + 3.0 * nu / 8.0, -0.25 + nu / 12.0, -0.125 - nu / 8.0,
      nu / 6.0,         0.125 - 3.0 * nu / 8.0};
  constexpr int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2},
                             {2, 7, 0, 5, 6, 3, 4, 1}, {3, 6, 5, 0, 7, 2, 1, 4},
                             {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                             {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  ElementStiffness ke;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) ke.matrix(i, j) = s * k[idx[i][j]];
  return ke;
}

inline void validate_design(const DesignField& x, const MaterialModel& mat,
                            const GridMesh& mesh) {
  if (x.size() != mesh.element_count())
    throw ParameterError("design field length does not match element count");
  constexpr double slack = 1e-12;
  for (Eigen::Index e = 0; e < x.size(); ++e)
    if (!(x[e] >= mat.x_min - slack && x[e] <= 1.0 + slack))
      throw InvariantError("density " + std::to_string(x[e]) + " at element " +
                           std::to_string(e + 1) + " outside [x_min, 1]");
}

// K(x) = sum_e x_e^p * scatter(K_e). Symmetric by construction; fixed DOFs
// are still present (reduction happens in the solve).
inline SparseMatrix assemble_global(const DesignField& x,
                                    const MaterialModel& mat,
                                    const ElementStiffness& ke,
                                    const GridMesh& mesh) {
  validate(mesh);
  validate_design(x, mat, mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * 64);
  for (int elx = 1; elx <= mesh.nelx; ++elx) {
    for (int ely = 1; ely <= mesh.nely; ++ely) {
      const auto dofs = element_dof_indices(mesh, elx, ely);
      const double w = std::pow(x[mesh.element_index(elx, ely)], mat.penal);
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          triplets.emplace_back(dofs[i] - 1, dofs[j] - 1,
                                w * ke.matrix(i, j));
    }
  }
  SparseMatrix K(mesh.dof_count(), mesh.dof_count());
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

namespace detail {

// Free-DOF bookkeeping for support handling by row/column deletion.
struct ReducedSystem {
  std::vector<int> full_to_free;  // -1 for fixed DOFs
  std::vector<int> free_to_full;
};

inline ReducedSystem reduce_dofs(int dof_count, const Supports& sup) {
  ReducedSystem r;
  r.full_to_free.assign(static_cast<std::size_t>(dof_count), 0);
  for (int dof : sup.fixed_dofs) r.full_to_free[dof - 1] = -1;
  r.free_to_full.reserve(dof_count - static_cast<int>(sup.fixed_dofs.size()));
  int next = 0;
  for (int i = 0; i < dof_count; ++i) {
    if (r.full_to_free[i] < 0) continue;
    r.full_to_free[i] = next++;
    r.free_to_full.push_back(i);
  }
  return r;
}

inline SparseMatrix reduced_matrix(const SparseMatrix& K,
                                   const ReducedSystem& r) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(K.nonZeros()));
  for (int col = 0; col < K.outerSize(); ++col) {
    const int jc = r.full_to_free[col];
    if (jc < 0) continue;
    for (SparseMatrix::InnerIterator it(K, col); it; ++it) {
      const int ir = r.full_to_free[it.row()];
      if (ir < 0) continue;
      triplets.emplace_back(ir, jc, it.value());
    }
  }
  const int n = static_cast<int>(r.free_to_full.size());
  SparseMatrix Kr(n, n);
  Kr.setFromTriplets(triplets.begin(), triplets.end());
  return Kr;
}

inline Eigen::VectorXd load_vector(const LoadCase& lc, int dof_count) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(dof_count);
  for (const auto& [dof, value] : lc.entries) F[dof - 1] += value;
  return F;
}

}  // namespace detail

// Solves K_ff U_f = F_f on the free DOFs via sparse Cholesky and scatters
// back with exact zeros on the fixed DOFs. One displacement vector per
// load case; the factorization is shared across cases.
inline std::vector<Eigen::VectorXd> solve_displacements(
    const SparseMatrix& K, const std::vector<LoadCase>& cases,
    const Supports& sup) {
  const int n = static_cast<int>(K.rows());
  if (K.cols() != n) throw ParameterError("stiffness matrix must be square");
  validate(sup, n);
  for (const auto& lc : cases) validate(lc, n);

  const auto reduction = detail::reduce_dofs(n, sup);
  const SparseMatrix Kr = detail::reduced_matrix(K, reduction);

  Eigen::SimplicialLLT<SparseMatrix> solver;
  solver.compute(Kr);
  if (solver.info() != Eigen::Success)
    throw SolverError(
        "reduced stiffness factorization failed: the system is "
        "under-constrained (supports leave rigid-body motion free) or the "
        "matrix is not positive definite");

  std::vector<Eigen::VectorXd> displacements;
  displacements.reserve(cases.size());
  for (const auto& lc : cases) {
    const Eigen::VectorXd F = detail::load_vector(lc, n);
    Eigen::VectorXd Fr(reduction.free_to_full.size());
    for (std::size_t i = 0; i < reduction.free_to_full.size(); ++i)
      Fr[static_cast<Eigen::Index>(i)] = F[reduction.free_to_full[i]];

    const Eigen::VectorXd Ur = solver.solve(Fr);
    const double fnorm = F.norm();
    if (fnorm > 0.0) {
      const double residual = (Kr * Ur - Fr).norm();
      if (!(residual <= 1e-8 * fnorm))
        throw SolverError("solve residual " + std::to_string(residual) +
                          " exceeds tolerance; system is likely "
                          "under-constrained");
    }

    Eigen::VectorXd U = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < reduction.free_to_full.size(); ++i)
      U[reduction.free_to_full[i]] = Ur[static_cast<Eigen::Index>(i)];
    displacements.push_back(std::move(U));
  }
  return displacements;
}

inline Eigen::VectorXd solve_displacements(const SparseMatrix& K,
                                           const LoadCase& lc,
                                           const Supports& sup) {
  return solve_displacements(K, std::vector<LoadCase>{lc}, sup).front();
}

// Gathers the 8 element DOF values of element e (1-based, ely fastest).
inline Vec8 element_displacements(const Eigen::VectorXd& U, int e,
                                  const GridMesh& mesh) {
  if (e < 1 || e > mesh.element_count())
    throw ParameterError("element index out of range");
  if (U.size() != mesh.dof_count())
    throw ParameterError("displacement vector length mismatch");
  const int elx = (e - 1) / mesh.nely + 1;
  const int ely = (e - 1) % mesh.nely + 1;
  const auto dofs = element_dof_indices(mesh, elx, ely);
  Vec8 ue;
  for (int i = 0; i < 8; ++i) ue[i] = U[dofs[i] - 1];
  return ue;
}

}  // namespace normtop
