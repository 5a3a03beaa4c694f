#pragma once

// Spectral decomposition of the element stiffness matrix with eigenvalue
// truncation, the symmetric matrix square root K_e^{1/2}, and the two
// transformed displacement vectors w_e = K_e^{1/2} u_e (nodal frame) and
// u~_e = V^T u_e (modal frame).

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "normtop/errors.hpp"
#include "normtop/grid_fem.hpp"

namespace normtop {

// Default truncation threshold, relative to the largest eigenvalue
// magnitude. At unit Young's modulus this isolates exactly the three
// 2D rigid-body modes of the Q4 element.
inline constexpr double kTruncationRelDefault = 1e-9;

struct SpectralDecomposition {
  Mat8 eigenvectors;  // V, orthogonal, columns in ascending eigenvalue order
  Vec8 eigenvalues;   // D, after truncation

  // K_e,trunc = V diag(D) V^T, the matrix the square root refers to.
  Mat8 reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() *
           eigenvectors.transpose();
  }
};

struct StiffnessRoot {
  Mat8 matrix;  // symmetric PSD, squares back to K_e,trunc
};

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Mat8> eigensolve_symmetric(
    const ElementStiffness& ke) {
  const double asym =
      (ke.matrix - ke.matrix.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-12))
    throw InvariantError("element stiffness is not symmetric (max asymmetry " +
                         std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Mat8> solver(ke.matrix);
  if (solver.info() != Eigen::Success)
    throw InvariantError("eigendecomposition of element stiffness failed");
  return solver;
}

inline SpectralDecomposition truncate(
    const Eigen::SelfAdjointEigenSolver<Mat8>& solver, double epsilon) {
  SpectralDecomposition dec;
  dec.eigenvectors = solver.eigenvectors();
  dec.eigenvalues = solver.eigenvalues();
  for (int i = 0; i < 8; ++i)
    if (std::abs(dec.eigenvalues[i]) < epsilon) dec.eigenvalues[i] = 0.0;
  // Sign convention: first component of each eigenvector above noise level
  // is made positive, so repeated runs produce identical fixtures.
  for (int c = 0; c < 8; ++c) {
    for (int r = 0; r < 8; ++r) {
      const double v = dec.eigenvectors(r, c);
      if (std::abs(v) <= 1e-9) continue;
      if (v < 0.0) dec.eigenvectors.col(c) *= -1.0;
      break;
    }
  }
  return dec;
}

}  // namespace detail

// Eigendecomposition with eigenvalues of magnitude below epsilon set to
// exactly zero; the remaining eigenvalues are untouched.
inline SpectralDecomposition decompose_and_truncate(const ElementStiffness& ke,
                                                    double epsilon) {
  if (!(epsilon > 0.0)) throw ParameterError("truncation epsilon must be > 0");
  return detail::truncate(detail::eigensolve_symmetric(ke), epsilon);
}

// Same, with the threshold given relative to the largest eigenvalue
// magnitude (scale-robust form used by the optimization driver).
inline SpectralDecomposition decompose_and_truncate_relative(
    const ElementStiffness& ke, double relative = kTruncationRelDefault) {
  if (!(relative > 0.0)) throw ParameterError("truncation epsilon must be > 0");
  const auto solver = detail::eigensolve_symmetric(ke);
  const double scale = solver.eigenvalues().cwiseAbs().maxCoeff();
  return detail::truncate(solver, scale > 0.0 ? relative * scale : relative);
}

// K_e^{1/2} = V D^{1/2} V^T. Requires truncation to have removed any
// negative near-zero eigenvalues first.
inline StiffnessRoot stiffness_root(const SpectralDecomposition& dec) {
  for (int i = 0; i < 8; ++i)
    if (dec.eigenvalues[i] < 0.0)
      throw InvariantError(
          "negative eigenvalue present; truncate before taking the root");
  const Mat8 r = dec.eigenvectors *
                 dec.eigenvalues.cwiseSqrt().asDiagonal() *
                 dec.eigenvectors.transpose();
  return StiffnessRoot{0.5 * (r + r.transpose())};
}

// w_e = K_e^{1/2} u_e; its squared 2-norm equals u_e^T K_e,trunc u_e.
inline Vec8 transform_displacement(const StiffnessRoot& root, const Vec8& ue) {
  return root.matrix * ue;
}

// u~_e = V^T u_e, the element displacement in the eigenbasis of K_e.
inline Vec8 modal_displacement(const SpectralDecomposition& dec,
                               const Vec8& ue) {
  return dec.eigenvectors.transpose() * ue;
}

}  // namespace normtop
