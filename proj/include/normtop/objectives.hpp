#pragma once

// The three compliance objectives and their sensitivities. All of them
// share the SIMP density weight x_e^p and differ in how the element
// displacement energy is aggregated:
//   Quadratic: x^p * u^T K_e u                (total strain energy)
//   L2:        x^p * sqrt(u^T K_e u)          (2-norm of w = K_e^{1/2} u)
//   L1:        x^p * ||K_e^{1/2} u||_1        (1-norm of w, nodal frame)
// Design sensitivities follow the frozen-displacement pattern
// dc_e = -p x^{p-1} * comp_e used by the classical OC loop.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "normtop/errors.hpp"
#include "normtop/grid_fem.hpp"
#include "normtop/spectral.hpp"

namespace normtop {

enum class ObjectiveKind { Quadratic, L2, L1 };

inline std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Quadratic: return "quadratic";
    case ObjectiveKind::L2: return "l2";
    case ObjectiveKind::L1: return "l1";
  }
  return "?";
}

inline std::optional<ObjectiveKind> objective_from_string(
    const std::string& name) {
  if (name == "quadratic") return ObjectiveKind::Quadratic;
  if (name == "l2") return ObjectiveKind::L2;
  if (name == "l1") return ObjectiveKind::L1;
  return std::nullopt;
}

struct ObjectiveEval {
  double total = 0.0;
  Eigen::VectorXd per_element;         // >= 0, sums to total
  Eigen::VectorXd design_sensitivity;  // dc, <= 0 everywhere
};

namespace detail {

inline void check_eval_inputs(const DesignField& x,
                              const std::vector<Eigen::VectorXd>& cases,
                              const MaterialModel& mat, const GridMesh& mesh) {
  validate_design(x, mat, mesh);
  if (cases.empty()) throw ParameterError("at least one load case required");
  for (const auto& U : cases)
    if (U.size() != mesh.dof_count())
      throw ParameterError("displacement vector length mismatch");
}

// Accumulates per-element compliance values comp_e (whatever norm the
// caller computes per case) into the ObjectiveEval fields.
template <class PerCaseValue>
ObjectiveEval accumulate(const DesignField& x,
                         const std::vector<Eigen::VectorXd>& cases,
                         const MaterialModel& mat, const GridMesh& mesh,
                         PerCaseValue&& value_of) {
  const int n = mesh.element_count();
  ObjectiveEval eval;
  eval.per_element = Eigen::VectorXd::Zero(n);
  eval.design_sensitivity = Eigen::VectorXd::Zero(n);
  for (int e = 1; e <= n; ++e) {
    double comp = 0.0;
    for (const auto& U : cases)
      comp += value_of(element_displacements(U, e, mesh));
    const double xe = x[e - 1];
    eval.per_element[e - 1] = std::pow(xe, mat.penal) * comp;
    eval.design_sensitivity[e - 1] =
        -mat.penal * std::pow(xe, mat.penal - 1.0) * comp;
  }
  eval.total = eval.per_element.sum();
  return eval;
}

}  // namespace detail

inline ObjectiveEval eval_quadratic(const DesignField& x,
                                    const std::vector<Eigen::VectorXd>& cases,
                                    const ElementStiffness& ke,
                                    const MaterialModel& mat,
                                    const GridMesh& mesh) {
  detail::check_eval_inputs(x, cases, mat, mesh);
  return detail::accumulate(x, cases, mat, mesh, [&](const Vec8& ue) {
    const double q = ue.dot(ke.matrix * ue);
    return q < 0.0 ? 0.0 : q;  // PSD noise only
  });
}

inline ObjectiveEval eval_l2(const DesignField& x,
                             const std::vector<Eigen::VectorXd>& cases,
                             const ElementStiffness& ke,
                             const MaterialModel& mat, const GridMesh& mesh) {
  detail::check_eval_inputs(x, cases, mat, mesh);
  return detail::accumulate(x, cases, mat, mesh, [&](const Vec8& ue) {
    double q = ue.dot(ke.matrix * ue);
    if (q < -1e-12)
      throw InvariantError("quadratic form " + std::to_string(q) +
                           " is negative beyond PSD noise");
    if (q < 0.0) q = 0.0;
    return std::sqrt(q);
  });
}

inline ObjectiveEval eval_l1(const DesignField& x,
                             const std::vector<Eigen::VectorXd>& cases,
                             const StiffnessRoot& root,
                             const MaterialModel& mat, const GridMesh& mesh) {
  detail::check_eval_inputs(x, cases, mat, mesh);
  return detail::accumulate(x, cases, mat, mesh, [&](const Vec8& ue) {
    return transform_displacement(root, ue).lpNorm<1>();
  });
}

// Modal-frame l1 value x^p ||D^{1/2} V^T u||_1, an analysis quantity.
// The production objective uses the nodal frame ||K^{1/2} u||_1; the two
// differ in general because the 1-norm is not rotation invariant.
inline double modal_l1_compliance(const SpectralDecomposition& dec, double xe,
                                  const MaterialModel& mat, const Vec8& ue) {
  const Vec8 um = modal_displacement(dec, ue);
  return std::pow(xe, mat.penal) *
         (dec.eigenvalues.cwiseSqrt().asDiagonal() * um).lpNorm<1>();
}

// Gradient of one element's objective with respect to its displacement
// vector. `differentiable` is false where the formula has a kink or a
// division by zero (L2 at w = 0, L1 when a component of w sits at zero);
// the returned vector is then the zero-subgradient convention.
struct DisplacementSensitivity {
  Vec8 gradient;
  bool differentiable = true;
};

inline DisplacementSensitivity displacement_sensitivity(
    ObjectiveKind kind, double xe, const SpectralDecomposition& dec,
    const MaterialModel& mat, const Vec8& ue) {
  const double xp = std::pow(xe, mat.penal);
  const Mat8 kt = dec.reconstruct();
  DisplacementSensitivity out;
  switch (kind) {
    case ObjectiveKind::Quadratic: {
      out.gradient = 2.0 * xp * (kt * ue);
      return out;
    }
    case ObjectiveKind::L2: {
      const Vec8 w = stiffness_root(dec).matrix * ue;
      const double norm = w.norm();
      if (norm <= 0.0) {
        out.gradient.setZero();
        out.differentiable = false;
        return out;
      }
      out.gradient = xp * (kt * ue) / norm;
      return out;
    }
    case ObjectiveKind::L1: {
      const Mat8 root = stiffness_root(dec).matrix;
      const Vec8 w = root * ue;
      Vec8 sign;
      for (int i = 0; i < 8; ++i) {
        if (std::abs(w[i]) < 1e-12) {
          sign[i] = 0.0;
          out.differentiable = false;
        } else {
          sign[i] = w[i] > 0.0 ? 1.0 : -1.0;
        }
      }
      out.gradient = xp * (root * sign);
      return out;
    }
  }
  throw ParameterError("unknown objective kind");
}

}  // namespace normtop
