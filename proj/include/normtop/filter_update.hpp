#pragma once

// Mesh-independency sensitivity filter (cone weights over element centers)
// and the optimality-criteria design update with bisection on the volume
// multiplier.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "normtop/errors.hpp"
#include "normtop/grid_fem.hpp"

namespace normtop {

struct FilterSpec {
  double rmin = 1.5;  // radius in element units; <= 1 degenerates to identity
};

struct OcParams {
  double move = 0.2;              // max per-iteration density change
  double eta = 0.5;               // damping exponent
  double volume_tolerance = 1e-4; // on the volume fraction
  double lambda_lo = 1e-10;       // initial bisection bracket
  double lambda_hi = 1e10;
  int max_expansions = 200;       // bracket doublings per side
  int max_bisections = 200;       // halvings after bracketing
};

inline void validate(const OcParams& p) {
  if (!(p.move > 0.0 && p.move < 1.0))
    throw ParameterError("move limit must lie in (0, 1)");
  if (!(p.eta > 0.0 && p.eta <= 1.0))
    throw ParameterError("eta must lie in (0, 1]");
  if (!(p.volume_tolerance > 0.0))
    throw ParameterError("volume tolerance must be > 0");
  if (!(p.lambda_lo > 0.0 && p.lambda_hi > p.lambda_lo))
    throw ParameterError("bisection bounds must satisfy 0 < lo < hi");
}

// dc^_e = (sum_f H_ef x_f dc_f) / (x_e sum_f H_ef) with cone weights
// H_ef = max(0, rmin - dist(e, f)) over center-to-center distances.
inline Eigen::VectorXd filter_sensitivities(const DesignField& x,
                                            const Eigen::VectorXd& dc,
                                            const FilterSpec& spec,
                                            const GridMesh& mesh) {
  if (!(spec.rmin > 0.0)) throw ParameterError("filter radius must be > 0");
  if (x.size() != mesh.element_count() || dc.size() != x.size())
    throw ParameterError("field length does not match element count");
  for (Eigen::Index e = 0; e < dc.size(); ++e) {
    if (dc[e] > 0.0)
      throw InvariantError("sensitivity must be <= 0 before filtering");
    if (!(x[e] > 0.0))
      throw InvariantError("density must be positive for filtering");
  }
  // Weights vanish once max(|dcol|, |drow|) >= ceil(rmin).
  const int reach = static_cast<int>(std::ceil(spec.rmin)) - 1;
  Eigen::VectorXd out(dc.size());
  for (int i = 1; i <= mesh.nelx; ++i) {
    for (int j = 1; j <= mesh.nely; ++j) {
      double acc = 0.0;
      double wsum = 0.0;
      const int klo = std::max(i - reach, 1), khi = std::min(i + reach, mesh.nelx);
      const int llo = std::max(j - reach, 1), lhi = std::min(j + reach, mesh.nely);
      for (int k = klo; k <= khi; ++k) {
        for (int l = llo; l <= lhi; ++l) {
          const double dist = std::hypot(double(i - k), double(j - l));
          const double w = spec.rmin - dist;
          if (w <= 0.0) continue;
          const int f = mesh.element_index(k, l);
          acc += w * x[f] * dc[f];
          wsum += w;
        }
      }
      const int e = mesh.element_index(i, j);
      out[e] = acc / (x[e] * wsum);
    }
  }
  return out;
}

// Candidate design for a fixed multiplier: x_e (-dc_e / lambda)^eta clamped
// to the move limit and the [x_min, 1] box. Elements with dc_e >= 0 clamp
// to the lower bound (square-root domain guard).
inline DesignField oc_candidate(const DesignField& x, const Eigen::VectorXd& dc,
                                double lambda, const OcParams& params,
                                double x_min) {
  DesignField xnew(x.size());
  for (Eigen::Index e = 0; e < x.size(); ++e) {
    const double s = -dc[e];
    const double cand = s > 0.0 ? x[e] * std::pow(s / lambda, params.eta) : 0.0;
    const double lo = std::max(x_min, x[e] - params.move);
    const double hi = std::min(1.0, x[e] + params.move);
    xnew[e] = std::clamp(cand, lo, hi);
  }
  return xnew;
}

// OC update: finds lambda by bisection so that mean(x_new) hits volfrac
// within tolerance. mean(x_new(lambda)) is non-increasing in lambda, so a
// bracket with mean(lo) >= volfrac >= mean(hi) pins the multiplier. When
// the move/box clamps make the target unreachable the nearest extreme is
// returned instead.
inline DesignField oc_update(const DesignField& x, const Eigen::VectorXd& dc,
                             double volfrac, const OcParams& params,
                             double x_min) {
  validate(params);
  if (!(volfrac > 0.0 && volfrac < 1.0))
    throw ParameterError("volfrac must lie in (0, 1)");
  if (dc.size() != x.size())
    throw ParameterError("sensitivity length does not match design length");
  if (!(x_min > 0.0 && x_min < 1.0))
    throw ParameterError("x_min must lie in (0, 1)");

  double lo = params.lambda_lo;
  double hi = params.lambda_hi;
  DesignField cand_lo = oc_candidate(x, dc, lo, params, x_min);
  DesignField cand_hi = oc_candidate(x, dc, hi, params, x_min);
  double mean_lo = cand_lo.mean();
  double mean_hi = cand_hi.mean();

  for (int i = 0; i < params.max_expansions && mean_lo < volfrac; ++i) {
    lo *= 0.5;
    cand_lo = oc_candidate(x, dc, lo, params, x_min);
    mean_lo = cand_lo.mean();
  }
  for (int i = 0; i < params.max_expansions && mean_hi > volfrac; ++i) {
    hi *= 2.0;
    cand_hi = oc_candidate(x, dc, hi, params, x_min);
    mean_hi = cand_hi.mean();
  }
  // Bounds may make volfrac unreachable in one step; return the extreme.
  if (mean_lo < volfrac) return cand_lo;
  if (mean_hi > volfrac) return cand_hi;
  if (std::abs(mean_lo - volfrac) <= params.volume_tolerance) return cand_lo;
  if (std::abs(mean_hi - volfrac) <= params.volume_tolerance) return cand_hi;

  for (int i = 0; i < params.max_bisections; ++i) {
    const double mid = std::sqrt(lo * hi);  // multiplier spans many decades
    DesignField cand = oc_candidate(x, dc, mid, params, x_min);
    const double mean = cand.mean();
    if (std::abs(mean - volfrac) <= params.volume_tolerance) return cand;
    if (mean >= volfrac)
      lo = mid;
    else
      hi = mid;
  }
  throw ConvergenceError(
      "OC bisection failed after " + std::to_string(params.max_bisections) +
      " halvings: lambda in [" + std::to_string(lo) + ", " +
      std::to_string(hi) + "], target volume fraction " +
      std::to_string(volfrac) + " not met within " +
      std::to_string(params.volume_tolerance));
}

// rchange = max_e |x_new - x_old| / max_e x_old.
inline double change_metric(const DesignField& x_new,
                            const DesignField& x_old) {
  if (x_new.size() != x_old.size())
    throw ParameterError("design fields must have equal length");
  const double scale = x_old.maxCoeff();
  if (!(scale > 0.0))
    throw ParameterError("change metric needs max(x_old) > 0");
  return (x_new - x_old).cwiseAbs().maxCoeff() / scale;
}

}  // namespace normtop
