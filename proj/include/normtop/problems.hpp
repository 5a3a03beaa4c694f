#pragma once

// Named benchmark presets. Load and support DOF indices follow the
// classical column-major numbering (see grid_fem.hpp), so the well-known
// index formulas apply verbatim:
//   bridge        F(2*(nelx/2+1)*(nely+1)) = -1,
//                 corners at both bottom ends fully fixed
//   cantilever1   F(2*(nelx+1)*(nely+1)) = -1, left edge fixed
//   cantilever2   case 1 as cantilever1, case 2 +1 at the top-right
//                 corner vertical DOF, left edge fixed
//   mbb-half      F(2) = -1, left-edge horizontal DOFs fixed (symmetry),
//                 bottom-right vertical DOF rolled
//   mbb-full      F(2*((nelx/2)*(nely+1)+1)) = -1, bottom-left rolled,
//                 bottom-right fully fixed

#include <string>
#include <vector>

#include "normtop/errors.hpp"
#include "normtop/filter_update.hpp"
#include "normtop/grid_fem.hpp"

namespace normtop {

struct ProblemDefinition {
  std::string name;
  GridMesh mesh;
  MaterialModel material;
  double volfrac = 0.5;
  std::vector<LoadCase> load_cases;
  Supports supports;
  FilterSpec filter;
};

inline void validate(const ProblemDefinition& prob) {
  validate(prob.mesh);
  validate(prob.material);
  if (!(prob.volfrac > 0.0 && prob.volfrac < 1.0))
    throw ParameterError("volfrac must lie in (0, 1)");
  if (prob.load_cases.empty())
    throw ParameterError("problem needs at least one load case");
  bool any_load = false;
  for (const auto& lc : prob.load_cases) {
    validate(lc, prob.mesh.dof_count());
    for (const auto& [dof, value] : lc.entries) {
      (void)dof;
      if (value != 0.0) any_load = true;
    }
  }
  if (!any_load) throw ParameterError("all load entries are zero");
  validate(prob.supports, prob.mesh.dof_count());
  if (!(prob.filter.rmin > 0.0))
    throw ParameterError("filter radius must be > 0");
}

namespace detail {

inline ProblemDefinition preset_base(const std::string& name, int nelx,
                                     int nely) {
  ProblemDefinition prob;
  prob.name = name;
  prob.mesh = GridMesh{nelx, nely};
  validate(prob.mesh);
  return prob;
}

}  // namespace detail

// Simply supported deck, midspan load at the bottom edge. nelx must be even
// so the load column sits exactly at midspan.
inline ProblemDefinition make_bridge(int nelx = 80, int nely = 40) {
  if (nelx % 2 != 0)
    throw ParameterError("bridge preset requires an even nelx");
  auto prob = detail::preset_base("bridge", nelx, nely);
  const int ndof = prob.mesh.dof_count();
  prob.load_cases = {{{{2 * (nelx / 2 + 1) * (nely + 1), -1.0}}}};
  prob.supports.fixed_dofs = {2 * (nely + 1) - 1, 2 * (nely + 1), ndof - 1,
                              ndof};
  validate(prob);
  return prob;
}

// Left edge clamped, unit downward load at the bottom-right corner.
inline ProblemDefinition make_cantilever_one(int nelx = 60, int nely = 40) {
  auto prob = detail::preset_base("cantilever1", nelx, nely);
  prob.load_cases = {{{{prob.mesh.dof_count(), -1.0}}}};
  for (int dof = 1; dof <= 2 * (nely + 1); ++dof)
    prob.supports.fixed_dofs.push_back(dof);
  validate(prob);
  return prob;
}

// As cantilever1 plus a second, independent load case pulling the
// top-right corner upward.
inline ProblemDefinition make_cantilever_two(int nelx = 60, int nely = 40) {
  auto prob = make_cantilever_one(nelx, nely);
  prob.name = "cantilever2";
  prob.load_cases.push_back({{{2 * nelx * (nely + 1) + 2, 1.0}}});
  validate(prob);
  return prob;
}

// Symmetric half of the MBB beam: load at the top-left node, horizontal
// DOFs fixed along the left (symmetry) edge, bottom-right corner rolled.
inline ProblemDefinition make_half_mbb(int nelx = 60, int nely = 20) {
  auto prob = detail::preset_base("mbb-half", nelx, nely);
  prob.load_cases = {{{{2, -1.0}}}};
  for (int dof = 1; dof <= 2 * (nely + 1); dof += 2)
    prob.supports.fixed_dofs.push_back(dof);
  prob.supports.fixed_dofs.push_back(prob.mesh.dof_count());
  validate(prob);
  return prob;
}

// Full MBB beam: load at the top-center node, bottom-left corner rolled
// (vertical only), bottom-right corner fully fixed. nelx must be even.
inline ProblemDefinition make_full_mbb(int nelx = 120, int nely = 20) {
  if (nelx % 2 != 0)
    throw ParameterError("full MBB preset requires an even nelx");
  auto prob = detail::preset_base("mbb-full", nelx, nely);
  const int top_middle = (nelx / 2) * (nely + 1) + 1;
  prob.load_cases = {{{{2 * top_middle, -1.0}}}};
  const int ndof = prob.mesh.dof_count();
  prob.supports.fixed_dofs = {2 * (nely + 1), ndof - 1, ndof};
  validate(prob);
  return prob;
}

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {
      "bridge", "cantilever1", "cantilever2", "mbb-half", "mbb-full"};
  return names;
}

// Preset lookup by CLI name; nelx/nely of 0 keep the preset default size.
inline ProblemDefinition make_problem(const std::string& name, int nelx = 0,
                                      int nely = 0) {
  const bool custom = nelx > 0 || nely > 0;
  if (custom && (nelx <= 0 || nely <= 0))
    throw ParameterError("override both nelx and nely or neither");
  if (name == "bridge")
    return custom ? make_bridge(nelx, nely) : make_bridge();
  if (name == "cantilever1")
    return custom ? make_cantilever_one(nelx, nely) : make_cantilever_one();
  if (name == "cantilever2")
    return custom ? make_cantilever_two(nelx, nely) : make_cantilever_two();
  if (name == "mbb-half")
    return custom ? make_half_mbb(nelx, nely) : make_half_mbb();
  if (name == "mbb-full")
    return custom ? make_full_mbb(nelx, nely) : make_full_mbb();
  throw ParameterError("unknown problem preset '" + name +
                       "' (expected bridge, cantilever1, cantilever2, "
                       "mbb-half or mbb-full)");
}

}  // namespace normtop
