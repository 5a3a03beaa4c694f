#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <random>

#include "normtop/grid_fem.hpp"
#include "oracles.hpp"

using namespace normtop;

namespace {

const Vec8 kTranslationX = (Vec8() << 1, 0, 1, 0, 1, 0, 1, 0).finished();
const Vec8 kTranslationY = (Vec8() << 0, 1, 0, 1, 0, 1, 0, 1).finished();
// In-plane rotation about the element center, gather order UL,UR,LR,LL.
const Vec8 kRotation =
    0.5 * (Vec8() << 1, -1, 1, 1, -1, 1, -1, -1).finished();

}  // namespace

TEST_CASE("mesh numbering follows the column-major convention") {
  GridMesh mesh{4, 3};
  CHECK(mesh.node_count() == 20);
  CHECK(mesh.dof_count() == 40);
  CHECK(mesh.element_count() == 12);
  CHECK(mesh.node_id(0, 0) == 1);
  CHECK(mesh.node_id(0, 3) == 4);
  CHECK(mesh.node_id(1, 0) == 5);
  CHECK(mesh.node_id(4, 3) == 20);

  // Every element's DOF list matches the coordinate-derived map.
  for (int elx = 1; elx <= mesh.nelx; ++elx)
    for (int ely = 1; ely <= mesh.nely; ++ely)
      CHECK(element_dof_indices(mesh, elx, ely) ==
            oracles::element_dofs_from_coords(mesh, elx, ely));
}

TEST_CASE("element stiffness closed form") {
  const MaterialModel mat;
  const ElementStiffness ke = build_element_stiffness(mat);

  SECTION("matches the Gauss quadrature oracle entrywise") {
    const Mat8 ref = oracles::gauss_element_stiffness(mat);
    CHECK((ke.matrix - ref).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("corner entry has the textbook value") {
    CHECK(ke.matrix(0, 0) ==
          Catch::Approx((1.0 / (1.0 - 0.09)) * (0.5 - 0.3 / 6.0))
              .epsilon(1e-14));
  }

  SECTION("exactly symmetric") {
    CHECK((ke.matrix - ke.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("rigid-body modes are in the null space") {
    for (const Vec8& r : {kTranslationX, kTranslationY, kRotation})
      CHECK((ke.matrix * r).cwiseAbs().maxCoeff() < 1e-10);
  }

  SECTION("positive semidefinite with a 3-dimensional null space") {
    Eigen::SelfAdjointEigenSolver<Mat8> eig(ke.matrix);
    const Vec8 lambda = eig.eigenvalues();
    CHECK(lambda.minCoeff() > -1e-10);
    const double lmax = lambda.cwiseAbs().maxCoeff();
    int small = 0;
    for (int i = 0; i < 8; ++i)
      if (std::abs(lambda[i]) < 1e-9 * lmax) ++small;
    CHECK(small == 3);
  }

  SECTION("other Poisson ratios still match the quadrature oracle") {
    for (double nu : {0.1, 0.25, 0.4, 0.49}) {
      MaterialModel m;
      m.poisson_ratio = nu;
      const Mat8 ref = oracles::gauss_element_stiffness(m);
      CHECK((build_element_stiffness(m).matrix - ref).cwiseAbs().maxCoeff() <
            1e-10);
    }
  }

  SECTION("invalid Poisson ratio is rejected") {
    for (double nu : {0.0, 0.5, -0.1, 0.7}) {
      MaterialModel m;
      m.poisson_ratio = nu;
      CHECK_THROWS_AS(build_element_stiffness(m), ParameterError);
    }
  }
}

TEST_CASE("global assembly") {
  const MaterialModel mat;
  const ElementStiffness ke = build_element_stiffness(mat);

  SECTION("single element at unit density scatters K_e directly") {
    GridMesh mesh{1, 1};
    const DesignField x = DesignField::Ones(1);
    const Eigen::MatrixXd K =
        Eigen::MatrixXd(assemble_global(x, mat, ke, mesh));
    const auto dofs = element_dof_indices(mesh, 1, 1);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        CHECK(K(dofs[i] - 1, dofs[j] - 1) == ke.matrix(i, j));
  }

  SECTION("uniform half density scales the unit-density matrix by 1/8") {
    GridMesh mesh{3, 2};
    const Eigen::MatrixXd K1 = Eigen::MatrixXd(
        assemble_global(DesignField::Ones(6), mat, ke, mesh));
    const Eigen::MatrixXd Kh = Eigen::MatrixXd(
        assemble_global(DesignField::Constant(6, 0.5), mat, ke, mesh));
    CHECK((Kh - 0.125 * K1).cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("2x1 mesh sums contributions on the shared edge") {
    GridMesh mesh{2, 1};
    const DesignField x = DesignField::Ones(2);
    const Eigen::MatrixXd K =
        Eigen::MatrixXd(assemble_global(x, mat, ke, mesh));
    const Eigen::MatrixXd ref =
        oracles::dense_global_stiffness(x, mat, ke.matrix, mesh);
    CHECK((K - ref).cwiseAbs().maxCoeff() < 1e-14);
    // The shared mid-edge diagonal is strictly larger than one element's.
    const int shared = element_dof_indices(mesh, 1, 1)[2] - 1;
    CHECK(K(shared, shared) == Catch::Approx(2.0 * ke.matrix(0, 0)));
  }

  SECTION("matches the dense oracle on a random design") {
    GridMesh mesh{5, 4};
    std::mt19937_64 rng(42);
    const DesignField x =
        oracles::random_vector(rng, mesh.element_count(), mat.x_min, 1.0);
    const Eigen::MatrixXd K =
        Eigen::MatrixXd(assemble_global(x, mat, ke, mesh));
    const Eigen::MatrixXd ref =
        oracles::dense_global_stiffness(x, mat, ke.matrix, mesh);
    CHECK((K - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("rejects densities outside the box") {
    GridMesh mesh{2, 1};
    DesignField x(2);
    x << 0.5, 1.5;
    CHECK_THROWS_AS(assemble_global(x, mat, ke, mesh), InvariantError);
    x << 0.0, 0.5;
    CHECK_THROWS_AS(assemble_global(x, mat, ke, mesh), InvariantError);
    CHECK_THROWS_AS(
        assemble_global(DesignField::Ones(3), mat, ke, mesh),
        ParameterError);
  }
}

namespace {

// Small cantilever fixture: left edge clamped, tip load down-right corner.
struct Cantilever {
  GridMesh mesh;
  MaterialModel mat;
  ElementStiffness ke;
  LoadCase load;
  Supports supports;

  explicit Cantilever(int nelx, int nely) : mesh{nelx, nely} {
    ke = build_element_stiffness(mat);
    load.entries = {{mesh.dof_count(), -1.0}};
    for (int dof = 1; dof <= 2 * (nely + 1); ++dof)
      supports.fixed_dofs.push_back(dof);
  }
};

}  // namespace

TEST_CASE("displacement solve") {
  SECTION("zero load gives zero displacement") {
    Cantilever c(2, 2);
    const auto K = assemble_global(DesignField::Ones(4), c.mat, c.ke, c.mesh);
    LoadCase zero;
    zero.entries = {{1, 0.0}};
    const Eigen::VectorXd U = solve_displacements(K, zero, c.supports);
    CHECK(U.cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("1x1 cantilever matches the dense oracle") {
    Cantilever c(1, 1);
    const DesignField x = DesignField::Ones(1);
    const auto K = assemble_global(x, c.mat, c.ke, c.mesh);
    const Eigen::VectorXd U = solve_displacements(K, c.load, c.supports);

    Eigen::VectorXd F = Eigen::VectorXd::Zero(c.mesh.dof_count());
    F[c.mesh.dof_count() - 1] = -1.0;
    const Eigen::VectorXd ref = oracles::dense_solve(
        oracles::dense_global_stiffness(x, c.mat, c.ke.matrix, c.mesh), F,
        c.supports.fixed_dofs);
    CHECK((U - ref).norm() < 1e-10 * ref.norm());
    for (int dof : c.supports.fixed_dofs) CHECK(U[dof - 1] == 0.0);
  }

  SECTION("medium cantilever matches the dense oracle on random densities") {
    Cantilever c(6, 4);
    std::mt19937_64 rng(7);
    const DesignField x =
        oracles::random_vector(rng, c.mesh.element_count(), c.mat.x_min, 1.0);
    const auto K = assemble_global(x, c.mat, c.ke, c.mesh);
    const Eigen::VectorXd U = solve_displacements(K, c.load, c.supports);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(c.mesh.dof_count());
    F[c.mesh.dof_count() - 1] = -1.0;
    const Eigen::VectorXd ref = oracles::dense_solve(
        oracles::dense_global_stiffness(x, c.mat, c.ke.matrix, c.mesh), F,
        c.supports.fixed_dofs);
    CHECK((U - ref).norm() < 1e-9 * ref.norm());
  }

  SECTION("solution is linear in the load") {
    Cantilever c(3, 2);
    const auto K = assemble_global(
        DesignField::Constant(c.mesh.element_count(), 0.5), c.mat, c.ke,
        c.mesh);
    const Eigen::VectorXd U1 = solve_displacements(K, c.load, c.supports);
    LoadCase doubled = c.load;
    doubled.entries[0].second *= 2.0;
    const Eigen::VectorXd U2 = solve_displacements(K, doubled, c.supports);
    CHECK((U2 - 2.0 * U1).cwiseAbs().maxCoeff() < 1e-12 * U1.norm());
  }

  SECTION("superposition over load cases") {
    Cantilever c(3, 3);
    const auto K = assemble_global(
        DesignField::Constant(c.mesh.element_count(), 0.7), c.mat, c.ke,
        c.mesh);
    LoadCase second;
    second.entries = {{2 * c.mesh.nelx * (c.mesh.nely + 1) + 2, 1.0}};
    LoadCase combined;
    combined.entries = c.load.entries;
    combined.entries.insert(combined.entries.end(), second.entries.begin(),
                            second.entries.end());
    const auto parts =
        solve_displacements(K, {c.load, second}, c.supports);
    const Eigen::VectorXd together =
        solve_displacements(K, combined, c.supports);
    CHECK((together - parts[0] - parts[1]).cwiseAbs().maxCoeff() <
          1e-10 * together.norm());
  }

  SECTION("residual stays within tolerance") {
    Cantilever c(12, 6);
    const auto K = assemble_global(
        DesignField::Constant(c.mesh.element_count(), 0.5), c.mat, c.ke,
        c.mesh);
    const Eigen::VectorXd U = solve_displacements(K, c.load, c.supports);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(c.mesh.dof_count());
    F[c.mesh.dof_count() - 1] = -1.0;
    Eigen::VectorXd residual = K * U - F;
    for (int dof : c.supports.fixed_dofs) residual[dof - 1] = 0.0;  // reactions
    CHECK(residual.norm() <= 1e-8 * F.norm());
  }

  SECTION("under-constrained system is reported as such") {
    Cantilever c(2, 2);
    const auto K = assemble_global(DesignField::Ones(4), c.mat, c.ke, c.mesh);
    Supports pin_only;
    pin_only.fixed_dofs = {1, 2};  // one pinned node leaves rotation free
    CHECK_THROWS_AS(solve_displacements(K, c.load, pin_only), SolverError);
  }

  SECTION("bad inputs are rejected") {
    Cantilever c(2, 2);
    const auto K = assemble_global(DesignField::Ones(4), c.mat, c.ke, c.mesh);
    Supports empty;
    CHECK_THROWS_AS(solve_displacements(K, c.load, empty), ParameterError);
    Supports unsorted;
    unsorted.fixed_dofs = {3, 1};
    CHECK_THROWS_AS(solve_displacements(K, c.load, unsorted), ParameterError);
    LoadCase dup;
    dup.entries = {{5, 1.0}, {5, 2.0}};
    CHECK_THROWS_AS(solve_displacements(K, dup, c.supports), ParameterError);
    LoadCase outside;
    outside.entries = {{c.mesh.dof_count() + 1, 1.0}};
    CHECK_THROWS_AS(solve_displacements(K, outside, c.supports),
                    ParameterError);
  }
}

TEST_CASE("element displacement gather") {
  SECTION("zero field gathers to zero") {
    GridMesh mesh{2, 1};
    CHECK(element_displacements(Eigen::VectorXd::Zero(mesh.dof_count()), 1,
                                mesh)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SECTION("single-element gather is the fixed permutation") {
    GridMesh mesh{1, 1};
    Eigen::VectorXd U(8);
    U << 1, 2, 3, 4, 5, 6, 7, 8;
    const Vec8 ue = element_displacements(U, 1, mesh);
    const auto dofs = element_dof_indices(mesh, 1, 1);
    for (int i = 0; i < 8; ++i) CHECK(ue[i] == U[dofs[i] - 1]);
    Vec8 expected;
    expected << 1, 2, 5, 6, 7, 8, 3, 4;
    CHECK(ue == expected);
  }

  SECTION("2x1 neighbors share four DOFs") {
    GridMesh mesh{2, 1};
    Eigen::VectorXd U(mesh.dof_count());
    for (int i = 0; i < U.size(); ++i) U[i] = i + 1;
    const Vec8 left = element_displacements(U, 1, mesh);
    const Vec8 right = element_displacements(U, 2, mesh);
    // Left element's right edge (ur, lr) is the right element's left edge
    // (ul, ll).
    CHECK(left[2] == right[0]);
    CHECK(left[3] == right[1]);
    CHECK(left[4] == right[6]);
    CHECK(left[5] == right[7]);
  }

  SECTION("bad element index") {
    GridMesh mesh{2, 2};
    const Eigen::VectorXd U = Eigen::VectorXd::Zero(mesh.dof_count());
    CHECK_THROWS_AS(element_displacements(U, 0, mesh), ParameterError);
    CHECK_THROWS_AS(element_displacements(U, 5, mesh), ParameterError);
  }
}

TEST_CASE("adding stiffness never increases compliance") {
  Cantilever c(3, 2);
  std::mt19937_64 rng(11);
  DesignField x =
      oracles::random_vector(rng, c.mesh.element_count(), 0.3, 0.8);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(c.mesh.dof_count());
  F[c.mesh.dof_count() - 1] = -1.0;

  const auto compliance = [&](const DesignField& design) {
    const auto K = assemble_global(design, c.mat, c.ke, c.mesh);
    return F.dot(solve_displacements(K, c.load, c.supports));
  };

  const double base = compliance(x);
  for (int e = 0; e < c.mesh.element_count(); ++e) {
    DesignField bumped = x;
    bumped[e] = std::min(1.0, bumped[e] + 0.15);
    CHECK(compliance(bumped) <= base + 1e-12 * std::abs(base));
  }
}
