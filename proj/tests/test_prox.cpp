#include <catch2/catch_amalgamated.hpp>

#include <Eigen/QR>

#include "scorekit/prox.hpp"
#include "test_helpers.hpp"

using namespace scorekit;
using namespace scorekit::prox;
using testkit::randn_mat;
using testkit::randn_vec;

TEST_CASE("solve_l1_quadratic scalar instances") {
  SECTION("interior stationarity") {
    // min 1/2 y^2 - 2y + |y|: y > 0 branch gives y - 2 + 1 = 0, y* = 1,
    // objective 1/2 - 2 + 1 = -1/2.
    L1QuadraticProblem prob{MatrixXd::Constant(1, 1, 1.0), VectorXd::Constant(1, -2.0), 1.0};
    auto sol = solve_l1_quadratic(prob);
    REQUIRE(sol.status == SolveStatus::Converged);
    REQUIRE(sol.y_star[0] == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(sol.objective == Catch::Approx(-0.5).margin(1e-8));
    REQUIRE(sol.kkt_residual <= 1e-8);
  }
  SECTION("zero linear term keeps the origin") {
    L1QuadraticProblem prob{randn_mat(4, 6, 5), VectorXd::Zero(6), 0.3};
    auto sol = solve_l1_quadratic(prob);
    REQUIRE(sol.status == SolveStatus::Converged);
    REQUIRE(sol.y_star.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(sol.objective == 0.0);
  }
  SECTION("dominating linear term diverges") {
    L1QuadraticProblem prob{MatrixXd::Zero(1, 1), VectorXd::Constant(1, -2.0), 1.0};
    auto sol = solve_l1_quadratic(prob);
    REQUIRE(sol.status == SolveStatus::Unbounded);
  }
}

TEST_CASE("solve_lasso scalar and threshold behavior") {
  SECTION("scalar soft threshold") {
    // min 1/2 (y+3)^2 + |y|: y* = soft(-3, 1) = -2
    auto sol = solve_lasso(MatrixXd::Constant(1, 1, 1.0), VectorXd::Constant(1, 3.0), 1.0);
    REQUIRE(sol.status == SolveStatus::Converged);
    REQUIRE(sol.y_star[0] == Catch::Approx(-2.0).margin(1e-8));
  }
  SECTION("large beta kills all coordinates") {
    auto A = randn_mat(5, 8, 17);
    auto t = randn_vec(5, 18);
    const double beta = (A.transpose() * t).cwiseAbs().maxCoeff() * 1.0001;
    auto sol = solve_lasso(A, t, beta);
    REQUIRE(sol.y_star.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("beta = 0 on invertible A recovers least squares") {
    MatrixXd A(2, 2);
    A << 2, 1, 0, 1;
    VectorXd t(2);
    t << 1, -3;
    auto sol = solve_lasso(A, t, 0.0);
    VectorXd expect = -A.inverse() * t;
    REQUIRE(testkit::max_abs_diff(sol.y_star, expect) <= 1e-7);
  }
}

TEST_CASE("lasso KKT certificate recomputed independently") {
  auto A = randn_mat(12, 20, 31);
  auto t = randn_vec(12, 32);
  const double beta = 0.4;
  auto sol = solve_lasso(A, t, beta);
  REQUIRE(sol.status == SolveStatus::Converged);

  VectorXd g = A.transpose() * (A * sol.y_star + t);
  double resid = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (sol.y_star[j] == 0.0)
      resid = std::max(resid, std::max(std::abs(g[j]) - beta, 0.0));
    else
      resid = std::max(resid, std::abs(g[j] + beta * (sol.y_star[j] >= 0 ? 1.0 : -1.0)));
  }
  REQUIRE(resid <= 1e-8);
  REQUIRE(resid == Catch::Approx(sol.kkt_residual).margin(1e-14));
}

TEST_CASE("objective trace is nonincreasing and solves are deterministic") {
  auto A = randn_mat(15, 25, 77);
  auto b = randn_vec(25, 78);
  L1QuadraticProblem prob{A, b, 1.2};
  auto s1 = solve_l1_quadratic(prob);
  auto s2 = solve_l1_quadratic(prob);
  REQUIRE(s1.status == SolveStatus::Converged);
  for (std::size_t i = 1; i < s1.objective_trace.size(); ++i)
    REQUIRE(s1.objective_trace[i] <= s1.objective_trace[i - 1] + 1e-12);
  // bit-identical repeat
  REQUIRE(s1.iterations == s2.iterations);
  REQUIRE(std::memcmp(s1.y_star.data(), s2.y_star.data(), sizeof(double) * s1.y_star.size()) == 0);
  REQUIRE(s1.objective == s2.objective);
}

TEST_CASE("group lasso") {
  SECTION("zero labels give zero solution") {
    auto K = randn_mat(6, 9, 41);
    auto sol = solve_group_lasso(K, MatrixXd::Zero(6, 3), 0.7);
    REQUIRE(sol.Z.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("d = 1 reconciles with solve_lasso after scaling") {
    // ||Ky - l||^2 + lambda |y| = 2 [ 1/2 ||Ky - l||^2 + (lambda/2) |y| ]
    auto K = randn_mat(10, 7, 51);
    auto l = randn_vec(10, 52);
    const double lambda = 0.9;
    auto gsol = solve_group_lasso(K, l, lambda, 1e-10);
    auto lsol = solve_lasso(K, -l, lambda / 2.0, 1e-10);
    REQUIRE(testkit::max_abs_diff(gsol.Z.col(0), lsol.y_star) <= 1e-8);
  }
  SECTION("block soft-threshold zero condition") {
    auto K = randn_mat(8, 5, 61);
    auto L = randn_mat(8, 2, 62);
    // rows of K^T L
    double maxrow = 0.0;
    MatrixXd G = K.transpose() * L;
    for (Eigen::Index j = 0; j < G.rows(); ++j) maxrow = std::max(maxrow, G.row(j).norm());
    auto sol = solve_group_lasso(K, L, 2.0 * maxrow * 1.0001);
    REQUIRE(sol.Z.cwiseAbs().maxCoeff() == 0.0);
    auto sol2 = solve_group_lasso(K, L, 2.0 * maxrow * 0.9);
    REQUIRE(sol2.Z.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("least_squares_min_norm") {
  SECTION("identity") {
    auto B = randn_mat(4, 2, 71);
    REQUIRE((least_squares_min_norm(MatrixXd::Identity(4, 4), B) - B).cwiseAbs().maxCoeff() <=
            1e-12);
  }
  SECTION("underdetermined min-norm solution") {
    MatrixXd A(1, 2);
    A << 1, 1;
    MatrixXd B(1, 1);
    B << 2;
    auto X = least_squares_min_norm(A, B);
    REQUIRE(X(0, 0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(X(1, 0) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("rank-deficient matches an independent decomposition") {
    auto U = randn_mat(8, 3, 81);
    auto V = randn_mat(3, 6, 82);
    MatrixXd A = U * V;  // rank 3
    auto B = randn_mat(8, 2, 83);
    auto X = least_squares_min_norm(A, B);
    // oracle: complete orthogonal decomposition (different factorization path)
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    MatrixXd X2 = cod.solve(B);
    REQUIRE((X - X2).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  REQUIRE_THROWS_AS(solve_l1_quadratic({MatrixXd::Zero(2, 3), VectorXd::Zero(2), 1.0}), Error);
  REQUIRE_THROWS_AS(solve_lasso(MatrixXd::Zero(2, 3), VectorXd::Zero(3), 1.0), Error);
  REQUIRE_THROWS_AS(solve_group_lasso(MatrixXd::Zero(2, 3), MatrixXd::Zero(3, 1), 1.0), Error);
  REQUIRE_THROWS_AS(least_squares_min_norm(MatrixXd::Zero(2, 3), MatrixXd::Zero(3, 1)), Error);
}
