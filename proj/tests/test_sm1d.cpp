#include <catch2/catch_amalgamated.hpp>

#include "scorekit/baseline.hpp"
#include "scorekit/sm1d.hpp"
#include "test_helpers.hpp"

using namespace scorekit;
using namespace scorekit::sm1d;
using testkit::randn_vec;

namespace {

ArchitectureConfig cfg_of(Activation act, bool skip, double beta) {
  ArchitectureConfig c;
  c.activation = act;
  c.skip = skip;
  c.beta = beta;
  return c;
}

double convex_optimum(const SMProgram1D& prog, double tol = 1e-10) {
  auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), tol);
  REQUIRE(sol.status == prox::SolveStatus::Converged);
  return sol.objective + prog.c_const;
}

}  // namespace

TEST_CASE("abs no-skip program matrices on two points") {
  auto d = make_dataset_1d(std::vector<double>{0.0, 1.0});
  auto prog = build_sm_program(d, cfg_of(Activation::Abs, false, 1.0));

  MatrixXd H1_expect(2, 2);
  H1_expect << 0, 1, 1, 0;
  REQUIRE((prog.H1 - H1_expect).cwiseAbs().maxCoeff() == 0.0);

  MatrixXd A1_expect(2, 2);
  A1_expect << -0.5, 0.5, 0.5, -0.5;
  REQUIRE((prog.A.leftCols(2) - A1_expect).cwiseAbs().maxCoeff() <= 1e-15);
  REQUIRE((prog.A.rightCols(2) - A1_expect).cwiseAbs().maxCoeff() <= 1e-15);

  VectorXd b_expect(4);
  b_expect << 2, 0, 0, -2;
  REQUIRE((prog.b_lin - b_expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relu no-skip program basics") {
  auto d = make_dataset_1d(std::vector<double>{0.0, 1.0});
  auto prog = build_sm_program(d, cfg_of(Activation::ReLU, false, 1.0));
  REQUIRE(prog.k() == 8);
  REQUIRE(prog.b_lin.cwiseAbs().maxCoeff() == 2.0);  // ||b||_inf = n

  // column sums of the indicator matrices for sorted data
  auto big = make_dataset_1d(randn_vec(37, 3));
  auto prog2 = build_sm_program(big, cfg_of(Activation::ReLU, false, 1.0));
  REQUIRE(prog2.b_lin.cwiseAbs().maxCoeff() == 37.0);
  // first column counts every point at or above the minimum
  REQUIRE(prog2.b_lin[0] == 37.0);
}

TEST_CASE("no-skip columns are mean-free") {
  auto d = make_dataset_1d(randn_vec(23, 17));
  for (auto act : {Activation::ReLU, Activation::Abs}) {
    auto prog = build_sm_program(d, cfg_of(act, false, 1.5));
    VectorXd colsums = prog.A.colwise().sum();
    REQUIRE(colsums.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("feasibility thresholds on beta") {
  auto d = make_dataset_1d(std::vector<double>{-1.0, 0.2, 0.9});
  for (bool skip : {false, true}) {
    try {
      build_sm_program(d, cfg_of(Activation::ReLU, skip, 0.5));
      FAIL("expected BetaTooSmall");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::beta_too_small);
    }
  }
  // abs + skip needs beta >= 2
  REQUIRE_THROWS_AS(build_sm_program(d, cfg_of(Activation::Abs, true, 1.5)), Error);
  REQUIRE_NOTHROW(build_sm_program(d, cfg_of(Activation::Abs, true, 2.0)));
}

TEST_CASE("beta thresholds") {
  SECTION("relu two points") {
    auto d = make_dataset_1d(std::vector<double>{-1.0, 1.0});
    auto th = compute_beta_thresholds(d, cfg_of(Activation::ReLU, false, 1.5));
    REQUIRE(th.b_inf == 2.0);
    REQUIRE(th.beta_low < th.b_inf);
  }
  SECTION("symmetric data keeps a regime open") {
    VectorXd xs(6);
    xs << -2.5, -1.5, -0.5, 0.5, 1.5, 2.5;
    auto d = make_dataset_1d(xs);
    for (auto act : {Activation::ReLU, Activation::Abs}) {
      auto th = compute_beta_thresholds(d, cfg_of(act, false, 1.5));
      REQUIRE(th.b_inf == 6.0);
      REQUIRE(th.beta_low < th.b_inf);

      // oracle: evaluate the stationarity expression of the candidate solution
      // over inactive columns at a beta just above the reported threshold and
      // just below it, and confirm the claimed transition.
      auto prog = build_sm_program(d, cfg_of(act, false, 2.0));
      auto [i0, i1] = spike_columns(prog);
      const double nv = 6.0 * d.v;
      VectorXd g = prog.A.transpose() * prog.A.col(i0);
      auto max_inactive = [&](double beta) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < prog.k(); ++j) {
          if (j == i0 || j == i1) continue;
          worst = std::max(worst, std::abs(prog.b_lin[j] + g[j] / nv * (beta - 6.0)));
        }
        return worst;
      };
      if (th.beta_low > 1.0) {
        const double above = th.beta_low + 1e-6;
        REQUIRE(max_inactive(above) <= above + 1e-5);
        const double below = th.beta_low - 1e-3;
        REQUIRE(max_inactive(below) > below);
      }
    }
  }
  SECTION("n standard normal draws have b_inf = n") {
    auto d = make_dataset_1d(randn_vec(500, 2024));
    auto th = compute_beta_thresholds(d, cfg_of(Activation::ReLU, false, 1.5));
    REQUIRE(th.b_inf == 500.0);
  }
  SECTION("not applicable for skip variants") {
    auto d = make_dataset_1d(std::vector<double>{-1.0, 1.0});
    try {
      compute_beta_thresholds(d, cfg_of(Activation::ReLU, true, 1.5));
      FAIL("expected NotApplicable");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::not_applicable);
    }
  }
}

TEST_CASE("closed-form score in the two-spike regime") {
  auto d = make_dataset_1d(std::vector<double>{-1.0, 1.0});  // mu = 0, v = 1
  auto cfg = cfg_of(Activation::ReLU, false, 1.5);

  SECTION("interior slope and symmetry point") {
    auto s = closed_form_score(d, cfg, 0.0);
    REQUIRE(s(0.0) == Catch::Approx(0.0).margin(1e-15));
    const double slope = (s(0.5) - s(-0.5)) / 1.0;
    REQUIRE(slope == Catch::Approx((1.5 - 2.0) / (2.0 * 1.0)).margin(1e-12));  // -0.25
    REQUIRE(s(0.5) == Catch::Approx(-0.125).margin(1e-12));
  }
  SECTION("numerical solve agrees with the closed form") {
    auto prog = build_sm_program(d, cfg);
    auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), 1e-10);
    REQUIRE(sol.status == prox::SolveStatus::Converged);
    auto params = reconstruct_network(sol.y_star, d, cfg);
    auto s = closed_form_score(d, cfg, 0.0);
    for (double x : {-0.9, -0.3, 0.0, 0.5, 0.9}) {
      REQUIRE(evaluate_network(params, x) == Catch::Approx(s(x)).margin(1e-6));
    }
  }
  SECTION("t family bound enforced") {
    REQUIRE_NOTHROW(closed_form_score(d, cfg, 0.1));
    try {
      closed_form_score(d, cfg, 0.2);  // bound is (n - beta)/(2 n v) = 0.125
      FAIL("expected TOutOfRange");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::t_out_of_range);
    }
  }
  SECTION("out-of-regime beta rejected") {
    try {
      closed_form_score(d, cfg_of(Activation::ReLU, false, 1.0 - 1e-9), 0.0);
      FAIL("expected BetaOutOfRegime");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::beta_out_of_regime);
    }
  }
}

TEST_CASE("skip closed form is the data-Gaussian score") {
  auto d = make_dataset_1d(randn_vec(30, 5));
  for (auto act : {Activation::ReLU, Activation::Abs}) {
    auto cfg = cfg_of(act, true, 80.0);  // far above any threshold
    auto s = closed_form_score(d, cfg, 0.0);
    for (double x : {-2.0, 0.0, 1.3}) {
      REQUIRE(s(x) == Catch::Approx(-(x - d.mu) / d.v).margin(1e-12));
    }
  }
}

TEST_CASE("zero-threshold behavior above ||b||_inf") {
  auto d = make_dataset_1d(randn_vec(20, 7));
  for (auto act : {Activation::ReLU, Activation::Abs}) {
    auto cfg = cfg_of(act, false, 20.0 * 1.01);
    auto prog = build_sm_program(d, cfg);
    auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), 1e-10);
    REQUIRE(sol.y_star.cwiseAbs().maxCoeff() <= 1e-8);
    auto s = closed_form_score(d, cfg, 0.0);
    REQUIRE(s(0.33) == 0.0);
  }
}

TEST_CASE("reconstruction identities for degenerate solutions") {
  auto d = make_dataset_1d(std::vector<double>{-0.7, 0.1, 1.9});

  SECTION("zero solution, no skip") {
    for (auto act : {Activation::ReLU, Activation::Abs}) {
      auto cfg = cfg_of(act, false, 5.0);
      const Eigen::Index k = act == Activation::ReLU ? 12 : 6;
      auto p = reconstruct_network(VectorXd::Zero(k), d, cfg);
      REQUIRE(p.W1.cwiseAbs().maxCoeff() == 0.0);
      REQUIRE(p.b2[0] == 0.0);
      REQUIRE(evaluate_network(p, 0.4) == 0.0);
    }
  }
  SECTION("zero solution, skip") {
    for (auto act : {Activation::ReLU, Activation::Abs}) {
      auto cfg = cfg_of(act, true, 50.0);
      auto p = reconstruct_network(VectorXd::Zero(6), d, cfg);
      REQUIRE(p.V(0, 0) == Catch::Approx(-1.0 / d.v).margin(1e-12));
      REQUIRE(p.b2[0] == Catch::Approx(d.mu / d.v).margin(1e-12));
      REQUIRE(evaluate_network(p, d.mu) == Catch::Approx(0.0).margin(1e-12));
    }
  }
  SECTION("single abs coefficient") {
    // y*_1 = 4 gives w_1 = 2, alpha_1 = 2, b_1 = -2 x_1
    auto cfg = cfg_of(Activation::Abs, false, 2.0);
    VectorXd y = VectorXd::Zero(6);
    y[0] = 4.0;
    auto p = reconstruct_network(y, d, cfg);
    REQUIRE(p.W1(0, 0) == Catch::Approx(2.0));
    REQUIRE(p.W2(0, 0) == Catch::Approx(2.0));
    REQUIRE(p.b1[0] == Catch::Approx(-2.0 * d.points[0]));
  }
}

TEST_CASE("program-objective equality across all four variants") {
  // The network loss of the reconstructed parameters must match the convex
  // optimum; the loss itself is evaluated by an independent implementation.
  const double tol = 1e-6 + 10.0 * relu_bias_shift;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    auto d = make_dataset_1d(randn_vec(14, seed));
    struct Case {
      Activation act;
      bool skip;
      double beta;
    };
    for (auto c : {Case{Activation::ReLU, false, 10.0}, Case{Activation::Abs, false, 9.0},
                   Case{Activation::ReLU, true, 6.0}, Case{Activation::Abs, true, 7.5}}) {
      auto cfg = cfg_of(c.act, c.skip, c.beta);
      auto prog = build_sm_program(d, cfg);
      auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), 1e-11);
      REQUIRE(sol.status == prox::SolveStatus::Converged);
      auto params = reconstruct_network(sol.y_star, d, cfg);
      const double net_loss = baseline::loss_sm(params, d.points, c.beta);
      const double cvx = sol.objective + prog.c_const;
      INFO(variant_name(prog.variant) << " seed " << seed);
      REQUIRE(net_loss == Catch::Approx(cvx).margin(tol));
    }
  }
}

TEST_CASE("interior slope uniqueness and monotone score") {
  auto d = make_dataset_1d(randn_vec(12, 21));
  const double n = 12.0, nv = n * d.v;
  auto th = compute_beta_thresholds(d, cfg_of(Activation::ReLU, false, 2.0));
  const double beta = 0.5 * (std::max(th.beta_low, 1.0) + th.b_inf);
  auto cfg = cfg_of(Activation::ReLU, false, beta);
  auto prog = build_sm_program(d, cfg);
  auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), 1e-11);
  auto params = reconstruct_network(sol.y_star, d, cfg);

  const double x1 = d.points[0], xn = d.points[11];
  const double slope = (evaluate_network(params, 0.6 * x1 + 0.4 * xn) -
                        evaluate_network(params, 0.7 * x1 + 0.3 * xn)) /
                       (0.1 * (xn - x1));
  REQUIRE(slope == Catch::Approx((beta - n) / nv).margin(1e-6));

  // nonincreasing on a wide grid (t = 0 solution)
  VectorXd grid = VectorXd::LinSpaced(200, x1 - 2.0, xn + 2.0);
  VectorXd vals = evaluate_network(params, grid);
  for (int i = 1; i < 200; ++i) REQUIRE(vals[i] <= vals[i - 1] + 1e-9);
}

TEST_CASE("reconstructed score matches the closed form on a grid") {
  auto d = make_dataset_1d(randn_vec(15, 33));
  auto cfg = cfg_of(Activation::Abs, false, 12.0);
  auto th = compute_beta_thresholds(d, cfg);
  cfg.beta = 0.5 * (std::max(th.beta_low, 1.0) + th.b_inf);
  auto prog = build_sm_program(d, cfg);
  auto sol = prox::solve_l1_quadratic(prog.to_l1_problem(), 1e-11);
  auto params = reconstruct_network(sol.y_star, d, cfg);
  auto cf = closed_form_score(d, cfg, 0.0);

  VectorXd grid = VectorXd::LinSpaced(101, d.points[0], d.points[14]);
  VectorXd net = evaluate_network(params, grid);
  VectorXd closed = cf(grid);
  REQUIRE((net - closed).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("piecewise score continuity at breakpoints") {
  auto d = make_dataset_1d(randn_vec(9, 44));
  auto cfg = cfg_of(Activation::ReLU, false, 5.0);
  auto th = compute_beta_thresholds(d, cfg);
  cfg.beta = 0.9 * th.b_inf;
  if (cfg.beta <= th.beta_low) cfg.beta = 0.5 * (th.beta_low + th.b_inf);
  for (double t : {0.0, 0.3 * (9.0 - cfg.beta) / (2 * 9.0 * d.v)}) {
    auto s = closed_form_score(d, cfg, t);
    for (double bp : s.breakpoints) {
      REQUIRE(s(bp - 1e-9) == Catch::Approx(s(bp + 1e-9)).margin(1e-8));
    }
  }
}
