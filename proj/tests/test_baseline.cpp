#include <catch2/catch_amalgamated.hpp>

#include "scorekit/baseline.hpp"
#include "scorekit/dsm1d.hpp"
#include "scorekit/sm1d.hpp"
#include "test_helpers.hpp"

using namespace scorekit;
using namespace scorekit::baseline;
using testkit::randn_vec;

TEST_CASE("loss_sm hand values") {
  SECTION("zero params, no skip") {
    auto p = zero_network(Activation::ReLU, 4, 1);
    VectorXd xs(2);
    xs << -1, 1;
    REQUIRE(loss_sm(p, xs, 3.0) == 0.0);
  }
  SECTION("one relu neuron on a single point") {
    // w = alpha = 1, b = 0, x = 1: 1/2 * 1 + 1 + beta
    auto p = zero_network(Activation::ReLU, 1, 1);
    p.W1(0, 0) = 1.0;
    p.W2(0, 0) = 1.0;
    VectorXd xs(1);
    xs << 1.0;
    for (double beta : {0.0, 0.5, 2.0}) {
      REQUIRE(loss_sm(p, xs, beta) == Catch::Approx(1.5 + beta).margin(1e-15));
    }
  }
}

TEST_CASE("loss_dsm hand values") {
  SECTION("zero params, zero labels") {
    auto p = zero_network(Activation::ReLU, 3, 1);
    VectorXd xs = randn_vec(5, 3);
    REQUIRE(loss_dsm(p, xs, VectorXd::Zero(5), 1.0) == 0.0);
  }
  SECTION("constant predictor at the label mean") {
    VectorXd xs = randn_vec(6, 4);
    VectorXd l = randn_vec(6, 5);
    auto p = zero_network(Activation::ReLU, 2, 1);
    p.b2[0] = l.mean();
    const double expect = 0.5 * (l.array() - l.mean()).square().sum();
    REQUIRE(loss_dsm(p, xs, l, 0.0) == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("loss evaluation agrees with the forward-map assembly") {
  // Assemble the SM loss from evaluate_network plus the explicit trace and
  // regularizer terms and compare against loss_sm on shared parameters.
  auto xs = randn_vec(9, 6);
  auto p = zero_network(Activation::Abs, 5, 1);
  p.W1.col(0) = randn_vec(5, 7);
  p.b1 = randn_vec(5, 8);
  p.W2.col(0) = randn_vec(5, 9);
  p.b2[0] = 0.3;
  p.V(0, 0) = -0.2;

  const double beta = 1.7;
  double assembled = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    const double s = evaluate_network(p, xs[i]);
    assembled += 0.5 * s * s;
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double z = p.W1(j, 0) * xs[i] + p.b1[j];
      assembled += p.W1(j, 0) * p.W2(j, 0) * sign_pos(z);
    }
    assembled += p.V(0, 0);
  }
  assembled += 0.5 * beta * (p.W1.col(0).squaredNorm() + p.W2.col(0).squaredNorm());
  REQUIRE(loss_sm(p, xs, beta) == Catch::Approx(assembled).margin(1e-12));
}

TEST_CASE("gradient check") {
  SECTION("DSM random instance") {
    auto xs = randn_vec(12, 11);
    auto l = randn_vec(12, 12);
    auto p = zero_network(Activation::ReLU, 6, 1);
    p.W1.col(0) = randn_vec(6, 13);
    p.b1 = randn_vec(6, 14);
    p.W2.col(0) = randn_vec(6, 15);
    p.b2[0] = -0.4;
    REQUIRE(grad_check(p, xs, l, Objective::DSM, 0.8) <= 1e-5);
  }
  SECTION("zero params: regularizer gradient vanishes") {
    auto xs = randn_vec(4, 16);
    auto p = zero_network(Activation::ReLU, 3, 1);
    auto g = analytic_gradient(p, xs, std::nullopt, Objective::SM, 2.5);
    REQUIRE(g.w.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(g.alpha.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("SM away from activation boundaries") {
    VectorXd xs(4);
    xs << -1.3, -0.4, 0.6, 1.8;
    auto p = zero_network(Activation::ReLU, 4, 1);
    p.W1.col(0) << 1.0, -1.0, 0.7, 0.9;
    p.b1 << 0.11, 0.23, 0.37, -0.49;  // margins >= 1e-2 from every kink
    p.W2.col(0) << 0.5, -0.8, 0.2, 0.6;
    p.b2[0] = 0.1;
    REQUIRE(grad_check(p, xs, std::nullopt, Objective::SM, 1.2) <= 1e-5);
  }
}

TEST_CASE("adam training basics") {
  auto xs = randn_vec(16, 21);
  auto delta = randn_vec(16, 22);
  const double eps_noise = 0.3;
  VectorXd noisy = xs + eps_noise * delta;
  VectorXd labels = -delta / eps_noise;

  TrainConfig cfg;
  cfg.objective = Objective::DSM;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 400;
  cfg.m = 32;
  cfg.seed = 5;
  cfg.arch.beta = 0.2;

  SECTION("fixed seed gives a bit-identical loss curve") {
    auto r1 = adam_train(cfg, noisy, labels);
    auto r2 = adam_train(cfg, noisy, labels);
    REQUIRE(r1.loss_curve.size() == r2.loss_curve.size());
    for (std::size_t i = 0; i < r1.loss_curve.size(); ++i)
      REQUIRE(r1.loss_curve[i] == r2.loss_curve[i]);
  }

  SECTION("training lower-bounded by the convex optimum") {
    auto d = make_dataset_1d(noisy);
    // labels must be permuted to the sorted order used by the program
    std::vector<std::pair<double, double>> paired(16);
    for (int i = 0; i < 16; ++i) paired[i] = {noisy[i], labels[i]};
    std::sort(paired.begin(), paired.end());
    VectorXd sorted_labels(16);
    for (int i = 0; i < 16; ++i) sorted_labels[i] = paired[i].second;

    auto prog = dsm1d::build_dsm_program(d, sorted_labels, eps_noise, Activation::ReLU,
                                         cfg.arch.beta);
    auto sol = prox::solve_lasso(prog.A, prog.target, cfg.arch.beta, 1e-10);
    const double cvx = sol.objective;

    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t s = 0; s < 10; ++s) {
      TrainConfig c = cfg;
      c.seed = s;
      auto r = adam_train(c, noisy, labels);
      REQUIRE_FALSE(r.diverged);
      best = std::min(best, r.loss_curve.back());
    }
    REQUIRE(best >= cvx - 1e-6);
  }
}
