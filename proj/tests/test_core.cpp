#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

#include "scorekit/core.hpp"
#include "test_helpers.hpp"

using namespace scorekit;

TEST_CASE("make_dataset_1d sorts, caches moments, rejects bad input") {
  SECTION("symmetric pair") {
    auto d = make_dataset_1d(std::vector<double>{1.0, -1.0});
    REQUIRE(d.points[0] == -1.0);
    REQUIRE(d.points[1] == 1.0);
    REQUIRE(d.mu == 0.0);
    REQUIRE(d.v == 1.0);
  }
  SECTION("hand arithmetic with divisor n") {
    // mean (0+1+2)/3 = 1, biased variance (1+0+1)/3 = 2/3
    auto d = make_dataset_1d(std::vector<double>{0.0, 1.0, 2.0});
    REQUIRE(d.mu == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(d.v == Catch::Approx(2.0 / 3.0).margin(1e-15));
  }
  SECTION("duplicates rejected") {
    REQUIRE_THROWS_AS(make_dataset_1d(std::vector<double>{3.0, 3.0}), Error);
    try {
      make_dataset_1d(std::vector<double>{3.0, 3.0});
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::duplicate_points);
    }
  }
  SECTION("too few points") {
    try {
      make_dataset_1d(std::vector<double>{1.0});
      FAIL("expected TooFewPoints");
    } catch (const Error& e) {
      REQUIRE(e.code() == errc::too_few_points);
    }
  }
}

TEST_CASE("Dataset1D moments recompute from points") {
  auto xs = testkit::randn_vec(40, 1234);
  auto d = make_dataset_1d(xs);
  const double n = static_cast<double>(d.n());
  const double mu = d.points.sum() / n;
  const double v = (d.points.array() - mu).square().sum() / n;
  REQUIRE(std::abs(d.mu - mu) <= 1e-12);
  REQUIRE(std::abs(d.v - v) <= 1e-12);
  REQUIRE(d.v > 0.0);
}

TEST_CASE("Dataset1D canonicalization and shift properties") {
  auto base = testkit::randn_vec(25, 99);
  auto d1 = make_dataset_1d(base);

  // permutation leaves the dataset identical
  std::vector<double> shuffled(base.data(), base.data() + base.size());
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 7, shuffled.end());
  auto d2 = make_dataset_1d(shuffled);
  REQUIRE((d1.points - d2.points).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(d1.mu == d2.mu);
  REQUIRE(d1.v == d2.v);

  // shifting all points by c shifts mu by c and leaves v unchanged
  for (double c : {0.5, -3.25, 11.0}) {
    auto ds = make_dataset_1d(VectorXd(base.array() + c));
    REQUIRE(std::abs(ds.mu - (d1.mu + c)) <= 1e-12);
    REQUIRE(std::abs(ds.v - d1.v) <= 1e-12);
  }
}

TEST_CASE("make_dataset_nd rank via SVD cutoff") {
  SECTION("identity") {
    auto d = make_dataset_nd(MatrixXd::Identity(2, 2));
    REQUIRE(d.rank_r == 2);
  }
  SECTION("proportional rows") {
    MatrixXd X(2, 2);
    X << 1, 2, 2, 4;
    REQUIRE(make_dataset_nd(X).rank_r == 1);
  }
  SECTION("random full rank") {
    auto X = testkit::randn_mat(5, 3, 42);
    // SVD oracle computed independently of make_dataset_nd
    Eigen::JacobiSVD<MatrixXd> svd(X);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++r;
    REQUIRE(r == 3);
    REQUIRE(make_dataset_nd(X).rank_r == 3);
  }
  SECTION("empty rejected") {
    REQUIRE_THROWS_AS(make_dataset_nd(MatrixXd(0, 2)), Error);
  }
}

TEST_CASE("noise schedule validation") {
  REQUIRE_NOTHROW(make_noise_schedule({0.5, 0.1, 0.05, 0.03, 0.01}, {5, 5, 5, 5, 15}));
  REQUIRE_THROWS_AS(make_noise_schedule({0.1, 0.5}, {1, 1}), Error);
  REQUIRE_THROWS_AS(make_noise_schedule({0.5, -0.1}, {1, 1}), Error);
  REQUIRE_THROWS_AS(make_noise_schedule({0.5}, {1, 1}), Error);
}

TEST_CASE("network evaluation basics") {
  auto p = zero_network(Activation::ReLU, 3, 1);
  REQUIRE(evaluate_network(p, 0.7) == 0.0);

  // single abs neuron: 2 |x - 1| + 0.5
  auto q = zero_network(Activation::Abs, 1, 1);
  q.W1(0, 0) = 1.0;
  q.b1[0] = -1.0;
  q.W2(0, 0) = 2.0;
  q.b2[0] = 0.5;
  REQUIRE(evaluate_network(q, 3.0) == Catch::Approx(4.5));
  REQUIRE(evaluate_network(q, 0.0) == Catch::Approx(2.5));
}
