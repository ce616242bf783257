#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "exirt/curves.hpp"
#include "exirt/errors.hpp"

using namespace exirt;

TEST_CASE("default grid") {
  const auto g = theta_grid();
  REQUIRE(g.size() == 161);
  CHECK(g(0) == -4.0);
  CHECK(g(160) == 4.0);
  CHECK(g(80) == 0.0);
  for (Eigen::Index k = 1; k < g.size(); ++k) CHECK(g(k) - g(k - 1) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(theta_grid(1.0, 1.0, 0.1).size() == 1);
  CHECK_THROWS_AS(theta_grid(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(theta_grid(1.0, 0.0, 0.1), Error);
}

TEST_CASE("single item a=1, b=0") {
  std::vector<ItemParameters> items{{"x", 1.0, 0.0}};
  const auto t = sample_curves(items, theta_grid());
  CHECK(t.prob(80, 0) == 0.5);
  CHECK(t.info(80, 0) == 0.25);
  CHECK(t.tif(80) == 0.25);
}

TEST_CASE("tif equals summed information and curves pass their landmarks") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(-2.5, 2.5), ub(-3.5, 3.5);
  std::vector<ItemParameters> items;
  for (int j = 0; j < 12; ++j) items.push_back({"i" + std::to_string(j), ua(rng), ub(rng)});
  const auto grid = theta_grid();
  const auto t = sample_curves(items, grid);
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    double sum = 0;
    for (const auto& it : items) {
      const double p = 1.0 / (1.0 + std::exp(-it.a * (grid(k) - it.b)));
      sum += it.a * it.a * p * (1 - p);
    }
    CHECK(t.tif(k) == doctest::Approx(sum).epsilon(1e-12));
    CHECK(std::abs(t.tif(k) - t.info.row(k).sum()) <= 1e-12);
  }
  for (std::size_t j = 0; j < items.size(); ++j) {
    CHECK(std::abs(icc_prob(items[j].a, items[j].b, items[j].b) - 0.5) <= 1e-9);
    Eigen::Index peak;
    t.info.col(static_cast<Eigen::Index>(j)).maxCoeff(&peak);
    CHECK(std::abs(grid(peak) - items[j].b) <= 0.05 + 1e-12);
  }
}

TEST_CASE("grid validation") {
  std::vector<ItemParameters> items{{"x", 1.0, 0.0}};
  try {
    sample_curves(items, Eigen::VectorXd());
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyGrid);
  }
  Eigen::VectorXd descending(3);
  descending << 1, 0, -1;
  CHECK_THROWS_AS(sample_curves(items, descending), Error);
}

TEST_CASE("difficult at average ability") {
  CHECK(difficult_at_average({"x", 1.0, 0.5}));
  CHECK(icc_prob(1.0, 0.5, 0.0) == doctest::Approx(0.3775).epsilon(1e-4));
  CHECK_FALSE(difficult_at_average({"x", 1.0, 0.0}));
  CHECK_FALSE(difficult_at_average({"x", -0.5, 6.72}));
  CHECK(icc_prob(-0.5, 6.72, 0.0) == doctest::Approx(0.966).epsilon(1e-3));
}

TEST_CASE("curves csv layout") {
  std::vector<ItemParameters> items{{"p", 1.0, 0.0}, {"q", 2.0, 0.0}};
  std::stringstream io;
  write_curves_csv(io, sample_curves(items, theta_grid(-1, 1, 1)));
  std::vector<std::string> lines;
  for (std::string line; std::getline(io, line);) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "# schema_version: 1");
  CHECK(lines[1] == "theta,icc_p,icc_q,iic_p,iic_q,tif");
  CHECK(lines[2].rfind("-1,", 0) == 0);
  CHECK(lines[3] == "0,0.5,0.5,0.25,1,1.25");
  CHECK(lines[4].rfind("1,", 0) == 0);
}
