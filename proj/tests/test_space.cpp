#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "czcurve/rng.hpp"
#include "czcurve/space.hpp"

using namespace czcurve;

namespace {

FiniteMetricSpace collinear3() {
  // points {0, 1, 2} on the line
  std::vector<double> d = {0, 1, 2, 1, 0, 1, 2, 1, 0};
  return FiniteMetricSpace({"a", "b", "c"}, d);
}

PointCloud grid2d(int nx, int ny, double h) {
  PointCloud c;
  c.dim = 2;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) c.xs.insert(c.xs.end(), {i * h, j * h});
  return c;
}

PointCloud random_cloud(Rng& rng, int n, int dim, double side) {
  PointCloud c;
  c.dim = dim;
  for (int i = 0; i < n * dim; ++i) c.xs.push_back(rng.uniform(0.0, side));
  return c;
}

}  // namespace

TEST_CASE("metric space validation") {
  CHECK_NOTHROW(collinear3());
  std::vector<double> bad = {0, 1, 3, 1, 0, 1, 3, 1, 0};  // d(a,c) > d(a,b)+d(b,c)
  CHECK_THROWS_AS(FiniteMetricSpace({"a", "b", "c"}, bad), std::invalid_argument);
  std::vector<double> asym = {0, 1, 2, 0};
  CHECK_THROWS_AS(FiniteMetricSpace({"a", "b"}, asym), std::invalid_argument);
  std::vector<double> dup = {0, 0, 0, 0};
  CHECK_THROWS_AS(FiniteMetricSpace({"a", "b"}, dup), std::invalid_argument);
}

TEST_CASE("kuratowski embedding: two points") {
  FiniteMetricSpace m({"a", "b"}, {0, 1, 1, 0});
  PointCloud e = kuratowski_embed(m);
  CHECK(e.point(0) == Vec{0, 1});
  CHECK(e.point(1) == Vec{1, 0});
  NormedSpace sup = NormedSpace::sup_norm(2);
  CHECK(sup.dist(e.pt(0), e.pt(1)) == 1.0);
}

TEST_CASE("kuratowski embedding: single point") {
  FiniteMetricSpace m({"a"}, {0});
  PointCloud e = kuratowski_embed(m);
  CHECK(e.size() == 1);
  CHECK(e.point(0) == Vec{0});
}

TEST_CASE("kuratowski embedding: random 200-point grid subset is isometric") {
  Rng rng(2024);
  PointCloud cloud = random_cloud(rng, 200, 3, 10.0);
  auto M = FiniteMetricSpace::from_cloud(cloud, NormedSpace::euclidean(3));
  PointCloud e = kuratowski_embed(M);
  CHECK(kuratowski_isometry_defect(M, e) <= 1e-12);
}

TEST_CASE("doubling constant: collinear points") {
  auto M = collinear3();
  // r=2 centered at the middle point: the closed radius-1 ball at the middle
  // already covers {0,1,2}, so the exhaustive minimum is 1.
  auto res = doubling_constant(M, {2.0});
  CHECK(res.value == 1);
  CHECK(res.exact);

  // Five collinear points, r=3 at the middle: no single closed radius-1.5
  // ball covers {0..4}, but the two balls at points 1 and 3 do.
  PointCloud c;
  c.dim = 1;
  c.xs = {0, 1, 2, 3, 4};
  auto M5 = FiniteMetricSpace::from_cloud(c, NormedSpace::euclidean(1));
  auto res5 = doubling_constant(M5, {3.0});
  CHECK(res5.value == 2);
  CHECK(res5.exact);
}

TEST_CASE("doubling constant: single point") {
  FiniteMetricSpace M({"a"}, {0});
  CHECK(doubling_constant(M, {1.0}).value == 1);
}

TEST_CASE("doubling constant: planar grid under sup metric") {
  PointCloud cloud = grid2d(16, 16, 1.0);
  auto M = FiniteMetricSpace::from_cloud(cloud, NormedSpace::sup_norm(2));
  auto res = doubling_constant(M, {2.0, 4.0, 8.0});
  CHECK(res.value <= 16);
  CHECK(res.value >= 2);
}

TEST_CASE("doubling constant monotone under radius-grid subsetting") {
  Rng rng(7);
  PointCloud cloud = random_cloud(rng, 60, 2, 4.0);
  auto M = FiniteMetricSpace::from_cloud(cloud, NormedSpace::euclidean(2));
  std::vector<double> full = {0.5, 1.0, 2.0, 4.0};
  auto all = doubling_constant(M, full);
  auto sub = doubling_constant(M, {1.0, 4.0});
  CHECK(sub.value <= all.value);
}

TEST_CASE("upper regularity: uniform measure on a segment") {
  const int K = 128;
  PointCloud c;
  c.dim = 1;
  std::vector<double> w(K, 1.0 / K);
  for (int i = 0; i < K; ++i) c.xs.push_back((i + 0.5) / K);
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), w);
  auto res = upper_regularity_constant(mu, 1, 2.0 / K, 1.0);
  CHECK(res.c_nu >= 1.0);
  CHECK(res.c_nu <= 3.0);
}

TEST_CASE("upper regularity: single atom") {
  PointCloud c;
  c.dim = 1;
  c.xs = {0.0};
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), {1.0});
  auto res = upper_regularity_constant(mu, 1, 1.0, 4.0);
  CHECK(res.c_nu == 1.0);
}

TEST_CASE("upper regularity: two unit atoms at distance 1") {
  PointCloud c;
  c.dim = 1;
  c.xs = {0.0, 1.0};
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), {1.0, 1.0});
  auto res = upper_regularity_constant(mu, 1, 2.0, 2.0);
  CHECK(res.c_nu == Catch::Approx(1.0));  // ratio 2/2 at r = 2
}

TEST_CASE("upper regularity scales exactly with the weights") {
  Rng rng(11);
  PointCloud cloud = random_cloud(rng, 40, 2, 2.0);
  std::vector<double> w(40);
  for (auto& x : w) x = rng.uniform(0.1, 1.0);
  auto mu = DiscreteMeasure::on_cloud(cloud, NormedSpace::euclidean(2), w);
  std::vector<double> w4 = w;
  for (auto& x : w4) x *= 4.0;  // power of two keeps the scaling exact in fp
  auto mu4 = DiscreteMeasure::on_cloud(cloud, NormedSpace::euclidean(2), w4);
  auto a = upper_regularity_constant(mu, 1, 0.125, 2.0);
  auto b = upper_regularity_constant(mu4, 1, 0.125, 2.0);
  CHECK(b.c_nu == 4.0 * a.c_nu);
}

TEST_CASE("regularity constants: discretized unit circle") {
  const int K = 1024;
  PointCloud c;
  c.dim = 2;
  std::vector<double> w(K, 2 * M_PI / K);
  for (int i = 0; i < K; ++i) {
    double t = 2 * M_PI * i / K;
    c.xs.insert(c.xs.end(), {std::cos(t), std::sin(t)});
  }
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(2), w);
  auto res = regularity_constants(mu, 0.05, 1.0);
  CHECK(res.reg >= 1.0);
  CHECK(res.reg <= M_PI);
  CHECK(res.regular);
}

TEST_CASE("regularity constants: uniform segment stays near 2 on interior scales") {
  const int K = 512;
  PointCloud c;
  c.dim = 1;
  std::vector<double> w(K, 1.0 / K);
  for (int i = 0; i < K; ++i) c.xs.push_back((i + 0.5) / K);
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), w);
  // Open-ball counts jump just above each shell: the ratio can reach
  // (2m+1)/m at radius m/K, so with r_min = 16/K the exact cap is 33/16.
  auto res = regularity_constants(mu, 16.0 / K, 0.25);
  CHECK(res.c_upper <= 33.0 / 16.0 + 1e-9);
  CHECK(res.c_upper >= 1.5);
}

TEST_CASE("regularity constants: atom flags non-regular") {
  PointCloud c;
  c.dim = 1;
  c.xs = {0.0};
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), {1.0});
  auto res = regularity_constants(mu, 1.0, 1e7);
  CHECK(res.c_lower == Catch::Approx(1e-7));
  CHECK_FALSE(res.regular);
}

TEST_CASE("regularity constants reject zero mass") {
  PointCloud c;
  c.dim = 1;
  c.xs = {0.0};
  auto mu = DiscreteMeasure::on_cloud(c, NormedSpace::euclidean(1), {0.0});
  CHECK_THROWS_AS(regularity_constants(mu, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("upper_regularity_exact dominates every ball on dyadic radii") {
  Rng rng(3);
  PointCloud cloud = random_cloud(rng, 50, 2, 3.0);
  std::vector<double> w(50);
  for (auto& x : w) x = rng.uniform(0.0, 1.0);
  auto mu = DiscreteMeasure::on_cloud(cloud, NormedSpace::euclidean(2), w);
  double rmin = 0.25;
  double c = upper_regularity_exact(mu, 1, rmin);
  for (auto i : mu.support()) {
    for (int k = 0; k < 8; ++k) {
      double r = rmin * std::exp2(k * 0.5);
      CHECK(mu.ball_mass(i, r) <= c * r + 1e-12);
    }
  }
}

TEST_CASE("norm axioms hold on random triples") {
  Rng rng(99);
  for (double p : {2.0, 3.0, 1.5}) {
    NormedSpace sp = NormedSpace::p_norm(3, p);
    for (int trial = 0; trial < 50; ++trial) {
      Vec x = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      Vec y = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      double r = rng.uniform(-3, 3);
      CHECK(sp.norm(x) >= 0.0);
      CHECK(sp.norm(scale(x, r)) == Catch::Approx(std::fabs(r) * sp.norm(x)).margin(1e-12));
      CHECK(sp.norm(add(x, y)) <= sp.norm(x) + sp.norm(y) + 1e-12);
    }
  }
  NormedSpace sup = NormedSpace::sup_norm(3);
  CHECK(sup.norm(Vec{1.0, -2.0, 0.5}) == 2.0);
  CHECK_THROWS_AS(NormedSpace::p_norm(2, 1.0), std::invalid_argument);
}
