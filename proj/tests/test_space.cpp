#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "spherear/space.hpp"
#include "spherear/skew.hpp"

using namespace spherear;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("weighted inner product") {
  const auto w = make_weights((Vec(2) << 0.5, 0.5).finished());
  const AmbientVector x = ambient((Vec(2) << 1, 2).finished(), w);
  const AmbientVector y = ambient((Vec(2) << 3, 4).finished(), w);
  CHECK(inner(x, y) == doctest::Approx(5.5).epsilon(1e-15));  // .5*3 + .5*8

  const AmbientVector e1 = ambient({1, 0});
  const AmbientVector e2 = ambient({0, 1});
  CHECK(inner(e1, e2) == 0.0);
  CHECK(inner(e1, e1) == 1.0);

  const AmbientVector long5 = ambient({1, 0, 0, 0, 0});
  CHECK_THROWS_AS((void)inner(e1, long5), DimensionError);
  CHECK_THROWS_WITH_AS((void)inner(e1, long5),
                       doctest::Contains("2"), DimensionError);

  const auto w2 = make_weights((Vec(2) << 0.5, 1.0).finished());
  const AmbientVector z = ambient((Vec(2) << 1, 2).finished(), w2);
  CHECK_THROWS_AS((void)inner(x, z), DimensionError);
}

TEST_CASE("unit norm enforced on sphere points") {
  CHECK_THROWS_AS(SpherePoint(ambient({1, 1})), DomainError);
  CHECK_NOTHROW(SpherePoint(ambient({1, 0})));
  const SpherePoint p = SpherePoint::normalized(ambient({3, 4}));
  CHECK(p.v.values[0] == doctest::Approx(0.6));
  CHECK(p.v.values[1] == doctest::Approx(0.8));
}

TEST_CASE("geodesic distance basics") {
  const SpherePoint e1 = sphere_point({1, 0});
  const SpherePoint e2 = sphere_point({0, 1});
  CHECK(geodesic_distance(e1, e1) == 0.0);
  CHECK(geodesic_distance(e1, e2) == doctest::Approx(kPi / 2).epsilon(1e-14));
  const SpherePoint a = sphere_point({1, 0, 0});
  const SpherePoint b = sphere_point({1 / std::sqrt(2.0), 1 / std::sqrt(2.0), 0});
  CHECK(geodesic_distance(a, b) == doctest::Approx(kPi / 4).epsilon(1e-12));
  CHECK(geodesic_distance(b, a) == doctest::Approx(geodesic_distance(a, b)));
}

TEST_CASE("geodesic point endpoints and midpoint") {
  const SpherePoint e1 = sphere_point({1, 0});
  const SpherePoint e2 = sphere_point({0, 1});
  CHECK(geodesic_distance(geodesic_point(e1, e2, 0.0), e1) < 1e-12);
  CHECK(geodesic_distance(geodesic_point(e1, e2, 1.0), e2) < 1e-12);
  const SpherePoint mid = geodesic_point(e1, e2, 0.5);
  CHECK(mid.v.values[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mid.v.values[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

  // identical points: any parameter returns x1
  CHECK(geodesic_distance(geodesic_point(e1, e1, 0.7), e1) == 0.0);
  const SpherePoint anti = sphere_point({-1, 0});
  CHECK_THROWS_AS(geodesic_point(e1, anti, 0.5), DomainError);
}

TEST_CASE("geodesic properties on random pairs") {
  CounterRng rng(2024);
  const auto w = unit_weights(6);
  for (int rep = 0; rep < 50; ++rep) {
    const SpherePoint x1 = oracle::random_sphere_point(rng, w);
    const SpherePoint x2 = oracle::random_sphere_point(rng, w);
    const double a = rng.uniform01();
    const SpherePoint g = geodesic_point(x1, x2, a);
    CHECK(std::abs(norm(g.v) - 1.0) <= 1e-9);
    const double total = geodesic_distance(x1, x2);
    CHECK(geodesic_distance(x1, g) ==
          doctest::Approx(a * total).epsilon(1e-9));
    CHECK(geodesic_distance(x1, g) + geodesic_distance(g, x2) ==
          doctest::Approx(total).epsilon(1e-8));
  }
}

TEST_CASE("frechet mean trivial cases") {
  const SpherePoint p = sphere_point({0.6, 0.8, 0});
  std::vector<SpherePoint> single{p};
  CHECK(geodesic_distance(frechet_mean(single), p) < 1e-12);

  const SpherePoint q = sphere_point({0, 0.8, 0.6});
  std::vector<SpherePoint> two{p, q};
  const SpherePoint mid = geodesic_point(p, q, 0.5);
  CHECK(geodesic_distance(frechet_mean(two), mid) < 1e-9);
}

TEST_CASE("frechet mean of the coordinate frame") {
  std::vector<SpherePoint> pts{sphere_point({1, 0, 0}), sphere_point({0, 1, 0}),
                               sphere_point({0, 0, 1})};
  const SpherePoint m = frechet_mean(pts);
  const double c = 1.0 / std::sqrt(3.0);
  for (int i = 0; i < 3; ++i)
    CHECK(m.v.values[i] == doctest::Approx(c).epsilon(1e-9));
}

TEST_CASE("frechet mean is permutation invariant") {
  CounterRng rng(7);
  const auto w = unit_weights(4);
  std::vector<SpherePoint> pts;
  // cluster around e1 so the mean is unique
  for (int i = 0; i < 12; ++i) {
    Vec v = 0.25 * oracle::random_vector(rng, 4);
    v[0] += 1.0;
    pts.push_back(SpherePoint::normalized(ambient(std::move(v), w)));
  }
  const SpherePoint m1 = frechet_mean(pts);
  std::vector<SpherePoint> shuffled(pts.rbegin(), pts.rend());
  std::rotate(shuffled.begin(), shuffled.begin() + 5, shuffled.end());
  const SpherePoint m2 = frechet_mean(shuffled);
  CHECK(geodesic_distance(m1, m2) < 1e-9);
}

TEST_CASE("frechet mean fixed by rotations fixing the inputs") {
  // Points in span{e1,e2} of R^4; rotate in span{e3,e4}: inputs are
  // fixed, so the mean must be too.
  std::vector<SpherePoint> pts{
      sphere_point({1, 0, 0, 0}),
      sphere_point({0.8, 0.6, 0, 0}),
      sphere_point({0.6, 0.8, 0, 0}),
  };
  const SpherePoint m = frechet_mean(pts);
  SkewOperator rot = SkewOperator::zero(4, pts[0].v.weights);
  Vec e3 = Vec::Zero(4), e4 = Vec::Zero(4);
  e3[2] = 1.0;
  e4[3] = 1.0;
  rot.atoms.push_back(SkewAtom{0.9, e3, e4});
  for (const auto& p : pts)
    CHECK(geodesic_distance(rotate(rot, p), p) < 1e-12);
  CHECK(geodesic_distance(rotate(rot, m), m) < 1e-12);
}

TEST_CASE("frechet mean gradient is small at the reported minimizer") {
  CounterRng rng(99);
  const auto w = make_weights((Vec(5) << 0.2, 0.3, 0.1, 0.25, 0.15).finished());
  std::vector<SpherePoint> pts;
  for (int i = 0; i < 20; ++i) {
    Vec v = 0.3 * oracle::random_vector(rng, 5);
    v[0] += 2.0;
    pts.push_back(SpherePoint::normalized(ambient(std::move(v), w)));
  }
  const SpherePoint m = frechet_mean(pts);
  // Riemannian gradient at m: mean of log maps, evaluated by hand.
  Vec grad = Vec::Zero(5);
  for (const auto& x : pts) {
    const double c = std::clamp(inner(m.v, x.v), -1.0, 1.0);
    Vec u = x.v.values - c * m.v.values;
    const double nu = norm(AmbientVector{u, w});
    if (nu > 1e-15) grad += (std::acos(c) / nu) * u;
  }
  grad /= static_cast<double>(pts.size());
  CHECK(norm(AmbientVector{grad, w}) <= 1e-8);
}

TEST_CASE("frechet mean rejects empty input") {
  std::vector<SpherePoint> none;
  CHECK_THROWS_AS(frechet_mean(none), DomainError);
}
