#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stap/geometry.hpp"

using namespace stap;

TEST(Angles, AtanStarRange) {
  EXPECT_DOUBLE_EQ(atan_star(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(atan_star(1.0, 0.0), kPi / 2);
  EXPECT_DOUBLE_EQ(atan_star(0.0, -1.0), -kPi);  // pi maps to -pi
  EXPECT_DOUBLE_EQ(atan_star(-0.0, -1.0), -kPi);
  EXPECT_DOUBLE_EQ(atan_star(-1.0, 0.0), -kPi / 2);
  EXPECT_THROW(atan_star(0.0, 0.0), UndefinedDirection);
}

TEST(Angles, WrapIsHalfOpen) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), -kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(-3 * kPi / 2), kPi / 2, 1e-15);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double w = wrap_angle(a);
    EXPECT_GE(w, -kPi);
    EXPECT_LT(w, kPi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-12);
    EXPECT_NEAR(std::sin(w), std::sin(a), 1e-12);
  }
}

TEST(Rotation, MatchesMatrix) {
  const Mat2 r = rotation(0.7);
  const Vec2 v{1.3, -0.4};
  const Vec2 a = r * v;
  const Vec2 b = rotate(std::cos(0.7), std::sin(0.7), v);
  EXPECT_NEAR(a.x, b.x, 1e-15);
  EXPECT_NEAR(a.y, b.y, 1e-15);
  const Vec2 back = rotate_back(std::cos(0.7), std::sin(0.7), a);
  EXPECT_NEAR(back.x, v.x, 1e-15);
  EXPECT_NEAR(back.y, v.y, 1e-15);
}

TEST(Bearings, ZeroStepCarriesPrevious) {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {1, 0}, {1, 1}};
  const Bearings b = compute_bearings(pts, {-1, -1});
  EXPECT_NEAR(b.initial, kPi / 4, 1e-15);
  EXPECT_DOUBLE_EQ(b.step[0], 0.0);
  EXPECT_DOUBLE_EQ(b.step[1], 0.0);
  EXPECT_DOUBLE_EQ(b.step[2], kPi / 2);
  EXPECT_DOUBLE_EQ(b.before(0), b.initial);
  EXPECT_DOUBLE_EQ(b.before(2), 0.0);
}

TEST(Bearings, CoincidentS0Throws) {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {2, 0}};
  EXPECT_THROW(compute_bearings(pts, {0, 0}), UndefinedDirection);
}

TEST(Metrics, RoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  Path p;
  p.s0 = {0.2, -0.1};
  for (int i = 0; i < 50; ++i) p.points.push_back({u(rng), u(rng)});
  const MovementMetrics m = path_to_metrics(p);
  for (std::size_t i = 0; i < m.theta.size(); ++i) {
    EXPECT_GE(m.theta[i], -kPi);
    EXPECT_LT(m.theta[i], kPi);
    EXPECT_NEAR(m.r[i], norm(p.points[i + 1] - p.points[i]), 1e-14);
    // y is v seen from the previous heading: its direction is the turn.
    EXPECT_NEAR(m.y[i].x, m.r[i] * std::cos(m.theta[i]), 1e-12);
    EXPECT_NEAR(m.y[i].y, m.r[i] * std::sin(m.theta[i]), 1e-12);
  }
  const Path q = metrics_to_path(p.points[0], m.phi0, m.theta, m.r);
  ASSERT_EQ(q.points.size(), p.points.size());
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    EXPECT_NEAR(q.points[i].x, p.points[i].x, 1e-10);
    EXPECT_NEAR(q.points[i].y, p.points[i].y, 1e-10);
  }
  // s0 is placed one unit behind s1 along the initial bearing.
  EXPECT_NEAR(atan_star(q.points[0] - q.s0), m.phi0, 1e-12);
  EXPECT_NEAR(norm(q.points[0] - q.s0), 1.0, 1e-12);
}

TEST(Metrics, ZeroStepTurnIsBearingChange) {
  Path p;
  p.s0 = {-1, 0};
  p.points = {{0, 0}, {0, 0}, {0, 1}};
  const MovementMetrics m = path_to_metrics(p);
  EXPECT_DOUBLE_EQ(m.r[0], 0.0);
  EXPECT_DOUBLE_EQ(m.theta[0], 0.0);
  EXPECT_DOUBLE_EQ(m.phi[0], 0.0);
  EXPECT_NEAR(m.theta[1], kPi / 2, 1e-15);
}

TEST(PathValidation, Rejects) {
  Path p;
  p.points = {{0, 0}, {1, 0}};
  EXPECT_THROW(p.validate(), DataError);
  p.points = {{0, 0}, {1, 0}, {2, 0}};
  p.missing = {true, false, false};
  EXPECT_THROW(p.validate(), DataError);
  p.missing = {false, true, false};
  EXPECT_NO_THROW(p.validate());
  p.timestamps = std::vector<double>{0, 1, 3};
  EXPECT_THROW(p.validate(), DataError);
  p.timestamps = std::vector<double>{0, 1, 2};
  EXPECT_NO_THROW(p.validate());
}

TEST(Ellipse, ChiSquareRadius) {
  // For two degrees of freedom the quantile has a closed form.
  EXPECT_DOUBLE_EQ(chi2_2df_quantile(0.95), -2.0 * std::log(0.05));
  const Ellipse e = ellipse_contour({1, 2}, Mat2::sym(2.0, 0.5, 1.0), 0.95);
  EXPECT_DOUBLE_EQ(e.radius_sq, -2.0 * std::log(0.05));
  EXPECT_THROW(ellipse_contour({0, 0}, Mat2::sym(1.0, 2.0, 1.0), 0.95), NumericError);
  EXPECT_THROW(ellipse_contour({0, 0}, Mat2::identity(), 1.0), NumericError);
}

TEST(Ellipse, BoundaryOnContour) {
  const Mat2 shape = Mat2::sym(3.0, -1.0, 1.5);
  const Ellipse e = ellipse_contour({0.5, -0.5}, shape, 0.9);
  for (const Vec2& p : e.boundary(64))
    EXPECT_NEAR(quad_form(shape.inverse(), p - e.center), e.radius_sq, 1e-9);
  const auto ax = e.axes();
  EXPECT_NEAR(ax.major * ax.minor, e.radius_sq * std::sqrt(shape.det()), 1e-9);
  const Vec2 tip = e.center + ax.major * Vec2{std::cos(ax.angle), std::sin(ax.angle)};
  EXPECT_NEAR(quad_form(shape.inverse(), tip - e.center), e.radius_sq, 1e-9);
}

TEST(Ellipse, CoverageOfGaussianDraws) {
  const double cover = oracles::ellipse_coverage({1.0, -2.0}, Mat2::sym(2.0, 0.7, 0.5), 0.95, 1000000, 8);
  EXPECT_NEAR(cover, 0.95, 0.002);
}
