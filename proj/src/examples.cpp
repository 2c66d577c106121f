#include "nscrit/examples.hpp"

#include <cmath>
#include <numbers>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

constexpr double kPi = std::numbers::pi;

void require_interior(const Point& x, bool ok) {
  if (!ok)
    throw Error(ErrorKind::NumericData, "initial data is singular at (" + std::to_string(x.x()) + ", " +
                                            std::to_string(x.y()) + ")");
}

}  // namespace

VectorField initial_data_example1(double eps) {
  const double a = eps + 0.5;
  return [a](const Point& x) -> Eigen::Vector2d {
    const double sx = std::sin(kPi * x.x());
    const double sy = std::sin(kPi * x.y());
    require_interior(x, sx > 0.0 && sy > 0.0);
    const double wx = a * kPi * std::pow(sx, a - 1.0) * std::cos(kPi * x.x()) * std::pow(sy, a);
    const double wy = a * kPi * std::pow(sx, a) * std::pow(sy, a - 1.0) * std::cos(kPi * x.y());
    return {wy, -wx};
  };
}

VectorField initial_data_example2(double eps) {
  const double e = eps - 0.5;
  return [e](const Point& x) -> Eigen::Vector2d {
    require_interior(x, x.x() > 0.0 && x.y() > 0.0);
    return {std::pow(x.y(), e), std::pow(x.x(), e)};
  };
}

VectorField manufactured_velocity() {
  return [](const Point& x) -> Eigen::Vector2d {
    const double sx = std::sin(kPi * x.x()), sy = std::sin(kPi * x.y());
    return {kPi * sx * sx * std::sin(2 * kPi * x.y()), -kPi * std::sin(2 * kPi * x.x()) * sy * sy};
  };
}

GradientField manufactured_gradient() {
  return [](const Point& x) -> Eigen::Matrix2d {
    const double sx = std::sin(kPi * x.x()), sy = std::sin(kPi * x.y());
    const double s2x = std::sin(2 * kPi * x.x()), s2y = std::sin(2 * kPi * x.y());
    const double pi2 = kPi * kPi;
    Eigen::Matrix2d g;
    g << pi2 * s2x * s2y, 2 * pi2 * sx * sx * std::cos(2 * kPi * x.y()),
        -2 * pi2 * std::cos(2 * kPi * x.x()) * sy * sy, -pi2 * s2x * s2y;
    return g;
  };
}

}  // namespace nscrit
