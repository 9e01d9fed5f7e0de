#include "koopman/builtin_systems.hpp"

#include <cmath>
#include <functional>

#include "koopman/errors.hpp"

namespace koopman::builtin {

namespace {

MonomialPoly term(double c, int k1, int k2) {
  return MonomialPoly::monomial(MultiIndex({k1, k2}), c);
}

// Planar field with θ̇ = 1 and ṙ = r·g(r, θ). `g` returns (g, ∂g/∂r, ∂g/∂θ).
struct RadialRate {
  double g, g_r, g_theta;
};
using RadialFn = std::function<RadialRate(double r, double theta)>;

DynamicalSystem polar_system(RadialFn rate, std::string name) {
  auto eval = [rate](const double* x, double* out) {
    const double r = std::hypot(x[0], x[1]);
    const RadialRate g = rate(r, std::atan2(x[1], x[0]));
    out[0] = x[0] * g.g - x[1];
    out[1] = x[1] * g.g + x[0];
  };
  auto jacobian = [rate](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const double r = std::hypot(x(0), x(1));
    const RadialRate g = rate(r, std::atan2(x(1), x(0)));
    Eigen::Vector2d grad_g = Eigen::Vector2d::Zero();
    if (r > 0.0) {
      // ∂r/∂x = x/r, ∂θ/∂x = (−x₂, x₁)/r².
      grad_g = g.g_r * x / r + g.g_theta * Eigen::Vector2d(-x(1), x(0)) / (r * r);
    }
    Eigen::Matrix2d j;
    j(0, 0) = g.g + x(0) * grad_g(0);
    j(0, 1) = x(0) * grad_g(1) - 1.0;
    j(1, 0) = x(1) * grad_g(0) + 1.0;
    j(1, 1) = g.g + x(1) * grad_g(1);
    return j;
  };
  return DynamicalSystem(2, eval, jacobian, std::move(name));
}

}  // namespace

DynamicalSystem example3() {
  return DynamicalSystem({term(-1, 0, 1), term(1, 1, 0) + term(-1, 0, 1) + term(1, 2, 1)},
                         "example3");
}

DynamicalSystem example4() {
  return DynamicalSystem(
      {term(1, 0, 1), term(-2, 1, 0) + term(1.0 / 3.0, 3, 0) + term(-1, 0, 1)},
      "example4");
}

DynamicalSystem example5() {
  return DynamicalSystem({term(-0.75, 1, 0) + term(-0.125, 0, 1) + term(0.25, 1, 1) +
                              term(-0.25, 0, 2) + term(-0.5, 3, 0),
                          term(-0.125, 1, 0) + term(-1, 0, 1)},
                         "example5");
}

DynamicalSystem example6() {
  return polar_system(
      [](double r, double theta) {
        const double a = 2.0 + std::cos(6 * theta) - std::cos(10 * theta);
        const double da = -6.0 * std::sin(6 * theta) + 10.0 * std::sin(10 * theta);
        return RadialRate{a * (1 - r * r), -2.0 * a * r, da * (1 - r * r)};
      },
      "example6");
}

DynamicalSystem example7() {
  return DynamicalSystem({term(1, 0, 1), term(-1, 1, 0) + term(1, 0, 1) + term(-1, 2, 1)},
                         "example7");
}

DynamicalSystem circle() {
  return polar_system([](double r, double) { return RadialRate{1.0 - r, -1.0, 0.0}; },
                      "circle");
}

DynamicalSystem cubic_decay() {
  return DynamicalSystem({MonomialPoly::monomial(MultiIndex({3}), -1.0)}, "cubic");
}

DynamicalSystem by_name(const std::string& name) {
  if (name == "example3") return example3();
  if (name == "example4") return example4();
  if (name == "example5") return example5();
  if (name == "example6") return example6();
  if (name == "example7") return example7();
  if (name == "circle") return circle();
  if (name == "cubic") return cubic_decay();
  throw Error("unknown builtin system '" + name + "'");
}

std::vector<std::string> names() {
  return {"example3", "example4", "example5", "example6", "example7", "circle", "cubic"};
}

}  // namespace koopman::builtin
