#include "koopman/integrator.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;
using Stepper = odeint::dense_output_runge_kutta<
    odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>>>;

}  // namespace

struct DenseFlow::Impl {
  OdeRhs rhs;
  Stepper stepper;
  int escape_dim;
  double escape_radius;
};

DenseFlow::DenseFlow(OdeRhs rhs, std::vector<double> y0, int escape_dim,
                     const FlowOptions& options, double direction)
    : impl_(std::make_unique<Impl>(Impl{
          std::move(rhs),
          odeint::make_dense_output(options.abs_tol, options.rel_tol,
                                    odeint::runge_kutta_dopri5<State>()),
          escape_dim, options.escape_radius})) {
  impl_->stepper.initialize(y0, 0.0, direction < 0 ? -options.initial_step
                                                   : options.initial_step);
}

DenseFlow::DenseFlow(const DynamicalSystem& sys, const Eigen::VectorXd& x0,
                     const FlowOptions& options, double direction)
    : DenseFlow(
          [s = &sys](const State& y, State& dy, double) { s->eval(y.data(), dy.data()); },
          State(x0.data(), x0.data() + x0.size()), sys.dimension(), options,
          direction) {}

DenseFlow::~DenseFlow() = default;
DenseFlow::DenseFlow(DenseFlow&&) noexcept = default;

void DenseFlow::step() {
  auto& rhs = impl_->rhs;
  impl_->stepper.do_step([&rhs](const State& y, State& dy, double t) { rhs(y, dy, t); });
  const State& y = impl_->stepper.current_state();
  double norm2 = 0.0;
  for (int i = 0; i < impl_->escape_dim; ++i) norm2 += y[i] * y[i];
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw EscapeError("trajectory became non-finite at t = " +
                            std::to_string(time()),
                        time());
    }
  }
  if (std::sqrt(norm2) > impl_->escape_radius) {
    throw EscapeError("trajectory escaped at t = " + std::to_string(time()), time());
  }
}

double DenseFlow::time() const { return impl_->stepper.current_time(); }
double DenseFlow::previous_time() const { return impl_->stepper.previous_time(); }
const std::vector<double>& DenseFlow::state() const {
  return impl_->stepper.current_state();
}

std::vector<double> DenseFlow::interpolate(double t) const {
  State out(state().size());
  impl_->stepper.calc_state(t, out);
  return out;
}

Eigen::VectorXd integrate_flow(const DynamicalSystem& sys,
                               const Eigen::VectorXd& x0, double t,
                               const FlowOptions& options) {
  if (!std::isfinite(t)) throw Error("integration horizon must be finite");
  if (t == 0.0) return x0;
  const double dir = t < 0 ? -1.0 : 1.0;
  DenseFlow flow(sys, x0, options, dir);
  while (dir * flow.time() < dir * t) flow.step();
  const State y = flow.interpolate(t);
  return Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
}

std::vector<Eigen::VectorXd> integrate_to_times(const DynamicalSystem& sys,
                                                const Eigen::VectorXd& x0,
                                                std::span<const double> times,
                                                const FlowOptions& options) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(times.size());
  DenseFlow flow(sys, x0, options);
  double last = 0.0;
  for (double t : times) {
    if (t < last) throw Error("checkpoint times must be nonnegative and ascending");
    last = t;
    if (t == 0.0) {
      out.push_back(x0);
      continue;
    }
    while (flow.time() < t) flow.step();
    const State y = flow.interpolate(t);
    out.emplace_back(Eigen::Map<const Eigen::VectorXd>(
        y.data(), static_cast<Eigen::Index>(y.size())));
  }
  return out;
}

}  // namespace koopman
