#include "fallball/lyapunov.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <functional>

namespace fallball {

BenettinAccumulator::BenettinAccumulator(int dim, int reorth_every)
    : frame_(Matrix::Identity(dim, dim)), log_sums_(Vector::Zero(dim)), every_(std::max(1, reorth_every)) {}

void BenettinAccumulator::orthonormalize(Matrix& frame, Vector& log_sums) {
  const Eigen::HouseholderQR<Matrix> qr(frame);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  Matrix q = qr.householderQ() * Matrix::Identity(frame.rows(), frame.cols());
  for (Eigen::Index k = 0; k < frame.cols(); ++k) {
    log_sums[k] += std::log(std::abs(r(k, k)));
    if (r(k, k) < 0.0) q.col(k) *= -1.0;
  }
  frame = std::move(q);
}

void BenettinAccumulator::push(const Matrix& factor) {
  frame_ = (factor * frame_).eval();
  ++steps_;
  if (++pending_ >= every_) {
    orthonormalize(frame_, log_sums_);
    pending_ = 0;
  }
}

Vector BenettinAccumulator::exponents() const {
  if (steps_ == 0) return Vector::Zero(log_sums_.size());
  Vector sums = log_sums_;
  if (pending_ > 0) {
    Matrix frame = frame_;
    orthonormalize(frame, sums);
  }
  Vector out = sums / static_cast<double>(steps_);
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

LyapunovResult lyapunov_spectrum(const MassConfig& cfg, const EventLog& log, int reorth_every) {
  BenettinAccumulator acc(2 * (cfg.size() - 1), reorth_every);
  for (const CollisionEvent& ev : log.events) {
    if (ev.is_singular()) {
      throw Error(Errc::SingularOrbit, "event " + std::to_string(ev.n) + " is " + to_string(ev.singular));
    }
    acc.push(collision_jacobian(cfg, ev).matrix);
  }
  LyapunovResult out;
  out.exponents = acc.exponents();
  out.steps = acc.steps();
  out.elapsed_time = log.events.empty() ? 0.0 : log.events.back().t - log.initial.t;
  return out;
}

LyapunovResult lyapunov_spectrum(const MassConfig& cfg, const BallState& s0, std::int64_t steps, int reorth_every) {
  BenettinAccumulator acc(2 * (cfg.size() - 1), reorth_every);
  SimulationOptions opts;
  opts.policy = SingularPolicy::Stop;
  const BallState end = simulate_stream(cfg, s0, Horizon::events(steps), opts,
                                        [&](const CollisionEvent& ev, const BallState&) {
                                          acc.push(collision_jacobian(cfg, ev).matrix);
                                          return true;
                                        });
  LyapunovResult out;
  out.exponents = acc.exponents();
  out.steps = acc.steps();
  out.elapsed_time = end.t - s0.t;
  return out;
}

}  // namespace fallball
