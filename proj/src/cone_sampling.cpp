#include "fallball/cone_sampling.hpp"

#include <cmath>
#include <numbers>

namespace fallball {

ConeSampler::ConeSampler(int d, std::uint64_t seed) : d_(d), rng_(seed) {}

Vector ConeSampler::draw(double lambda) {
  Vector xi(d_);
  do {
    for (int i = 0; i < d_; ++i) xi[i] = normal_(rng_);
  } while (xi.norm() == 0.0);
  xi.normalize();
  Vector w(d_);
  for (int i = 0; i < d_; ++i) w[i] = normal_(rng_);
  w -= w.dot(xi) * xi;
  Vector out(2 * d_);
  if (uniform_(rng_) < 0.5) {
    out << xi, lambda * xi + w;
  } else {
    out << lambda * xi + w, xi;
  }
  return out;
}

Vector ConeSampler::interior() {
  double theta = 0.0;
  while (theta == 0.0) theta = uniform_(rng_) * (0.5 * std::numbers::pi);
  return draw(std::tan(theta));
}

Vector ConeSampler::boundary() { return draw(0.0); }

Vector ConeSampler::closed(double boundary_fraction) {
  return uniform_(rng_) < boundary_fraction ? boundary() : interior();
}

std::vector<Vector> ConeSampler::axis_boundary(int d) {
  std::vector<Vector> out;
  for (int k = 0; k < 2 * d; ++k) out.push_back(Vector::Unit(2 * d, k));
  return out;
}

}  // namespace fallball
