#include "fallball/sigma.hpp"

#include "fallball/cone_sampling.hpp"

#include <boost/multiprecision/eigen.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <mutex>

namespace fallball {

namespace {

namespace mp = boost::multiprecision;
using Big = mp::mpfr_float;
using BigMatrix = MatrixX<Big>;

// mpfr_float keeps its default precision in a process-wide static.
std::mutex& precision_mutex() {
  static std::mutex m;
  return m;
}

class PrecisionScope {
 public:
  explicit PrecisionScope(int bits) : lock_(precision_mutex()), saved_(Big::default_precision()) {
    Big::default_precision(static_cast<unsigned>(bits * 0.30103) + 2);
  }
  ~PrecisionScope() { Big::default_precision(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  std::lock_guard<std::mutex> lock_;
  unsigned saved_;
};

// W carries |M|^2 and the wanted eigenvalue can be as small as 1, so the
// product and the eigensolve need about twice the bits of the largest entry.
int working_bits(double log2_max) {
  return std::max(256, static_cast<int>(std::ceil(2.2 * std::max(0.0, log2_max))) + 128);
}

// A defective eigenvalue 1 of multiplicity k splits by about eps^(1/k); the
// tolerance must absorb that for k up to 10.
Big big_tolerance(int bits) { return mp::ldexp(Big(1), -bits / 10); }

double log2_max_entry(const Matrix& m) { return std::log2(std::max(m.cwiseAbs().maxCoeff(), 1e-300)); }

// log2 of the largest entry of the cocycle over [begin, end), with rescaling
// so long products do not overflow.
double log2_cocycle_size(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end) {
  const int dim = 2 * (cfg.size() - 1);
  Matrix prod = Matrix::Identity(dim, dim);
  double log2_scale = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    prod = (collision_jacobian(cfg, log.events.at(k)).matrix * prod).eval();
    const double s = prod.cwiseAbs().maxCoeff();
    prod /= s;
    log2_scale += std::log2(s);
  }
  return log2_scale;
}

BigMatrix to_big(const Matrix& m) { return m.cast<Big>(); }

double log_sigma_from_squared(const Big& s2) {
  if (mp::isnan(s2)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * static_cast<double>(mp::log(s2));
}

Vector swap_blocks(const Vector& v) {
  const Eigen::Index d = v.size() / 2;
  Vector out(v.size());
  out << v.tail(d), v.head(d);
  return out;
}

class Descent {
 public:
  Descent(const Matrix& m, double sign, const SigmaOptions& opts) : sign_(sign), opts_(opts) {
    scale_ = m.cwiseAbs().maxCoeff();
    if (!(scale_ > 0.0)) throw Error(Errc::NotMonotone, "zero matrix");
    a_ = m / scale_;
  }

  // log Q(Mv) - log Q(v) up to the constant 2 log scale; +inf outside the cone.
  double objective(const Vector& v) const {
    const double qv = sign_ * q_form(v);
    const double qa = sign_ * q_form(a_ * v);
    if (qa * scale_ * scale_ < qv - opts_.monotone_tol * v.squaredNorm()) {
      throw Error(Errc::NotMonotone, "Q decreases from " + std::to_string(qv) + " to " +
                                         std::to_string(qa * scale_ * scale_));
    }
    if (!(qv > 0.0)) return std::numeric_limits<double>::infinity();
    return std::log(qa) - std::log(qv);
  }

  std::pair<double, Vector> run(Vector v) const {
    v.normalize();
    double f = objective(v);
    double h = 0.1;
    for (int it = 0; it < opts_.iterations && std::isfinite(f); ++it) {
      const Vector av = a_ * v;
      Vector g = sign_ * (a_.transpose() * swap_blocks(av)) / (sign_ * q_form(av)) -
                 sign_ * swap_blocks(v) / (sign_ * q_form(v));
      g -= g.dot(v) * v;
      if (g.norm() < 1e-15) break;
      bool accepted = false;
      double gain = 0.0;
      while (h > 1e-20) {
        Vector w = (v - h * g).normalized();
        const double fw = objective(w);
        if (fw < f) {
          gain = f - fw;
          v = std::move(w);
          f = fw;
          h *= 2.0;
          accepted = true;
          break;
        }
        h *= 0.5;
      }
      if (!accepted || gain < opts_.tol) break;
    }
    return {f, v};
  }

  double to_sigma(double f) const { return std::exp(0.5 * f) * scale_; }

  Vector push_in(const Vector& b) const { return b + opts_.boundary_push * sign_ * swap_blocks(b); }

 private:
  double sign_;
  double scale_ = 1.0;
  Matrix a_;
  SigmaOptions opts_;
};

SigmaEstimate estimate(const Matrix& m, double sign, const SigmaOptions& opts) {
  const int d = static_cast<int>(m.rows() / 2);
  const Descent descent(m, sign, opts);
  ConeSampler sampler(d, opts.seed);
  double best = std::numeric_limits<double>::infinity();
  Vector witness;
  auto consider = [&](const Vector& start) {
    auto [f, v] = descent.run(start);
    if (f < best) {
      best = f;
      witness = v;
    }
  };
  auto orient = [sign](Vector v) {
    if (sign < 0.0) v.tail(v.size() / 2) *= -1.0;
    return v;
  };
  for (int s = 0; s < opts.starts; ++s) consider(orient(sampler.interior()));
  for (const Vector& b : ConeSampler::axis_boundary(d)) consider(descent.push_in(b));
  for (int s = 0; s < opts.starts; ++s) consider(descent.push_in(orient(sampler.boundary())));
  SigmaEstimate out;
  out.value = descent.to_sigma(best);
  out.witness = witness;
  out.starts = opts.starts;
  out.seed = opts.seed;
  return out;
}

}  // namespace

double least_expansion(const Matrix& m) {
  const int bits = working_bits(log2_max_entry(m));
  PrecisionScope scope(bits);
  return std::exp(log_sigma_from_squared(least_expansion_squared<Big>(to_big(m), big_tolerance(bits))));
}

SigmaProfile least_expansion_profile(const MassConfig& cfg, const EventLog& log, std::size_t begin,
                                     std::size_t end) {
  SigmaProfile out;
  out.precision_bits = working_bits(log2_cocycle_size(cfg, log, begin, end));
  PrecisionScope scope(out.precision_bits);
  const Big tol = big_tolerance(out.precision_bits);
  const int dim = 2 * (cfg.size() - 1);
  BigMatrix prod = BigMatrix::Identity(dim, dim);
  for (std::size_t k = begin; k < end; ++k) {
    const CollisionEvent& ev = log.events.at(k);
    if (ev.is_singular()) {
      throw Error(Errc::SingularEventInRange, "event " + std::to_string(ev.n) + " is " + to_string(ev.singular));
    }
    prod = (collision_jacobian_as<Big>(cfg, ev) * prod).eval();
    out.log_sigma.push_back(log_sigma_from_squared(least_expansion_squared<Big>(prod, tol)));
  }
  return out;
}

double log_least_expansion(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end,
                           bool backward) {
  const int bits = working_bits(log2_cocycle_size(cfg, log, begin, end));
  PrecisionScope scope(bits);
  BigMatrix prod = cocycle<Big>(cfg, log, begin, end);
  if (backward) prod = symplectic_inverse(prod);
  return log_sigma_from_squared(least_expansion_squared<Big>(prod, big_tolerance(bits)));
}

SigmaEstimate sigma_estimate(const Matrix& m, const SigmaOptions& opts) { return estimate(m, 1.0, opts); }

SigmaEstimate sigma_prime_estimate(const Matrix& backward, const SigmaOptions& opts) {
  return estimate(backward, -1.0, opts);
}

Matrix backward_cocycle(const MassConfig& cfg, const EventLog& log, std::size_t begin, std::size_t end) {
  return symplectic_inverse(cocycle(cfg, log, begin, end));
}

}  // namespace fallball
