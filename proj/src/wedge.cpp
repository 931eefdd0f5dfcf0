#include "fallball/wedge.hpp"

#include "fallball/event_log_io.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace fallball {

namespace {

void require_three(const MassConfig& cfg) {
  if (cfg.size() != 3) throw Error(Errc::WrongDimension, "the wedge picture needs exactly three balls");
}

void require_special(const MassConfig& cfg) {
  if (!special_mass_check(cfg, 1e-12)) {
    throw Error(Errc::NotSpecialMasses, "4 m_1 m_3 != m_1 + m_2 + m_3");
  }
}

// Earliest t >= 0 where c + b t + a t^2 reaches zero while decreasing.
double outward_crossing(double c, double b, double a) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (c <= 0.0 && b < 0.0) return 0.0;
  double best = inf;
  auto consider = [&](double t) {
    if (t >= 0.0 && b + 2.0 * a * t <= 0.0) best = std::min(best, t);
  };
  if (a == 0.0) {
    if (b != 0.0) consider(-c / b);
    return best;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return inf;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  if (q != 0.0) {
    consider(q / a);
    consider(c / q);
  } else {
    consider(0.0);
  }
  return best;
}

double distance_to_axis(const Vec3& x, const Vec3& axis) { return (x - x.dot(axis) * axis).norm(); }

std::string vec_json(const Vec3& v) {
  return "[" + format_real(v[0]) + "," + format_real(v[1]) + "," + format_real(v[2]) + "]";
}

}  // namespace

const char* to_string(WedgeFace f) noexcept {
  switch (f) {
    case WedgeFace::Face12: return "face12";
    case WedgeFace::Face13: return "face13";
    case WedgeFace::Face23: return "face23";
  }
  return "unknown";
}

WedgeFace face_of(CollisionKind kind) {
  switch (kind.index) {
    case 0: return WedgeFace::Face23;
    case 1: return WedgeFace::Face13;
    case 2: return WedgeFace::Face12;
    default: throw Error(Errc::WrongDimension, "no wedge face for " + to_string(kind));
  }
}

WedgePoint to_wedge(const MassConfig& cfg, const BallState& s) {
  require_three(cfg);
  if (s.size() != 3) throw Error(Errc::WrongDimension, "state does not have three balls");
  const Vec3 r = cfg.masses.head<3>().cwiseSqrt();
  return {r.cwiseProduct(s.q.head<3>()), r.cwiseProduct(s.v.head<3>())};
}

BallState from_wedge(const MassConfig& cfg, const WedgePoint& p, double t) {
  require_three(cfg);
  const Vec3 r = cfg.masses.head<3>().cwiseSqrt();
  return {t, p.x.cwiseQuotient(r), p.u.cwiseQuotient(r)};
}

Mat3 WedgeModel::reflection(WedgeFace f) const {
  const Vec3& n = normal(f);
  return Mat3::Identity() - 2.0 * n * n.transpose();
}

WedgeModel build_wedge(const MassConfig& cfg) {
  require_three(cfg);
  WedgeModel w;
  w.sqrt_masses = cfg.masses.head<3>().cwiseSqrt();
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    for (int k = i; k < 3; ++k) e[k] = w.sqrt_masses[k];
    w.generators.col(i) = e / std::sqrt(cfg.tail_sums[i]);
  }
  w.gram = w.generators.transpose() * w.generators;
  w.gravity = -w.sqrt_masses;
  const Vec3& r = w.sqrt_masses;
  w.normals[static_cast<std::size_t>(WedgeFace::Face23)] = Vec3(1.0, 0.0, 0.0);
  w.normals[static_cast<std::size_t>(WedgeFace::Face13)] = Vec3(-1.0 / r[0], 1.0 / r[1], 0.0).normalized();
  w.normals[static_cast<std::size_t>(WedgeFace::Face12)] = Vec3(0.0, -1.0 / r[1], 1.0 / r[2]).normalized();
  const Vec3 e1 = w.generator(1);
  const Vec3 p2 = w.generator(2) - w.generator(2).dot(e1) * e1;
  const Vec3 p3 = w.generator(3) - w.generator(3).dot(e1) * e1;
  w.dihedral_e1 = std::acos(std::clamp(p2.dot(p3) / (p2.norm() * p3.norm()), -1.0, 1.0));
  w.simple = w.gram(0, 1) > 0.0 && w.gram(1, 2) > 0.0 &&
             std::abs(w.gram(0, 2) - w.gram(0, 1) * w.gram(1, 2)) <= 1e-14;
  return w;
}

bool special_mass_check(const MassConfig& cfg, double tol) {
  require_three(cfg);
  const double total = cfg.tail_sums[0];
  return std::abs(4.0 * cfg.masses[0] * cfg.masses[2] - total) <= tol * total;
}

double solve_special_mass(double m2, double m3) {
  if (!(m3 > 0.25)) throw Error(Errc::Infeasible, "special masses need m_3 > 1/4");
  const double m1 = (m2 + m3) / (4.0 * m3 - 1.0);
  if (!(m1 > m2 && m2 > m3)) {
    throw Error(Errc::Infeasible, "m_1 = " + format_real(m1) + " breaks m_1 > m_2 > m_3");
  }
  return m1;
}

EdgeHitError::EdgeHitError(WedgeEdge edge, double t, WedgePoint point)
    : Error(Errc::EdgeHit, std::string(edge == WedgeEdge::E1 ? "e1 (triple collision)" : "e3 (lower two at floor)") +
                               " reached at t=" + format_real(t)),
      edge_(edge),
      t_(t),
      point_(std::move(point)) {}

WedgeStep wedge_step(const WedgeModel& model, const WedgePoint& p, double t, const WedgeOptions& opts,
                     std::int64_t n) {
  double t_hit = std::numeric_limits<double>::infinity();
  WedgeFace face = WedgeFace::Face23;
  for (WedgeFace f : {WedgeFace::Face23, WedgeFace::Face13, WedgeFace::Face12}) {
    const Vec3& nrm = model.normal(f);
    const double dt = outward_crossing(nrm.dot(p.x), nrm.dot(p.u), 0.5 * nrm.dot(model.gravity));
    if (dt < t_hit) {
      t_hit = dt;
      face = f;
    }
  }
  if (!std::isfinite(t_hit)) throw Error(Errc::EdgeHit, "no face ahead; the point left the wedge");
  WedgeStep step;
  Vec3 x = p.x + t_hit * p.u + (0.5 * t_hit * t_hit) * model.gravity;
  const Vec3 u = p.u + t_hit * model.gravity;
  const Vec3& nrm = model.normal(face);
  x -= nrm.dot(x) * nrm;
  step.t = t + t_hit;
  const double tol = opts.edge_tol * std::max(1.0, x.norm());
  if (face != WedgeFace::Face23 && distance_to_axis(x, model.generator(1)) < tol) {
    throw EdgeHitError(WedgeEdge::E1, step.t, {x, u});
  }
  if (face != WedgeFace::Face12 && distance_to_axis(x, model.generator(3)) < tol) {
    throw EdgeHitError(WedgeEdge::E3, step.t, {x, u});
  }
  step.point.x = x;
  step.point.u = u - 2.0 * nrm.dot(u) * nrm;
  step.event = {n, step.t, face, x, u, step.point.u, false};
  return step;
}

WedgeLog simulate_wedge(const WedgeModel& model, const WedgePoint& p0, Horizon horizon, double t0,
                        const WedgeOptions& opts) {
  WedgeLog log;
  log.initial = p0;
  log.t0 = t0;
  WedgePoint p = p0;
  double t = t0;
  for (std::int64_t n = 0; n < horizon.max_events; ++n) {
    WedgeStep step;
    try {
      step = wedge_step(model, p, t, opts, n);
    } catch (const EdgeHitError& e) {
      if (!opts.stop_at_edge || e.time() > horizon.max_time) throw;
      WedgeEvent ev;
      ev.n = n;
      ev.t = e.time();
      ev.x = e.point().x;
      ev.u_pre = ev.u_post = e.point().u;
      ev.edge = true;
      log.events.push_back(ev);
      p = e.point();
      t = e.time();
      break;
    }
    if (step.t > horizon.max_time) break;
    log.events.push_back(step.event);
    p = step.point;
    t = step.t;
  }
  if (std::isfinite(horizon.max_time) && t < horizon.max_time && (log.events.empty() || !log.events.back().edge)) {
    const double dt = horizon.max_time - t;
    p.x += dt * p.u + (0.5 * dt * dt) * model.gravity;
    p.u += dt * model.gravity;
    t = horizon.max_time;
  }
  log.final_point = p;
  log.final_time = t;
  return log;
}

void write_wedge_jsonl(std::ostream& os, const WedgeModel& model, const WedgeLog& log,
                       const std::string& header_extra) {
  const Vec3 m = model.sqrt_masses.cwiseProduct(model.sqrt_masses);
  os << R"({"type":"header","version":")" << kVersion << R"(","config":{"masses":)" << vec_json(m)
     << R"(},"initial":{"t":)" << format_real(log.t0) << R"(,"x":)" << vec_json(log.initial.x) << R"(,"u":)"
     << vec_json(log.initial.u) << "}" << header_extra << "}\n";
  for (const WedgeEvent& ev : log.events) {
    os << R"({"n":)" << ev.n << R"(,"t":)" << format_real(ev.t) << R"(,"kind":")"
       << (ev.edge ? "edge" : to_string(ev.face)) << R"(","x":)" << vec_json(ev.x) << R"(,"u_pre":)"
       << vec_json(ev.u_pre) << R"(,"u_post":)" << vec_json(ev.u_post) << "}\n";
  }
}

WedgeFan unfold(const WedgeModel& model, const MassConfig& cfg, int max_copies) {
  require_special(cfg);
  WedgeFan fan;
  fan.dihedral = model.dihedral_e1;
  const Mat3 ra = model.reflection(WedgeFace::Face12);
  const Mat3 rb = model.reflection(WedgeFace::Face13);
  Mat3 word = Mat3::Identity();
  fan.words.push_back(word);
  for (int j = 1; j < max_copies; ++j) {
    word = word * (j % 2 == 1 ? ra : rb);
    if ((word - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9) {
      fan.closed = true;
      break;
    }
    fan.words.push_back(word);
  }
  fan.accumulated_angle = static_cast<double>(fan.words.size()) * fan.dihedral;
  return fan;
}

std::pair<std::size_t, Vec3> fold(const WedgeModel& model, const WedgeFan& fan, const Vec3& y) {
  std::size_t best = 0;
  double best_min = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < fan.words.size(); ++j) {
    const double worst = model.coefficients(fan.words[j].transpose() * y).minCoeff();
    if (worst > best_min + 1e-15) {
      best_min = worst;
      best = j;
    }
  }
  return {best, fan.words[best].transpose() * y};
}

void write_fan_csv(std::ostream& os, const WedgeFan& fan) {
  os << "copy,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (std::size_t j = 0; j < fan.words.size(); ++j) {
    os << j;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) os << ',' << format_real(fan.words[j](r, c));
    }
    os << '\n';
  }
}

ContinuationReport continuation_test(const WedgeModel& model, const MassConfig& cfg, double delta0, int halvings) {
  require_special(cfg);
  const WedgeFan fan = unfold(model, cfg);
  const Vec3 e1 = model.generator(1);
  const Vec3 p2 = (model.generator(2) - model.generator(2).dot(e1) * e1).normalized();
  const Vec3 p3 = (model.generator(3) - model.generator(3).dot(e1) * e1).normalized();
  const Vec3 bisector = (p2 + p3).normalized();
  const Vec3 side = e1.cross(bisector);

  // Exact orbit: on the e1 axis at t = 1, arriving along the bisector.
  constexpr double kHitTime = 1.0;
  constexpr double kEndTime = 2.0;
  const Vec3 hit = 3.0 * e1;
  const Vec3 w = -0.5 * bisector;
  const Vec3 x0 = hit - w * kHitTime + 0.5 * kHitTime * kHitTime * model.gravity;
  const Vec3 u0 = w - kHitTime * model.gravity;
  const double tail = kEndTime - kHitTime;
  const Vec3 exact_end = hit + w * tail + 0.5 * tail * tail * model.gravity;
  const Vec3 reference = fold(model, fan, exact_end).second;

  struct Branch {
    WedgePoint end;
    Mat3 word = Mat3::Identity();
    int reflections = 0;
  };
  auto run = [&](const Vec3& start) {
    Branch b;
    const WedgeLog log = simulate_wedge(model, {start, u0}, Horizon::time(kEndTime));
    for (const WedgeEvent& ev : log.events) {
      if (ev.face == WedgeFace::Face23) continue;
      b.word = b.word * model.reflection(ev.face);
      ++b.reflections;
    }
    b.end = log.final_point;
    return b;
  };
  auto state_gap = [](const Vec3& xa, const Vec3& ua, const Vec3& xb, const Vec3& ub) {
    return std::sqrt((xa - xb).squaredNorm() + (ua - ub).squaredNorm());
  };

  ContinuationReport report;
  report.dihedral = model.dihedral_e1;
  double delta = delta0;
  for (int k = 0; k <= halvings; ++k, delta *= 0.5) {
    const Branch plus = run(x0 + delta * side);
    const Branch minus = run(x0 - delta * side);
    ContinuationRow row;
    row.delta = delta;
    row.folded_divergence = state_gap(plus.end.x, plus.end.u, minus.end.x, minus.end.u);
    row.unfolded_divergence = state_gap(plus.word * plus.end.x, plus.word * plus.end.u, minus.word * minus.end.x,
                                        minus.word * minus.end.u);
    row.reference_gap = std::max((plus.end.x - reference).norm(), (minus.end.x - reference).norm());
    row.reflections_plus = plus.reflections;
    row.reflections_minus = minus.reflections;
    row.same_word = (plus.word - minus.word).cwiseAbs().maxCoeff() < 1e-9;
    report.rows.push_back(row);
  }
  auto fit = [&](auto value) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(report.rows.size());
    for (const auto& r : report.rows) {
      const double lx = std::log(r.delta);
      const double ly = std::log(value(r));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
  };
  report.slope = fit([](const ContinuationRow& r) { return r.folded_divergence; });
  report.unfolded_slope = fit([](const ContinuationRow& r) { return r.unfolded_divergence; });
  return report;
}

}  // namespace fallball
