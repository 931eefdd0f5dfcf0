#pragma once

#include "fallball/simulation.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace fallball {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Faces of the configuration wedge, named by the generators they contain.
/// face13 = W(e1, e3) is the (1,2) collision, face12 = W(e1, e2) the (2,3)
/// collision and face23 = W(e2, e3) the floor.
enum class WedgeFace { Face12 = 0, Face13 = 1, Face23 = 2 };

const char* to_string(WedgeFace f) noexcept;
WedgeFace face_of(CollisionKind kind);

/// Edges where two faces meet; e1 and e3 are singular, e2 joins orthogonal faces.
enum class WedgeEdge { E1, E2, E3 };

struct WedgePoint {
  Vec3 x = Vec3::Zero();
  Vec3 u = Vec3::Zero();
};

/// x_i = sqrt(m_i) q_i, u_i = sqrt(m_i) v_i. Throws WrongDimension unless N = 3.
WedgePoint to_wedge(const MassConfig& cfg, const BallState& s);
BallState from_wedge(const MassConfig& cfg, const WedgePoint& p, double t = 0.0);

struct WedgeModel {
  Vec3 sqrt_masses = Vec3::Zero();
  Mat3 generators = Mat3::Zero();  ///< columns e_1, e_2, e_3
  Mat3 gram = Mat3::Zero();
  Vec3 gravity = Vec3::Zero();     ///< -(sqrt m_1, sqrt m_2, sqrt m_3)
  std::array<Vec3, 3> normals;     ///< inward unit normals indexed by WedgeFace
  double dihedral_e1 = 0.0;        ///< angle between face12 and face13
  bool simple = false;             ///< gram(0,2) = gram(0,1) gram(1,2) with positive entries

  Vec3 generator(int i) const { return generators.col(i - 1); }  ///< 1-based
  const Vec3& normal(WedgeFace f) const { return normals[static_cast<std::size_t>(f)]; }
  /// Reflection across the plane of the face.
  Mat3 reflection(WedgeFace f) const;
  double energy(const WedgePoint& p) const { return 0.5 * p.u.squaredNorm() - gravity.dot(p.x); }
  /// Coefficients of x in the generator basis; all >= 0 inside the wedge.
  Vec3 coefficients(const Vec3& x) const { return generators.colPivHouseholderQr().solve(x); }
};

WedgeModel build_wedge(const MassConfig& cfg);

/// |4 m_1 m_3 - (m_1 + m_2 + m_3)| <= tol * (m_1 + m_2 + m_3).
bool special_mass_check(const MassConfig& cfg, double tol = 1e-14);
/// m_1 = (m_2 + m_3) / (4 m_3 - 1); throws Infeasible unless m_3 > 1/4 and m_1 > m_2 > m_3.
double solve_special_mass(double m2, double m3);

struct WedgeEvent {
  std::int64_t n = 0;
  double t = 0.0;
  WedgeFace face = WedgeFace::Face23;
  Vec3 x = Vec3::Zero();
  Vec3 u_pre = Vec3::Zero();
  Vec3 u_post = Vec3::Zero();
  bool edge = false;  ///< the run stopped on a singular edge here
};

struct WedgeStep {
  double t = 0.0;
  WedgePoint point;  ///< state right after the reflection
  WedgeEvent event;
};

struct WedgeOptions {
  double edge_tol = 1e-10;  ///< distance to a singular edge, relative to max(1, |x|)
  bool stop_at_edge = false;  ///< log an edge event and stop instead of throwing
};

class EdgeHitError : public Error {
 public:
  EdgeHitError(WedgeEdge edge, double t, WedgePoint point);
  WedgeEdge edge() const noexcept { return edge_; }
  double time() const noexcept { return t_; }
  const WedgePoint& point() const noexcept { return point_; }

 private:
  WedgeEdge edge_;
  double t_;
  WedgePoint point_;
};

/// Ballistic flight to the next face and specular reflection there. Throws
/// EdgeHitError when the hit point lies on the e1 or e3 edge.
WedgeStep wedge_step(const WedgeModel& model, const WedgePoint& p, double t, const WedgeOptions& opts = {},
                     std::int64_t n = 0);

struct WedgeLog {
  WedgePoint initial;
  double t0 = 0.0;
  WedgePoint final_point;
  double final_time = 0.0;
  std::vector<WedgeEvent> events;
};

/// Runs until the horizon; with a time horizon the final point is the flight
/// state at exactly max_time.
WedgeLog simulate_wedge(const WedgeModel& model, const WedgePoint& p0, Horizon horizon, double t0 = 0.0,
                        const WedgeOptions& opts = {});

/// Same JSON-lines layout as the ball logs; kind is the face name.
void write_wedge_jsonl(std::ostream& os, const WedgeModel& model, const WedgeLog& log,
                       const std::string& header_extra = "");

/// Copies of the wedge around e1 produced by alternating reflections in
/// face12 and face13. words[j] maps the wedge onto copy j.
struct WedgeFan {
  std::vector<Mat3> words;
  double dihedral = 0.0;
  double accumulated_angle = 0.0;
  bool closed = false;  ///< the last word returned to the identity

  std::size_t copies() const { return words.size(); }
};

/// Throws NotSpecialMasses unless special_mass_check holds.
WedgeFan unfold(const WedgeModel& model, const MassConfig& cfg, int max_copies = 64);

/// Index of the copy containing y (largest minimal generator coefficient wins
/// on shared faces) and the image of y in the original wedge.
std::pair<std::size_t, Vec3> fold(const WedgeModel& model, const WedgeFan& fan, const Vec3& y);

/// Row per copy: index followed by the nine entries of its word, row-major.
void write_fan_csv(std::ostream& os, const WedgeFan& fan);

struct ContinuationRow {
  double delta = 0.0;
  double folded_divergence = 0.0;    ///< |x+ - x-| after the passage, in the wedge
  double unfolded_divergence = 0.0;  ///< |U+ x+ - U- x-|
  double reference_gap = 0.0;        ///< max distance of either branch from the folded exact edge orbit
  int reflections_plus = 0;
  int reflections_minus = 0;
  bool same_word = false;
};

struct ContinuationReport {
  std::vector<ContinuationRow> rows;
  double slope = 0.0;           ///< least-squares slope of log folded divergence against log delta
  double unfolded_slope = 0.0;
  double dihedral = 0.0;
};

/// Straddling family through the e1 axis: the exact orbit meets e1 at t = 1,
/// the offset orbits pass at distance delta on either side. Divergence is
/// measured at t = 2 for delta0, delta0 / 2, ... (halvings + 1 values).
/// Throws NotSpecialMasses.
ContinuationReport continuation_test(const WedgeModel& model, const MassConfig& cfg, double delta0 = 1e-3,
                                     int halvings = 6);

}  // namespace fallball
