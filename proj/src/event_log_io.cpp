#include "fallball/event_log_io.hpp"

#include "json.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

namespace fallball {

namespace {

void append_vector(std::string& out, const Vector& v) {
  out.push_back('[');
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += format_real(v[i]);
  }
  out.push_back(']');
}

Vector to_vector(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Singularity parse_singularity(const std::string& s) {
  for (Singularity k : {Singularity::None, Singularity::RegularSimultaneous, Singularity::Triple,
                        Singularity::LowerTwoAtFloor}) {
    if (s == to_string(k)) return k;
  }
  throw Error(Errc::ParseError, "unknown singularity tag '" + s + "'");
}

}  // namespace

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string header_to_json(const EventLog& log, const std::string& extra) {
  std::string out = R"({"type":"header","version":")";
  out += kVersion;
  out += R"(","seed":)" + std::to_string(log.seed);
  out += R"(,"branch":")" + log.branch + '"';
  out += R"(,"config":{"masses":)";
  append_vector(out, log.config.masses);
  out += R"(,"energy":)" + format_real(log.config.energy) + "}";
  out += R"(,"initial":{"t":)" + format_real(log.initial.t) + R"(,"q":)";
  append_vector(out, log.initial.q);
  out += R"(,"v":)";
  append_vector(out, log.initial.v);
  out += "}" + extra + "}";
  return out;
}

std::string event_to_json(const CollisionEvent& ev, const std::string& branch) {
  std::string out = R"({"n":)" + std::to_string(ev.n);
  out += R"(,"t":)" + format_real(ev.t);
  out += ev.kind.is_floor() ? R"(,"kind":"floor")" : R"(,"kind":"pair")";
  out += R"(,"i":)" + std::to_string(ev.kind.index);
  out += R"(,"q":)";
  append_vector(out, ev.q_at);
  out += R"(,"v_pre":)";
  append_vector(out, ev.v_pre);
  out += R"(,"v_post":)";
  append_vector(out, ev.v_post);
  out += R"(,"singular":")";
  out += to_string(ev.singular);
  out += R"(","branch":")" + branch + "\"}";
  return out;
}

void write_jsonl(std::ostream& os, const EventLog& log, const std::string& header_extra) {
  os << header_to_json(log, header_extra) << '\n';
  for (const auto& ev : log.events) os << event_to_json(ev, log.branch) << '\n';
}

EventLog read_jsonl(std::istream& is) {
  EventLog log;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.value("type", "") != "header") throw Error(Errc::ParseError, "first line is not a header");
        const auto& c = j.at("config");
        log.config = make_mass_config(to_std(to_vector(c.at("masses"))), c.at("energy").get<double>());
        log.seed = j.at("seed").get<std::uint64_t>();
        log.branch = j.at("branch").get<std::string>();
        log.initial.t = j.at("initial").at("t").get<double>();
        log.initial.q = to_vector(j.at("initial").at("q"));
        log.initial.v = to_vector(j.at("initial").at("v"));
        log.final_state = log.initial;
        have_header = true;
        continue;
      }
      CollisionEvent ev;
      ev.n = j.at("n").get<std::int64_t>();
      ev.t = j.at("t").get<double>();
      ev.kind = CollisionKind{j.at("i").get<int>()};
      ev.q_at = to_vector(j.at("q"));
      ev.v_pre = to_vector(j.at("v_pre"));
      ev.v_post = to_vector(j.at("v_post"));
      ev.singular = parse_singularity(j.at("singular").get<std::string>());
      log.final_state = BallState{ev.t, ev.q_at, ev.v_post};
      log.events.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(Errc::ParseError, "missing header line");
  return log;
}

}  // namespace fallball
