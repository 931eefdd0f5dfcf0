#pragma once

#include "fallball/simulation.hpp"

#include <iosfwd>
#include <string>

namespace fallball {

/// Shortest decimal form that reads back to the same double (17 significant digits).
std::string format_real(double x);

/// `extra` holds additional members (",\"key\":value" form) appended to the object.
std::string header_to_json(const EventLog& log, const std::string& extra = "");
std::string event_to_json(const CollisionEvent& ev, const std::string& branch);

/// Header line followed by one line per event.
void write_jsonl(std::ostream& os, const EventLog& log, const std::string& header_extra = "");
EventLog read_jsonl(std::istream& is);

}  // namespace fallball
