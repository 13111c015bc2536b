#pragma once

// Text form of a history, one event per line:
//
//   SEQ THREAD KIND BLOCK VALUE FLAGS
//
// KIND is one of WI, WR, RI, RR, CR and FLAGS one of -, F, P, FP. Absent
// fields are written as '-'. Lines starting with '#' are comments.

#include <iosfwd>
#include <string>

#include "rrbd/model/history.hpp"

namespace rrbd::model {

class TraceParseError : public ModelError {
 public:
  TraceParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string format_event(const Event& e);
void write_trace(std::ostream& out, const History& h);
std::string to_trace(const History& h);

// Throws TraceParseError (with a 1-based line number) on malformed lines or
// out-of-order SEQ fields, MalformedHistory if the events are not well formed.
History read_trace(std::istream& in);
History parse_trace(const std::string& text);
History load_trace(const std::string& path);

}  // namespace rrbd::model
