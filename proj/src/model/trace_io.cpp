#include "rrbd/model/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace rrbd::model {

TraceParseError::TraceParseError(std::size_t line, const std::string& what)
    : ModelError("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

const char* kind_code(EventKind k) {
  switch (k) {
    case EventKind::kWriteInv: return "WI";
    case EventKind::kWriteRes: return "WR";
    case EventKind::kReadInv: return "RI";
    case EventKind::kReadRes: return "RR";
    case EventKind::kCrash: return "CR";
  }
  return "??";
}

const char* flag_code(SyncFlags s) {
  switch (s) {
    case SyncFlags::kNone: return "-";
    case SyncFlags::kFua: return "F";
    case SyncFlags::kPreflush: return "P";
    case SyncFlags::kFuaPreflush: return "FP";
  }
  return "-";
}

template <typename T>
std::string opt(const std::optional<T>& v) {
  return v ? std::to_string(*v) : "-";
}

template <typename T>
std::optional<T> parse_field(const std::string& s, std::size_t line, const char* name) {
  if (s == "-") return std::nullopt;
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw TraceParseError(line, std::string("bad ") + name + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_event(const Event& e) {
  std::string out = std::to_string(e.seq);
  out += ' ';
  out += opt(e.thread);
  out += ' ';
  out += kind_code(e.kind);
  out += ' ';
  out += opt(e.block);
  out += ' ';
  out += opt(e.value);
  out += ' ';
  out += flag_code(e.sync);
  return out;
}

void write_trace(std::ostream& out, const History& h) {
  for (const auto& e : h.events()) out << format_event(e) << '\n';
}

std::string to_trace(const History& h) {
  std::ostringstream out;
  write_trace(out, h);
  return out.str();
}

History read_trace(std::istream& in) {
  std::vector<Event> events;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      const std::size_t sp = text.find(' ', pos);
      f.push_back(text.substr(pos, sp - pos));
      if (sp == std::string::npos) break;
      pos = sp + 1;
    }
    if (f.size() != 6) throw TraceParseError(line, "expected 6 fields, got " + std::to_string(f.size()));

    Event e;
    const auto seq = parse_field<std::uint64_t>(f[0], line, "SEQ");
    if (!seq || *seq != events.size()) {
      throw TraceParseError(line, "SEQ must be " + std::to_string(events.size()));
    }
    e.seq = *seq;
    e.thread = parse_field<ThreadId>(f[1], line, "THREAD");
    if (f[2] == "WI") {
      e.kind = EventKind::kWriteInv;
    } else if (f[2] == "WR") {
      e.kind = EventKind::kWriteRes;
    } else if (f[2] == "RI") {
      e.kind = EventKind::kReadInv;
    } else if (f[2] == "RR") {
      e.kind = EventKind::kReadRes;
    } else if (f[2] == "CR") {
      e.kind = EventKind::kCrash;
    } else {
      throw TraceParseError(line, "unknown KIND '" + f[2] + "'");
    }
    e.block = parse_field<BlockId>(f[3], line, "BLOCK");
    e.value = parse_field<ValueId>(f[4], line, "VALUE");
    if (f[5] == "-") {
      e.sync = SyncFlags::kNone;
    } else if (f[5] == "F") {
      e.sync = SyncFlags::kFua;
    } else if (f[5] == "P") {
      e.sync = SyncFlags::kPreflush;
    } else if (f[5] == "FP") {
      e.sync = SyncFlags::kFuaPreflush;
    } else {
      throw TraceParseError(line, "unknown FLAGS '" + f[5] + "'");
    }

    const bool crash = e.kind == EventKind::kCrash;
    if (crash != !e.thread || crash != !e.block) {
      throw TraceParseError(line, crash ? "crash carries thread or block" : "missing thread or block");
    }
    const bool wants_value = e.kind == EventKind::kWriteInv || e.kind == EventKind::kReadRes;
    if (wants_value != e.value.has_value()) {
      throw TraceParseError(line, wants_value ? "missing VALUE" : "unexpected VALUE");
    }
    if (e.kind != EventKind::kWriteInv && e.sync != SyncFlags::kNone) {
      throw TraceParseError(line, "FLAGS only allowed on WI");
    }
    events.push_back(e);
  }
  History h(std::move(events));
  h.validate();
  return h;
}

History parse_trace(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

History load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open " + path);
  return read_trace(in);
}

}  // namespace rrbd::model
