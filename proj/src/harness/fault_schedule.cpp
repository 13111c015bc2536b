#include "rrbd/harness/fault_schedule.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace rrbd::harness {

namespace {

const std::map<std::string, FaultKind>& kinds() {
  static const std::map<std::string, FaultKind> m{
      {"crash", FaultKind::kCrash},       {"snapshot", FaultKind::kSnapshot},
      {"rollback", FaultKind::kRollback}, {"crash_rollback", FaultKind::kCrashRollback},
      {"corrupt_page", FaultKind::kCorruptPage}, {"drop", FaultKind::kDrop},
      {"dup", FaultKind::kDup},           {"corrupt", FaultKind::kCorrupt},
      {"delay", FaultKind::kDelay},       {"link_delay", FaultKind::kLinkDelay},
      {"isolate", FaultKind::kIsolate},   {"heal", FaultKind::kHeal},
      {"pause", FaultKind::kPause},
  };
  return m;
}

std::string name_of(FaultKind k) {
  for (const auto& [n, v] : kinds()) {
    if (v == k) return n;
  }
  return "?";
}

std::uint64_t number(const std::string& s, std::size_t line, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw FaultParseError(line, std::string("bad ") + what + " '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw FaultParseError(line, std::string(what) + " out of range");
  }
}

}  // namespace

std::vector<FaultAction> parse_faults(const std::string& text) {
  std::vector<FaultAction> out;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::istringstream ls(raw);
    std::vector<std::string> f;
    for (std::string w; ls >> w;) f.push_back(w);
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() < 2) throw FaultParseError(line, "expected AT_STEP ACTION");

    FaultAction a;
    const auto plus = f[0].find('+');
    a.step = number(f[0].substr(0, plus), line, "step");
    if (plus != std::string::npos) a.micros = number(f[0].substr(plus + 1), line, "offset");
    auto k = kinds().find(f[1]);
    if (k == kinds().end()) throw FaultParseError(line, "unknown action '" + f[1] + "'");
    a.kind = k->second;

    auto need = [&](std::size_t lo, std::size_t hi) {
      if (f.size() - 2 < lo || f.size() - 2 > hi) {
        throw FaultParseError(line, f[1] + " takes " + std::to_string(lo) +
                                        (lo == hi ? "" : "-" + std::to_string(hi)) + " argument(s)");
      }
    };
    auto link = [&](const std::string& s) {
      const auto gt = s.find('>');
      if (gt == std::string::npos) throw FaultParseError(line, "link must be FROM>TO");
      a.node = static_cast<std::uint32_t>(number(s.substr(0, gt), line, "link source"));
      a.to = static_cast<std::uint32_t>(number(s.substr(gt + 1), line, "link target"));
    };

    switch (a.kind) {
      case FaultKind::kCrash:
      case FaultKind::kIsolate:
      case FaultKind::kHeal:
        need(1, 1);
        a.node = static_cast<std::uint32_t>(number(f[2], line, "node"));
        break;
      case FaultKind::kSnapshot:
      case FaultKind::kRollback:
      case FaultKind::kCrashRollback:
        need(1, 2);
        a.node = static_cast<std::uint32_t>(number(f[2], line, "node"));
        if (f.size() == 4) a.name = f[3];
        break;
      case FaultKind::kCorruptPage:
        need(2, 2);
        a.node = static_cast<std::uint32_t>(number(f[2], line, "node"));
        a.arg = number(f[3], line, "block");
        break;
      case FaultKind::kDrop:
      case FaultKind::kDup:
      case FaultKind::kCorrupt:
        need(2, 2);
        link(f[2]);
        a.count = number(f[3], line, "count");
        break;
      case FaultKind::kDelay:
        need(3, 3);
        link(f[2]);
        a.count = number(f[3], line, "count");
        a.arg = number(f[4], line, "delay");
        break;
      case FaultKind::kLinkDelay:
        need(2, 2);
        link(f[2]);
        a.arg = number(f[3], line, "delay");
        break;
      case FaultKind::kPause:
        need(0, 0);
        break;
    }
    out.push_back(a);
  }
  return out;
}

std::vector<FaultAction> load_faults(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open fault schedule " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_faults(ss.str());
}

std::string format_fault(const FaultAction& a) {
  std::ostringstream out;
  out << a.step;
  if (a.micros) out << '+' << a.micros;
  out << ' ' << name_of(a.kind);
  const std::string lnk = std::to_string(a.node) + ">" + std::to_string(a.to);
  switch (a.kind) {
    case FaultKind::kCrash:
    case FaultKind::kIsolate:
    case FaultKind::kHeal: out << ' ' << a.node; break;
    case FaultKind::kSnapshot:
    case FaultKind::kRollback:
    case FaultKind::kCrashRollback:
      out << ' ' << a.node;
      if (a.name != "default") out << ' ' << a.name;
      break;
    case FaultKind::kCorruptPage: out << ' ' << a.node << ' ' << a.arg; break;
    case FaultKind::kDrop:
    case FaultKind::kDup:
    case FaultKind::kCorrupt: out << ' ' << lnk << ' ' << a.count; break;
    case FaultKind::kDelay: out << ' ' << lnk << ' ' << a.count << ' ' << a.arg; break;
    case FaultKind::kLinkDelay: out << ' ' << lnk << ' ' << a.arg; break;
    case FaultKind::kPause: break;
  }
  return out.str();
}

std::string format_faults(const std::vector<FaultAction>& actions) {
  std::string out;
  for (const auto& a : actions) out += format_fault(a) + "\n";
  return out;
}

}  // namespace rrbd::harness
