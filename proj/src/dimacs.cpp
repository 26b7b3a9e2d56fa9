#include "divflow/errors.hpp"
#include "divflow/graph.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace divflow {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::int64_t to_int(std::string_view token, std::size_t line, const char* what) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, std::string("malformed ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

Instance parse_dimacs(std::string_view text) {
  std::int64_t n = -1;
  std::int64_t declared_arcs = -1;
  int source = -1;
  int sink = -1;
  std::vector<Edge> edges;
  std::vector<double> caps;
  std::int64_t arc_lines = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tok = split(line);
    if (tok.empty() || tok[0] == "c") continue;
    if (tok[0] == "p") {
      if (n >= 0) throw ParseError(line_no, "duplicate problem line");
      if (tok.size() != 4 || tok[1] != "max") throw ParseError(line_no, "expected 'p max <nodes> <arcs>'");
      n = to_int(tok[2], line_no, "node count");
      declared_arcs = to_int(tok[3], line_no, "arc count");
      if (n < 2 || declared_arcs < 0) throw ParseError(line_no, "invalid problem dimensions");
      continue;
    }
    if (n < 0) throw ParseError(line_no, "descriptor before problem line");
    if (tok[0] == "n") {
      if (tok.size() != 3) throw ParseError(line_no, "expected 'n <id> s|t'");
      const std::int64_t id = to_int(tok[1], line_no, "node id");
      if (id < 1 || id > n) throw ParseError(line_no, "node id out of range");
      if (tok[2] == "s") {
        if (source >= 0) throw ParseError(line_no, "duplicate source");
        source = static_cast<int>(id - 1);
      } else if (tok[2] == "t") {
        if (sink >= 0) throw ParseError(line_no, "duplicate sink");
        sink = static_cast<int>(id - 1);
      } else {
        throw ParseError(line_no, "node designator must be 's' or 't'");
      }
    } else if (tok[0] == "a") {
      if (tok.size() != 4) throw ParseError(line_no, "expected 'a <u> <v> <cap>'");
      ++arc_lines;
      const std::int64_t u = to_int(tok[1], line_no, "arc tail");
      const std::int64_t v = to_int(tok[2], line_no, "arc head");
      const std::int64_t c = to_int(tok[3], line_no, "capacity");
      if (u < 1 || u > n || v < 1 || v > n) throw ParseError(line_no, "arc endpoint out of range");
      if (u == v) throw ParseError(line_no, "self-loop");
      if (c < 0) throw ParseError(line_no, "negative capacity");
      if (c > (std::int64_t{1} << 53)) throw ParseError(line_no, "capacity exceeds 2^53");
      if (c == 0) continue;
      edges.push_back({static_cast<int>(u - 1), static_cast<int>(v - 1)});
      caps.push_back(static_cast<double>(c));
    } else {
      throw ParseError(line_no, "unknown descriptor '" + std::string(tok[0]) + "'");
    }
  }
  if (n < 0) throw ParseError(line_no, "missing problem line");
  if (source < 0 || sink < 0) throw ParseError(line_no, "missing source or sink designator");
  if (source == sink) throw ParseError(line_no, "source equals sink");
  if (arc_lines != declared_arcs) {
    throw ParseError(line_no, "problem line declares " + std::to_string(declared_arcs) + " arcs, found " +
                                  std::to_string(arc_lines));
  }

  const Eigen::Map<const Eigen::VectorXd> cap(caps.data(), static_cast<Eigen::Index>(caps.size()));
  return {Graph(static_cast<int>(n), std::move(edges), cap, Eigen::VectorXd::Zero(cap.size())), source, sink};
}

std::string to_dimacs(const Instance& instance) {
  const Graph& g = instance.graph;
  auto as_int = [](double c) { return static_cast<std::int64_t>(std::llround(c)); };
  std::int64_t arcs = 0;
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    arcs += (g.cap_up()[e] > 0.0) + (g.cap_down()[e] > 0.0);
  }
  std::ostringstream out;
  out << "p max " << g.n() << ' ' << arcs << '\n';
  out << "n " << instance.source + 1 << " s\n";
  out << "n " << instance.sink + 1 << " t\n";
  for (Eigen::Index e = 0; e < g.m(); ++e) {
    const Edge& ed = g.edge(e);
    if (g.cap_up()[e] > 0.0) out << "a " << ed.tail + 1 << ' ' << ed.head + 1 << ' ' << as_int(g.cap_up()[e]) << '\n';
    if (g.cap_down()[e] > 0.0) out << "a " << ed.head + 1 << ' ' << ed.tail + 1 << ' ' << as_int(g.cap_down()[e]) << '\n';
  }
  return out.str();
}

}  // namespace divflow
