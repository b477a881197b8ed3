#include "mnldesign/milp.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace mnld {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fixed-format field layout: type in columns 2-3, names at 5 and 15, value at 25.
std::string field_line(const std::string& type, const std::string& n1, const std::string& n2, const std::string& val) {
  char buf[128];
  std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %s", type.c_str(), n1.c_str(), n2.c_str(), val.c_str());
  std::string s(buf);
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s + "\n";
}

}  // namespace

std::string mps_string(const MilpModel& m) {
  std::ostringstream os;
  const int nv = m.num_vars();
  const int n_eq = static_cast<int>(m.b_eq.size());
  const int n_le = static_cast<int>(m.b_le.size());
  os << "NAME          MNLDMILP\n";
  os << "OBJSENSE\n    MIN\n";
  os << "ROWS\n";
  os << " N  OBJ\n";
  for (int r = 0; r < n_eq; ++r) os << " E  " << m.eq_names[static_cast<size_t>(r)] << "\n";
  for (int r = 0; r < n_le; ++r) os << " L  " << m.le_names[static_cast<size_t>(r)] << "\n";
  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < nv; ++j) {
    const bool is_int = m.integer[static_cast<size_t>(j)];
    if (is_int != in_int) {
      char mk[24];
      std::snprintf(mk, sizeof mk, "MARKER%02d", marker++);
      os << "    " << mk << "                 'MARKER'                 " << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_int;
    }
    const std::string& name = m.var_names[static_cast<size_t>(j)];
    if (m.c[j] != 0.0) os << field_line("", name, "OBJ", num(m.c[j]));
    for (int r = 0; r < n_eq; ++r)
      if (m.A_eq(r, j) != 0.0) os << field_line("", name, m.eq_names[static_cast<size_t>(r)], num(m.A_eq(r, j)));
    for (int r = 0; r < n_le; ++r)
      if (m.A_le(r, j) != 0.0) os << field_line("", name, m.le_names[static_cast<size_t>(r)], num(m.A_le(r, j)));
  }
  if (in_int) {
    char mk[24];
    std::snprintf(mk, sizeof mk, "MARKER%02d", marker++);
    os << "    " << mk << "                 'MARKER'                 'INTEND'\n";
  }
  os << "RHS\n";
  for (int r = 0; r < n_eq; ++r)
    if (m.b_eq[r] != 0.0) os << field_line("", "RHS", m.eq_names[static_cast<size_t>(r)], num(m.b_eq[r]));
  for (int r = 0; r < n_le; ++r)
    if (m.b_le[r] != 0.0) os << field_line("", "RHS", m.le_names[static_cast<size_t>(r)], num(m.b_le[r]));
  os << "BOUNDS\n";
  for (int j = 0; j < nv; ++j) {
    const std::string& name = m.var_names[static_cast<size_t>(j)];
    if (m.lower[j] == m.upper[j]) {
      os << field_line("FX", "BND", name, num(m.lower[j]));
      continue;
    }
    if (m.lower[j] != 0.0) os << field_line("LO", "BND", name, num(m.lower[j]));
    os << field_line("UP", "BND", name, num(m.upper[j]));
  }
  os << "ENDATA\n";
  return os.str();
}

void export_mps(const MilpModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << mps_string(m);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

MilpModel parse_mps(const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  std::vector<std::string> eq_rows, le_rows;
  std::map<std::string, std::pair<char, int>> row_index;  // type, position
  std::vector<std::string> vars;
  std::map<std::string, int> var_index;
  std::vector<bool> integer;
  struct Entry {
    int var;
    std::string row;
    double val;
  };
  std::vector<Entry> entries;
  std::vector<std::pair<std::string, double>> rhs;
  std::vector<std::tuple<std::string, std::string, double>> bounds;
  bool in_int = false;
  auto parse_num = [](const std::string& s) {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error(ErrorKind::Io, "bad number '" + s + "' in MPS");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '*') continue;
    if (line[0] != ' ') {
      std::istringstream hs(line);
      hs >> section;
      continue;
    }
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (section == "OBJSENSE") {
      if (tok[0] != "MIN") throw Error(ErrorKind::Io, "only MIN objective sense is supported");
    } else if (section == "ROWS") {
      if (tok.size() != 2) throw Error(ErrorKind::Io, "bad ROWS line");
      if (tok[0] == "E") {
        row_index[tok[1]] = {'E', static_cast<int>(eq_rows.size())};
        eq_rows.push_back(tok[1]);
      } else if (tok[0] == "L") {
        row_index[tok[1]] = {'L', static_cast<int>(le_rows.size())};
        le_rows.push_back(tok[1]);
      } else if (tok[0] == "N") {
        row_index[tok[1]] = {'N', 0};
      } else {
        throw Error(ErrorKind::Io, "unsupported row type " + tok[0]);
      }
    } else if (section == "COLUMNS") {
      if (tok.size() == 3 && tok[1] == "'MARKER'") {
        in_int = tok[2] == "'INTORG'";
        continue;
      }
      if (tok.size() != 3 && tok.size() != 5) throw Error(ErrorKind::Io, "bad COLUMNS line");
      auto it = var_index.find(tok[0]);
      int v;
      if (it == var_index.end()) {
        v = static_cast<int>(vars.size());
        var_index[tok[0]] = v;
        vars.push_back(tok[0]);
        integer.push_back(in_int);
      } else {
        v = it->second;
      }
      for (size_t k = 1; k + 1 < tok.size(); k += 2) entries.push_back({v, tok[k], parse_num(tok[k + 1])});
    } else if (section == "RHS") {
      for (size_t k = 1; k + 1 < tok.size(); k += 2) rhs.emplace_back(tok[k], parse_num(tok[k + 1]));
    } else if (section == "BOUNDS") {
      if (tok.size() != 4) throw Error(ErrorKind::Io, "bad BOUNDS line");
      bounds.emplace_back(tok[0], tok[2], parse_num(tok[3]));
    }
  }
  MilpModel m;
  const int nv = static_cast<int>(vars.size());
  m.var_names = vars;
  m.integer = integer;
  m.c = Vec::Zero(nv);
  m.lower = Vec::Zero(nv);
  m.upper = Vec::Constant(nv, std::numeric_limits<double>::infinity());
  m.eq_names = eq_rows;
  m.le_names = le_rows;
  m.A_eq = Mat::Zero(static_cast<Eigen::Index>(eq_rows.size()), nv);
  m.A_le = Mat::Zero(static_cast<Eigen::Index>(le_rows.size()), nv);
  m.b_eq = Vec::Zero(static_cast<Eigen::Index>(eq_rows.size()));
  m.b_le = Vec::Zero(static_cast<Eigen::Index>(le_rows.size()));
  auto row_of = [&](const std::string& r) {
    auto it = row_index.find(r);
    if (it == row_index.end()) throw Error(ErrorKind::Io, "unknown row " + r);
    return it->second;
  };
  for (const Entry& e : entries) {
    const auto [type, pos] = row_of(e.row);
    if (type == 'N') m.c[e.var] = e.val;
    else if (type == 'E') m.A_eq(pos, e.var) = e.val;
    else m.A_le(pos, e.var) = e.val;
  }
  for (const auto& [r, v] : rhs) {
    const auto [type, pos] = row_of(r);
    if (type == 'E') m.b_eq[pos] = v;
    else if (type == 'L') m.b_le[pos] = v;
  }
  for (const auto& [type, name, v] : bounds) {
    auto it = var_index.find(name);
    if (it == var_index.end()) throw Error(ErrorKind::Io, "bound on unknown column " + name);
    if (type == "UP") m.upper[it->second] = v;
    else if (type == "LO") m.lower[it->second] = v;
    else if (type == "FX") m.lower[it->second] = m.upper[it->second] = v;
    else throw Error(ErrorKind::Io, "unsupported bound type " + type);
  }
  for (int j = 0; j < nv; ++j) {
    if (m.integer[static_cast<size_t>(j)] && m.upper[j] == std::numeric_limits<double>::infinity()) m.upper[j] = 1.0;
  }
  if (nv > 0 && (nv - 1) % 6 == 0) m.n_items = (nv - 1) / 6;
  return m;
}

MilpModel read_mps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mps(ss.str());
}

}  // namespace mnld
