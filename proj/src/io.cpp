#include "mmd/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "mmd/error.hpp"

namespace mmd {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json design_to_json(const Design& d) {
  json j;
  j["T"] = d.T;
  j["decision_points"] = d.points;
  return j;
}

Design design_from_json(const json& j) {
  if (!j.is_object()) fail("invalid_design", "design JSON must be an object");
  if (!j.contains("T") || !j["T"].is_number_integer()) fail("invalid_design", "field 'T' must be an integer");
  if (!j.contains("decision_points") || !j["decision_points"].is_array())
    fail("invalid_design", "field 'decision_points' must be an array of integers");
  std::vector<int> pts;
  for (const auto& v : j["decision_points"]) {
    if (!v.is_number_integer()) fail("invalid_design", "field 'decision_points' must hold integers only");
    pts.push_back(v.get<int>());
  }
  try {
    return Design::make(j["T"].get<int>(), std::move(pts));
  } catch (const Error& e) {
    fail("invalid_design", std::string("field 'decision_points': ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail("invalid_json", "'" + path + "' is not valid JSON: " + e.what());
  }
}

Design read_design_file(const std::string& path) {
  const json j = read_json_file(path);
  return design_from_json(j.contains("design") && j["design"].is_object() ? j["design"] : j);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("io_error", "cannot write '" + path + "'");
  out << text;
  if (!out) fail("io_error", "failed writing '" + path + "'");
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "unit,time,q,z,y\n";
  for (int i = 0; i < tr.N; ++i)
    for (int t = 1; t <= tr.T; ++t)
      os << (i + 1) << ',' << t << ',' << format_double(tr.q(t)) << ',' << int(tr.z(i, t)) << ','
         << format_double(tr.y(i, t)) << '\n';
}

namespace {

template <class T>
T parse_num(const std::string& s, int line, const char* field) {
  T v{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e)
    fail("invalid_csv", "line " + std::to_string(line) + ": cannot parse field '" + field + "' from '" + s + "'");
  return v;
}

}  // namespace

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail("invalid_csv", "trajectory CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "unit,time,q,z,y") fail("invalid_csv", "trajectory CSV header must be 'unit,time,q,z,y'");
  struct Row {
    int i, t;
    double q;
    int z;
    double y;
  };
  std::vector<Row> rows;
  int N = 0, T = 0;
  int ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) fail("invalid_csv", "line " + std::to_string(ln) + ": expected 5 fields");
    Row r{parse_num<int>(f[0], ln, "unit"), parse_num<int>(f[1], ln, "time"), parse_num<double>(f[2], ln, "q"),
          parse_num<int>(f[3], ln, "z"), parse_num<double>(f[4], ln, "y")};
    if (r.i < 1 || r.t < 1) fail("invalid_csv", "line " + std::to_string(ln) + ": unit and time are 1-based");
    if (r.z != 0 && r.z != 1) fail("invalid_csv", "line " + std::to_string(ln) + ": z must be 0 or 1");
    N = std::max(N, r.i);
    T = std::max(T, r.t);
    rows.push_back(r);
  }
  if (rows.empty()) fail("invalid_csv", "trajectory CSV has no rows");
  if (rows.size() != static_cast<size_t>(N) * T)
    fail("invalid_csv", "trajectory CSV must hold exactly one row per (unit, time)");
  Trajectory tr(N, T);
  std::vector<char> seen(static_cast<size_t>(N) * T, 0);
  std::vector<char> qset(static_cast<size_t>(T), 0);
  for (const Row& r : rows) {
    const size_t k = tr.idx(r.i - 1, r.t);
    if (seen[k]) fail("invalid_csv", "duplicate row for unit " + std::to_string(r.i) + ", time " + std::to_string(r.t));
    seen[k] = 1;
    auto& qs = qset[static_cast<size_t>(r.t - 1)];
    if (qs && tr.Q[static_cast<size_t>(r.t - 1)] != r.q)
      fail("invalid_csv", "q differs across units at time " + std::to_string(r.t));
    qs = 1;
    tr.Q[static_cast<size_t>(r.t - 1)] = r.q;
    tr.Z[k] = static_cast<std::uint8_t>(r.z);
    tr.Y[k] = r.y;
  }
  return tr;
}

Trajectory read_trajectory_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io_error", "cannot open '" + path + "'");
  return read_trajectory_csv(in);
}

}  // namespace mmd
