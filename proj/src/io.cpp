#include "wdro/cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wdro::cli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool parse_double(const std::string& s, double& x) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto r = std::from_chars(b, e, x);
  return r.ec == std::errc() && r.ptr == e && !std::isnan(x);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

double json_number(const Json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "Infinity" || s == "inf") return kInf;
    if (s == "-Infinity" || s == "-inf") return -kInf;
  }
  throw UsageError(where + ": expected a number");
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open file");
  CsvTable t;
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = fields;
      continue;
    }
    if (fields.size() != t.header.size())
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    std::vector<double> row(fields.size());
    for (size_t k = 0; k < fields.size(); ++k)
      if (!parse_double(fields[k], row[k]))
        throw UsageError(path + ":" + std::to_string(lineno) + ": column '" + t.header[k] +
                         "': not a number '" + fields[k] + "'");
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw UsageError(path + ": empty file (a header row is required)");
  t.data = Mat(rows.size(), t.header.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t k = 0; k < rows[i].size(); ++k) t.data(i, k) = rows[i][k];
  return t;
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(path + ": invalid JSON: " + e.what());
  }
}

Vec to_vec(const Json& j, const std::string& where) {
  if (!j.is_array()) throw UsageError(where + ": expected an array of numbers");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(i) = json_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Mat to_mat(const Json& j, const std::string& where) {
  if (!j.is_array()) throw UsageError(where + ": expected an array of rows");
  if (j.empty()) return Mat(0, 0);
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    std::string w = where + "[" + std::to_string(i) + "]";
    Vec r = to_vec(j[i], w);
    if (static_cast<size_t>(r.size()) != cols) throw UsageError(w + ": ragged matrix");
    m.row(i) = r.transpose();
  }
  return m;
}

Json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  return x;
}

Json from_vec(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json from_mat(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(from_vec(m.row(i).transpose()));
  return a;
}

DiscreteDistribution load_distribution(const std::string& path) {
  if (ends_with(path, ".json")) {
    Json j = read_json(path);
    if (!j.is_object() || !j.contains("atoms"))
      throw UsageError(path + ": expected an object with \"atoms\"");
    DiscreteDistribution d;
    d.atoms = to_mat(j["atoms"], path + ": atoms");
    if (d.atoms.rows() == 0) throw UsageError(path + ": no atoms");
    d.weights = j.contains("weights") ? to_vec(j["weights"], path + ": weights")
                                      : Vec::Constant(d.atoms.rows(), 1.0 / d.atoms.rows());
    if (d.weights.size() != d.atoms.rows())
      throw UsageError(path + ": one weight per atom required");
    return d;
  }
  CsvTable t = read_csv(path);
  if (t.data.rows() == 0) throw UsageError(path + ": no samples");
  return empirical(t.data);
}

MomentPair load_moments(const std::string& path) {
  if (ends_with(path, ".json")) {
    Json j = read_json(path);
    if (!j.is_object() || !j.contains("mean") || !j.contains("cov"))
      throw UsageError(path + ": expected an object with \"mean\" and \"cov\"");
    MomentPair m{to_vec(j["mean"], path + ": mean"), to_mat(j["cov"], path + ": cov")};
    if (m.cov.rows() != m.mean.size() || m.cov.cols() != m.mean.size())
      throw UsageError(path + ": cov must be square with the size of mean");
    return m;
  }
  CsvTable t = read_csv(path);
  if (t.data.rows() == 0) throw UsageError(path + ": no samples");
  return moments(empirical(t.data));
}

NormSpec parse_norm(const std::string& s) {
  if (s == "l1") return NormSpec::l1();
  if (s == "l2") return NormSpec::l2();
  if (s == "linf") return NormSpec::linf();
  if (s.rfind("l", 0) == 0) {
    double p;
    if (parse_double(s.substr(1), p) && p >= 1) return NormSpec::p(p);
  }
  throw UsageError("unknown norm '" + s + "' (use l1, l2, linf or l<p>)");
}

double parse_order(const std::string& s) {
  if (s == "inf") return kInf;
  double p;
  if (!parse_double(s, p) || !(p >= 1)) throw UsageError("order must be a number >= 1 or 'inf', got '" + s + "'");
  return p;
}

SetSpec parse_support(const Json& j, int dim, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw UsageError(where + ": expected an object with a \"type\"");
  const std::string type = j["type"];
  auto field = [&](const char* k) -> const Json& {
    if (!j.contains(k)) throw UsageError(where + ": missing \"" + std::string(k) + "\"");
    return j[k];
  };
  if (type == "whole") return SetSpec::whole(dim);
  if (type == "polyhedron") {
    Mat C = to_mat(field("C"), where + ": C");
    Vec d = to_vec(field("d"), where + ": d");
    if (C.cols() != dim || C.rows() != d.size())
      throw UsageError(where + ": C must be k x " + std::to_string(dim) + " with k = size of d");
    return SetSpec::polyhedron(C, d);
  }
  if (type == "box") {
    Vec lo = to_vec(field("lo"), where + ": lo"), hi = to_vec(field("hi"), where + ": hi");
    if (lo.size() != dim || hi.size() != dim) throw UsageError(where + ": box bounds must have size " + std::to_string(dim));
    return SetSpec::box(lo, hi);
  }
  if (type == "ball") {
    Vec c = j.contains("center") ? to_vec(j["center"], where + ": center") : Vec::Zero(dim);
    if (c.size() != dim) throw UsageError(where + ": center must have size " + std::to_string(dim));
    if (!field("radius").is_number()) throw UsageError(where + ": radius must be a number");
    return SetSpec::ball(parse_norm(j.value("norm", std::string("l2"))), j["radius"].get<double>(), c);
  }
  throw UsageError(where + ": unknown support type '" + type + "'");
}

namespace {

void write_value(std::ostream& os, const Json& j, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    os << '\n' << std::string(static_cast<size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        newline(depth + 1);
        os << Json(it.key()).dump() << (indent < 0 ? ":" : ": ");
        write_value(os, it.value(), indent, depth + 1);
      }
      newline(depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // numeric rows stay on one line
      bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return !e.is_structured(); });
      os << '[';
      for (size_t i = 0; i < j.size(); ++i) {
        if (i) os << (flat ? ", " : ",");
        if (!flat) newline(depth + 1);
        write_value(os, j[i], indent, depth + 1);
      }
      if (!flat) newline(depth);
      os << ']';
      return;
    }
    case Json::value_t::number_float: {
      double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << number(x).dump();
        return;
      }
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof buf, x);
      os.write(buf, r.ptr - buf);
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

void write_json(std::ostream& os, const Json& j, int indent) {
  write_value(os, j, indent, 0);
  os << '\n';
}

}  // namespace wdro::cli
