#pragma once

#include <json.hpp>

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdro/wdro.hpp"

namespace wdro::cli {

using Json = nlohmann::ordered_json;

// Bad flags, unreadable or malformed input files.  Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  Mat data;
};

CsvTable read_csv(const std::string& path);
Json read_json(const std::string& path);

Vec to_vec(const Json& j, const std::string& where);
Mat to_mat(const Json& j, const std::string& where);
Json from_vec(const Vec& v);
Json from_mat(const Mat& m);
// +-inf become "Infinity"/"-Infinity", NaN becomes null
Json number(double x);

// .json: {"atoms": [[...]], "weights": [...]} (weights default to uniform);
// anything else: CSV samples with uniform weights.
DiscreteDistribution load_distribution(const std::string& path);
// .json: {"mean": [...], "cov": [[...]]}; otherwise CSV samples.
MomentPair load_moments(const std::string& path);

NormSpec parse_norm(const std::string& s);
double parse_order(const std::string& s);  // "1", "2", "inf"
SetSpec parse_support(const Json& j, int dim, const std::string& where);

// Shortest round-trip decimal for every number.
void write_json(std::ostream& os, const Json& j, int indent = 2);

}  // namespace wdro::cli
