#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "koopman/polynomial.hpp"
#include "koopman/system.hpp"

namespace koopman::cli {

// Parsed system-definition file.
//
//   # comment
//   dim = 2
//   f1 = -x2
//   f2 = x1 - x2 + x1^2*x2
//   box = -3 3 -3 3        # lower/upper pairs per axis
//   guess = 0 0
//   order = 20             # any other key is an analysis parameter
//
// Statements end at a newline or ';'.
struct SystemDefinition {
  int dimension = 0;
  std::vector<MonomialPoly> components;
  std::vector<std::string> expressions;
  std::optional<Eigen::VectorXd> box_lower;
  std::optional<Eigen::VectorXd> box_upper;
  std::optional<Eigen::VectorXd> guess;
  // Remaining `key = value` pairs, values kept verbatim.
  std::map<std::string, std::string> parameters;

  DynamicalSystem system(const std::string& name = "") const;
};

// Throws ParseError (line and column are 1-based) for syntax errors,
// undeclared variables and dimension mismatches.
SystemDefinition parse_system(const std::string& text);

// A single polynomial expression over x1..x_dimension.
MonomialPoly parse_expression(const std::string& text, int dimension);

}  // namespace koopman::cli
