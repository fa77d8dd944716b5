#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace cvforge {

// Insertion-ordered JSON so that configs and results serialize in a stable,
// declaration-preserving order.
using Json = nlohmann::ordered_json;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ProblemType { regression, classification };

inline std::string to_string(ProblemType pt) {
  return pt == ProblemType::regression ? "regression" : "classification";
}

inline ProblemType problem_type_from_string(const std::string& s) {
  if (s == "regression") return ProblemType::regression;
  if (s == "classification") return ProblemType::classification;
  throw Error("unknown problem_type: " + s);
}

}  // namespace cvforge
