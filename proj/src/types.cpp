#include "fiqopt/types.hpp"

#include <stdexcept>

namespace fiqopt {

bool parse_theta_mode(const std::string& name, ThetaMode& out) {
  if (name == "formula-literal") out = ThetaMode::kFormulaLiteral;
  else if (name == "count-normalized") out = ThetaMode::kCountNormalized;
  else if (name == "skip-empty") out = ThetaMode::kSkipEmpty;
  else return false;
  return true;
}

std::string theta_mode_name(ThetaMode mode) {
  switch (mode) {
    case ThetaMode::kFormulaLiteral: return "formula-literal";
    case ThetaMode::kCountNormalized: return "count-normalized";
    case ThetaMode::kSkipEmpty: return "skip-empty";
  }
  return "?";
}

void OptimConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("config: epsilon must be in [0,1]");
  if (k < 1) throw std::invalid_argument("config: k must be >= 1");
  if (repeats < 1) throw std::invalid_argument("config: repeats must be >= 1");
}

}  // namespace fiqopt
