#pragma once

#include "etct/cone_geom.hpp"

#include <string>

namespace etct {

// QF_NRA script: variables x0..x{n-1}, sum x_i^2 = 1, one polynomial
// inequality per constraint, then (check-sat) and (get-model) on sat.
std::string to_smtlib(const Region& r);

// Decimal literal without exponent, negatives as (- d).
std::string smt_decimal(double v);

std::string default_smt_command();

// Runs the solver as a subprocess. Throws BackendError on I/O failure or an
// unparseable answer.
FeasibilityVerdict smt_feasible(const Region& r, const FeasibilityBudget& budget);

}  // namespace etct
