#pragma once

#include "etct/cone_geom.hpp"

namespace etct {

struct IstBound {
  double value = 0.0;  // best estimate (lower end when not exact)
  double upper = 0.0;  // equals value when exact
  bool exact = true;
};

// Least s with N(s) not negative definite. CETC scan starts at the first grid
// point after 0 and is refined by bisection.
IstBound inf_ist(const EtcSystem& sys);

// Largest inter-sample time over all states, capped at tau_bar.
IstBound sup_ist(const EtcSystem& sys, const FeasibilityBudget& budget = {});

}  // namespace etct
