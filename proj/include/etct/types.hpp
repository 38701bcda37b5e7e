#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace etct {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Inter-sample sequence in units of the checking period h (entries 1..k_bar).
using KSequence = std::vector<int>;

struct Tolerances {
  double psd_tol = 1e-9;        // eigenvalue sign decisions
  double strict_margin = 1e-10; // strict constraints must exceed this
  double cetc_tol = 1e-9;       // bisection width for continuous triggering
  int cetc_grid_points = 2000;  // scan step is tau_bar / cetc_grid_points
  double zero_norm = 1e-300;    // vectors below this norm are rejected
};

std::string to_string(const KSequence& seq);
KSequence parse_ksequence(const std::string& text);

}  // namespace etct
