#pragma once

#include <string>
#include <vector>

namespace norm::verify {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;  // worst observed quantity
  double limit = 0.0;  // pass threshold for value
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool pass() const;
  // Largest value / limit over the checks (<= 1 when everything passes).
  double worst_margin() const;
};

// First ten nonzero Neumann eigenvalues of the unit-square grid (n = 64)
// against pi^2 (m^2 + n^2), relative error <= 2%.
SuiteResult spectrum();

// Projection-error bound for 20 seeded band-limited fields at n = 8, 32, 64,
// tightness on phi_{n+1}, and sin(2 pi x) sin(2 pi y) at n = 10.
SuiteResult bound();

// spectral_block against a four-loop reference on 50 random small shapes.
SuiteResult tensor_oracle();

// Central differences on a GELU model with two layers, d_m = 8, d_v = 4:
// 30 random parameters plus two from every parameter tensor.
SuiteResult gradcheck();

// Poisson centre value on the unit square and the linear patch test.
SuiteResult fem();

// Runs a suite by CLI name (spectrum, bound, gradcheck, tensor-oracle, fem).
// Returns false for an unknown name.
bool run_named(const std::string& name, SuiteResult& out);

const std::vector<std::string>& suite_names();

}  // namespace norm::verify
