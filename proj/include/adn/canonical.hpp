#pragma once

#include <map>
#include <string>
#include <vector>

#include "adn/model.hpp"

namespace adn {

// Lowers quadratic rows and quadratic objectives to cones; leaves only linear rows, cone rows and a
// linear objective. Sorted output; idempotent. Throws ModelError("non-convex quadratic ...").
Model canonicalize(const Model& m);

// True when the model satisfies the solver input contract.
bool is_canonical(const Model& m);

enum class DiffOutcome { match, partial, missing };
std::string_view to_string(DiffOutcome o);

struct ComponentDiff {
  DiffOutcome outcome = DiffOutcome::match;
  int reference_rows = 0;
  int candidate_rows = 0;
  int matched = 0;
  std::vector<std::string> only_in_reference;
  std::vector<std::string> only_in_candidate;
};

using ModelDiff = std::map<Component, ComponentDiff>;

// Compares canonicalized models row by row within each component tag. Rows align on shape (kind,
// relation, variable names) and scale-normalized coefficients within `tolerance`; row names are ignored.
ModelDiff diff_components(const Model& reference, const Model& candidate, double tolerance = 1e-9);

}  // namespace adn
