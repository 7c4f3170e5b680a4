#pragma once

#include <stdexcept>
#include <string_view>

#include "adn/requirements.hpp"

namespace adn {

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Timestep used by single-timestep objectives when the request names none.
inline constexpr int kDefaultTimestep = 12;

// Deterministic keyword extractor over the catalog synonym tables. Longest phrase wins at each
// position; negations and unavailability phrases remove equipment within their clause.
StructuredRequirements extract_reference(std::string_view request, const RequestCatalog& catalog);

}  // namespace adn
