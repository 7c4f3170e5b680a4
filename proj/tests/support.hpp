#pragma once

#include <string>

#include "adn/case.hpp"

namespace adn::test {

inline std::string source_path(const std::string& relative) { return std::string(ADN_SOURCE_DIR) + "/" + relative; }

inline NetworkCase load_fixture(const std::string& name) {
  return load_case_file(source_path("data/cases/" + name + ".json"));
}

}  // namespace adn::test
