#pragma once

#include <random>
#include <string>

#include "adn/model.hpp"

namespace adn::test {

// Random well-formed model: mixed var kinds, linear/quad/cone rows, optional min-max objective.
inline Model random_model(std::mt19937& rng) {
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_int_distribution<int> exponent(-6, 3);
  auto number = [&] {
    const double c = coef(rng);
    return coin(rng) ? std::round(c * 4.0) / 4.0 : c * std::pow(10.0, exponent(rng));
  };
  Model m;
  m.name = "rand" + std::to_string(rng() % 1000);
  if (coin(rng)) m.horizon = Horizon{count(rng), coin(rng) ? 1.0 : 0.25};
  const int n = count(rng) + 1;
  for (int i = 0; i < n; ++i) {
    Var v;
    v.name = (coin(rng) ? "P_" : "v.") + std::to_string(i) + "_" + std::to_string(rng() % 24);
    if (m.has_var(v.name)) continue;
    if (rng() % 4 == 0) {
      v.kind = VarKind::binary;
      v.lb = 0.0;
      v.ub = 1.0;
    } else {
      v.lb = coin(rng) ? -kInf : -std::abs(number());
      v.ub = coin(rng) ? kInf : std::abs(number());
    }
    if (coin(rng)) v.tag = kAllComponents[rng() % 5];
    m.vars.push_back(v);
  }
  auto pick = [&] { return m.vars[rng() % m.vars.size()].name; };
  auto affine = [&] {
    Expr e;
    const int terms = 1 + static_cast<int>(rng() % 3);
    for (int k = 0; k < terms; ++k) e.add_term(pick(), number());
    if (coin(rng)) e.constant = number();
    return e.prune();
  };
  const int rows = count(rng);
  for (int r = 0; r < rows; ++r) {
    const std::string name = "row." + std::to_string(r);
    const Component tag = kAllComponents[rng() % 5];
    switch (rng() % 3) {
      case 0: {
        LinearRow row{affine(), static_cast<Relation>(rng() % 3), number()};
        if (rng() % 4 == 0) row.expr.add_quad(pick(), pick(), number());
        m.add_constraint(name, tag, row);
        break;
      }
      case 1: {
        Expr lhs = affine();
        lhs.add_quad(pick(), pick(), std::abs(number()) + 0.5);
        m.add_constraint(name, tag, QuadRow{lhs, affine()});
        break;
      }
      default: {
        ConeRow row;
        const int k = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < k; ++i) row.args.push_back(affine());
        row.bound = affine();
        m.add_constraint(name, tag, row);
      }
    }
  }
  if (rng() % 4 == 0) {
    m.objective.max_terms = {affine(), affine()};
  } else {
    m.objective.expr = affine();
    if (coin(rng)) m.objective.expr.add_quad(pick(), pick(), std::abs(number()));
  }
  return m;
}

}  // namespace adn::test
