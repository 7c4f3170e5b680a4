#include "adn/formulator.hpp"

#include <algorithm>
#include <cmath>

#include "adn/dsl.hpp"
#include "adn/util.hpp"

namespace adn {

namespace names {

std::string voltage(int bus, int t) { return "v_" + std::to_string(bus) + "_" + std::to_string(t); }

std::string branch(std::string_view quantity, const Branch& b, int t) {
  return std::string(quantity) + "_" + std::to_string(b.from_bus) + "_" + std::to_string(b.to_bus) + "_" +
         std::to_string(t);
}

std::string grid(std::string_view quantity, int t) { return std::string(quantity) + "_grid_0_" + std::to_string(t); }

std::string device(std::string_view prefix, int bus, int t) {
  return std::string(prefix) + "_" + std::to_string(bus) + "_" + std::to_string(t);
}

}  // namespace names

// ---------------------------------------------------------------------------
// Fragment text

std::string print_fragment(const Fragment& f) {
  std::vector<Var> vars = f.vars;
  std::sort(vars.begin(), vars.end(), [](const Var& a, const Var& b) { return a.name < b.name; });
  std::vector<Constraint> rows = f.constraints;
  std::sort(rows.begin(), rows.end(), [](const Constraint& a, const Constraint& b) { return a.name < b.name; });
  std::string out;
  for (const auto& v : vars) out += print_var(v) + "\n";
  if (f.objective) out += print_objective(*f.objective) + "\n";
  for (const auto& c : rows) out += print_constraint(c) + "\n";
  return out;
}

Fragment parse_fragment(std::string_view text, Component component) {
  ParseOptions opts;
  opts.require_objective = false;
  opts.require_declarations = false;
  Model m = parse_model(text, opts);
  Fragment f;
  f.component = component;
  f.vars = std::move(m.vars);
  f.constraints = std::move(m.constraints);
  if (component == Component::objective || m.objective.is_min_max() || !m.objective.expr.is_constant())
    f.objective = std::move(m.objective);
  return f;
}

// ---------------------------------------------------------------------------
// Context

FormulationContext::FormulationContext(StructuredRequirements req, const NetworkCase& c) : req_(std::move(req)) {
  if (req_.horizon.is_single()) {
    try {
      case_ = snapshot_at(c, req_.horizon.t_hat);
    } catch (const CaseError& e) {
      throw FormulationError(e.what());
    }
    labels_ = {req_.horizon.t_hat};
  } else {
    case_ = c;
    for (int t = 0; t < c.steps(); ++t) labels_.push_back(t);
  }
}

const Fragment& FormulationContext::fragment(Component c) const {
  auto it = fragments_.find(c);
  if (it == fragments_.end()) throw FormulationError("missing " + std::string(to_string(c)) + " fragment");
  return it->second;
}

void FormulationContext::append(Fragment f) {
  const Component c = f.component;
  if (!fragments_.emplace(c, std::move(f)).second)
    throw FormulationError("duplicate " + std::string(to_string(c)) + " fragment");
}

namespace {

void require(const FormulationContext& ctx, Component c, std::string_view stage) {
  if (!ctx.has(c))
    throw FormulationError(std::string(stage) + " requires the " + std::string(to_string(c)) + " fragment");
}

Var continuous(std::string name, double lb, double ub, Component tag) {
  return Var{std::move(name), VarKind::continuous, lb, ub, tag};
}

void lin(Fragment& f, std::string name, Expr e, Relation rel, double rhs) {
  f.constraints.push_back({std::move(name), f.component, LinearRow{std::move(e.prune()), rel, rhs}});
}

void quad(Fragment& f, std::string name, Expr lhs, Expr rhs) {
  f.constraints.push_back({std::move(name), f.component, QuadRow{std::move(lhs.prune()), std::move(rhs.prune())}});
}

// Two-sided bound as a .lo/.hi pair.
void bounds(Fragment& f, const std::string& stem, const Expr& e, double lo, double hi) {
  lin(f, stem + ".lo", e, Relation::ge, lo);
  lin(f, stem + ".hi", e, Relation::le, hi);
}

std::string step(int t) { return ".t" + std::to_string(t); }

std::string bus_key(int bus) { return std::to_string(bus); }
std::string branch_key(const Branch& b) { return std::to_string(b.from_bus) + "_" + std::to_string(b.to_bus); }

double voltage_override(const StructuredRequirements& req, const char* key, double fallback) {
  if (const auto* c = req.constraint(ConstraintKind::voltage_safety)) {
    auto it = c->overrides.find(key);
    if (it != c->overrides.end()) return it->second;
  }
  return fallback;
}

Expr squared_deviation(const std::string& v) {
  Expr e = Expr::square(v);
  e.add_term(v, -2.0);
  e.constant = 1.0;
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages

Fragment build_objective(const FormulationContext& ctx) {
  const auto& c = ctx.network();
  const auto& req = ctx.requirements();
  const auto& labels = ctx.time_labels();
  Fragment f;
  f.component = Component::objective;
  ModelObjective obj;
  switch (req.objective) {
    case Objective::min_cost:
      for (std::size_t k = 0; k < labels.size(); ++k) {
        const int t = labels[k];
        if (ctx.uses(EquipmentKind::dg))
          for (const auto& dg : c.devices_of<DgUnit>()) obj.expr.add_term(names::device("P_dg", dg.bus, t), c.prices.rho_dg);
        if (ctx.uses(EquipmentKind::bess))
          for (const auto& b : c.devices_of<BessUnit>()) {
            obj.expr.add_term(names::device("P_dis", b.bus, t), c.prices.rho_bess_dis);
            obj.expr.add_term(names::device("P_cha", b.bus, t), c.prices.rho_bess_cha);
          }
        obj.expr.add_term(names::grid("P", t), c.prices.rho0_at(static_cast<int>(k)));
      }
      break;
    case Objective::min_loss:
      for (int t : labels)
        for (const auto& b : c.branches) obj.expr.add_term(names::branch("l", b, t), b.r);
      break;
    case Objective::min_voltage_deviation:
      for (int t : labels)
        for (const auto& bus : c.buses) obj.expr.add(squared_deviation(names::voltage(bus.id, t)));
      break;
    case Objective::eliminate_voltage_violation:
      for (int t : labels)
        for (const auto& bus : c.buses) obj.max_terms.push_back(squared_deviation(names::voltage(bus.id, t)));
      break;
    case Objective::eliminate_branch_violation:
      for (int t : labels)
        for (const auto& b : c.branches) {
          Expr e = Expr::square(names::branch("P", b, t));
          e.add(Expr::square(names::branch("Q", b, t)));
          obj.max_terms.push_back(std::move(e));
        }
      break;
    default:
      throw FormulationError("unknown objective");
  }
  obj.expr.prune();
  f.objective = std::move(obj);
  return f;
}

Fragment build_equipment_constraints(const FormulationContext& ctx) {
  require(ctx, Component::objective, "equipment stage");
  const auto& c = ctx.network();
  const auto installed = c.installed_equipment();
  for (auto kind : ctx.requirements().equipment)
    if (!installed.contains(kind))
      throw FormulationError("equipment in requirements absent from case: " + std::string(to_string(kind)));

  const auto& labels = ctx.time_labels();
  const bool temporal = !ctx.single_timestep();
  const double dt = c.horizon.dt_hours;
  Fragment f;
  f.component = Component::equipment;
  const Component tag = Component::equipment;

  if (ctx.uses(EquipmentKind::dg))
    for (const auto& dg : c.devices_of<DgUnit>()) {
      const std::string b = bus_key(dg.bus);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        const int t = labels[k];
        const std::string p = names::device("P_dg", dg.bus, t);
        const std::string q = names::device("Q_dg", dg.bus, t);
        f.vars.push_back(continuous(p, -kInf, kInf, tag));
        f.vars.push_back(continuous(q, -kInf, kInf, tag));
        bounds(f, "eq.dg.p." + b + step(t), Expr::term(p), dg.p_min, dg.p_max);
        bounds(f, "eq.dg.q." + b + step(t), Expr::term(q), dg.q_min, dg.q_max);
        if (!temporal) continue;
        if (k > 0) {
          Expr ramp = Expr::term(p);
          ramp.add_term(names::device("P_dg", dg.bus, labels[k - 1]), -1.0);
          bounds(f, "eq.dg.ramp." + b + step(t), ramp, -dg.r_max, dg.r_max);
        } else if (dg.p_init) {
          bounds(f, "eq.dg.ramp." + b + step(t), Expr::term(p), *dg.p_init - dg.r_max, *dg.p_init + dg.r_max);
        }
      }
    }

  if (ctx.uses(EquipmentKind::bess))
    for (const auto& es : c.devices_of<BessUnit>()) {
      const std::string b = bus_key(es.bus);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        const int t = labels[k];
        const std::string dis = names::device("P_dis", es.bus, t);
        const std::string cha = names::device("P_cha", es.bus, t);
        f.vars.push_back(continuous(dis, -kInf, kInf, tag));
        f.vars.push_back(continuous(cha, -kInf, kInf, tag));
        bounds(f, "eq.bess.dis." + b + step(t), Expr::term(dis), 0.0, es.p_dis_max);
        bounds(f, "eq.bess.cha." + b + step(t), Expr::term(cha), 0.0, es.p_cha_max);
        Expr comp;
        comp.add_quad(dis, cha, 1.0);
        lin(f, "eq.bess.comp." + b + step(t), comp, Relation::eq, 0.0);
        if (!temporal) continue;
        const std::string soc = names::device("SOC", es.bus, t);
        f.vars.push_back(continuous(soc, -kInf, kInf, tag));
        bounds(f, "eq.bess.soc." + b + step(t), Expr::term(soc), es.soc_min, es.soc_max);
        if (k == 0) {
          lin(f, "eq.bess.init." + b, Expr::term(soc), Relation::eq, es.soc_init);
        } else {
          Expr dyn = Expr::term(soc);
          dyn.add_term(names::device("SOC", es.bus, labels[k - 1]), -1.0);
          dyn.add_term(dis, dt / (es.eta * es.e_cap));
          dyn.add_term(cha, -es.eta * dt / es.e_cap);
          lin(f, "eq.bess.dyn." + b + step(t), dyn, Relation::eq, 0.0);
        }
      }
      if (temporal && labels.size() > 1) {
        Expr fin = Expr::term(names::device("SOC", es.bus, labels.back()));
        fin.add_term(names::device("SOC", es.bus, labels.front()), -1.0);
        lin(f, "eq.bess.final." + b, fin, Relation::eq, 0.0);
      }
    }

  if (ctx.uses(EquipmentKind::pv))
    for (const auto& pv : c.devices_of<PvUnit>()) {
      const std::string b = bus_key(pv.bus);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        const int t = labels[k];
        const std::string q = names::device("Q_pv", pv.bus, t);
        f.vars.push_back(continuous(q, -kInf, kInf, tag));
        Expr cap = Expr::square(q);
        if (pv.curtailable) {
          const std::string p = names::device("P_pv", pv.bus, t);
          f.vars.push_back(continuous(p, -kInf, kInf, tag));
          bounds(f, "eq.pv.p." + b + step(t), Expr::term(p), 0.0, pv.p_avail[k]);
          cap.add(Expr::square(p));
        } else {
          cap.constant = pv.p_avail[k] * pv.p_avail[k];
        }
        quad(f, "eq.pv.cap." + b + step(t), cap, Expr::number(pv.s_max * pv.s_max));
      }
    }

  if (ctx.uses(EquipmentKind::svc))
    for (const auto& svc : c.devices_of<SvcUnit>()) {
      for (int t : ctx.time_labels()) {
        const std::string q = names::device("Q_svc", svc.bus, t);
        f.vars.push_back(continuous(q, -kInf, kInf, tag));
        bounds(f, "eq.svc.q." + bus_key(svc.bus) + step(t), Expr::term(q), 0.0, svc.q_max);
      }
    }
  return f;
}

Fragment build_power_flow(const FormulationContext& ctx) {
  require(ctx, Component::equipment, "power-flow stage");
  const auto& c = ctx.network();
  const auto& labels = ctx.time_labels();
  const auto parent = parent_branch_index(c);
  std::vector<std::vector<int>> children(c.bus_count());
  for (int e = 0; e < c.branch_count(); ++e) children[c.branches[e].from_bus].push_back(e);

  Fragment f;
  f.component = Component::power_flow;
  const Component tag = Component::power_flow;

  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int t = labels[k];
    for (const auto& bus : c.buses) f.vars.push_back(continuous(names::voltage(bus.id, t), 0.0, kInf, tag));
    for (const auto& br : c.branches) {
      f.vars.push_back(continuous(names::branch("P", br, t), -kInf, kInf, tag));
      f.vars.push_back(continuous(names::branch("Q", br, t), -kInf, kInf, tag));
      f.vars.push_back(continuous(names::branch("l", br, t), 0.0, kInf, tag));
    }
    f.vars.push_back(continuous(names::grid("P", t), -kInf, kInf, tag));
    f.vars.push_back(continuous(names::grid("Q", t), -kInf, kInf, tag));

    // Net injections from requested devices.
    std::vector<Expr> p_inj(c.bus_count()), q_inj(c.bus_count());
    if (ctx.uses(EquipmentKind::dg))
      for (const auto& dg : c.devices_of<DgUnit>()) {
        p_inj[dg.bus].add_term(names::device("P_dg", dg.bus, t), 1.0);
        q_inj[dg.bus].add_term(names::device("Q_dg", dg.bus, t), 1.0);
      }
    if (ctx.uses(EquipmentKind::bess))
      for (const auto& es : c.devices_of<BessUnit>()) {
        p_inj[es.bus].add_term(names::device("P_dis", es.bus, t), 1.0);
        p_inj[es.bus].add_term(names::device("P_cha", es.bus, t), -1.0);
      }
    if (ctx.uses(EquipmentKind::pv))
      for (const auto& pv : c.devices_of<PvUnit>()) {
        if (pv.curtailable) p_inj[pv.bus].add_term(names::device("P_pv", pv.bus, t), 1.0);
        else p_inj[pv.bus].constant += pv.p_avail[k];
        q_inj[pv.bus].add_term(names::device("Q_pv", pv.bus, t), 1.0);
      }
    if (ctx.uses(EquipmentKind::svc))
      for (const auto& svc : c.devices_of<SvcUnit>()) q_inj[svc.bus].add_term(names::device("Q_svc", svc.bus, t), 1.0);

    for (const auto& bus : c.buses) {
      const int j = bus.id;
      for (const char* qty : {"P", "Q"}) {
        const bool active = qty[0] == 'P';
        Expr e;
        for (int ce : children[j]) e.add_term(names::branch(qty, c.branches[ce], t), 1.0);
        if (parent[j] >= 0) {
          const Branch& br = c.branches[parent[j]];
          e.add_term(names::branch(qty, br, t), -1.0);
          e.add_term(names::branch("l", br, t), active ? br.r : br.x);
        } else {
          e.add_term(names::grid(qty, t), -1.0);
        }
        const Expr& inj = active ? p_inj[j] : q_inj[j];
        e.add(inj, -1.0);
        const double load = active ? bus.p_load[k] : bus.q_load[k];
        const double rhs = -load + inj.constant;
        e.constant = 0.0;
        lin(f, std::string(active ? "pf.p." : "pf.q.") + bus_key(j) + step(t), e, Relation::eq, rhs);
      }
    }

    for (const auto& br : c.branches) {
      const std::string key = branch_key(br);
      const std::string p = names::branch("P", br, t), q = names::branch("Q", br, t), l = names::branch("l", br, t);
      const std::string vi = names::voltage(br.from_bus, t), vj = names::voltage(br.to_bus, t);
      Expr drop = Expr::term(vj);
      drop.add_term(vi, -1.0);
      drop.add_term(p, 2.0 * br.r);
      drop.add_term(q, 2.0 * br.x);
      drop.add_term(l, -(br.r * br.r + br.x * br.x));
      lin(f, "pf.drop." + key + step(t), drop, Relation::eq, 0.0);

      Expr current;
      current.add_quad(l, vi, 1.0);
      current.add_quad(p, p, -1.0);
      current.add_quad(q, q, -1.0);
      lin(f, "pf.current." + key + step(t), current, Relation::eq, 0.0);
    }
    lin(f, "pf.root" + step(t), Expr::term(names::voltage(0, t)), Relation::eq, 1.0);
  }
  return f;
}

Fragment build_additional_constraints(const FormulationContext& ctx) {
  require(ctx, Component::power_flow, "additional-constraint stage");
  const auto& c = ctx.network();
  const auto& req = ctx.requirements();
  Fragment f;
  f.component = Component::additional;
  for (const auto& extra : req.extra_constraints) {
    switch (extra.kind) {
      case ConstraintKind::voltage_safety: {
        const double lo = voltage_override(req, "v_min", c.limits.v_min);
        const double hi = voltage_override(req, "v_max", c.limits.v_max);
        for (int t : ctx.time_labels())
          for (const auto& bus : c.buses) {
            const Expr v = Expr::term(names::voltage(bus.id, t));
            lin(f, "add.vmin." + bus_key(bus.id) + step(t), v, Relation::ge, lo * lo);
            lin(f, "add.vmax." + bus_key(bus.id) + step(t), v, Relation::le, hi * hi);
          }
        break;
      }
      case ConstraintKind::branch_safety: {
        auto it = extra.overrides.find("s_max");
        const double s = it != extra.overrides.end() ? it->second : c.limits.s_branch_max;
        for (int t : ctx.time_labels())
          for (const auto& br : c.branches) {
            Expr e = Expr::square(names::branch("P", br, t));
            e.add(Expr::square(names::branch("Q", br, t)));
            quad(f, "add.branch." + branch_key(br) + step(t), e, Expr::number(s * s));
          }
        break;
      }
      default:
        throw FormulationError("unknown constraint kind");
    }
  }
  return f;
}

Model assemble_fragments(std::string name, const Horizon& horizon, const std::vector<const Fragment*>& fragments) {
  Model m;
  m.name = std::move(name);
  m.horizon = horizon;
  for (const Fragment* f : fragments) {
    for (const auto& v : f->vars) {
      try {
        m.add_var(v);
      } catch (const ModelError& e) {
        throw FormulationError(e.what());
      }
    }
    for (const auto& row : f->constraints) {
      if (m.find_constraint(row.name)) throw FormulationError("symbol collision: row '" + row.name + "'");
      m.constraints.push_back(row);
    }
    if (f->objective) {
      if (!m.objective.expr.linear.empty() || !m.objective.expr.quadratic.empty() || !m.objective.max_terms.empty())
        throw FormulationError("symbol collision: second objective in component '" +
                               std::string(to_string(f->component)) + "'");
      m.objective = *f->objective;
    }
  }
  try {
    validate_model(m);
  } catch (const ModelError& e) {
    throw FormulationError(e.what());
  }
  sort_model(m);
  return m;
}

Model assemble(const FormulationContext& ctx) {
  std::vector<const Fragment*> parts;
  for (auto c : {Component::objective, Component::equipment, Component::power_flow, Component::additional}) {
    require(ctx, c, "assemble");
    parts.push_back(&ctx.fragment(c));
  }
  const auto& req = ctx.requirements();
  std::string name = req.district.empty() ? ctx.network().district_id : req.district;
  name += "_" + std::string(to_string(req.objective));
  return assemble_fragments(std::move(name), ctx.network().horizon, parts);
}

// ---------------------------------------------------------------------------
// Convexification

namespace {

// l*v - P^2 - Q^2 = 0 (up to scale): returns {a, b, squares} with a*b the cross term.
struct CurrentShape {
  std::string a, b;
  std::vector<std::string> squares;
};

std::optional<CurrentShape> current_shape(const LinearRow& row) {
  if (row.rel != Relation::eq || row.rhs != 0.0 || !row.expr.linear.empty() || row.expr.constant != 0.0)
    return std::nullopt;
  std::optional<std::pair<QuadKey, double>> cross;
  std::vector<std::pair<std::string, double>> sq;
  for (const auto& [k, coef] : row.expr.quadratic) {
    if (k.first == k.second) {
      sq.emplace_back(k.first, coef);
    } else {
      if (cross) return std::nullopt;
      cross = std::make_pair(k, coef);
    }
  }
  if (!cross || sq.empty()) return std::nullopt;
  const double c = cross->second;
  for (const auto& [name, coef] : sq)
    if (std::abs(coef + c) > 1e-12 * std::abs(c)) return std::nullopt;
  CurrentShape s{cross->first.first, cross->first.second, {}};
  for (const auto& [name, coef] : sq) {
    if (name == s.a || name == s.b) return std::nullopt;
    s.squares.push_back(name);
  }
  return s;
}

// x*y = 0 with nothing else.
std::optional<QuadKey> complementarity_shape(const LinearRow& row) {
  if (row.rel != Relation::eq || row.rhs != 0.0 || !row.expr.linear.empty() || row.expr.constant != 0.0 ||
      row.expr.quadratic.size() != 1)
    return std::nullopt;
  const auto& [k, coef] = *row.expr.quadratic.begin();
  if (k.first == k.second || coef == 0.0) return std::nullopt;
  return k;
}

double upper_bound(const Model& m, const std::string& var) {
  double ub = kInf;
  if (const Var* v = m.find_var(var)) ub = v->ub;
  for (const auto& c : m.constraints) {
    const auto* row = std::get_if<LinearRow>(&c.body);
    if (!row || !row->expr.is_affine() || row->expr.linear.size() != 1) continue;
    const auto& [name, coef] = *row->expr.linear.begin();
    if (name != var) continue;
    const double rhs = row->rhs - row->expr.constant;
    if ((row->rel == Relation::le && coef > 0) || (row->rel == Relation::ge && coef < 0) || row->rel == Relation::eq)
      ub = std::min(ub, rhs / coef);
  }
  return ub;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string replace_prefix(const std::string& name, std::string_view from, std::string_view to) {
  return starts_with(name, from) ? std::string(to) + name.substr(from.size()) : std::string(to) + name;
}

}  // namespace

Model convexify(const Model& input) {
  Model m;
  m.name = input.name;
  m.horizon = input.horizon;
  m.vars = input.vars;
  m.objective = input.objective;
  const Component tag = Component::convexification;

  for (const auto& c : input.constraints) {
    const auto* row = std::get_if<LinearRow>(&c.body);
    if (!row || row->expr.is_affine()) {
      m.constraints.push_back(c);
      continue;
    }
    if (auto s = current_shape(*row)) {
      // l*v >= P^2 + Q^2  as  ||(2P, 2Q, l - v)|| <= l + v
      ConeRow cone;
      for (const auto& x : s->squares) cone.args.push_back(Expr::term(x, 2.0));
      Expr diff = Expr::term(s->a);
      diff.add_term(s->b, -1.0);
      cone.args.push_back(diff);
      Expr sum = Expr::term(s->a);
      sum.add_term(s->b, 1.0);
      cone.bound = sum;
      m.constraints.push_back({replace_prefix(c.name, "pf.current.", "pf.cone."), tag, std::move(cone)});
      continue;
    }
    if (auto k = complementarity_shape(*row)) {
      std::string on = k->first, off = k->second;
      if (starts_with(off, "P_dis_") && !starts_with(on, "P_dis_")) std::swap(on, off);
      const std::string suffix = replace_prefix(c.name, "eq.bess.comp.", "");
      std::string u_name = starts_with(on, "P_dis_") ? "u_bess_" + on.substr(6) : "u_" + c.name;
      std::replace(u_name.begin(), u_name.end(), '.', '_');
      const double on_max = upper_bound(input, on), off_max = upper_bound(input, off);
      if (!std::isfinite(on_max) || !std::isfinite(off_max))
        throw FormulationError("unrecognized non-convex structure in row '" + c.name + "': unbounded complementarity");
      try {
        m.add_var(Var{u_name, VarKind::binary, 0.0, 1.0, tag});
      } catch (const ModelError& e) {
        throw FormulationError(e.what());
      }
      Expr dis = Expr::term(on);
      dis.add_term(u_name, -on_max);
      m.constraints.push_back({"cvx.bess.dis." + suffix, tag, LinearRow{dis.prune(), Relation::le, 0.0}});
      Expr cha = Expr::term(off);
      cha.add_term(u_name, off_max);
      m.constraints.push_back({"cvx.bess.cha." + suffix, tag, LinearRow{cha.prune(), Relation::le, off_max}});
      continue;
    }
    throw FormulationError("unrecognized non-convex structure in row '" + c.name + "'");
  }

  if (input.objective.is_min_max()) {
    try {
      m.add_var(Var{"z", VarKind::continuous, -kInf, kInf, tag});
    } catch (const ModelError& e) {
      throw FormulationError(e.what());
    }
    const auto& terms = input.objective.max_terms;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const std::string name = "cvx.epi." + std::to_string(k);
      if (terms[k].is_affine()) {
        Expr e = terms[k];
        e.add_term("z", -1.0);
        const double rhs = -e.constant;
        e.constant = 0.0;
        m.constraints.push_back({name, tag, LinearRow{e.prune(), Relation::le, rhs}});
      } else {
        m.constraints.push_back({name, tag, QuadRow{terms[k], Expr::term("z")}});
      }
    }
    m.objective = ModelObjective{Expr::term("z"), {}};
  }
  try {
    validate_model(m);
  } catch (const ModelError& e) {
    throw FormulationError(e.what());
  }
  sort_model(m);
  return m;
}

Model formulate(const StructuredRequirements& req, const NetworkCase& c) {
  FormulationContext ctx(req, c);
  ctx.append(build_objective(ctx));
  ctx.append(build_equipment_constraints(ctx));
  ctx.append(build_power_flow(ctx));
  ctx.append(build_additional_constraints(ctx));
  return convexify(assemble(ctx));
}

}  // namespace adn
