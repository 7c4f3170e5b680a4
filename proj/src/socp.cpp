#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "adn/solver.hpp"

namespace adn {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

std::optional<SolveStatus> solve_status_from_string(std::string_view word) {
  for (auto s : {SolveStatus::optimal, SolveStatus::infeasible, SolveStatus::unbounded, SolveStatus::node_limit,
                 SolveStatus::iteration_limit})
    if (to_string(s) == word) return s;
  return std::nullopt;
}

void SolveOptions::validate() const {
  if (!(feasibility_tol > 0) || !(gap_tol > 0) || !(reduced_tol > 0) || !(integrality_tol > 0) || !(abs_gap > 0) || !(rel_gap > 0))
    throw SolverError("solver tolerances must be positive");
  if (max_iterations <= 0 || node_limit <= 0) throw SolverError("solver limits must be positive");
}

double Solution::value(std::string_view name) const {
  auto it = values.find(std::string(name));
  if (it == values.end()) throw SolverError("no value for variable '" + std::string(name) + "'");
  return it->second;
}

double max_violation(const Model& m, const Assignment& values) {
  double worst = 0.0;
  for (const auto& v : m.vars) {
    auto it = values.find(v.name);
    if (it == values.end()) continue;
    worst = std::max({worst, v.lb - it->second, it->second - v.ub});
  }
  for (const auto& c : m.constraints) {
    if (const auto* row = std::get_if<LinearRow>(&c.body)) {
      const double d = row->expr.evaluate(values) - row->rhs;
      worst = std::max(worst, row->rel == Relation::eq ? std::abs(d) : row->rel == Relation::le ? d : -d);
    } else if (const auto* q = std::get_if<QuadRow>(&c.body)) {
      worst = std::max(worst, q->lhs.evaluate(values) - q->rhs.evaluate(values));
    } else {
      const auto& cone = std::get<ConeRow>(c.body);
      double norm = 0.0;
      for (const auto& a : cone.args) norm += std::pow(a.evaluate(values), 2);
      worst = std::max(worst, std::sqrt(norm) - cone.bound.evaluate(values));
    }
  }
  return worst;
}

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// min c'x + c0  s.t.  Ax = b,  Gx + s = h,  s in R+^l x SOC(q_1) x ...
struct ConeProblem {
  int n = 0, p = 0, m = 0, l = 0;
  std::vector<int> q;
  SpMat A, G;
  Vec c, b, h;
  double c0 = 0.0;
  std::vector<std::string> names;
  Assignment fixed;
  std::string infeasible_row;  // set when a constant row is violated
};

struct Coefs {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;
  double max_abs() const {
    double v = 0.0;
    for (const auto& t : terms) v = std::max(v, std::abs(t.second));
    return v;
  }
};

ConeProblem build_problem(const Model& model) {
  ConeProblem P;
  std::unordered_map<std::string, int> index;
  for (const auto& v : model.vars) {
    if (v.lb == v.ub) {
      P.fixed[v.name] = v.lb;
      continue;
    }
    if (v.kind == VarKind::binary)
      throw SolverError("binary variable '" + v.name + "' is not fixed; use solve_misocp");
    index[v.name] = static_cast<int>(P.names.size());
    P.names.push_back(v.name);
  }
  P.n = static_cast<int>(P.names.size());

  auto reduce = [&](const Expr& e, const std::string& where) {
    if (!e.is_affine()) throw SolverError("model is not canonical: quadratic terms in '" + where + "'");
    Coefs out;
    out.constant = e.constant;
    for (const auto& [name, coef] : e.linear) {
      if (auto f = P.fixed.find(name); f != P.fixed.end()) {
        out.constant += coef * f->second;
      } else if (auto it = index.find(name); it != index.end()) {
        out.terms.emplace_back(it->second, coef);
      } else {
        throw SolverError("undeclared variable '" + name + "' in '" + where + "'");
      }
    }
    return out;
  };

  std::vector<Triplet> at, gt_orth, gt_soc;
  std::vector<double> bv, h_orth, h_soc;
  auto push_row = [](std::vector<Triplet>& trip, std::vector<double>& rhs, const Coefs& co, double sign,
                     double value, double scale) {
    const int r = static_cast<int>(rhs.size());
    for (const auto& [j, a] : co.terms) trip.emplace_back(r, j, sign * a * scale);
    rhs.push_back(value * scale);
  };
  const double tol = 1e-9;

  for (const auto& c : model.constraints) {
    if (const auto* row = std::get_if<LinearRow>(&c.body)) {
      Coefs co = reduce(row->expr, c.name);
      const double rhs = row->rhs - co.constant;
      const double scale_max = co.max_abs();
      if (scale_max == 0.0) {
        const bool ok = row->rel == Relation::eq ? std::abs(rhs) <= tol
                        : row->rel == Relation::le ? rhs >= -tol
                                                   : rhs <= tol;
        if (!ok && P.infeasible_row.empty()) P.infeasible_row = c.name;
        continue;
      }
      const double s = 1.0 / scale_max;
      if (row->rel == Relation::eq) push_row(at, bv, co, 1.0, rhs, s);
      else if (row->rel == Relation::le) push_row(gt_orth, h_orth, co, 1.0, rhs, s);
      else push_row(gt_orth, h_orth, co, -1.0, -rhs, s);
    } else if (const auto* cone = std::get_if<ConeRow>(&c.body)) {
      std::vector<Coefs> parts{reduce(cone->bound, c.name)};
      for (const auto& a : cone->args) parts.push_back(reduce(a, c.name));
      double scale_max = 0.0;
      for (const auto& part : parts) scale_max = std::max(scale_max, part.max_abs());
      if (scale_max == 0.0) {
        double norm = 0.0;
        for (std::size_t k = 1; k < parts.size(); ++k) norm += parts[k].constant * parts[k].constant;
        if (std::sqrt(norm) > parts[0].constant + tol && P.infeasible_row.empty()) P.infeasible_row = c.name;
        continue;
      }
      const double s = 1.0 / scale_max;
      // s_cone = h - Gx = (bound, args).
      for (const auto& part : parts) push_row(gt_soc, h_soc, part, -1.0, part.constant, s);
      P.q.push_back(static_cast<int>(parts.size()));
    } else {
      throw SolverError("model is not canonical: quadratic row '" + c.name + "'");
    }
  }
  for (int j = 0; j < P.n; ++j) {
    const Var* v = model.find_var(P.names[j]);
    if (std::isfinite(v->lb)) {
      gt_orth.emplace_back(static_cast<int>(h_orth.size()), j, -1.0);
      h_orth.push_back(-v->lb);
    }
    if (std::isfinite(v->ub)) {
      gt_orth.emplace_back(static_cast<int>(h_orth.size()), j, 1.0);
      h_orth.push_back(v->ub);
    }
  }

  if (model.objective.is_min_max()) throw SolverError("model is not canonical: min-max objective");
  Coefs obj = reduce(model.objective.expr, "objective");
  P.c = Vec::Zero(P.n);
  for (const auto& [j, a] : obj.terms) P.c[j] += a;
  P.c0 = obj.constant;

  P.p = static_cast<int>(bv.size());
  P.l = static_cast<int>(h_orth.size());
  P.m = P.l + static_cast<int>(h_soc.size());
  P.A.resize(P.p, P.n);
  P.A.setFromTriplets(at.begin(), at.end());
  for (auto& t : gt_soc) t = Triplet(t.row() + P.l, t.col(), t.value());
  gt_orth.insert(gt_orth.end(), gt_soc.begin(), gt_soc.end());
  P.G.resize(P.m, P.n);
  P.G.setFromTriplets(gt_orth.begin(), gt_orth.end());
  P.b = Eigen::Map<Vec>(bv.data(), P.p);
  P.h = Vec(P.m);
  for (int i = 0; i < P.l; ++i) P.h[i] = h_orth[i];
  for (std::size_t i = 0; i < h_soc.size(); ++i) P.h[P.l + static_cast<int>(i)] = h_soc[i];
  return P;
}

// ---------------------------------------------------------------------------
// Cone algebra over the product R+^l x SOC(q_1) x ...

class Cones {
 public:
  Cones(int l, std::vector<int> q) : l_(l), q_(std::move(q)) {
    int off = l_;
    for (int d : q_) {
      offsets_.push_back(off);
      off += d;
    }
    m_ = off;
  }

  int degree() const { return l_ + static_cast<int>(q_.size()); }

  double min_eig(const Vec& v) const {
    double out = kInf;
    for (int i = 0; i < l_; ++i) out = std::min(out, v[i]);
    for (std::size_t k = 0; k < q_.size(); ++k) {
      auto seg = v.segment(offsets_[k], q_[k]);
      out = std::min(out, seg[0] - seg.tail(q_[k] - 1).norm());
    }
    return out;
  }

  void add_identity(Vec& v, double a) const {
    for (int i = 0; i < l_; ++i) v[i] += a;
    for (int off : offsets_) v[off] += a;
  }

  Vec identity() const {
    Vec e = Vec::Zero(m_);
    add_identity(e, 1.0);
    return e;
  }

  // Largest step keeping u + alpha du in the cone (u interior).
  double max_step(const Vec& u, const Vec& du) const {
    double alpha = kInf;
    for (int i = 0; i < l_; ++i)
      if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int o = offsets_[k], d = q_[k];
      const double u0 = u[o], du0 = du[o];
      const auto u1 = u.segment(o + 1, d - 1);
      const auto du1 = du.segment(o + 1, d - 1);
      const double a = du0 * du0 - du1.squaredNorm();
      const double b = u0 * du0 - u1.dot(du1);
      const double c = std::max(u0 * u0 - u1.squaredNorm(), 0.0);
      double root = kInf;
      const double disc = b * b - a * c;
      if (a > 0) {
        if (b < 0 && disc >= 0) root = c / (-b + std::sqrt(disc));
      } else if (a < 0) {
        const double sq = std::sqrt(std::max(disc, 0.0));
        root = b <= 0 ? c / (sq - b) : (b + sq) / (-a);
      } else if (b < 0) {
        root = -c / (2.0 * b);
      }
      if (du0 < 0) root = std::min(root, -u0 / du0);
      alpha = std::min(alpha, root);
    }
    return alpha;
  }

  Vec circ(const Vec& a, const Vec& b) const {
    Vec out(m_);
    for (int i = 0; i < l_; ++i) out[i] = a[i] * b[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int o = offsets_[k], d = q_[k];
      out[o] = a.segment(o, d).dot(b.segment(o, d));
      out.segment(o + 1, d - 1) = a[o] * b.segment(o + 1, d - 1) + b[o] * a.segment(o + 1, d - 1);
    }
    return out;
  }

  // Solves lambda o u = r.
  Vec inv_circ(const Vec& lam, const Vec& r) const {
    Vec out(m_);
    for (int i = 0; i < l_; ++i) out[i] = r[i] / lam[i];
    for (std::size_t k = 0; k < q_.size(); ++k) {
      const int o = offsets_[k], d = q_[k];
      const double l0 = lam[o];
      const auto l1 = lam.segment(o + 1, d - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double u0 = (l0 * r[o] - l1.dot(r.segment(o + 1, d - 1))) / det;
      out[o] = u0;
      out.segment(o + 1, d - 1) = (r.segment(o + 1, d - 1) - u0 * l1) / l0;
    }
    return out;
  }

  int l() const { return l_; }
  const std::vector<int>& q() const { return q_; }
  const std::vector<int>& offsets() const { return offsets_; }
  int m() const { return m_; }

 private:
  int l_;
  std::vector<int> q_;
  std::vector<int> offsets_;
  int m_ = 0;
};

// Nesterov-Todd scaling: W z = W^{-1} s = lambda.
struct Scaling {
  Vec d;  // orthant part of W (diagonal)
  std::vector<double> eta;
  std::vector<Vec> wbar;
  Vec lambda;

  Scaling(const Cones& K, const Vec& s, const Vec& z) : K_(&K) {
    const int l = K.l();
    d = (s.head(l).array() / z.head(l).array()).sqrt();
    for (std::size_t k = 0; k < K.q().size(); ++k) {
      const int o = K.offsets()[k], dim = K.q()[k];
      const Vec sk = s.segment(o, dim), zk = z.segment(o, dim);
      const double js = std::max(sk[0] * sk[0] - sk.tail(dim - 1).squaredNorm(), 1e-300);
      const double jz = std::max(zk[0] * zk[0] - zk.tail(dim - 1).squaredNorm(), 1e-300);
      const Vec sb = sk / std::sqrt(js), zb = zk / std::sqrt(jz);
      const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
      Vec w(dim);
      w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      w.tail(dim - 1) = (sb.tail(dim - 1) - zb.tail(dim - 1)) / (2.0 * gamma);
      eta.push_back(std::pow(js / jz, 0.25));
      wbar.push_back(std::move(w));
    }
    lambda = apply(z);
  }

  Vec apply(const Vec& v) const { return transform(v, false); }
  Vec apply_inverse(const Vec& v) const { return transform(v, true); }

  // Dense W^2 for cone k.
  Eigen::MatrixXd soc_w2(int k) const {
    const Vec& w = wbar[k];
    const int dim = static_cast<int>(w.size());
    Eigen::MatrixXd out = 2.0 * w * w.transpose();
    out(0, 0) -= 1.0;
    for (int i = 1; i < dim; ++i) out(i, i) += 1.0;
    return eta[k] * eta[k] * out;
  }

 private:
  Vec transform(const Vec& v, bool inverse) const {
    const Cones& K = *K_;
    Vec out(v.size());
    const int l = K.l();
    if (inverse) out.head(l) = (v.head(l).array() / d.array()).matrix();
    else out.head(l) = (v.head(l).array() * d.array()).matrix();
    for (std::size_t k = 0; k < K.q().size(); ++k) {
      const int o = K.offsets()[k], dim = K.q()[k];
      const Vec& w = wbar[k];
      const double w0 = w[0];
      const auto w1 = w.tail(dim - 1);
      const double v0 = v[o];
      const auto v1 = v.segment(o + 1, dim - 1);
      const double w1v1 = w1.dot(v1);
      if (!inverse) {
        out[o] = eta[k] * (w0 * v0 + w1v1);
        out.segment(o + 1, dim - 1) = eta[k] * (v1 + (v0 + w1v1 / (1.0 + w0)) * w1);
      } else {
        out[o] = (w0 * v0 - w1v1) / eta[k];
        out.segment(o + 1, dim - 1) = (v1 + (-v0 + w1v1 / (1.0 + w0)) * w1) / eta[k];
      }
    }
    return out;
  }

  const Cones* K_;
};

// Quasi-definite KKT [0 A' G'; A 0 0; G 0 -W^2] with static regularization and refinement.
class Kkt {
 public:
  Kkt(const ConeProblem& P, const Cones& K) : P_(P), K_(K), dim_(P.n + P.p + P.m) {
    for (int col = 0; col < P.A.outerSize(); ++col)
      for (SpMat::InnerIterator it(P.A, col); it; ++it) {
        base_.emplace_back(P.n + it.row(), col, it.value());
        base_.emplace_back(col, P.n + it.row(), it.value());
      }
    for (int col = 0; col < P.G.outerSize(); ++col)
      for (SpMat::InnerIterator it(P.G, col); it; ++it) {
        base_.emplace_back(P.n + P.p + it.row(), col, it.value());
        base_.emplace_back(col, P.n + P.p + it.row(), it.value());
      }
  }

  // Scaling == nullptr means W = I.
  bool factor(const Scaling* W) {
    std::vector<Triplet> exact = base_;
    const int zo = P_.n + P_.p;
    for (int i = 0; i < K_.l(); ++i) {
      const double w = W ? W->d[i] * W->d[i] : 1.0;
      exact.emplace_back(zo + i, zo + i, -w);
    }
    for (std::size_t k = 0; k < K_.q().size(); ++k) {
      const int o = K_.offsets()[k], dim = K_.q()[k];
      const Eigen::MatrixXd w2 = W ? W->soc_w2(static_cast<int>(k)) : Eigen::MatrixXd::Identity(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) exact.emplace_back(zo + o + i, zo + o + j, -w2(i, j));
    }
    exact_.resize(dim_, dim_);
    exact_.setFromTriplets(exact.begin(), exact.end());
    // A pivot can cancel to exactly zero once the scaling spreads over many orders of magnitude;
    // retry with stronger regularization and let refinement recover accuracy.
    const std::size_t n_exact = exact.size();
    for (double delta : {kDelta, 1e-7, 1e-5}) {
      exact.resize(n_exact);
      for (int i = 0; i < dim_; ++i) exact.emplace_back(i, i, i < P_.n ? delta : -delta);
      SpMat reg(dim_, dim_);
      reg.setFromTriplets(exact.begin(), exact.end());
      if (!analyzed_) {
        ldlt_.analyzePattern(reg);
        analyzed_ = true;
      }
      ldlt_.factorize(reg);
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  Vec solve(const Vec& rhs) const {
    Vec u = ldlt_.solve(rhs);
    Vec res = rhs - exact_ * u;
    double prev = res.lpNorm<Eigen::Infinity>();
    const double target = 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
    for (int k = 0; k < 20 && prev > target; ++k) {
      Vec du = ldlt_.solve(res);
      Vec trial = u + du;
      Vec trial_res = rhs - exact_ * trial;
      const double nrm = trial_res.lpNorm<Eigen::Infinity>();
      if (!(nrm < prev)) break;
      u = std::move(trial);
      res = std::move(trial_res);
      prev = nrm;
    }
    return u;
  }

 private:
  static constexpr double kDelta = 1e-9;
  const ConeProblem& P_;
  const Cones& K_;
  int dim_;
  std::vector<Triplet> base_;
  SpMat exact_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
};

struct IpmResult {
  SolveStatus status = SolveStatus::iteration_limit;
  Vec x;
  Residuals residuals;
  int iterations = 0;
  std::optional<double> certificate;
  bool reduced_accuracy = false;
};

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

IpmResult run_ipm(const ConeProblem& P, const SolveOptions& opts) {
  const Cones K(P.l, P.q);
  Kkt kkt(P, K);
  const int n = P.n, p = P.p, m = P.m;
  auto split = [&](const Vec& u, Vec& dx, Vec& dy, Vec& dz) {
    dx = u.head(n);
    dy = u.segment(n, p);
    dz = u.tail(m);
  };
  auto stack = [&](const Vec& a, const Vec& b, const Vec& c) {
    Vec out(n + p + m);
    out << a, b, c;
    return out;
  };

  IpmResult result;
  // Initial point from two least-squares systems with W = I.
  if (!kkt.factor(nullptr)) throw SolverError("KKT factorization failed at the initial point");
  Vec x, y, z, s, tmp;
  split(kkt.solve(stack(Vec::Zero(n), P.b, P.h)), x, tmp, s);
  s = -s;
  {
    Vec dx;
    split(kkt.solve(stack(-P.c, Vec::Zero(p), Vec::Zero(m))), dx, y, z);
  }
  auto shift = [&](Vec& v) {
    const double a = m ? -K.min_eig(v) : -1.0;
    if (a >= 0) K.add_identity(v, 1.0 + a);
  };
  shift(s);
  shift(z);
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max(1.0, inf_norm(P.b));
  const double hnorm = std::max(1.0, inf_norm(P.h));
  const double cnorm = std::max(1.0, inf_norm(P.c));
  const Vec e = K.identity();
  double best_merit = kInf;
  Vec best_x = x / tau;
  Residuals best_res{kInf, kInf, kInf};

  for (int it = 0; it <= opts.max_iterations; ++it) {
    result.iterations = it;
    const Vec rx = P.A.transpose() * y + P.G.transpose() * z + P.c * tau;
    const Vec ry = -(P.A * x) + P.b * tau;
    const Vec rz = -(P.G * x) + P.h * tau - s;
    const double cx = P.c.dot(x), by = P.b.dot(y), hz = P.h.dot(z);
    const double rt = -cx - by - hz - kappa;

    const double pres = std::max(inf_norm(ry) / bnorm, inf_norm(rz) / hnorm) / tau;
    const double dres = inf_norm(rx) / cnorm / tau;
    const double gap = s.dot(z) / (tau * tau);
    const double pcost = cx / tau;
    Residuals res{pres, dres, gap};
    const double merit = std::max({pres, dres, gap / std::max(1.0, std::abs(pcost))});
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x / tau;
      best_res = res;
    }
    if (pres <= opts.feasibility_tol && dres <= opts.feasibility_tol &&
        gap <= opts.gap_tol * std::max(1.0, std::abs(pcost))) {
      result.status = SolveStatus::optimal;
      result.x = x / tau;
      result.residuals = res;
      return result;
    }
    if (by + hz < 0) {
      const double cert = inf_norm(P.A.transpose() * y + P.G.transpose() * z) / -(by + hz);
      if (cert <= opts.feasibility_tol) {
        result.status = SolveStatus::infeasible;
        result.certificate = cert;
        result.x = x / tau;
        result.residuals = res;
        return result;
      }
    }
    if (cx < 0) {
      const double cert = std::max(inf_norm(P.A * x), inf_norm(P.G * x + s)) / -cx;
      if (cert <= opts.feasibility_tol) {
        result.status = SolveStatus::unbounded;
        result.certificate = cert;
        result.x = x / tau;
        result.residuals = res;
        return result;
      }
    }
    if (it == opts.max_iterations) break;

    const Scaling W(K, s, z);
    const double mu = (s.dot(z) + tau * kappa) / (K.degree() + 1);
    if (!kkt.factor(&W)) break;
    Vec dx2, dy2, dz2;
    split(kkt.solve(stack(-P.c, P.b, P.h)), dx2, dy2, dz2);
    const double denom2 = kappa / tau - P.c.dot(dx2) - P.b.dot(dy2) - P.h.dot(dz2);

    struct Dir {
      Vec dx, dy, dz, ds;
      double dtau = 0, dkappa = 0;
    };
    auto direction = [&](const Vec& rc, double rk, double eta) {
      Dir d;
      Vec dx1, dy1, dz1;
      const Vec lam_rc = K.inv_circ(W.lambda, rc);
      split(kkt.solve(stack(-eta * rx, eta * ry, -W.apply(lam_rc) + eta * rz)), dx1, dy1, dz1);
      d.dtau = (-eta * rt + rk / tau + P.c.dot(dx1) + P.b.dot(dy1) + P.h.dot(dz1)) / denom2;
      d.dx = dx1 + d.dtau * dx2;
      d.dy = dy1 + d.dtau * dy2;
      d.dz = dz1 + d.dtau * dz2;
      // ds = W (lambda \ rc - W dz)
      d.ds = W.apply(lam_rc - W.apply(d.dz));
      d.dkappa = (rk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Dir& d) {
      double a = std::min(K.max_step(s, d.ds), K.max_step(z, d.dz));
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Vec lam2 = K.circ(W.lambda, W.lambda);
    const Dir aff = direction(-lam2, -tau * kappa, 1.0);
    const double a_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);
    const Vec ws = W.apply_inverse(aff.ds), wz = W.apply(aff.dz);
    const Vec rc = -lam2 - K.circ(ws, wz) + sigma * mu * e;
    const double rk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Dir d = direction(rc, rk, 1.0 - sigma);
    const double alpha = std::min(1.0, 0.99 * step_length(d));
    if (!(alpha > 1e-12)) break;
    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    if (!x.allFinite() || !(tau > 0)) break;
  }
  result.status = SolveStatus::iteration_limit;
  result.x = best_x;
  result.residuals = best_res;
  if (result.iterations < opts.max_iterations && best_res.primal <= opts.reduced_tol &&
      best_res.dual <= opts.reduced_tol && best_merit <= opts.reduced_tol) {
    result.status = SolveStatus::optimal;
    result.reduced_accuracy = true;
  }
  return result;
}

}  // namespace

Solution solve_socp(const Model& m, const SolveOptions& opts) {
  opts.validate();
  ConeProblem P = build_problem(m);
  Solution sol;
  sol.values = P.fixed;
  if (!P.infeasible_row.empty()) {
    sol.status = SolveStatus::infeasible;
    sol.certificate_residual = 0.0;
    return sol;
  }
  if (P.n == 0) {
    sol.status = max_violation(m, sol.values) <= opts.feasibility_tol ? SolveStatus::optimal : SolveStatus::infeasible;
    if (sol.status == SolveStatus::infeasible) sol.certificate_residual = 0.0;
    sol.objective = P.c0;
    sol.max_violation = max_violation(m, sol.values);
    return sol;
  }
  IpmResult r = run_ipm(P, opts);
  sol.status = r.status;
  sol.iterations = r.iterations;
  sol.residuals = r.residuals;
  sol.certificate_residual = r.certificate;
  sol.reduced_accuracy = r.reduced_accuracy;
  for (int j = 0; j < P.n; ++j) sol.values[P.names[j]] = r.x[j];
  sol.objective = m.objective.expr.evaluate(sol.values);
  sol.max_violation = max_violation(m, sol.values);
  return sol;
}

}  // namespace adn
