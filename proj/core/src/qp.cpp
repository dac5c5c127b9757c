#include "gpmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gpmpc/error.hpp"

namespace gpmpc::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inequalities are numbered 0..n-1 for lower bounds (u_i ≥ lo_i) and n..2n-1
// for upper bounds (−u_i ≥ −up_i). Normals are ±e_i.
struct Bound {
  int var;
  double sign;  // +1 lower, −1 upper
};

Bound decode(int id, int n) { return id < n ? Bound{id, 1.0} : Bound{id - n, -1.0}; }

double slack(const QpProblem& qp, const Vector& u, int id) {
  const int n = qp.size();
  const Bound b = decode(id, n);
  return b.sign > 0 ? u(b.var) - qp.lower(b.var) : qp.upper(b.var) - u(b.var);
}

struct WorkingSet {
  std::vector<int> ids;
  std::vector<double> mult;
  double nu = 0.0;  // equality multiplier, free sign
};

struct Direction {
  Vector z;
  double r_eq = 0.0;
  std::vector<double> r;  // per working-set entry
  bool zero = false;
};

// Solves [H N; Nᵀ 0][z; r] = [n_p; 0] with N = [a | active normals].
Direction direction(const QpProblem& qp, const WorkingSet& ws, int p) {
  const int n = qp.size();
  const bool eq = qp.equality.has_value();
  const int m = static_cast<int>(ws.ids.size()) + (eq ? 1 : 0);
  const Bound bp = decode(p, n);
  Direction d;
  d.r.assign(ws.ids.size(), 0.0);

  // n_p lies in span(N) exactly when every variable outside the working set
  // other than p has a zero equality coefficient.
  if (eq) {
    const Vector& a = qp.equality->a;
    std::vector<bool> fixed(static_cast<std::size_t>(n), false);
    for (int id : ws.ids) fixed[static_cast<std::size_t>(decode(id, n).var)] = true;
    const double tiny = 1e-14 * std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    bool dependent = std::abs(a(bp.var)) > tiny;
    for (int j = 0; j < n && dependent; ++j) {
      if (j != bp.var && !fixed[static_cast<std::size_t>(j)] && std::abs(a(j)) > tiny) {
        dependent = false;
      }
    }
    if (dependent) {
      d.zero = true;
      d.z = Vector::Zero(n);
      d.r_eq = bp.sign / a(bp.var);
      for (std::size_t k = 0; k < ws.ids.size(); ++k) {
        const Bound b = decode(ws.ids[k], n);
        d.r[k] = -d.r_eq * a(b.var) / b.sign;
      }
      return d;
    }
  }

  Matrix kkt = Matrix::Zero(n + m, n + m);
  kkt.topLeftCorner(n, n) = qp.hessian;
  int col = n;
  if (eq) {
    kkt.block(0, col, n, 1) = qp.equality->a;
    kkt.block(col, 0, 1, n) = qp.equality->a.transpose();
    ++col;
  }
  for (int id : ws.ids) {
    const Bound b = decode(id, n);
    kkt(b.var, col) = b.sign;
    kkt(col, b.var) = b.sign;
    ++col;
  }
  Vector rhs = Vector::Zero(n + m);
  rhs(bp.var) = bp.sign;
  const Vector sol = kkt.partialPivLu().solve(rhs);
  d.z = sol.head(n);
  col = n;
  if (eq) d.r_eq = sol(col++);
  for (std::size_t k = 0; k < ws.ids.size(); ++k) d.r[k] = sol(col++);
  return d;
}

// Minimizer subject to the equality only (or unconstrained).
Vector initial_point(const QpProblem& qp, double& nu) {
  const int n = qp.size();
  nu = 0.0;
  if (!qp.equality) {
    Eigen::LLT<Matrix> llt(qp.hessian);
    if (llt.info() != Eigen::Success) throw FactorizationError("solve_qp: hessian not positive definite");
    return llt.solve(-qp.gradient);
  }
  Matrix kkt = Matrix::Zero(n + 1, n + 1);
  kkt.topLeftCorner(n, n) = qp.hessian;
  kkt.block(0, n, n, 1) = qp.equality->a;
  kkt.block(n, 0, 1, n) = qp.equality->a.transpose();
  Vector rhs(n + 1);
  rhs.head(n) = -qp.gradient;
  rhs(n) = qp.equality->b;
  const Vector sol = kkt.partialPivLu().solve(rhs);
  // H u + f + μ a = 0  ⇒  H u + f = ν a with ν = −μ.
  nu = -sol(n);
  return sol.head(n);
}

double residual_with_multipliers(const QpProblem& qp, const Vector& u, const WorkingSet& ws) {
  const int n = qp.size();
  Vector stat = qp.hessian * u + qp.gradient;
  if (qp.equality) stat -= ws.nu * qp.equality->a;
  double dual = 0.0;
  for (std::size_t k = 0; k < ws.ids.size(); ++k) {
    const Bound b = decode(ws.ids[k], n);
    stat(b.var) -= ws.mult[k] * b.sign;
    dual = std::max(dual, -ws.mult[k]);
  }
  const double scale = std::max({1.0, qp.gradient.cwiseAbs().maxCoeff(),
                                 qp.hessian.cwiseAbs().rowwise().sum().maxCoeff() *
                                     u.cwiseAbs().maxCoeff()});
  double primal = 0.0;
  for (int i = 0; i < n; ++i) {
    primal = std::max({primal, qp.lower(i) - u(i), u(i) - qp.upper(i)});
  }
  if (qp.equality) {
    const double tol_scale =
        std::max({1.0, std::abs(qp.equality->b),
                  qp.equality->a.cwiseAbs().maxCoeff() * u.cwiseAbs().maxCoeff()});
    primal = std::max(primal, std::abs(qp.equality->a.dot(u) - qp.equality->b) / tol_scale);
  }
  return std::max({stat.cwiseAbs().maxCoeff() / scale, dual / scale, primal});
}

struct RawResult {
  bool infeasible = false;
  Vector u;
  WorkingSet ws;
  int iterations = 0;
};

RawResult dual_active_set(const QpProblem& qp, const SolverOptions& opts) {
  const int n = qp.size();
  RawResult res;
  WorkingSet& ws = res.ws;
  Vector u = initial_point(qp, ws.nu);

  auto tolerance = [&](int id) {
    const Bound b = decode(id, n);
    const double bound = b.sign > 0 ? qp.lower(b.var) : qp.upper(b.var);
    return opts.feasibility_tolerance * std::max(1.0, std::abs(bound));
  };

  while (true) {
    int p = -1;
    double worst = 0.0;
    for (int id = 0; id < 2 * n; ++id) {
      if (std::find(ws.ids.begin(), ws.ids.end(), id) != ws.ids.end()) continue;
      const double s = slack(qp, u, id);
      if (s < -tolerance(id) && s < worst) {
        worst = s;
        p = id;
      }
    }
    if (p < 0) break;

    double u_p = 0.0;
    while (true) {
      if (++res.iterations > opts.max_iterations) {
        throw SolverFailure("solve_qp: iteration cap of " + std::to_string(opts.max_iterations) +
                                " exceeded",
                            qp.dump());
      }
      const Direction d = direction(qp, ws, p);

      double t1 = kInf;
      std::size_t drop = 0;
      for (std::size_t k = 0; k < ws.ids.size(); ++k) {
        if (d.r[k] > 0.0) {
          const double ratio = ws.mult[k] / d.r[k];
          if (ratio < t1) {
            t1 = ratio;
            drop = k;
          }
        }
      }
      const Bound bp = decode(p, n);
      const double zn = d.zero ? 0.0 : bp.sign * d.z(bp.var);
      const double t2 = (d.zero || zn <= 0.0) ? kInf : -slack(qp, u, p) / zn;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        res.infeasible = true;
        res.u = u;
        return res;
      }

      for (std::size_t k = 0; k < ws.ids.size(); ++k) ws.mult[k] -= t * d.r[k];
      ws.nu -= t * d.r_eq;
      u_p += t;
      if (t2 < kInf) u += t * d.z;

      if (t2 <= t1) {
        u(bp.var) = bp.sign > 0 ? qp.lower(bp.var) : qp.upper(bp.var);
        ws.ids.push_back(p);
        ws.mult.push_back(u_p);
        break;
      }
      ws.ids.erase(ws.ids.begin() + static_cast<std::ptrdiff_t>(drop));
      ws.mult.erase(ws.mult.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }
  res.u = u;
  return res;
}

}  // namespace

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kTerminalSoftened:
      return "terminal_softened";
  }
  return "unknown";
}

double QpProblem::objective(const Vector& u) const {
  return 0.5 * u.dot(hessian * u) + gradient.dot(u) + constant;
}

void QpProblem::validate() const {
  const auto n = gradient.size();
  if (n < 1) throw DimensionError("QpProblem: empty problem");
  if (hessian.rows() != n || hessian.cols() != n || lower.size() != n || upper.size() != n) {
    throw DimensionError("QpProblem: inconsistent dimensions");
  }
  if (equality && equality->a.size() != n) throw DimensionError("QpProblem: equality size");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lower(i) <= upper(i))) throw ParameterError("QpProblem: lower bound above upper bound");
  }
  if (!numerics::all_finite(hessian) || !numerics::all_finite(gradient)) {
    throw ParameterError("QpProblem: non-finite data");
  }
}

std::string QpProblem::dump() const {
  std::ostringstream os;
  os.precision(17);
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, ", ", "\n", "[", "]");
  os << "hessian:\n" << hessian.format(fmt) << "\n";
  os << "gradient:\n" << gradient.transpose().format(fmt) << "\n";
  os << "lower:\n" << lower.transpose().format(fmt) << "\n";
  os << "upper:\n" << upper.transpose().format(fmt) << "\n";
  if (equality) {
    os << "equality a:\n" << equality->a.transpose().format(fmt) << "\n";
    os << "equality b: " << equality->b << "\n";
  }
  os << "constant: " << constant << "\n";
  return os.str();
}

QpProblem soften_equality(const QpProblem& qp, double weight) {
  QpProblem soft = qp;
  if (!qp.equality) return soft;
  const Vector& a = qp.equality->a;
  const double b = qp.equality->b;
  soft.hessian += 2.0 * weight * a * a.transpose();
  soft.gradient -= 2.0 * weight * b * a;
  soft.constant += weight * b * b;
  soft.equality.reset();
  return soft;
}

QpSolution solve_qp(const QpProblem& qp, const SolverOptions& opts) {
  qp.validate();
  QpSolution sol;
  RawResult raw = dual_active_set(qp, opts);
  const QpProblem* solved = &qp;
  QpProblem soft;
  if (raw.infeasible) {
    soft = soften_equality(qp, opts.soft_weight);
    const int used = raw.iterations;
    raw = dual_active_set(soft, opts);
    raw.iterations += used;
    if (raw.infeasible) throw SolverFailure("solve_qp: box constraints infeasible", qp.dump());
    solved = &soft;
    sol.status = QpStatus::kTerminalSoftened;
  }
  sol.u = raw.u;
  sol.iterations = raw.iterations;
  sol.active_bounds = static_cast<int>(raw.ws.ids.size());
  sol.objective = solved->objective(sol.u);
  sol.kkt_residual = residual_with_multipliers(*solved, sol.u, raw.ws);
  return sol;
}

double kkt_residual(const QpProblem& qp, const Vector& u, double active_tolerance) {
  const int n = qp.size();
  const Vector grad = qp.hessian * u + qp.gradient;
  WorkingSet ws;
  std::vector<int> free;
  for (int i = 0; i < n; ++i) {
    const double tol = active_tolerance * std::max(1.0, std::abs(qp.upper(i) - qp.lower(i)));
    if (u(i) - qp.lower(i) <= tol) {
      ws.ids.push_back(i);
    } else if (qp.upper(i) - u(i) <= tol) {
      ws.ids.push_back(i + n);
    } else {
      free.push_back(i);
    }
  }
  if (qp.equality) {
    const Vector& a = qp.equality->a;
    double num = 0.0;
    double den = 0.0;
    const bool use_all = free.empty();
    for (int i = 0; i < n; ++i) {
      if (use_all || std::find(free.begin(), free.end(), i) != free.end()) {
        num += a(i) * grad(i);
        den += a(i) * a(i);
      }
    }
    ws.nu = den > 0.0 ? num / den : 0.0;
  }
  for (int id : ws.ids) {
    const Bound b = decode(id, n);
    double g = grad(b.var);
    if (qp.equality) g -= ws.nu * qp.equality->a(b.var);
    ws.mult.push_back(g * b.sign);
  }
  return residual_with_multipliers(qp, u, ws);
}

}  // namespace gpmpc::qp
