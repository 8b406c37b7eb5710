#include "csr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace csr::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int SdpProblem::add_block(std::string name, int dim) {
  blocks.push_back({std::move(name), dim});
  return static_cast<int>(blocks.size()) - 1;
}

int SdpProblem::add_free(int count) {
  const int first = num_free;
  num_free += count;
  return first;
}

void SdpProblem::validate() const {
  if (blocks.empty()) throw std::invalid_argument("SdpProblem: no blocks");
  for (const auto& b : blocks) {
    if (b.dim <= 0) throw std::invalid_argument("SdpProblem: block '" + b.name + "' has dimension <= 0");
  }
  auto check_entries = [&](const std::vector<Entry>& es, const char* where) {
    for (const auto& e : es) {
      if (e.block < 0 || e.block >= static_cast<int>(blocks.size())) {
        throw std::invalid_argument(std::string(where) + ": block index out of range");
      }
      const int n = blocks[static_cast<std::size_t>(e.block)].dim;
      if (e.row < 0 || e.col >= n || e.row > e.col) {
        throw std::invalid_argument(std::string(where) + ": entry must satisfy 0 <= row <= col < dim");
      }
    }
  };
  auto check_free = [&](const std::vector<FreeTerm>& fs, const char* where) {
    for (const auto& f : fs) {
      if (f.index < 0 || f.index >= num_free) {
        throw std::invalid_argument(std::string(where) + ": free index out of range");
      }
    }
  };
  for (const auto& c : constraints) {
    check_entries(c.entries, "constraint");
    check_free(c.free_terms, "constraint");
  }
  check_entries(objective, "objective");
  check_free(free_objective, "objective");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

double inner_product(const std::vector<Entry>& entries, const std::vector<MatrixXd>& x) {
  double s = 0.0;
  for (const auto& e : entries) {
    const double xv = x[static_cast<std::size_t>(e.block)](e.row, e.col);
    s += (e.row == e.col ? 1.0 : 2.0) * e.value * xv;
  }
  return s;
}

namespace {

struct SymEntry {
  int p;
  int q;
  double v;
};

// Rows of the constraint operator restricted to one block.
struct BlockRows {
  int dim = 0;
  std::vector<int> rows;
  std::vector<std::size_t> offsets{0};
  std::vector<SymEntry> entries;
};

struct Scaling {
  MatrixXd r;
  MatrixXd rinv;
  VectorXd lambda;
  MatrixXd w;
};

// Problem in internal (presolved, row-scaled) form.
struct Internal {
  int m = 0;
  int nf = 0;
  std::vector<BlockRows> blocks;
  MatrixXd f;  // m x nf
  VectorXd b;
  std::vector<MatrixXd> c;
  VectorXd cu;
  std::vector<int> original_row;  // internal row -> problem row
  VectorXd row_scale;
  int cone_degree = 0;
};

using Blocks = std::vector<MatrixXd>;

double dot(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(dot(a, a)); }

Blocks zeros_like(const Internal& in) {
  Blocks z;
  for (const auto& br : in.blocks) z.push_back(MatrixXd::Zero(br.dim, br.dim));
  return z;
}

void axpy(double alpha, const Blocks& x, Blocks& y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

// (A Z)_i = sum_k <A_ik, Z_k>
VectorXd apply_a(const Internal& in, const Blocks& z) {
  VectorXd out = VectorXd::Zero(in.m);
  for (std::size_t k = 0; k < in.blocks.size(); ++k) {
    const auto& br = in.blocks[k];
    const MatrixXd& zk = z[k];
    for (std::size_t r = 0; r < br.rows.size(); ++r) {
      double s = 0.0;
      for (std::size_t e = br.offsets[r]; e < br.offsets[r + 1]; ++e) {
        const auto& se = br.entries[e];
        s += (se.p == se.q ? 1.0 : 2.0) * se.v * zk(se.p, se.q);
      }
      out(br.rows[r]) += s;
    }
  }
  return out;
}

// sum_i y_i A_i
Blocks apply_at(const Internal& in, const VectorXd& y) {
  Blocks out = zeros_like(in);
  for (std::size_t k = 0; k < in.blocks.size(); ++k) {
    const auto& br = in.blocks[k];
    MatrixXd& ok = out[k];
    for (std::size_t r = 0; r < br.rows.size(); ++r) {
      const double yi = y(br.rows[r]);
      if (yi == 0.0) continue;
      for (std::size_t e = br.offsets[r]; e < br.offsets[r + 1]; ++e) {
        const auto& se = br.entries[e];
        ok(se.p, se.q) += yi * se.v;
        if (se.p != se.q) ok(se.q, se.p) += yi * se.v;
      }
    }
  }
  return out;
}

// M_ij = sum_k <A_ik, W_k A_jk W_k>, exploiting sparse rows.
MatrixXd build_schur(const Internal& in, const std::vector<Scaling>& sc) {
  MatrixXd m = MatrixXd::Zero(in.m, in.m);
  for (std::size_t k = 0; k < in.blocks.size(); ++k) {
    const auto& br = in.blocks[k];
    const MatrixXd& w = sc[k].w;
    const int n = br.dim;
    MatrixXd t(n, n);
    for (std::size_t j = 0; j < br.rows.size(); ++j) {
      t.setZero();
      for (std::size_t e = br.offsets[j]; e < br.offsets[j + 1]; ++e) {
        const auto& se = br.entries[e];
        // W E_pq W = w_p w_q^T ; symmetric pair adds the transpose.
        t.noalias() += se.v * w.col(se.p) * w.col(se.q).transpose();
        if (se.p != se.q) t.noalias() += se.v * w.col(se.q) * w.col(se.p).transpose();
      }
      const int rj = br.rows[j];
      for (std::size_t i = 0; i <= j; ++i) {
        double s = 0.0;
        for (std::size_t e = br.offsets[i]; e < br.offsets[i + 1]; ++e) {
          const auto& se = br.entries[e];
          s += (se.p == se.q ? 1.0 : 2.0) * se.v * t(se.p, se.q);
        }
        const int ri = br.rows[i];
        m(ri, rj) += s;
        if (ri != rj) m(rj, ri) += s;
      }
    }
  }
  return m;
}

bool nt_scaling(const MatrixXd& x, const MatrixXd& s, Scaling& out) {
  Eigen::LLT<MatrixXd> lx(x);
  Eigen::LLT<MatrixXd> ls(s);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const MatrixXd l1 = lx.matrixL();
  const MatrixXd l2 = ls.matrixL();
  Eigen::JacobiSVD<MatrixXd> svd(l2.transpose() * l1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd sig = svd.singularValues();
  if (sig.minCoeff() <= 0.0 || !std::isfinite(sig.maxCoeff())) return false;
  const MatrixXd& v = svd.matrixV();
  const VectorXd sq = sig.cwiseSqrt();
  out.lambda = sig;
  out.r = l1 * v * sq.cwiseInverse().asDiagonal();
  const MatrixXd l1inv = l1.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(x.rows(), x.cols()));
  out.rinv = sq.asDiagonal() * v.transpose() * l1inv;
  out.w = out.r * out.r.transpose();
  return true;
}

// Largest alpha with Lambda + alpha * D PSD (D in scaled coordinates).
double max_step(const VectorXd& lambda, const MatrixXd& d) {
  const VectorXd is = lambda.cwiseSqrt().cwiseInverse();
  const MatrixXd h = is.asDiagonal() * d * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h, Eigen::EigenvaluesOnly);
  const double e = es.eigenvalues().minCoeff();
  if (e >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / e;
}

double max_step_scalar(double v, double dv) {
  return dv >= 0.0 ? std::numeric_limits<double>::infinity() : -v / dv;
}

// Quasi-definite KKT [M+dp I, F; F^T, -dd I] with refinement against the
// unregularized system.
class KktSolver {
 public:
  bool factor(const MatrixXd& m, const MatrixXd& f) {
    m_ = &m;
    f_ = &f;
    const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    double reg = 1e-13 * scale;
    for (int attempt = 0; attempt < 6; ++attempt, reg *= 100.0) {
      MatrixXd mr = m;
      mr.diagonal().array() += reg;
      llt_m_.compute(mr);
      if (llt_m_.info() != Eigen::Success) continue;
      reg_p_ = reg;
      if (f.cols() > 0) {
        g_ = llt_m_.matrixL().solve(f);
        MatrixXd s = g_.transpose() * g_;
        const double sreg = 1e-12 * std::max(1.0, s.diagonal().cwiseAbs().maxCoeff());
        s.diagonal().array() += sreg;
        reg_d_ = sreg;
        llt_s_.compute(s);
        if (llt_s_.info() != Eigen::Success) continue;
      }
      return true;
    }
    return false;
  }

  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& x1, VectorXd& x2) const {
    solve_reg(r1, r2, x1, x2);
    for (int it = 0; it < 3; ++it) {
      VectorXd e1 = r1 - (*m_) * x1;
      VectorXd e2 = r2;
      if (f_->cols() > 0) {
        e1 -= (*f_) * x2;
        e2 -= f_->transpose() * x1;
      }
      VectorXd d1, d2;
      solve_reg(e1, e2, d1, d2);
      x1 += d1;
      if (f_->cols() > 0) x2 += d2;
    }
  }

 private:
  void solve_reg(const VectorXd& r1, const VectorXd& r2, VectorXd& x1, VectorXd& x2) const {
    if (f_->cols() == 0) {
      x1 = llt_m_.solve(r1);
      x2.resize(0);
      return;
    }
    const VectorXd mr1 = llt_m_.solve(r1);
    x2 = llt_s_.solve(f_->transpose() * mr1 - r2);
    x1 = llt_m_.solve(r1 - (*f_) * x2);
  }

  const MatrixXd* m_ = nullptr;
  const MatrixXd* f_ = nullptr;
  Eigen::LLT<MatrixXd> llt_m_;
  Eigen::LLT<MatrixXd> llt_s_;
  MatrixXd g_;
  double reg_p_ = 0.0;
  double reg_d_ = 0.0;
};

// Pull a strictly feasible primal point back onto the affine constraints
// with corrections X (A^T y) X, which stay inside the cone for small y.
void polish(const Internal& in, Blocks& x, VectorXd& u) {
  const std::size_t nb = x.size();
  VectorXd r = in.b - apply_a(in, x);
  if (in.nf) r -= in.f * u;
  double res = r.cwiseAbs().maxCoeff();
  std::vector<Scaling> sc(nb);
  for (int round = 0; round < 3 && res > 0.0; ++round) {
    for (std::size_t k = 0; k < nb; ++k) sc[k].w = x[k];
    MatrixXd m = build_schur(in, sc);
    if (in.nf) m += in.f * in.f.transpose();
    const double ridge = 1e-14 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += ridge;
    Eigen::LDLT<MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success) return;
    const VectorXd y = ldlt.solve(r);
    const Blocks aty = apply_at(in, y);
    Blocks cand = x;
    for (std::size_t k = 0; k < nb; ++k) {
      cand[k] += x[k] * aty[k] * x[k];
      cand[k] = 0.5 * (cand[k] + cand[k].transpose()).eval();
      Eigen::LLT<MatrixXd> chol(cand[k]);
      if (chol.info() != Eigen::Success) return;
    }
    VectorXd ucand = u;
    if (in.nf) ucand += in.f.transpose() * y;
    VectorXd rc = in.b - apply_a(in, cand);
    if (in.nf) rc -= in.f * ucand;
    const double rn = rc.cwiseAbs().maxCoeff();
    if (!(rn < res)) return;
    x = std::move(cand);
    u = std::move(ucand);
    r = std::move(rc);
    res = rn;
  }
}

struct Presolved {
  Internal in;
  bool trivially_infeasible = false;
  std::string message;
};

Presolved presolve(const SdpProblem& p) {
  Presolved out;
  Internal& in = out.in;
  in.nf = p.num_free;
  const std::size_t nb = p.blocks.size();
  in.blocks.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    in.blocks[k].dim = p.blocks[k].dim;
    in.cone_degree += p.blocks[k].dim;
  }

  struct MergedRow {
    std::map<std::tuple<int, int, int>, double> entries;
    std::map<int, double> free;
    double rhs;
    int original;
  };
  std::vector<MergedRow> rows;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    MergedRow r{{}, {}, c.rhs, static_cast<int>(i)};
    for (const auto& e : c.entries) r.entries[{e.block, e.row, e.col}] += e.value;
    for (const auto& f : c.free_terms) r.free[f.index] += f.value;
    std::erase_if(r.entries, [](const auto& kv) { return kv.second == 0.0; });
    std::erase_if(r.free, [](const auto& kv) { return kv.second == 0.0; });
    double scale = 0.0;
    for (const auto& [key, v] : r.entries) scale = std::max(scale, std::abs(v));
    for (const auto& [key, v] : r.free) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) {
      if (std::abs(c.rhs) > 1e-12) {
        out.trivially_infeasible = true;
        out.message = "constraint " + std::to_string(i) + " has no variables but rhs " + std::to_string(c.rhs);
      }
      continue;
    }
    rows.push_back(std::move(r));
  }

  in.m = static_cast<int>(rows.size());
  in.f = MatrixXd::Zero(in.m, in.nf);
  in.b = VectorXd::Zero(in.m);
  in.row_scale = VectorXd::Ones(in.m);
  std::vector<std::vector<std::vector<SymEntry>>> per_block(nb, std::vector<std::vector<SymEntry>>(static_cast<std::size_t>(in.m)));
  for (int i = 0; i < in.m; ++i) {
    auto& r = rows[static_cast<std::size_t>(i)];
    double scale = 0.0;
    for (const auto& [key, v] : r.entries) scale = std::max(scale, std::abs(v));
    for (const auto& [key, v] : r.free) scale = std::max(scale, std::abs(v));
    const double s = 1.0 / scale;
    in.row_scale(i) = s;
    in.b(i) = r.rhs * s;
    in.original_row.push_back(r.original);
    for (const auto& [key, v] : r.entries) {
      const auto [blk, pp, qq] = key;
      per_block[static_cast<std::size_t>(blk)][static_cast<std::size_t>(i)].push_back({pp, qq, v * s});
    }
    for (const auto& [j, v] : r.free) in.f(i, j) = v * s;
  }
  for (std::size_t k = 0; k < nb; ++k) {
    auto& br = in.blocks[k];
    for (int i = 0; i < in.m; ++i) {
      const auto& es = per_block[k][static_cast<std::size_t>(i)];
      if (es.empty()) continue;
      br.rows.push_back(i);
      br.entries.insert(br.entries.end(), es.begin(), es.end());
      br.offsets.push_back(br.entries.size());
    }
  }

  in.c = zeros_like(in);
  for (const auto& e : p.objective) {
    auto& ck = in.c[static_cast<std::size_t>(e.block)];
    ck(e.row, e.col) += e.value;
    if (e.row != e.col) ck(e.col, e.row) += e.value;
  }
  in.cu = VectorXd::Zero(in.nf);
  for (const auto& f : p.free_objective) in.cu(f.index) += f.value;
  return out;
}

struct Direction {
  Blocks dx, ds;
  Blocks dxs, dss;  // scaled
  VectorXd dy, du;
  double dtau = 0.0, dkappa = 0.0;
};

}  // namespace

SdpSolution solve(const SdpProblem& problem, const Settings& st) {
  problem.validate();
  SdpSolution sol;
  Presolved pre = presolve(problem);
  const Internal& in = pre.in;
  const std::size_t nb = in.blocks.size();

  auto fill_empty = [&](Status status, std::string msg) {
    sol.status = status;
    sol.message = std::move(msg);
    sol.blocks = zeros_like(in);
    sol.dual_slack = zeros_like(in);
    sol.free = VectorXd::Zero(problem.num_free);
    sol.dual = VectorXd::Zero(static_cast<Eigen::Index>(problem.constraints.size()));
  };
  if (pre.trivially_infeasible) {
    fill_empty(Status::Infeasible, pre.message);
    return sol;
  }

  Blocks x, s;
  for (const auto& br : in.blocks) {
    x.push_back(MatrixXd::Identity(br.dim, br.dim));
    s.push_back(MatrixXd::Identity(br.dim, br.dim));
  }
  VectorXd y = VectorXd::Zero(in.m);
  VectorXd u = VectorXd::Zero(in.nf);
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max(1.0, in.b.norm());
  const double cnorm = std::max(1.0, std::sqrt(norm(in.c) * norm(in.c) + in.cu.squaredNorm()));
  const bool has_obj = problem.has_objective();

  std::vector<Scaling> sc(nb);
  KktSolver kkt;
  // Best iterate seen, used when the final iterations lose accuracy.
  struct Snapshot {
    Blocks x, s;
    VectorXd y, u;
    double tau = 1.0, kappa = 1.0, merit = std::numeric_limits<double>::infinity();
  } best;
  Status status = Status::NumericalFailure;
  std::string message = "iteration limit reached";
  int small_steps = 0;
  int worse = 0;
  int iter = 0;

  for (; iter <= st.max_iterations; ++iter) {
    // Residuals of the homogeneous embedding.
    const VectorXd ax = apply_a(in, x);
    const VectorXd rp = ax + in.f * u - in.b * tau;
    Blocks aty = apply_at(in, y);
    Blocks rd = aty;
    axpy(1.0, s, rd);
    axpy(-tau, in.c, rd);
    const VectorXd ru = in.f.transpose() * y - in.cu * tau;
    const double cx = dot(in.c, x) + in.cu.dot(u);
    const double by = in.b.dot(y);
    const double rg = cx - by + kappa;
    const double xs = dot(x, s);
    const double mu = (xs + tau * kappa) / (in.cone_degree + 1);

    const double pres = rp.norm() / tau / bnorm;
    const double dres = std::sqrt(norm(rd) * norm(rd) + ru.squaredNorm()) / tau / cnorm;
    const double pcost = cx / tau;
    const double dcost = by / tau;
    const double gap = xs / (tau * tau);
    const double relgap = gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));

    if (st.log) {
      char buf[200];
      std::snprintf(buf, sizeof(buf), "%3d  pcost % .6e  dcost % .6e  gap %.2e  pres %.2e  dres %.2e  tau/kap %.2e\n",
                    iter, pcost, dcost, gap, pres, dres, tau / kappa);
      *st.log << buf;
    }

    // A pure feasibility problem is settled by any primal point.
    const double merit = has_obj ? std::max({pres, dres, std::min(gap, relgap)}) : pres;
    if (merit < best.merit) best = {x, s, y, u, tau, kappa, merit};
    worse = merit > 10.0 * best.merit ? worse + 1 : 0;
    if (worse >= 3) {
      message = "stalled after losing accuracy";
      break;
    }
    if (!has_obj && pres <= st.feas_tol) {
      status = Status::Feasible;
      message = "converged";
      break;
    }
    if (pres <= st.feas_tol && dres <= st.feas_tol && (gap <= st.gap_tol || relgap <= st.gap_tol)) {
      status = has_obj ? Status::Optimal : Status::Feasible;
      message = "converged";
      break;
    }
    // Certificates of infeasibility: improving rays of the dual or primal.
    if (by > 0.0) {
      Blocks ray = aty;
      axpy(1.0, s, ray);
      const double pinf = std::sqrt(norm(ray) * norm(ray) + (in.f.transpose() * y).squaredNorm()) / by;
      if (pinf <= st.feas_tol || (tau / kappa < st.infeasibility_ratio && pinf <= 1e-5)) {
        status = Status::Infeasible;
        message = "dual improving ray found";
        break;
      }
    }
    if (cx < 0.0) {
      const double dinf = (ax + in.f * u).norm() / (-cx);
      if (dinf <= st.feas_tol || (tau / kappa < st.infeasibility_ratio && dinf <= 1e-5)) {
        status = Status::Unbounded;
        message = "primal improving ray found";
        break;
      }
    }
    if (tau / kappa < st.infeasibility_ratio * 1e-4) {
      message = "tau/kappa collapsed without a certificate";
      break;
    }
    if (iter == st.max_iterations) break;

    bool scaled = true;
    for (std::size_t k = 0; k < nb; ++k) scaled = scaled && nt_scaling(x[k], s[k], sc[k]);
    if (!scaled) {
      message = "lost positive definiteness";
      break;
    }

    const MatrixXd m = build_schur(in, sc);
    if (!kkt.factor(m, in.f)) {
      message = "Schur complement factorization failed";
      break;
    }
    Blocks wcw(nb);
    for (std::size_t k = 0; k < nb; ++k) wcw[k] = sc[k].w * in.c[k] * sc[k].w;
    const VectorXd g = apply_a(in, wcw);
    const double wcc = dot(in.c, wcw);
    VectorXd p2, q2;
    kkt.solve(g + in.b, in.cu, p2, q2);

    auto newton = [&](double eta, const Blocks& rc, double rtau) {
      Direction d;
      Blocks z(nb), wzw(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        const VectorXd& lam = sc[k].lambda;
        const int n = in.blocks[k].dim;
        MatrixXd q(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) q(i, j) = 2.0 * rc[k](i, j) / (lam(i) + lam(j));
        const MatrixXd qhat = sc[k].rinv.transpose() * q * sc[k].rinv;
        z[k] = eta * rd[k] + qhat;
        wzw[k] = sc[k].w * z[k] * sc[k].w;
      }
      const VectorXd r1 = -eta * rp - apply_a(in, wzw);
      const VectorXd r2 = -eta * ru;
      VectorXd p1, q1;
      kkt.solve(r1, r2, p1, q1);
      const double rhs_gap = -eta * rg - dot(in.c, wzw) - rtau / tau;
      const VectorXd gmb = g - in.b;
      const double num = rhs_gap - gmb.dot(p1) - (in.nf ? in.cu.dot(q1) : 0.0);
      const double den = gmb.dot(p2) + (in.nf ? in.cu.dot(q2) : 0.0) - wcc - kappa / tau;
      d.dtau = num / den;
      d.dy = p1 + p2 * d.dtau;
      d.du = in.nf ? VectorXd(q1 + q2 * d.dtau) : VectorXd();
      d.dkappa = (rtau - kappa * d.dtau) / tau;
      const Blocks atdy = apply_at(in, d.dy);
      d.dx.resize(nb);
      d.ds.resize(nb);
      d.dxs.resize(nb);
      d.dss.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        const MatrixXd inner = atdy[k] - in.c[k] * d.dtau + z[k];
        d.dx[k] = sc[k].w * inner * sc[k].w;
        d.dx[k] = 0.5 * (d.dx[k] + d.dx[k].transpose()).eval();
        d.ds[k] = -eta * rd[k] - atdy[k] + in.c[k] * d.dtau;
        d.dxs[k] = sc[k].rinv * d.dx[k] * sc[k].rinv.transpose();
        d.dss[k] = sc[k].r.transpose() * d.ds[k] * sc[k].r;
      }
      return d;
    };

    auto step_to_boundary = [&](const Direction& d) {
      double a = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        a = std::min(a, max_step(sc[k].lambda, d.dxs[k]));
        a = std::min(a, max_step(sc[k].lambda, d.dss[k]));
      }
      a = std::min(a, max_step_scalar(tau, d.dtau));
      a = std::min(a, max_step_scalar(kappa, d.dkappa));
      return a;
    };

    // Predictor.
    Blocks rc_aff(nb);
    for (std::size_t k = 0; k < nb; ++k) rc_aff[k] = -MatrixXd(sc[k].lambda.array().square().matrix().asDiagonal());
    const Direction aff = newton(1.0, rc_aff, -tau * kappa);
    const double a_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3), 0.0, 1.0);

    // Corrector.
    Blocks rc(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      const MatrixXd cross = 0.5 * (aff.dxs[k] * aff.dss[k] + aff.dss[k] * aff.dxs[k]);
      rc[k] = rc_aff[k] - cross;
      rc[k].diagonal().array() += sigma * mu;
    }
    const double rtau = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
    const Direction d = newton(1.0 - sigma, rc, rtau);
    const double alpha = std::min(1.0, st.step_fraction * step_to_boundary(d));
    if (!std::isfinite(alpha) || alpha <= 0.0) {
      message = "invalid step length";
      break;
    }
    small_steps = alpha < 1e-8 ? small_steps + 1 : 0;
    if (small_steps >= 5) {
      message = "stalled";
      break;
    }

    for (std::size_t k = 0; k < nb; ++k) {
      x[k] += alpha * d.dx[k];
      s[k] += alpha * d.ds[k];
      x[k] = 0.5 * (x[k] + x[k].transpose()).eval();
      s[k] = 0.5 * (s[k] + s[k].transpose()).eval();
    }
    y += alpha * d.dy;
    if (in.nf) u += alpha * d.du;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !std::isfinite(tau) || !std::isfinite(kappa)) {
      message = "lost positivity of tau/kappa";
      break;
    }
  }

  if (status == Status::NumericalFailure && best.merit <= st.fallback_tol) {
    x = best.x;
    s = best.s;
    y = best.y;
    u = best.u;
    tau = best.tau;
    kappa = best.kappa;
    status = has_obj ? Status::Optimal : Status::Feasible;
    message = "reduced accuracy (" + message + ")";
  }
  sol.status = status;
  sol.message = message;
  sol.iterations = iter;
  const double denom = (status == Status::Infeasible || status == Status::Unbounded) ? 1.0 : tau;
  sol.blocks.resize(nb);
  sol.dual_slack.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    sol.blocks[k] = x[k] / denom;
    sol.dual_slack[k] = s[k] / denom;
  }
  VectorXd ufinal = in.nf ? VectorXd(u / denom) : VectorXd();
  if (sol.ok()) polish(in, sol.blocks, ufinal);
  sol.free = VectorXd::Zero(problem.num_free);
  if (in.nf) sol.free = ufinal;
  // Undo row scaling for the dual vector.
  sol.dual = VectorXd::Zero(static_cast<Eigen::Index>(problem.constraints.size()));
  for (int i = 0; i < in.m; ++i) sol.dual(in.original_row[static_cast<std::size_t>(i)]) = y(i) * in.row_scale(i) / denom;

  const Residuals res = evaluate_residuals(problem, sol);
  sol.primal_residual = res.equality;
  sol.dual_residual = res.dual;
  sol.gap = res.gap;
  sol.primal_objective = inner_product(problem.objective, sol.blocks);
  for (const auto& f : problem.free_objective) sol.primal_objective += f.value * sol.free(f.index);
  sol.dual_objective = 0.0;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) sol.dual_objective += problem.constraints[i].rhs * sol.dual(static_cast<Eigen::Index>(i));
  return sol;
}

Residuals evaluate_residuals(const SdpProblem& problem, const SdpSolution& sol) {
  Residuals r;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const auto& c = problem.constraints[i];
    double v = inner_product(c.entries, sol.blocks);
    for (const auto& f : c.free_terms) v += f.value * sol.free(f.index);
    r.equality = std::max(r.equality, std::abs(v - c.rhs));
  }
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& xk : sol.blocks) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(xk, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = std::min(r.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  // S = C - sum y_i A_i, F^T y = c_u.
  std::vector<MatrixXd> s;
  for (const auto& b : problem.blocks) s.push_back(MatrixXd::Zero(b.dim, b.dim));
  for (const auto& e : problem.objective) {
    s[static_cast<std::size_t>(e.block)](e.row, e.col) += e.value;
    if (e.row != e.col) s[static_cast<std::size_t>(e.block)](e.col, e.row) += e.value;
  }
  VectorXd fty = VectorXd::Zero(problem.num_free);
  for (const auto& f : problem.free_objective) fty(f.index) -= f.value;
  for (std::size_t i = 0; i < problem.constraints.size(); ++i) {
    const double yi = sol.dual.size() ? sol.dual(static_cast<Eigen::Index>(i)) : 0.0;
    for (const auto& e : problem.constraints[i].entries) {
      auto& sk = s[static_cast<std::size_t>(e.block)];
      sk(e.row, e.col) -= yi * e.value;
      if (e.row != e.col) sk(e.col, e.row) -= yi * e.value;
    }
    for (const auto& f : problem.constraints[i].free_terms) fty(f.index) += yi * f.value;
  }
  double dres = fty.size() ? fty.cwiseAbs().maxCoeff() : 0.0;
  double gap = 0.0;
  for (std::size_t k = 0; k < s.size() && k < sol.dual_slack.size(); ++k) {
    dres = std::max(dres, (s[k] - sol.dual_slack[k]).cwiseAbs().maxCoeff());
    gap += sol.blocks[k].cwiseProduct(sol.dual_slack[k]).sum();
  }
  r.dual = dres;
  r.gap = gap;
  return r;
}

}  // namespace csr::sdp
