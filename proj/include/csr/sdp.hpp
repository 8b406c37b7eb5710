#pragma once

// Small dense semidefinite programs:
//
//   minimize    sum_k <C_k, X_k> + c_u^T u
//   subject to  sum_k <A_ik, X_k> + f_i^T u = b_i,   i = 1..m
//               X_k PSD,  u free.
//
// Coefficient matrices are symmetric and given by upper-triangle entries:
// an entry (p, q, v) with p < q stands for v at both (p, q) and (q, p), so
// it contributes 2 v X_pq to the inner product.

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace csr::sdp {

struct Entry {
  int block = 0;
  int row = 0;  // row <= col
  int col = 0;
  double value = 0.0;
};

struct FreeTerm {
  int index = 0;
  double value = 0.0;
};

struct LinearConstraint {
  std::vector<Entry> entries;
  std::vector<FreeTerm> free_terms;
  double rhs = 0.0;
};

struct Block {
  std::string name;
  int dim = 0;
};

struct SdpProblem {
  std::vector<Block> blocks;
  int num_free = 0;
  std::vector<LinearConstraint> constraints;
  std::vector<Entry> objective;
  std::vector<FreeTerm> free_objective;

  int add_block(std::string name, int dim);
  int add_free(int count = 1);
  bool has_objective() const { return !objective.empty() || !free_objective.empty(); }

  /// Throws std::invalid_argument on out-of-range indices or lower-triangle
  /// entries.
  void validate() const;
};

enum class Status { Optimal, Feasible, Infeasible, Unbounded, NumericalFailure };

const char* to_string(Status s);

struct Settings {
  double feas_tol = 1e-8;   // relative residual used for termination
  double gap_tol = 1e-8;
  double fallback_tol = 1e-7;  // accept the best iterate within this on stalls
  double eig_tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  double infeasibility_ratio = 1e-8;  // tau/kappa threshold
  std::ostream* log = nullptr;        // per-iteration lines when set
};

struct SdpSolution {
  Status status = Status::NumericalFailure;
  std::vector<Eigen::MatrixXd> blocks;  // primal X_k
  Eigen::VectorXd free;                 // primal u
  Eigen::VectorXd dual;                 // y
  std::vector<Eigen::MatrixXd> dual_slack;  // S_k = C_k - sum_i y_i A_ik
  double primal_residual = 0.0;  // max |sum <A_i,X> + f_i^T u - b_i|
  double dual_residual = 0.0;
  double gap = 0.0;              // sum <X_k, S_k>
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  std::string message;

  bool ok() const { return status == Status::Optimal || status == Status::Feasible; }
};

SdpSolution solve(const SdpProblem& problem, const Settings& settings = {});

/// Residuals recomputed from scratch for a candidate primal/dual pair.
struct Residuals {
  double equality = 0.0;      // max abs equality violation
  double min_eigenvalue = 0.0;  // over all primal blocks
  double dual = 0.0;          // max abs dual equation violation
  double gap = 0.0;           // sum <X_k, S_k>
};

Residuals evaluate_residuals(const SdpProblem& problem, const SdpSolution& sol);

/// Inner product <A, X> for a single constraint/objective entry list.
double inner_product(const std::vector<Entry>& entries, const std::vector<Eigen::MatrixXd>& x);

}  // namespace csr::sdp
