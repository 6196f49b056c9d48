#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace lfac {

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Smooth NLP in the form
///   min f(x)  s.t.  g_lo <= g(x) <= g_hi,  x_lo <= x <= x_hi.
/// Rows with g_lo == g_hi are equalities; variables with x_lo == x_hi are
/// held fixed. Infinite bounds are allowed.
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_variables() const = 0;
  virtual int num_constraints() const = 0;
  virtual void bounds(Eigen::VectorXd& x_lo, Eigen::VectorXd& x_hi, Eigen::VectorXd& g_lo,
                      Eigen::VectorXd& g_hi) const = 0;
  virtual Eigen::VectorXd initial_point() const = 0;

  virtual double objective(const Eigen::VectorXd& x) const = 0;
  virtual void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const = 0;
  virtual void constraints(const Eigen::VectorXd& x, Eigen::VectorXd& g) const = 0;
  /// Appends the nonzeros of dg/dx; duplicate entries are summed.
  virtual void jacobian(const Eigen::VectorXd& x, Triplets& out) const = 0;
  /// Appends the lower triangle (row >= col) of sigma·∇²f + Σ lambda_i ∇²g_i.
  virtual void hessian(const Eigen::VectorXd& x, double sigma, const Eigen::VectorXd& lambda, Triplets& out) const = 0;
};

struct IpmOptions {
  double tol = 1e-8;                // scaled overall KKT error
  double constr_viol_tol = 1e-6;    // unscaled max constraint violation
  int max_iterations = 3000;
  double mu_init = 0.1;
  double bound_push = 1e-2;
  double bound_frac = 1e-2;
  double nlp_scaling_max_gradient = 100.0;
  bool enable_restoration = true;
  std::ostream* log = nullptr;
};

enum class IpmStatus { Optimal, LocalInfeasibility, IterationLimit, RestorationFailed, NumericalFailure };
const char* to_string(IpmStatus s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const;
};

struct IpmResult {
  IpmStatus status = IpmStatus::NumericalFailure;
  std::string message;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;  // constraint multipliers, L = f + lambda·g
  Eigen::VectorXd z_lo, z_hi;  // variable bound multipliers (>= 0)
  double objective = 0.0;
  int iterations = 0;
  KktResiduals kkt;         // unscaled problem
  KktResiduals kkt_scaled;  // after gradient-based scaling
  double mu = 0.0;
};

/// Primal-dual interior-point method: log barrier on bounds and inequality
/// slacks, filter line search with second-order correction, regularized
/// sparse LU on the full KKT system, and an l1-elastic feasibility
/// restoration phase.
IpmResult solve_nlp(const NlpProblem& problem, const IpmOptions& options = {});

/// Wraps `base` with elastic variables p, n >= 0 on the selected rows:
///   g_i(x) - p_i + n_i in [g_lo_i, g_hi_i],
/// minimizing rho·Σ(p + n) + zeta/2·Σ (D_j (x_j - x_ref_j))^2 (+ base_weight·f).
class ElasticProblem : public NlpProblem {
 public:
  ElasticProblem(const NlpProblem& base, std::vector<int> rows, double rho, double zeta, Eigen::VectorXd x_ref,
                 double base_weight = 0.0);

  int num_variables() const override { return n_base_ + 2 * static_cast<int>(rows_.size()); }
  int num_constraints() const override { return m_base_; }
  void bounds(Eigen::VectorXd& x_lo, Eigen::VectorXd& x_hi, Eigen::VectorXd& g_lo,
              Eigen::VectorXd& g_hi) const override;
  Eigen::VectorXd initial_point() const override;
  double objective(const Eigen::VectorXd& x) const override;
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const override;
  void constraints(const Eigen::VectorXd& x, Eigen::VectorXd& g) const override;
  void jacobian(const Eigen::VectorXd& x, Triplets& out) const override;
  void hessian(const Eigen::VectorXd& x, double sigma, const Eigen::VectorXd& lambda, Triplets& out) const override;

  /// Σ(p + n) at a point of the elastic problem.
  double total_elastic(const Eigen::VectorXd& x) const;
  Eigen::VectorXd base_part(const Eigen::VectorXd& x) const { return x.head(n_base_); }
  /// Elastic initial values for the given barrier parameter.
  void set_mu(double mu) { mu_ = mu; }

 private:
  const NlpProblem& base_;
  std::vector<int> rows_;
  double rho_, zeta_, base_weight_;
  Eigen::VectorXd x_ref_, d_;
  int n_base_, m_base_;
  double mu_ = 0.1;
};

}  // namespace lfac
