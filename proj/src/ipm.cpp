#include "lfac/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <Eigen/SparseLU>

namespace lfac {
namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Filter and line-search constants.
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi = 1e-8;
constexpr double kEtaPhi = 1e-8;
constexpr double kDelta = 1.0;
constexpr double kSTheta = 1.1;
constexpr double kSPhi = 2.3;
constexpr double kGammaAlpha = 0.05;
constexpr double kKappaSoc = 0.99;
constexpr int kMaxSoc = 4;

// Barrier update constants.
constexpr double kKappaEps = 10.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kTauMin = 0.99;
constexpr double kKappaSigma = 1e10;
constexpr double kSMax = 100.0;

// Regularization constants.
constexpr double kDeltaW0 = 1e-4;
constexpr double kDeltaWMin = 1e-20;
constexpr double kDeltaWMax = 1e40;
constexpr double kKappaWMinus = 1.0 / 3.0;
constexpr double kKappaWPlus = 8.0;
constexpr double kKappaWPlusBar = 100.0;
constexpr double kDeltaC = 1e-8;
constexpr double kKappaC = 0.25;
constexpr double kCurvature = 1e-10;

constexpr double kBoundRelax = 1e-8;
constexpr double kRestorationRho = 1000.0;
constexpr double kKappaResto = 0.9;
constexpr int kMaxRestorations = 25;

struct FilterEntry {
  double theta, phi;
};

class Filter {
 public:
  void reset(double theta_max) {
    entries_.clear();
    entries_.push_back({theta_max, -kInf});
  }
  bool acceptable(double theta, double phi) const {
    for (const auto& e : entries_)
      if (theta >= e.theta && phi >= e.phi) return false;
    return true;
  }
  void add(double theta, double phi) {
    const FilterEntry e{(1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta};
    std::erase_if(entries_, [&](const FilterEntry& f) { return f.theta >= e.theta && f.phi >= e.phi; });
    entries_.push_back(e);
  }

 private:
  std::vector<FilterEntry> entries_;
};

class Solver {
 public:
  Solver(const NlpProblem& p, const IpmOptions& o) : prob_(p), opt_(o) { setup(); }

  // Runs the method from the problem's initial point, or from `start` when
  // given. `stop_early` is consulted at every iterate (restoration use).
  IpmResult run(const VectorXd* start = nullptr, const std::function<bool(const VectorXd&)>& stop_early = {});

  // Scaled infeasibility of the main problem at a full x, assuming the
  // best slack values.
  double theta_of(const VectorXd& x) const;

 private:
  void setup();
  void initialize(const VectorXd& x0);
  VectorXd full_x(const VectorXd& w) const;
  void eval_constraints(const VectorXd& w, VectorXd& c, VectorXd* g_scaled = nullptr) const;
  double eval_objective(const VectorXd& w) const { return obj_scale_ * prob_.objective(full_x(w)); }
  void eval_gradient(const VectorXd& w, VectorXd& grad) const;
  SpMat eval_jacobian(const VectorXd& w) const;
  SpMat eval_hessian(const VectorXd& w, const VectorXd& lambda) const;

  double barrier(const VectorXd& w, double f) const;
  VectorXd barrier_gradient(const VectorXd& w, const VectorXd& grad_f) const;
  double max_step(const VectorXd& v, const VectorXd& dv, const VectorXd& lo, const VectorXd& hi,
                  const std::vector<bool>& has_lo, const std::vector<bool>& has_hi, double tau) const;

  bool factorize(const SpMat& H, const SpMat& J, const VectorXd& sigma_plus, double delta_c);
  bool solve_kkt(const VectorXd& r_top, const VectorXd& r_bot, VectorXd& dw, VectorXd& dl);
  bool compute_direction(const SpMat& H, const SpMat& J, const VectorXd& sigma, const VectorXd& r_top,
                         const VectorXd& r_bot, VectorXd& dw, VectorXd& dl);

  KktResiduals residuals(const VectorXd& grad_lag, const VectorXd& c, double mu, bool scaled) const;
  double overall_error(const VectorXd& grad_lag, const VectorXd& c, double mu) const;

  bool restoration(const VectorXd& c_now, double f_now, std::string& why);
  IpmResult finish(IpmStatus status, std::string message);

  const NlpProblem& prob_;
  IpmOptions opt_;

  int n_ = 0, m_ = 0;
  VectorXd x_lo_, x_hi_, g_lo_, g_hi_;
  VectorXd x_template_;
  std::vector<int> free_;        // internal column -> original variable
  std::vector<int> col_of_x_;    // original variable -> internal column, -1 if fixed
  std::vector<int> slack_row_;   // internal slack -> constraint row
  std::vector<int> slack_col_;   // constraint row -> internal column, -1 for equalities
  int nw_ = 0;
  VectorXd l_, u_;  // internal (scaled, relaxed) bounds
  std::vector<bool> has_l_, has_u_;
  double obj_scale_ = 1.0;
  VectorXd con_scale_;
  VectorXd g_lo_s_, g_hi_s_;

  VectorXd w_, lambda_, zl_, zu_;
  double mu_ = 0.1;
  Filter filter_;
  double theta_max_ = 0, theta_min_ = 0;
  int iter_ = 0;
  int restorations_ = 0;
  double delta_w_last_ = 0.0;

  SpMat kkt_;
  Eigen::SparseLU<SpMat> lu_;
  SpMat h_reg_;  // W + Sigma + delta_w I of the last factorization
};

void Solver::setup() {
  n_ = prob_.num_variables();
  m_ = prob_.num_constraints();
  x_lo_.resize(n_), x_hi_.resize(n_), g_lo_.resize(m_), g_hi_.resize(m_);
  prob_.bounds(x_lo_, x_hi_, g_lo_, g_hi_);

  col_of_x_.assign(n_, -1);
  for (int j = 0; j < n_; ++j)
    if (!(x_lo_[j] == x_hi_[j])) {
      col_of_x_[j] = static_cast<int>(free_.size());
      free_.push_back(j);
    }
  slack_col_.assign(m_, -1);
  const int nx = static_cast<int>(free_.size());
  for (int i = 0; i < m_; ++i)
    if (!(g_lo_[i] == g_hi_[i])) {
      slack_col_[i] = nx + static_cast<int>(slack_row_.size());
      slack_row_.push_back(i);
    }
  nw_ = nx + static_cast<int>(slack_row_.size());
}

VectorXd Solver::full_x(const VectorXd& w) const {
  VectorXd x = x_template_;
  for (std::size_t k = 0; k < free_.size(); ++k) x[free_[k]] = w[static_cast<Eigen::Index>(k)];
  return x;
}

void Solver::eval_constraints(const VectorXd& w, VectorXd& c, VectorXd* g_scaled) const {
  VectorXd g(m_);
  prob_.constraints(full_x(w), g);
  g = g.cwiseProduct(con_scale_);
  c.resize(m_);
  for (int i = 0; i < m_; ++i) c[i] = slack_col_[i] < 0 ? g[i] - g_lo_s_[i] : g[i] - w[slack_col_[i]];
  if (g_scaled) *g_scaled = g;
}

void Solver::eval_gradient(const VectorXd& w, VectorXd& grad) const {
  VectorXd gx(n_);
  prob_.gradient(full_x(w), gx);
  grad = VectorXd::Zero(nw_);
  for (std::size_t k = 0; k < free_.size(); ++k) grad[static_cast<Eigen::Index>(k)] = obj_scale_ * gx[free_[k]];
}

SpMat Solver::eval_jacobian(const VectorXd& w) const {
  Triplets raw, t;
  prob_.jacobian(full_x(w), raw);
  t.reserve(raw.size() + slack_row_.size());
  for (const auto& e : raw) {
    const int col = col_of_x_[e.col()];
    if (col >= 0) t.emplace_back(e.row(), col, con_scale_[e.row()] * e.value());
  }
  for (std::size_t k = 0; k < slack_row_.size(); ++k) t.emplace_back(slack_row_[k], slack_col_[slack_row_[k]], -1.0);
  SpMat J(m_, nw_);
  J.setFromTriplets(t.begin(), t.end());
  return J;
}

SpMat Solver::eval_hessian(const VectorXd& w, const VectorXd& lambda) const {
  Triplets raw, t;
  prob_.hessian(full_x(w), obj_scale_, lambda.cwiseProduct(con_scale_), raw);
  t.reserve(raw.size());
  for (const auto& e : raw) {
    const int r = col_of_x_[e.row()], c = col_of_x_[e.col()];
    if (r < 0 || c < 0) continue;
    t.emplace_back(std::max(r, c), std::min(r, c), e.value());
  }
  SpMat H(nw_, nw_);
  H.setFromTriplets(t.begin(), t.end());
  return H;  // lower triangle
}

double Solver::barrier(const VectorXd& w, double f) const {
  double phi = f;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) phi -= mu_ * std::log(w[i] - l_[i]);
    if (has_u_[i]) phi -= mu_ * std::log(u_[i] - w[i]);
  }
  return phi;
}

VectorXd Solver::barrier_gradient(const VectorXd& w, const VectorXd& grad_f) const {
  VectorXd g = grad_f;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) g[i] -= mu_ / (w[i] - l_[i]);
    if (has_u_[i]) g[i] += mu_ / (u_[i] - w[i]);
  }
  return g;
}

double Solver::max_step(const VectorXd& v, const VectorXd& dv, const VectorXd& lo, const VectorXd& hi,
                        const std::vector<bool>& has_lo, const std::vector<bool>& has_hi, double tau) const {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (has_lo[i] && dv[i] < 0.0) alpha = std::min(alpha, -tau * (v[i] - lo[i]) / dv[i]);
    if (has_hi[i] && dv[i] > 0.0) alpha = std::min(alpha, tau * (hi[i] - v[i]) / dv[i]);
  }
  return alpha;
}

void Solver::initialize(const VectorXd& x0_in) {
  VectorXd x0 = x0_in;
  x_template_ = x0;
  for (int j = 0; j < n_; ++j)
    if (col_of_x_[j] < 0) x_template_[j] = x_lo_[j];

  // Gradient-based scaling at the starting point.
  VectorXd gx(n_);
  prob_.gradient(x_template_, gx);
  double gmax = 0.0;
  for (int k : free_) gmax = std::max(gmax, std::abs(gx[k]));
  obj_scale_ = gmax > opt_.nlp_scaling_max_gradient ? opt_.nlp_scaling_max_gradient / gmax : 1.0;
  Triplets jt;
  prob_.jacobian(x_template_, jt);
  VectorXd row_max = VectorXd::Zero(m_);
  for (const auto& e : jt)
    if (col_of_x_[e.col()] >= 0) row_max[e.row()] = std::max(row_max[e.row()], std::abs(e.value()));
  con_scale_.resize(m_);
  for (int i = 0; i < m_; ++i)
    con_scale_[i] = row_max[i] > opt_.nlp_scaling_max_gradient ? opt_.nlp_scaling_max_gradient / row_max[i] : 1.0;
  g_lo_s_ = g_lo_.cwiseProduct(con_scale_);
  g_hi_s_ = g_hi_.cwiseProduct(con_scale_);

  l_.resize(nw_), u_.resize(nw_);
  has_l_.assign(nw_, false), has_u_.assign(nw_, false);
  // Relaxation never exceeds the violation tolerance in unscaled units.
  VectorXd relax_cap(nw_);
  for (std::size_t k = 0; k < free_.size(); ++k) {
    l_[k] = x_lo_[free_[k]], u_[k] = x_hi_[free_[k]];
    relax_cap[k] = opt_.constr_viol_tol;
  }
  for (std::size_t k = 0; k < slack_row_.size(); ++k) {
    const std::size_t c = free_.size() + k;
    l_[c] = g_lo_s_[slack_row_[k]], u_[c] = g_hi_s_[slack_row_[k]];
    relax_cap[c] = opt_.constr_viol_tol * con_scale_[slack_row_[k]];
  }
  for (int i = 0; i < nw_; ++i) {
    has_l_[i] = std::isfinite(l_[i]);
    has_u_[i] = std::isfinite(u_[i]);
    if (has_l_[i]) l_[i] -= std::min(relax_cap[i], kBoundRelax * std::max(1.0, std::abs(l_[i])));
    if (has_u_[i]) u_[i] += std::min(relax_cap[i], kBoundRelax * std::max(1.0, std::abs(u_[i])));
  }

  // Starting point pushed strictly inside the bounds.
  w_.resize(nw_);
  VectorXd g(m_);
  prob_.constraints(x_template_, g);
  g = g.cwiseProduct(con_scale_);
  for (std::size_t k = 0; k < free_.size(); ++k) w_[k] = x0[free_[k]];
  for (std::size_t k = 0; k < slack_row_.size(); ++k) w_[free_.size() + k] = g[slack_row_[k]];
  for (int i = 0; i < nw_; ++i) {
    const double width = (has_l_[i] && has_u_[i]) ? u_[i] - l_[i] : kInf;
    if (has_l_[i]) {
      const double p = std::min(opt_.bound_push * std::max(1.0, std::abs(l_[i])), opt_.bound_frac * width);
      w_[i] = std::max(w_[i], l_[i] + p);
    }
    if (has_u_[i]) {
      const double p = std::min(opt_.bound_push * std::max(1.0, std::abs(u_[i])), opt_.bound_frac * width);
      w_[i] = std::min(w_[i], u_[i] - p);
    }
    if (has_l_[i] && has_u_[i] && !(w_[i] > l_[i] && w_[i] < u_[i])) w_[i] = 0.5 * (l_[i] + u_[i]);
  }

  lambda_ = VectorXd::Zero(m_);
  zl_ = VectorXd::Zero(nw_), zu_ = VectorXd::Zero(nw_);
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) zl_[i] = 1.0;
    if (has_u_[i]) zu_[i] = 1.0;
  }
  mu_ = opt_.mu_init;
}

double Solver::theta_of(const VectorXd& x) const {
  VectorXd g(m_);
  prob_.constraints(x, g);
  g = g.cwiseProduct(con_scale_);
  double theta = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (slack_col_[i] < 0) {
      theta += std::abs(g[i] - g_lo_s_[i]);
    } else {
      const int c = slack_col_[i];
      if (has_l_[c] && g[i] < l_[c]) theta += l_[c] - g[i];
      if (has_u_[c] && g[i] > u_[c]) theta += g[i] - u_[c];
    }
  }
  return theta;
}

bool Solver::factorize(const SpMat& H, const SpMat& J, const VectorXd& sigma_plus, double delta_c) {
  Triplets t;
  t.reserve(2 * H.nonZeros() + 2 * J.nonZeros() + nw_ + m_);
  Triplets hr;
  for (int k = 0; k < H.outerSize(); ++k)
    for (SpMat::InnerIterator it(H, k); it; ++it) {
      t.emplace_back(it.row(), it.col(), it.value());
      hr.emplace_back(it.row(), it.col(), it.value());
      if (it.row() != it.col()) {
        t.emplace_back(it.col(), it.row(), it.value());
        hr.emplace_back(it.col(), it.row(), it.value());
      }
    }
  for (int i = 0; i < nw_; ++i) {
    t.emplace_back(i, i, sigma_plus[i]);
    hr.emplace_back(i, i, sigma_plus[i]);
  }
  for (int k = 0; k < J.outerSize(); ++k)
    for (SpMat::InnerIterator it(J, k); it; ++it) {
      t.emplace_back(nw_ + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), nw_ + it.row(), it.value());
    }
  for (int i = 0; i < m_; ++i) t.emplace_back(nw_ + i, nw_ + i, -delta_c);
  kkt_.resize(nw_ + m_, nw_ + m_);
  kkt_.setFromTriplets(t.begin(), t.end());
  h_reg_.resize(nw_, nw_);
  h_reg_.setFromTriplets(hr.begin(), hr.end());
  lu_.analyzePattern(kkt_);
  lu_.factorize(kkt_);
  return lu_.info() == Eigen::Success;
}

bool Solver::solve_kkt(const VectorXd& r_top, const VectorXd& r_bot, VectorXd& dw, VectorXd& dl) {
  VectorXd rhs(nw_ + m_);
  rhs << r_top, r_bot;
  VectorXd sol = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success || !sol.allFinite()) return false;
  // One step of iterative refinement.
  const VectorXd res = rhs - kkt_ * sol;
  const VectorXd corr = lu_.solve(res);
  if (corr.allFinite()) sol += corr;
  dw = sol.head(nw_);
  dl = sol.tail(m_);
  return true;
}

bool Solver::compute_direction(const SpMat& H, const SpMat& J, const VectorXd& sigma, const VectorXd& r_top,
                               const VectorXd& r_bot, VectorXd& dw, VectorXd& dl) {
  double delta_w = 0.0, delta_c = 0.0;
  for (;;) {
    bool ok = factorize(H, J, sigma.array() + delta_w, delta_c) && solve_kkt(r_top, r_bot, dw, dl);
    if (ok) {
      const double dd = dw.squaredNorm();
      if (dd == 0.0 || dw.dot(h_reg_ * dw) >= kCurvature * dd) {
        if (delta_w > 0.0) delta_w_last_ = delta_w;
        return true;
      }
    } else if (delta_c == 0.0) {
      delta_c = kDeltaC * std::pow(mu_, kKappaC);
    }
    if (delta_w == 0.0)
      delta_w = delta_w_last_ == 0.0 ? kDeltaW0 : std::max(kDeltaWMin, kKappaWMinus * delta_w_last_);
    else
      delta_w *= delta_w_last_ == 0.0 ? kKappaWPlusBar : kKappaWPlus;
    if (delta_w > kDeltaWMax) return false;
  }
}

KktResiduals Solver::residuals(const VectorXd& grad_lag, const VectorXd& c, double mu, bool scaled) const {
  KktResiduals r;
  double s_d = 1.0, s_c = 1.0;
  if (scaled) {
    const double zsum = zl_.lpNorm<1>() + zu_.lpNorm<1>();
    const double denom = static_cast<double>(std::max(1, m_ + 2 * nw_));
    s_d = std::max(kSMax, (lambda_.lpNorm<1>() + zsum) / denom) / kSMax;
    s_c = std::max(kSMax, zsum / static_cast<double>(std::max(1, 2 * nw_))) / kSMax;
  }
  r.stationarity = (grad_lag.size() ? grad_lag.lpNorm<Eigen::Infinity>() : 0.0) / s_d;
  r.primal = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
  double comp = 0.0;
  for (int i = 0; i < nw_; ++i) {
    if (has_l_[i]) comp = std::max(comp, std::abs(zl_[i] * (w_[i] - l_[i]) - mu));
    if (has_u_[i]) comp = std::max(comp, std::abs(zu_[i] * (u_[i] - w_[i]) - mu));
  }
  r.complementarity = comp / s_c;
  return r;
}

double Solver::overall_error(const VectorXd& grad_lag, const VectorXd& c, double mu) const {
  return residuals(grad_lag, c, mu, true).max();
}

bool Solver::restoration(const VectorXd& c_now, double f_now, std::string& why) {
  if (!opt_.enable_restoration) {
    why = "line search failed and restoration is disabled";
    return false;
  }
  if (++restorations_ > kMaxRestorations) {
    why = "too many restoration phases";
    return false;
  }
  const VectorXd x_ref = full_x(w_);
  const double theta_ref = c_now.lpNorm<1>();
  const double phi_ref = barrier(w_, f_now);
  filter_.add(theta_ref, phi_ref);

  std::vector<int> rows(m_);
  for (int i = 0; i < m_; ++i) rows[i] = i;
  ElasticProblem resto(prob_, rows, kRestorationRho, std::sqrt(mu_), x_ref);
  const double mu_r = std::max(mu_, c_now.lpNorm<Eigen::Infinity>());
  resto.set_mu(mu_r);

  IpmOptions ro = opt_;
  ro.enable_restoration = false;
  ro.mu_init = mu_r;
  ro.max_iterations = std::max(1, opt_.max_iterations - iter_);
  ro.log = nullptr;

  bool returned = false;
  auto stop = [&](const VectorXd& xe) {
    const VectorXd x = xe.head(n_);
    const double th = theta_of(x);
    if (!(th <= kKappaResto * theta_ref)) return false;
    // Build the candidate and test it against the main filter.
    VectorXd w(nw_);
    for (std::size_t k = 0; k < free_.size(); ++k) w[k] = x[free_[k]];
    VectorXd g(m_);
    prob_.constraints(x, g);
    g = g.cwiseProduct(con_scale_);
    for (std::size_t k = 0; k < slack_row_.size(); ++k) {
      const int c = static_cast<int>(free_.size() + k);
      double s = g[slack_row_[k]];
      const double lo = has_l_[c] ? l_[c] : -kInf, hi = has_u_[c] ? u_[c] : kInf;
      const double push = 1e-2 * std::min(1.0, (has_l_[c] && has_u_[c]) ? hi - lo : 1.0) * std::max(mu_, 1e-8);
      s = std::clamp(s, lo + push, hi - push);
      w[c] = s;
    }
    for (std::size_t k = 0; k < free_.size(); ++k) {
      if ((has_l_[k] && !(w[k] > l_[k])) || (has_u_[k] && !(w[k] < u_[k]))) return false;
    }
    VectorXd c_trial;
    eval_constraints(w, c_trial);
    const double th_trial = c_trial.lpNorm<1>();
    const double phi_trial = barrier(w, eval_objective(w));
    if (!std::isfinite(phi_trial) || !filter_.acceptable(th_trial, phi_trial)) return false;
    w_ = w;
    returned = true;
    return true;
  };

  Solver inner(resto, ro);
  VectorXd start = resto.initial_point();
  IpmResult r = inner.run(&start, stop);
  iter_ += r.iterations;
  if (!returned) {
    const VectorXd x = r.x.size() ? VectorXd(r.x.head(n_)) : x_ref;
    const double th = theta_of(x);
    if (r.status == IpmStatus::Optimal && resto.total_elastic(r.x) > opt_.constr_viol_tol && th > opt_.constr_viol_tol) {
      why = "converged to a point of local infeasibility";
      w_ = VectorXd::Zero(nw_);
      for (std::size_t k = 0; k < free_.size(); ++k) w_[k] = x[free_[k]];
      return false;
    }
    why = "restoration phase failed (" + std::string(to_string(r.status)) + ")";
    return false;
  }

  // Multipliers restart from barrier-consistent values.
  lambda_.setZero();
  for (int i = 0; i < nw_; ++i) {
    zl_[i] = has_l_[i] ? std::min(1e3, mu_ / (w_[i] - l_[i])) : 0.0;
    zu_[i] = has_u_[i] ? std::min(1e3, mu_ / (u_[i] - w_[i])) : 0.0;
  }
  return true;
}

IpmResult Solver::run(const VectorXd* start, const std::function<bool(const VectorXd&)>& stop_early) {
  const VectorXd x0 = start ? *start : prob_.initial_point();
  if (x0.size() != n_) {
    IpmResult r;
    r.message = "initial point has the wrong dimension";
    return r;
  }
  initialize(x0);

  VectorXd c, grad;
  eval_constraints(w_, c);
  const double theta0 = c.lpNorm<1>();
  theta_max_ = 1e4 * std::max(1.0, theta0);
  theta_min_ = 1e-4 * std::max(1.0, theta0);
  filter_.reset(theta_max_);

  std::string why;
  int tiny_steps = 0;
  for (iter_ = 0; iter_ < opt_.max_iterations; ++iter_) {
    const double f = eval_objective(w_);
    eval_constraints(w_, c);
    eval_gradient(w_, grad);
    if (!std::isfinite(f) || !c.allFinite() || !grad.allFinite())
      return finish(IpmStatus::NumericalFailure, "non-finite function value at the current iterate");
    const SpMat J = eval_jacobian(w_);
    VectorXd grad_lag = grad + J.transpose() * lambda_ - zl_ + zu_;

    const double err0 = overall_error(grad_lag, c, 0.0);
    if (opt_.log)
      *opt_.log << std::setw(5) << iter_ << std::scientific << std::setprecision(3) << "  f=" << f
                << "  inf_pr=" << (c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0) << "  err=" << err0 << "  mu=" << mu_
                << std::defaultfloat << '\n';
    if (stop_early && stop_early(full_x(w_))) return finish(IpmStatus::Optimal, "stopped by caller");
    if (err0 <= opt_.tol) {
      VectorXd g(m_);
      prob_.constraints(full_x(w_), g);
      double viol = 0.0;
      for (int i = 0; i < m_; ++i) viol = std::max({viol, g_lo_[i] - g[i], g[i] - g_hi_[i]});
      if (viol <= opt_.constr_viol_tol) return finish(IpmStatus::Optimal, "optimal solution found");
    }

    // Monotone barrier update.
    bool reduced = false;
    while (overall_error(grad_lag, c, mu_) <= kKappaEps * mu_ && mu_ > opt_.tol / 10.0) {
      mu_ = std::max(opt_.tol / 10.0, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
      reduced = true;
    }
    if (tiny_steps >= 2 && !reduced && mu_ > opt_.tol / 10.0) {
      mu_ = std::max(opt_.tol / 10.0, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
      reduced = true;
      tiny_steps = 0;
    }
    if (reduced) filter_.reset(theta_max_);

    // Newton system.
    const SpMat H = eval_hessian(w_, lambda_);
    VectorXd sigma = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) sigma[i] += zl_[i] / (w_[i] - l_[i]);
      if (has_u_[i]) sigma[i] += zu_[i] / (u_[i] - w_[i]);
    }
    const VectorXd grad_phi = barrier_gradient(w_, grad);
    const VectorXd r_top = -(grad_phi + J.transpose() * lambda_);
    const VectorXd r_bot = -c;
    VectorXd dw, dl;
    if (!compute_direction(H, J, sigma, r_top, r_bot, dw, dl))
      return finish(IpmStatus::NumericalFailure, "KKT system could not be regularized");

    VectorXd dzl = VectorXd::Zero(nw_), dzu = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) dzl[i] = mu_ / (w_[i] - l_[i]) - zl_[i] - zl_[i] / (w_[i] - l_[i]) * dw[i];
      if (has_u_[i]) dzu[i] = mu_ / (u_[i] - w_[i]) - zu_[i] + zu_[i] / (u_[i] - w_[i]) * dw[i];
    }
    const double tau = std::max(kTauMin, 1.0 - mu_);
    const double alpha_max = max_step(w_, dw, l_, u_, has_l_, has_u_, tau);
    const VectorXd zeros = VectorXd::Zero(nw_);
    const std::vector<bool> none(nw_, false);
    double alpha_zl = max_step(zl_, dzl, zeros, zeros, has_l_, none, tau);
    double alpha_zu = max_step(zu_, dzu, zeros, zeros, has_u_, none, tau);
    const double alpha_z = std::min(alpha_zl, alpha_zu);

    // Tiny step: accept without line search.
    double rel = 0.0;
    for (int i = 0; i < nw_; ++i) rel = std::max(rel, std::abs(dw[i]) / (1.0 + std::abs(w_[i])));
    const double theta = c.lpNorm<1>();
    const double phi = barrier(w_, f);
    const double gphi_d = grad_phi.dot(dw);

    bool accepted = false;
    double alpha = alpha_max;
    VectorXd w_new, c_new;
    if (rel < 10.0 * kEps) {
      ++tiny_steps;
      w_new = w_ + alpha * dw;
      accepted = true;
    } else {
      tiny_steps = 0;
      double alpha_min = kGammaAlpha * kGammaTheta;
      if (gphi_d < 0.0) {
        alpha_min = std::min(kGammaTheta, kGammaPhi * theta / (-gphi_d));
        if (theta <= theta_min_) alpha_min = std::min(alpha_min, kDelta * std::pow(theta, kSTheta) / std::pow(-gphi_d, kSPhi));
        alpha_min *= kGammaAlpha;
      }
      alpha_min = std::max(alpha_min, 1e-16);

      auto try_point = [&](const VectorXd& wt, double a_armijo, bool& augment) {
        VectorXd ct;
        eval_constraints(wt, ct);
        const double ft = eval_objective(wt);
        if (!std::isfinite(ft) || !ct.allFinite()) return false;
        const double th_t = ct.lpNorm<1>();
        const double phi_t = barrier(wt, ft);
        if (!std::isfinite(phi_t) || th_t > theta_max_) return false;
        if (!filter_.acceptable(th_t, phi_t)) return false;
        const bool switching =
            gphi_d < 0.0 && a_armijo * std::pow(-gphi_d, kSPhi) > kDelta * std::pow(theta, kSTheta);
        if (theta <= theta_min_ && switching) {
          augment = false;
          return phi_t <= phi + kEtaPhi * a_armijo * gphi_d;
        }
        augment = true;
        return th_t <= (1.0 - kGammaTheta) * theta || phi_t <= phi - kGammaPhi * theta;
      };

      bool augment = true;
      bool first_trial = true;
      while (alpha >= alpha_min) {
        const VectorXd wt = w_ + alpha * dw;
        if (try_point(wt, alpha, augment)) {
          w_new = wt;
          accepted = true;
          break;
        }
        if (first_trial) {
          first_trial = false;
          // Second-order correction on the full step.
          eval_constraints(wt, c_new);
          if (c_new.allFinite() && c_new.lpNorm<1>() >= theta) {
            VectorXd c_soc = alpha * c + c_new;
            double alpha_soc = alpha;
            double theta_old = theta;
            for (int k = 0; k < kMaxSoc; ++k) {
              VectorXd dws, dls;
              if (!solve_kkt(r_top, -c_soc, dws, dls)) break;
              alpha_soc = max_step(w_, dws, l_, u_, has_l_, has_u_, tau);
              const VectorXd ws = w_ + alpha_soc * dws;
              if (try_point(ws, alpha, augment)) {
                w_new = ws;
                dl = dls;
                accepted = true;
                break;
              }
              VectorXd cs;
              eval_constraints(ws, cs);
              const double th_s = cs.allFinite() ? cs.lpNorm<1>() : kInf;
              if (th_s > kKappaSoc * theta_old) break;
              theta_old = th_s;
              c_soc = alpha_soc * c_soc + cs;
            }
            if (accepted) break;
          }
        }
        alpha *= 0.5;
      }
      if (accepted && augment) filter_.add(theta, phi);
    }

    if (!accepted) {
      if (!restoration(c, f, why)) {
        return finish(why.find("infeasib") != std::string::npos ? IpmStatus::LocalInfeasibility
                                                                 : IpmStatus::RestorationFailed,
                      why);
      }
      continue;
    }

    w_ = w_new;
    lambda_ += alpha * dl;
    zl_ += alpha_z * dzl;
    zu_ += alpha_z * dzu;
    for (int i = 0; i < nw_; ++i) {
      if (has_l_[i]) {
        const double s = w_[i] - l_[i];
        zl_[i] = std::max(std::min(zl_[i], kKappaSigma * mu_ / s), mu_ / (kKappaSigma * s));
      }
      if (has_u_[i]) {
        const double s = u_[i] - w_[i];
        zu_[i] = std::max(std::min(zu_[i], kKappaSigma * mu_ / s), mu_ / (kKappaSigma * s));
      }
    }
  }
  return finish(IpmStatus::IterationLimit, "iteration limit reached");
}

IpmResult Solver::finish(IpmStatus status, std::string message) {
  IpmResult r;
  r.status = status;
  r.message = std::move(message);
  r.iterations = iter_;
  r.mu = mu_;
  if (w_.size() != nw_) return r;

  VectorXd x = full_x(w_);
  for (int j = 0; j < n_; ++j) x[j] = std::clamp(x[j], x_lo_[j], x_hi_[j]);
  r.x = x;
  r.objective = prob_.objective(x);

  VectorXd c, grad;
  eval_constraints(w_, c);
  eval_gradient(w_, grad);
  const SpMat J = eval_jacobian(w_);
  const VectorXd grad_lag = grad + J.transpose() * lambda_ - zl_ + zu_;
  r.kkt_scaled = residuals(grad_lag, c, 0.0, true);

  // Unscaled multipliers and residuals of the original problem.
  r.lambda = lambda_.cwiseProduct(con_scale_) / obj_scale_;
  r.z_lo = VectorXd::Zero(n_), r.z_hi = VectorXd::Zero(n_);
  for (std::size_t k = 0; k < free_.size(); ++k) {
    r.z_lo[free_[k]] = zl_[k] / obj_scale_;
    r.z_hi[free_[k]] = zu_[k] / obj_scale_;
  }
  VectorXd gx(n_), g(m_);
  prob_.gradient(x, gx);
  prob_.constraints(x, g);
  Triplets jt;
  prob_.jacobian(x, jt);
  SpMat Jx(m_, n_);
  Jx.setFromTriplets(jt.begin(), jt.end());
  VectorXd gl = gx + Jx.transpose() * r.lambda;
  for (int j = 0; j < n_; ++j)
    if (col_of_x_[j] < 0) {
      r.z_lo[j] = std::max(0.0, gl[j]);
      r.z_hi[j] = std::max(0.0, -gl[j]);
    }
  gl += -r.z_lo + r.z_hi;
  double stat = gl.size() ? gl.lpNorm<Eigen::Infinity>() : 0.0;
  double comp = 0.0, primal = 0.0;
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const int j = free_[k];
    if (std::isfinite(x_lo_[j])) comp = std::max(comp, r.z_lo[j] * std::abs(x[j] - x_lo_[j]));
    if (std::isfinite(x_hi_[j])) comp = std::max(comp, r.z_hi[j] * std::abs(x_hi_[j] - x[j]));
  }
  for (int i = 0; i < m_; ++i) {
    primal = std::max({primal, g_lo_[i] - g[i], g[i] - g_hi_[i]});
    if (slack_col_[i] >= 0) {
      const int cidx = slack_col_[i];
      // Slack stationarity: -lambda - z_lo + z_hi = 0 in scaled units.
      stat = std::max(stat, std::abs(-lambda_[i] - zl_[cidx] + zu_[cidx]) * con_scale_[i] / obj_scale_);
      const double zl = zl_[cidx] * con_scale_[i] / obj_scale_, zu = zu_[cidx] * con_scale_[i] / obj_scale_;
      if (std::isfinite(g_lo_[i])) comp = std::max(comp, zl * std::abs(g[i] - g_lo_[i]));
      if (std::isfinite(g_hi_[i])) comp = std::max(comp, zu * std::abs(g_hi_[i] - g[i]));
    }
  }
  r.kkt.stationarity = stat;
  r.kkt.primal = std::max(0.0, primal);
  r.kkt.complementarity = comp;
  return r;
}

}  // namespace

const char* to_string(IpmStatus s) {
  switch (s) {
    case IpmStatus::Optimal: return "optimal";
    case IpmStatus::LocalInfeasibility: return "infeasible";
    case IpmStatus::IterationLimit: return "iteration-limit";
    case IpmStatus::RestorationFailed: return "restoration-failed";
    case IpmStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity}); }

IpmResult solve_nlp(const NlpProblem& problem, const IpmOptions& options) {
  Solver s(problem, options);
  return s.run();
}

// ---------------------------------------------------------------------------

ElasticProblem::ElasticProblem(const NlpProblem& base, std::vector<int> rows, double rho, double zeta,
                               Eigen::VectorXd x_ref, double base_weight)
    : base_(base),
      rows_(std::move(rows)),
      rho_(rho),
      zeta_(zeta),
      base_weight_(base_weight),
      x_ref_(std::move(x_ref)),
      n_base_(base.num_variables()),
      m_base_(base.num_constraints()) {
  d_.resize(n_base_);
  for (int j = 0; j < n_base_; ++j) d_[j] = std::min(1.0, 1.0 / std::max(std::abs(x_ref_[j]), 1e-300));
}

void ElasticProblem::bounds(VectorXd& x_lo, VectorXd& x_hi, VectorXd& g_lo, VectorXd& g_hi) const {
  VectorXd bl(n_base_), bh(n_base_);
  base_.bounds(bl, bh, g_lo, g_hi);
  const int k = static_cast<int>(rows_.size());
  x_lo.resize(n_base_ + 2 * k), x_hi.resize(n_base_ + 2 * k);
  x_lo << bl, VectorXd::Zero(2 * k);
  x_hi << bh, VectorXd::Constant(2 * k, kInf);
}

VectorXd ElasticProblem::initial_point() const {
  const int k = static_cast<int>(rows_.size());
  VectorXd x(n_base_ + 2 * k);
  x.head(n_base_) = x_ref_;
  VectorXd g(m_base_), lo(m_base_), hi(m_base_), bl(n_base_), bh(n_base_);
  base_.constraints(x_ref_, g);
  base_.bounds(bl, bh, lo, hi);
  for (int j = 0; j < k; ++j) {
    const int i = rows_[j];
    const double c = g[i] - std::clamp(g[i], lo[i], hi[i]);
    const double a = (mu_ - rho_ * c) / (2.0 * rho_);
    const double n = a + std::sqrt(a * a + mu_ * c / (2.0 * rho_));
    x[n_base_ + j] = c + n;
    x[n_base_ + k + j] = n;
  }
  return x;
}

double ElasticProblem::total_elastic(const VectorXd& x) const {
  return x.tail(2 * static_cast<int>(rows_.size())).sum();
}

double ElasticProblem::objective(const VectorXd& x) const {
  double f = rho_ * total_elastic(x);
  const VectorXd dx = (x.head(n_base_) - x_ref_).cwiseProduct(d_);
  f += 0.5 * zeta_ * dx.squaredNorm();
  if (base_weight_ != 0.0) f += base_weight_ * base_.objective(x.head(n_base_));
  return f;
}

void ElasticProblem::gradient(const VectorXd& x, VectorXd& grad) const {
  const int k = static_cast<int>(rows_.size());
  grad.resize(n_base_ + 2 * k);
  grad.head(n_base_) = zeta_ * (x.head(n_base_) - x_ref_).cwiseProduct(d_).cwiseProduct(d_);
  if (base_weight_ != 0.0) {
    VectorXd gb(n_base_);
    base_.gradient(x.head(n_base_), gb);
    grad.head(n_base_) += base_weight_ * gb;
  }
  grad.tail(2 * k).setConstant(rho_);
}

void ElasticProblem::constraints(const VectorXd& x, VectorXd& g) const {
  base_.constraints(x.head(n_base_), g);
  const int k = static_cast<int>(rows_.size());
  for (int j = 0; j < k; ++j) g[rows_[j]] += -x[n_base_ + j] + x[n_base_ + k + j];
}

void ElasticProblem::jacobian(const VectorXd& x, Triplets& out) const {
  base_.jacobian(x.head(n_base_), out);
  const int k = static_cast<int>(rows_.size());
  for (int j = 0; j < k; ++j) {
    out.emplace_back(rows_[j], n_base_ + j, -1.0);
    out.emplace_back(rows_[j], n_base_ + k + j, 1.0);
  }
}

void ElasticProblem::hessian(const VectorXd& x, double sigma, const VectorXd& lambda, Triplets& out) const {
  base_.hessian(x.head(n_base_), sigma * base_weight_, lambda, out);
  if (zeta_ != 0.0)
    for (int j = 0; j < n_base_; ++j) out.emplace_back(j, j, sigma * zeta_ * d_[j] * d_[j]);
}

}  // namespace lfac
