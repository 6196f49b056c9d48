#include "lfac/opf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "lfac/errors.hpp"
#include "lfac/format.hpp"

namespace lfac {

using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::numbers::sqrt2;

struct Curve {
  double v = 0, d1 = 0, d2 = 0;
};

// f = s Vo^2 H(w) - m Vo Vt K(delta, w), delta = theta_o - theta_t + const.
void fill_flow(double s, double m, double vo, double vt, const Curve& H, double K, double Kd, double Kdd, double Kw,
               double Kdw, double Kww, double& f, std::array<double, 5>& d, std::array<std::array<double, 5>, 5>& h) {
  const double vv = vo * vt;
  f = s * vo * vo * H.v - m * vv * K;
  d[kVo] = 2 * s * vo * H.v - m * vt * K;
  d[kVt] = -m * vo * K;
  d[kThetaO] = -m * vv * Kd;
  d[kThetaT] = m * vv * Kd;
  d[kOmega] = s * vo * vo * H.d1 - m * vv * Kw;

  for (auto& row : h) row.fill(0.0);
  auto set = [&h](int a, int b, double v) { h[a][b] = h[b][a] = v; };
  set(kVo, kVo, 2 * s * H.v);
  set(kVo, kVt, -m * K);
  set(kVo, kThetaO, -m * vt * Kd);
  set(kVo, kThetaT, m * vt * Kd);
  set(kVo, kOmega, 2 * s * vo * H.d1 - m * vt * Kw);
  set(kVt, kThetaO, -m * vo * Kd);
  set(kVt, kThetaT, m * vo * Kd);
  set(kVt, kOmega, -m * vo * Kw);
  set(kThetaO, kThetaO, -m * vv * Kdd);
  set(kThetaO, kThetaT, m * vv * Kdd);
  set(kThetaT, kThetaT, -m * vv * Kdd);
  set(kThetaO, kOmega, -m * vv * Kdw);
  set(kThetaT, kOmega, m * vv * Kdw);
  set(kOmega, kOmega, s * vo * vo * H.d2 - m * vv * Kww);
}

bool is_dc(const Network& net, int bus) { return net.subnetwork_of(bus).mode == FrequencyMode::Dc; }

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// ---------------------------------------------------------------------------
// OPF as an NlpProblem
// ---------------------------------------------------------------------------

enum class RowKind { PBalance, QBalance, Thermal, Angle, ConverterI, ConverterJ, Epigraph };

struct Row {
  RowKind kind;
  int element;  // bus, edge, branch, converter or generator index
  int segment = 0;
};

struct EdgeInfo {
  DirectedEdge edge;
  std::array<int, 5> idx{};  // global variable per local slot, -1 when absent
  int subnetwork = 0;
  bool dc = false;
};

class OpfNlp : public NlpProblem {
 public:
  explicit OpfNlp(const Network& net) : net_(net) {
    nb_ = static_cast<int>(net.buses.size());
    ng_ = static_cast<int>(net.generators.size());
    nc_ = static_cast<int>(net.converters.size());
    n_ = 2 * nb_ + 2 * ng_ + 3 * nc_;
    omega_idx_.assign(net.subnetworks.size(), -1);
    for (std::size_t s = 0; s < net.subnetworks.size(); ++s)
      if (net.subnetworks[s].mode == FrequencyMode::Variable) omega_idx_[s] = n_++;
    epi_idx_.assign(ng_, -1);
    for (int g = 0; g < ng_; ++g)
      if (net.generators[g].cost.kind == GeneratorCost::Kind::PiecewiseLinear) epi_idx_[g] = n_++;

    for (int b = 0; b < nb_; ++b) rows_.push_back({RowKind::PBalance, b});
    qrow_.assign(nb_, -1);
    for (int b = 0; b < nb_; ++b)
      if (!is_dc(net, b)) {
        qrow_[b] = static_cast<int>(rows_.size());
        rows_.push_back({RowKind::QBalance, b});
      }
    for (const DirectedEdge& e : directed_edges(net)) {
      EdgeInfo info;
      info.edge = e;
      info.subnetwork = net.buses[e.origin].subnetwork;
      info.dc = net.subnetworks[info.subnetwork].mode == FrequencyMode::Dc;
      info.idx = {v(e.origin), v(e.target), th(e.origin), th(e.target), omega_idx_[info.subnetwork]};
      edges_.push_back(info);
    }
    for (int k = 0; k < static_cast<int>(edges_.size()); ++k)
      if (std::isfinite(net.branches[edges_[k].edge.branch].thermal_limit)) rows_.push_back({RowKind::Thermal, k});
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) {
      const Branch& br = net.branches[k];
      if (is_dc(net, br.from)) continue;
      if (br.angle_limit > 0.0 && std::isfinite(br.angle_limit)) rows_.push_back({RowKind::Angle, k});
    }
    for (int c = 0; c < nc_; ++c) {
      if (std::isfinite(net.converters[c].s_max_i)) rows_.push_back({RowKind::ConverterI, c});
      if (std::isfinite(net.converters[c].s_max_j)) rows_.push_back({RowKind::ConverterJ, c});
    }
    for (int g = 0; g < ng_; ++g)
      if (epi_idx_[g] >= 0)
        for (int k = 0; k + 1 < static_cast<int>(net.generators[g].cost.points.size()); ++k)
          rows_.push_back({RowKind::Epigraph, g, k});
    start_ = flat_start();
  }

  int v(int b) const { return b; }
  int th(int b) const { return nb_ + b; }
  int pg(int g) const { return 2 * nb_ + g; }
  int qg(int g) const { return 2 * nb_ + ng_ + g; }
  int cp(int c) const { return 2 * nb_ + 2 * ng_ + 3 * c; }
  int cqi(int c) const { return cp(c) + 1; }
  int cqj(int c) const { return cp(c) + 2; }
  int omega_index(int s) const { return omega_idx_[s]; }
  int epigraph_index(int g) const { return epi_idx_[g]; }
  const std::vector<Row>& rows() const { return rows_; }
  const std::vector<EdgeInfo>& edges() const { return edges_; }
  int q_row(int b) const { return qrow_[b]; }

  void set_start(const VectorXd& x) { start_ = x; }

  double omega_at(const VectorXd& x, int s) const {
    const Subnetwork& sn = net_.subnetworks[s];
    if (sn.mode == FrequencyMode::Dc) return 0.0;
    return omega_idx_[s] >= 0 ? x[omega_idx_[s]] : sn.omega();
  }

  EdgeFlow flow(const VectorXd& x, const EdgeInfo& e) const {
    return edge_flow(net_, e.edge, x[e.idx[kVo]], x[e.idx[kVt]], x[e.idx[kThetaO]], x[e.idx[kThetaT]],
                     omega_at(x, e.subnetwork), e.dc);
  }

  std::vector<EdgeFlow> flows(const VectorXd& x) const {
    std::vector<EdgeFlow> out;
    out.reserve(edges_.size());
    for (const EdgeInfo& e : edges_) out.push_back(flow(x, e));
    return out;
  }

  int num_variables() const override { return n_; }
  int num_constraints() const override { return static_cast<int>(rows_.size()); }

  void bounds(VectorXd& xl, VectorXd& xu, VectorXd& gl, VectorXd& gu) const override {
    xl = VectorXd::Constant(n_, -kInf);
    xu = VectorXd::Constant(n_, kInf);
    for (int b = 0; b < nb_; ++b) {
      const Bus& bus = net_.buses[b];
      const bool dc = is_dc(net_, b);
      const double scale = dc ? kSqrt2 : 1.0;
      xl[v(b)] = scale * bus.v_min;
      xu[v(b)] = scale * bus.v_max;
      if (dc || bus.is_reference) xl[th(b)] = xu[th(b)] = 0.0;
    }
    for (int g = 0; g < ng_; ++g) {
      const Generator& gen = net_.generators[g];
      xl[pg(g)] = gen.p_min;
      xu[pg(g)] = gen.p_max;
      if (is_dc(net_, gen.bus)) {
        xl[qg(g)] = xu[qg(g)] = 0.0;
      } else {
        xl[qg(g)] = gen.q_min;
        xu[qg(g)] = gen.q_max;
      }
    }
    for (int c = 0; c < nc_; ++c) {
      const Converter& cv = net_.converters[c];
      if (is_dc(net_, cv.bus_i)) xl[cqi(c)] = xu[cqi(c)] = 0.0;
      if (is_dc(net_, cv.bus_j)) xl[cqj(c)] = xu[cqj(c)] = 0.0;
    }
    for (std::size_t s = 0; s < omega_idx_.size(); ++s)
      if (omega_idx_[s] >= 0) {
        xl[omega_idx_[s]] = net_.subnetworks[s].omega_min();
        xu[omega_idx_[s]] = net_.subnetworks[s].omega_max();
      }

    const int m = num_constraints();
    gl = VectorXd::Zero(m);
    gu = VectorXd::Zero(m);
    for (int r = 0; r < m; ++r) {
      const Row& row = rows_[r];
      switch (row.kind) {
        case RowKind::PBalance:
        case RowKind::QBalance: break;
        case RowKind::Thermal: {
          const double s = net_.branches[edges_[row.element].edge.branch].thermal_limit;
          gl[r] = -kInf;
          gu[r] = s * s;
          break;
        }
        case RowKind::Angle: {
          const double a = net_.branches[row.element].angle_limit;
          gl[r] = -a;
          gu[r] = a;
          break;
        }
        case RowKind::ConverterI:
        case RowKind::ConverterJ: {
          const Converter& cv = net_.converters[row.element];
          const double s = row.kind == RowKind::ConverterI ? cv.s_max_i : cv.s_max_j;
          gl[r] = -kInf;
          gu[r] = s * s;
          break;
        }
        case RowKind::Epigraph: {
          const auto [p0, c0, slope] = segment(row.element, row.segment);
          gl[r] = c0 - slope * p0;
          gu[r] = kInf;
          break;
        }
      }
    }
  }

  VectorXd initial_point() const override { return start_; }

  VectorXd flat_start() const {
    VectorXd xl, xu, gl, gu;
    bounds(xl, xu, gl, gu);
    VectorXd x = VectorXd::Zero(n_);
    auto mid = [&](int j, double fallback) {
      if (std::isfinite(xl[j]) && std::isfinite(xu[j])) return 0.5 * (xl[j] + xu[j]);
      return std::clamp(fallback, xl[j], xu[j]);
    };
    for (int b = 0; b < nb_; ++b) x[v(b)] = std::clamp(is_dc(net_, b) ? kSqrt2 : 1.0, xl[v(b)], xu[v(b)]);
    for (int g = 0; g < ng_; ++g) {
      x[pg(g)] = mid(pg(g), 0.0);
      x[qg(g)] = mid(qg(g), 0.0);
    }
    for (std::size_t s = 0; s < omega_idx_.size(); ++s)
      if (omega_idx_[s] >= 0) x[omega_idx_[s]] = xu[omega_idx_[s]];
    for (int g = 0; g < ng_; ++g)
      if (epi_idx_[g] >= 0) x[epi_idx_[g]] = net_.generators[g].cost.value(x[pg(g)]) + 1.0;
    return x;
  }

  double objective(const VectorXd& x) const override {
    double f = 0.0;
    for (int g = 0; g < ng_; ++g) {
      const GeneratorCost& c = net_.generators[g].cost;
      if (epi_idx_[g] >= 0) {
        f += x[epi_idx_[g]];
      } else {
        const double p = x[pg(g)];
        f += (c.c2 * p + c.c1) * p + c.c0;
      }
    }
    return f;
  }

  void gradient(const VectorXd& x, VectorXd& grad) const override {
    grad = VectorXd::Zero(n_);
    for (int g = 0; g < ng_; ++g) {
      const GeneratorCost& c = net_.generators[g].cost;
      if (epi_idx_[g] >= 0)
        grad[epi_idx_[g]] = 1.0;
      else
        grad[pg(g)] = 2 * c.c2 * x[pg(g)] + c.c1;
    }
  }

  void constraints(const VectorXd& x, VectorXd& g) const override {
    const std::vector<EdgeFlow> fl = flows(x);
    g = VectorXd::Zero(num_constraints());
    for (int b = 0; b < nb_; ++b) {
      const Bus& bus = net_.buses[b];
      const double vb = x[v(b)];
      g[b] = -bus.p_load - bus.g_shunt * vb * vb;
      if (qrow_[b] >= 0) {
        const double bsh = bus_shunt_susceptance(net_, bus, omega_at(x, bus.subnetwork));
        g[qrow_[b]] = -bus.q_load + bsh * vb * vb;
      }
    }
    for (int k = 0; k < ng_; ++k) {
      const int b = net_.generators[k].bus;
      g[b] += x[pg(k)];
      if (qrow_[b] >= 0) g[qrow_[b]] += x[qg(k)];
    }
    for (int c = 0; c < nc_; ++c) {
      const Converter& cv = net_.converters[c];
      g[cv.bus_i] += x[cp(c)];
      g[cv.bus_j] -= x[cp(c)];
      if (qrow_[cv.bus_i] >= 0) g[qrow_[cv.bus_i]] += x[cqi(c)];
      if (qrow_[cv.bus_j] >= 0) g[qrow_[cv.bus_j]] += x[cqj(c)];
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const int o = edges_[k].edge.origin;
      g[o] -= fl[k].p;
      if (qrow_[o] >= 0) g[qrow_[o]] -= fl[k].q;
    }
    for (int r = 0; r < num_constraints(); ++r) {
      const Row& row = rows_[r];
      switch (row.kind) {
        case RowKind::PBalance:
        case RowKind::QBalance: break;
        case RowKind::Thermal: {
          const EdgeFlow& f = fl[row.element];
          g[r] = f.p * f.p + f.q * f.q;
          break;
        }
        case RowKind::Angle: {
          const Branch& br = net_.branches[row.element];
          g[r] = x[th(br.from)] - x[th(br.to)];
          break;
        }
        case RowKind::ConverterI: {
          const int c = row.element;
          g[r] = x[cp(c)] * x[cp(c)] + x[cqi(c)] * x[cqi(c)];
          break;
        }
        case RowKind::ConverterJ: {
          const int c = row.element;
          g[r] = x[cp(c)] * x[cp(c)] + x[cqj(c)] * x[cqj(c)];
          break;
        }
        case RowKind::Epigraph: {
          const auto [p0, c0, slope] = segment(row.element, row.segment);
          g[r] = x[epi_idx_[row.element]] - slope * x[pg(row.element)];
          break;
        }
      }
    }
  }

  void jacobian(const VectorXd& x, Triplets& out) const override {
    const std::vector<EdgeFlow> fl = flows(x);
    for (int b = 0; b < nb_; ++b) {
      const Bus& bus = net_.buses[b];
      const double vb = x[v(b)];
      out.emplace_back(b, v(b), -2 * bus.g_shunt * vb);
      if (qrow_[b] >= 0) {
        const double w = omega_at(x, bus.subnetwork);
        out.emplace_back(qrow_[b], v(b), 2 * bus_shunt_susceptance(net_, bus, w) * vb);
        if (omega_idx_[bus.subnetwork] >= 0)
          out.emplace_back(qrow_[b], omega_idx_[bus.subnetwork],
                           bus_shunt_susceptance_derivatives(net_, bus, w).first * vb * vb);
      }
    }
    for (int k = 0; k < ng_; ++k) {
      const int b = net_.generators[k].bus;
      out.emplace_back(b, pg(k), 1.0);
      if (qrow_[b] >= 0) out.emplace_back(qrow_[b], qg(k), 1.0);
    }
    for (int c = 0; c < nc_; ++c) {
      const Converter& cv = net_.converters[c];
      out.emplace_back(cv.bus_i, cp(c), 1.0);
      out.emplace_back(cv.bus_j, cp(c), -1.0);
      if (qrow_[cv.bus_i] >= 0) out.emplace_back(qrow_[cv.bus_i], cqi(c), 1.0);
      if (qrow_[cv.bus_j] >= 0) out.emplace_back(qrow_[cv.bus_j], cqj(c), 1.0);
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const EdgeInfo& e = edges_[k];
      const int o = e.edge.origin;
      for (int a = 0; a < 5; ++a) {
        if (e.idx[a] < 0) continue;
        out.emplace_back(o, e.idx[a], -fl[k].dp[a]);
        if (qrow_[o] >= 0) out.emplace_back(qrow_[o], e.idx[a], -fl[k].dq[a]);
      }
    }
    for (int r = 0; r < num_constraints(); ++r) {
      const Row& row = rows_[r];
      switch (row.kind) {
        case RowKind::PBalance:
        case RowKind::QBalance: break;
        case RowKind::Thermal: {
          const EdgeInfo& e = edges_[row.element];
          const EdgeFlow& f = fl[row.element];
          for (int a = 0; a < 5; ++a)
            if (e.idx[a] >= 0) out.emplace_back(r, e.idx[a], 2 * (f.p * f.dp[a] + f.q * f.dq[a]));
          break;
        }
        case RowKind::Angle: {
          const Branch& br = net_.branches[row.element];
          out.emplace_back(r, th(br.from), 1.0);
          out.emplace_back(r, th(br.to), -1.0);
          break;
        }
        case RowKind::ConverterI:
        case RowKind::ConverterJ: {
          const int c = row.element;
          const int qi = row.kind == RowKind::ConverterI ? cqi(c) : cqj(c);
          out.emplace_back(r, cp(c), 2 * x[cp(c)]);
          out.emplace_back(r, qi, 2 * x[qi]);
          break;
        }
        case RowKind::Epigraph: {
          const auto [p0, c0, slope] = segment(row.element, row.segment);
          out.emplace_back(r, epi_idx_[row.element], 1.0);
          out.emplace_back(r, pg(row.element), -slope);
          break;
        }
      }
    }
  }

  void hessian(const VectorXd& x, double sigma, const VectorXd& lambda, Triplets& out) const override {
    for (int g = 0; g < ng_; ++g)
      if (epi_idx_[g] < 0 && net_.generators[g].cost.c2 != 0.0)
        out.emplace_back(pg(g), pg(g), sigma * 2 * net_.generators[g].cost.c2);

    for (int b = 0; b < nb_; ++b) {
      const Bus& bus = net_.buses[b];
      if (bus.g_shunt != 0.0) out.emplace_back(v(b), v(b), -lambda[b] * 2 * bus.g_shunt);
      if (qrow_[b] < 0 || bus.shunt.kind == ShuntElement::Kind::None) continue;
      const double lq = lambda[qrow_[b]];
      const double w = omega_at(x, bus.subnetwork);
      const double vb = x[v(b)];
      out.emplace_back(v(b), v(b), lq * 2 * bus_shunt_susceptance(net_, bus, w));
      const int wi = omega_idx_[bus.subnetwork];
      if (wi >= 0) {
        const auto [d1, d2] = bus_shunt_susceptance_derivatives(net_, bus, w);
        out.emplace_back(std::max(wi, v(b)), std::min(wi, v(b)), lq * 2 * vb * d1);
        out.emplace_back(wi, wi, lq * vb * vb * d2);
      }
    }

    // Per-edge weights on the flow Hessians, accumulated over balance and thermal rows.
    std::vector<double> wp(edges_.size(), 0.0), wq(edges_.size(), 0.0);
    std::vector<double> wt(edges_.size(), 0.0);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const int o = edges_[k].edge.origin;
      wp[k] = -lambda[o];
      if (qrow_[o] >= 0) wq[k] = -lambda[qrow_[o]];
    }
    for (int r = 0; r < num_constraints(); ++r) {
      const Row& row = rows_[r];
      if (row.kind == RowKind::Thermal) wt[row.element] = lambda[r];
      if (row.kind == RowKind::ConverterI || row.kind == RowKind::ConverterJ) {
        const int c = row.element;
        const int qi = row.kind == RowKind::ConverterI ? cqi(c) : cqj(c);
        out.emplace_back(cp(c), cp(c), 2 * lambda[r]);
        out.emplace_back(qi, qi, 2 * lambda[r]);
      }
    }
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      if (wp[k] == 0.0 && wq[k] == 0.0 && wt[k] == 0.0) continue;
      const EdgeInfo& e = edges_[k];
      const EdgeFlow f = flow(x, e);
      for (int a = 0; a < 5; ++a) {
        if (e.idx[a] < 0) continue;
        for (int c = 0; c < 5; ++c) {
          if (e.idx[c] < 0 || e.idx[a] < e.idx[c]) continue;
          double h = wp[k] * f.hp[a][c] + wq[k] * f.hq[a][c];
          if (wt[k] != 0.0)
            h += wt[k] * 2 * (f.dp[a] * f.dp[c] + f.p * f.hp[a][c] + f.dq[a] * f.dq[c] + f.q * f.hq[a][c]);
          if (h != 0.0) out.emplace_back(e.idx[a], e.idx[c], h);
        }
      }
    }
  }

 private:
  struct Segment {
    double p0, c0, slope;
  };
  Segment segment(int g, int k) const {
    const auto& pts = net_.generators[g].cost.points;
    const auto& [p0, c0] = pts[k];
    const auto& [p1, c1] = pts[k + 1];
    return {p0, c0, (c1 - c0) / (p1 - p0)};
  }

  const Network& net_;
  int nb_ = 0, ng_ = 0, nc_ = 0, n_ = 0;
  std::vector<int> omega_idx_, epi_idx_, qrow_;
  std::vector<Row> rows_;
  std::vector<EdgeInfo> edges_;
  VectorXd start_;
};

std::string edge_label(const Network& net, const DirectedEdge& e) {
  return net.branches[e.branch].id + " (" + net.buses[e.origin].id + "->" + net.buses[e.target].id + ")";
}

std::pair<std::string, std::string> row_label(const Network& net, const OpfNlp& nlp, const Row& row) {
  switch (row.kind) {
    case RowKind::PBalance: return {"p_balance", net.buses[row.element].id};
    case RowKind::QBalance: return {"q_balance", net.buses[row.element].id};
    case RowKind::Thermal: return {"thermal", edge_label(net, nlp.edges()[row.element].edge)};
    case RowKind::Angle: return {"angle", net.branches[row.element].id};
    case RowKind::ConverterI: return {"converter_i", net.converters[row.element].id};
    case RowKind::ConverterJ: return {"converter_j", net.converters[row.element].id};
    case RowKind::Epigraph: return {"cost_segment", net.generators[row.element].id};
  }
  return {"", ""};
}

// Variable label and the bound kind prefix ("v", "pg", ...), empty for
// variables without a reportable bound.
std::pair<std::string, std::string> variable_label(const Network& net, const OpfNlp& nlp, int j) {
  const int nb = static_cast<int>(net.buses.size());
  const int ng = static_cast<int>(net.generators.size());
  const int nc = static_cast<int>(net.converters.size());
  if (j < nb) return {"v", net.buses[j].id};
  if (j < 2 * nb) return {"theta", net.buses[j - nb].id};
  if (j < 2 * nb + ng) return {"pg", net.generators[j - 2 * nb].id};
  if (j < 2 * nb + 2 * ng) return {"qg", net.generators[j - 2 * nb - ng].id};
  if (j < 2 * nb + 2 * ng + 3 * nc) return {"converter", net.converters[(j - 2 * nb - 2 * ng) / 3].id};
  for (std::size_t s = 0; s < net.subnetworks.size(); ++s)
    if (nlp.omega_index(static_cast<int>(s)) == j) return {"omega", net.subnetworks[s].id};
  return {"", ""};
}

OpfStatus from_ipm(IpmStatus s) {
  switch (s) {
    case IpmStatus::Optimal: return OpfStatus::Optimal;
    case IpmStatus::LocalInfeasibility:
    case IpmStatus::RestorationFailed: return OpfStatus::Infeasible;
    case IpmStatus::IterationLimit: return OpfStatus::IterationLimit;
    case IpmStatus::NumericalFailure: return OpfStatus::NumericalFailure;
  }
  return OpfStatus::NumericalFailure;
}

void extract(const Network& net, const OpfNlp& nlp, const VectorXd& x, OpfSolution& sol) {
  const int nb = static_cast<int>(net.buses.size());
  const int ng = static_cast<int>(net.generators.size());
  const int nc = static_cast<int>(net.converters.size());
  sol.x = x;
  sol.v.resize(nb);
  sol.theta.resize(nb);
  for (int b = 0; b < nb; ++b) {
    sol.v[b] = x[nlp.v(b)];
    sol.theta[b] = x[nlp.th(b)];
  }
  sol.pg.resize(ng);
  sol.qg.resize(ng);
  sol.objective = 0.0;
  double gen = 0.0;
  for (int g = 0; g < ng; ++g) {
    sol.pg[g] = x[nlp.pg(g)];
    sol.qg[g] = x[nlp.qg(g)];
    sol.objective += net.generators[g].cost.value(sol.pg[g]);
    gen += sol.pg[g];
  }
  sol.conv_p_i.resize(nc);
  sol.conv_p_j.resize(nc);
  sol.conv_q_i.resize(nc);
  sol.conv_q_j.resize(nc);
  for (int c = 0; c < nc; ++c) {
    sol.conv_p_i[c] = x[nlp.cp(c)];
    sol.conv_p_j[c] = -x[nlp.cp(c)];
    sol.conv_q_i[c] = x[nlp.cqi(c)];
    sol.conv_q_j[c] = x[nlp.cqj(c)];
  }
  sol.omega.resize(net.subnetworks.size());
  sol.frequency_hz.resize(net.subnetworks.size());
  for (std::size_t s = 0; s < net.subnetworks.size(); ++s) {
    const Subnetwork& sn = net.subnetworks[s];
    sol.omega[s] = nlp.omega_at(x, static_cast<int>(s));
    sol.frequency_hz[s] = sn.mode == FrequencyMode::Fixed ? sn.frequency_hz : sol.omega[s] / (2.0 * std::numbers::pi);
  }
  sol.edges.clear();
  sol.edge_p.clear();
  sol.edge_q.clear();
  for (const EdgeInfo& e : nlp.edges()) {
    const EdgeFlow f = nlp.flow(x, e);
    sol.edges.push_back(e.edge);
    sol.edge_p.push_back(f.p);
    sol.edge_q.push_back(f.q);
  }
  double load = 0.0;
  for (const Bus& b : net.buses) load += b.p_load;
  sol.total_loss = gen - load;
}

void find_binding(const Network& net, const OpfNlp& nlp, const IpmResult& r, double tol, OpfSolution& sol) {
  VectorXd xl, xu, gl, gu, g;
  nlp.bounds(xl, xu, gl, gu);
  nlp.constraints(r.x, g);
  auto near = [tol](double value, double bound) {
    return std::isfinite(bound) && std::abs(value - bound) <= tol * std::max(1.0, std::abs(bound));
  };
  for (int j = 0; j < nlp.num_variables(); ++j) {
    if (xl[j] == xu[j]) continue;
    const auto [kind, element] = variable_label(net, nlp, j);
    if (kind.empty() || kind == "theta" || kind == "converter") continue;
    if (near(r.x[j], xl[j])) sol.binding.push_back({kind + "_min", element, r.z_lo[j]});
    if (near(r.x[j], xu[j])) sol.binding.push_back({kind + "_max", element, r.z_hi[j]});
  }
  for (int i = 0; i < nlp.num_constraints(); ++i) {
    if (gl[i] == gu[i]) continue;
    const Row& row = nlp.rows()[i];
    if (row.kind == RowKind::Epigraph) continue;
    auto [kind, element] = row_label(net, nlp, row);
    const double mult = std::abs(r.lambda[i]);
    if (row.kind == RowKind::Angle) {
      if (near(g[i], gl[i])) sol.binding.push_back({"angle_min", element, mult});
      if (near(g[i], gu[i])) sol.binding.push_back({"angle_max", element, mult});
      continue;
    }
    if (near(g[i], gu[i])) sol.binding.push_back({kind, element, mult});
  }
}

void find_violations(const Network& net, const OpfNlp& nlp, const VectorXd& x, OpfSolution& sol) {
  VectorXd xl, xu, gl, gu, g;
  nlp.bounds(xl, xu, gl, gu);
  nlp.constraints(x, g);
  std::vector<ViolatedConstraint> all;
  for (int i = 0; i < nlp.num_constraints(); ++i) {
    const double viol = std::max({0.0, gl[i] - g[i], g[i] - gu[i]});
    if (viol <= 0.0) continue;
    const auto [kind, element] = row_label(net, nlp, nlp.rows()[i]);
    all.push_back({kind, element, viol});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.violation > b.violation; });
  sol.max_violation = all.empty() ? 0.0 : all.front().violation;
  if (all.size() > 10) all.resize(10);
  sol.most_violated = std::move(all);
}

std::vector<int> balance_rows(const OpfNlp& nlp) {
  std::vector<int> out;
  for (int i = 0; i < nlp.num_constraints(); ++i) {
    const RowKind k = nlp.rows()[i].kind;
    if (k == RowKind::PBalance || k == RowKind::QBalance) out.push_back(i);
  }
  return out;
}

// Split [0, n) into `workers` contiguous chunks and run `body(begin, end)` on each.
template <class F>
void parallel_chunks(int n, int workers, F body) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    const int begin = static_cast<int>(static_cast<long>(n) * w / workers);
    const int end = static_cast<int>(static_cast<long>(n) * (w + 1) / workers);
    pool.emplace_back(body, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------

EdgeFlow edge_flow(const Network& net, const DirectedEdge& edge, double v_o, double v_t, double theta_o,
                   double theta_t, double omega, bool dc) {
  const Branch& br = net.branches[edge.branch];
  const BranchAdmittanceDerivatives a = branch_admittance_derivatives(net, br, omega, dc);
  double tau = 1.0, phi = 0.0;
  if (const auto* t = std::get_if<Transformer>(&br.kind)) {
    tau = t->tap;
    phi = t->shift;
  }
  const double m = 1.0 / tau;
  const double s = edge.forward ? m * m : 1.0;
  const double delta = theta_o - theta_t + (edge.forward ? -phi : phi);
  const double c = std::cos(delta), sn = std::sin(delta);

  const Curve G{a.value.G, a.d1.G, a.d2.G};
  const Curve B{a.value.B, a.d1.B, a.d2.B};
  const Curve A{a.value.G + a.value.G_sh, a.d1.G + a.d1.G_sh, a.d2.G + a.d2.G_sh};
  const Curve Bt{-(a.value.B + a.value.B_sh), -(a.d1.B + a.d1.B_sh), -(a.d2.B + a.d2.B_sh)};

  const double Kp = G.v * c + B.v * sn, Kq = G.v * sn - B.v * c;
  const double Kpw = G.d1 * c + B.d1 * sn, Kqw = G.d1 * sn - B.d1 * c;
  const double Kpww = G.d2 * c + B.d2 * sn, Kqww = G.d2 * sn - B.d2 * c;

  EdgeFlow f;
  fill_flow(s, m, v_o, v_t, A, Kp, -Kq, -Kp, Kpw, -Kqw, Kpww, f.p, f.dp, f.hp);
  fill_flow(s, m, v_o, v_t, Bt, Kq, Kp, -Kq, Kqw, Kpw, Kqww, f.q, f.dq, f.hq);
  return f;
}

const char* to_string(OpfStatus s) {
  switch (s) {
    case OpfStatus::Optimal: return "optimal";
    case OpfStatus::Infeasible: return "infeasible";
    case OpfStatus::IterationLimit: return "iteration-limit";
    case OpfStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

const char* to_string(TransferRegime r) {
  switch (r) {
    case TransferRegime::Angle: return "angle";
    case TransferRegime::ThermalReactive: return "thermal+reactive";
    case TransferRegime::Thermal: return "thermal";
    case TransferRegime::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::unique_ptr<NlpProblem> make_opf_problem(const Network& net) { return std::make_unique<OpfNlp>(net); }

OpfSolution solve_opf(const Network& net, const OpfOptions& options, const OpfSolution* warm) {
  OpfNlp nlp(net);
  if (warm && warm->x.size() == nlp.num_variables()) nlp.set_start(warm->x);

  OpfSolution sol;
  IpmResult r = solve_nlp(nlp, options.ipm);
  int iterations = r.iterations;

  const bool failed = r.status == IpmStatus::LocalInfeasibility || r.status == IpmStatus::RestorationFailed ||
                      r.status == IpmStatus::NumericalFailure;
  if (failed && options.certify_infeasibility) {
    ElasticProblem phase1(nlp, balance_rows(nlp), 1.0, 0.0, nlp.initial_point());
    const IpmResult e = solve_nlp(phase1, options.ipm);
    iterations += e.iterations;
    const VectorXd xb = phase1.base_part(e.x);
    sol.elastic_total = phase1.total_elastic(e.x);
    if (e.status == IpmStatus::Optimal && sol.elastic_total > options.infeasibility_tolerance) {
      extract(net, nlp, xb, sol);
      find_violations(net, nlp, xb, sol);
      sol.status = OpfStatus::Infeasible;
      sol.message = "balance equations cannot be met: minimum total mismatch " + format_double(sol.elastic_total);
      sol.iterations = iterations;
      return sol;
    }
    if (e.status == IpmStatus::Optimal) {
      nlp.set_start(xb);
      r = solve_nlp(nlp, options.ipm);
      iterations += r.iterations;
    }
  }

  extract(net, nlp, r.x, sol);
  sol.status = from_ipm(r.status);
  sol.message = r.message;
  sol.kkt = r.kkt;
  sol.kkt_scaled = r.kkt_scaled;
  sol.iterations = iterations;
  if (sol.status == OpfStatus::Optimal)
    find_binding(net, nlp, r, options.binding_tolerance, sol);
  else
    find_violations(net, nlp, r.x, sol);
  return sol;
}

OpfSolution variable_frequency_solve(const Network& net, const OpfOptions& options) {
  const bool any = std::any_of(net.subnetworks.begin(), net.subnetworks.end(),
                               [](const Subnetwork& s) { return s.mode == FrequencyMode::Variable; });
  if (!any) throw InvalidInput("network '" + net.name + "' has no variable-frequency subnetwork");
  return solve_opf(net, options);
}

Network with_fixed_frequency(const Network& net, int index, double hz) {
  if (index < 0 || index >= static_cast<int>(net.subnetworks.size()))
    throw InvalidInput("subnetwork index out of range");
  if (!(hz >= 0.0) || !std::isfinite(hz)) throw InvalidInput("sweep frequency must be finite and nonnegative");
  Network out = net;
  Subnetwork& s = out.subnetworks[index];
  if (hz == 0.0) {
    s.mode = FrequencyMode::Dc;
  } else {
    s.mode = FrequencyMode::Fixed;
    s.frequency_hz = hz;
  }
  out.validate();
  return out;
}

int sweep_subnetwork(const Network& net, const std::string& id) {
  for (std::size_t s = 0; s < net.subnetworks.size(); ++s) {
    if (!id.empty() && net.subnetworks[s].id == id) return static_cast<int>(s);
    if (id.empty() && net.subnetworks[s].mode == FrequencyMode::Variable) return static_cast<int>(s);
  }
  if (id.empty()) throw InvalidInput("network '" + net.name + "' has no variable-frequency subnetwork to sweep");
  throw InvalidInput("unknown subnetwork '" + id + "'");
}

std::vector<SweepRow> frequency_sweep(const Network& net, int index, const std::vector<double>& hz_grid,
                                      const OpfOptions& options, int workers, bool warm_start) {
  std::vector<SweepRow> rows(hz_grid.size());
  parallel_chunks(static_cast<int>(hz_grid.size()), workers, [&](int begin, int end) {
    OpfSolution previous;
    bool have_previous = false;
    for (int k = begin; k < end; ++k) {
      SweepRow& row = rows[k];
      row.hz = hz_grid[k];
      try {
        const Network fixed = with_fixed_frequency(net, index, row.hz);
        OpfSolution s = solve_opf(fixed, options, warm_start && have_previous ? &previous : nullptr);
        row.status = s.status;
        row.objective = s.objective;
        row.loss = s.total_loss;
        row.message = s.message;
        have_previous = s.status == OpfStatus::Optimal;
        if (have_previous) previous = std::move(s);
      } catch (const std::exception& e) {
        row.status = OpfStatus::NumericalFailure;
        row.objective = row.loss = std::numeric_limits<double>::quiet_NaN();
        row.message = e.what();
        have_previous = false;
      }
    }
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Single-cable maximum transfer
// ---------------------------------------------------------------------------

namespace {

// Variables (V_d, theta_d); rows: thermal at both ends, then the angle limit.
class MaxTransferNlp : public NlpProblem {
 public:
  MaxTransferNlp(const MaxTransferSpec& spec, double hz) : spec_(spec), dc_(hz == 0.0) {
    const double kv = spec.base_kv;
    net_.base_mva = spec.base_mva;
    net_.subnetworks = {{"cable", dc_ ? FrequencyMode::Dc : FrequencyMode::Fixed, dc_ ? 60.0 : hz}};
    Bus o, d;
    o.id = "origin";
    d.id = "destination";
    o.base_kv = d.base_kv = kv;
    net_.buses = {o, d};
    Branch br;
    br.id = "cable";
    br.from = 0;
    br.to = 1;
    br.kind = CableBranch{spec.model, "", 0.0};
    br.thermal_limit = spec.thermal_limit;
    br.angle_limit = spec.angle_limit;
    net_.branches = {br};
    omega_ = net_.subnetworks[0].omega();
    scale_ = dc_ ? kSqrt2 : 1.0;
  }

  EdgeFlow flow(const VectorXd& x, bool forward) const {
    const double vo = scale_ * spec_.v_origin;
    if (forward) return edge_flow(net_, {0, 0, 1, true}, vo, x[0], 0.0, x[1], omega_, dc_);
    return edge_flow(net_, {0, 1, 0, false}, x[0], vo, x[1], 0.0, omega_, dc_);
  }

  int num_variables() const override { return 2; }
  int num_constraints() const override { return dc_ ? 2 : 3; }
  void bounds(VectorXd& xl, VectorXd& xu, VectorXd& gl, VectorXd& gu) const override {
    xl.resize(2);
    xu.resize(2);
    xl << scale_ * spec_.v_min, dc_ ? 0.0 : -kInf;
    xu << scale_ * spec_.v_max, dc_ ? 0.0 : kInf;
    const double s2 = spec_.thermal_limit * spec_.thermal_limit;
    gl = VectorXd::Constant(num_constraints(), -kInf);
    gu = VectorXd::Constant(num_constraints(), s2);
    if (!dc_) {
      gl[2] = -spec_.angle_limit;
      gu[2] = spec_.angle_limit;
    }
  }
  VectorXd initial_point() const override {
    if (start_.size() == 2) return start_;
    VectorXd x(2);
    x << scale_ * spec_.v_origin, 0.0;
    return x;
  }
  void set_start(const VectorXd& x) { start_ = x; }

  double objective(const VectorXd& x) const override { return -flow(x, true).p; }
  void gradient(const VectorXd& x, VectorXd& grad) const override {
    const EdgeFlow f = flow(x, true);
    grad.resize(2);
    grad << -f.dp[kVt], -f.dp[kThetaT];
  }
  void constraints(const VectorXd& x, VectorXd& g) const override {
    g.resize(num_constraints());
    const EdgeFlow fo = flow(x, true), fd = flow(x, false);
    g[0] = fo.p * fo.p + fo.q * fo.q;
    g[1] = fd.p * fd.p + fd.q * fd.q;
    if (!dc_) g[2] = -x[1];
  }
  void jacobian(const VectorXd& x, Triplets& out) const override {
    const EdgeFlow fo = flow(x, true), fd = flow(x, false);
    for (int j = 0; j < 2; ++j) {
      out.emplace_back(0, j, 2 * (fo.p * fo.dp[slot(true, j)] + fo.q * fo.dq[slot(true, j)]));
      out.emplace_back(1, j, 2 * (fd.p * fd.dp[slot(false, j)] + fd.q * fd.dq[slot(false, j)]));
    }
    if (!dc_) out.emplace_back(2, 1, -1.0);
  }
  void hessian(const VectorXd& x, double sigma, const VectorXd& lambda, Triplets& out) const override {
    const EdgeFlow fo = flow(x, true), fd = flow(x, false);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b <= a; ++b) {
        const int ao = slot(true, a), bo = slot(true, b);
        const int ad = slot(false, a), bd = slot(false, b);
        double h = -sigma * fo.hp[ao][bo];
        h += lambda[0] * 2 * (fo.dp[ao] * fo.dp[bo] + fo.p * fo.hp[ao][bo] + fo.dq[ao] * fo.dq[bo] + fo.q * fo.hq[ao][bo]);
        h += lambda[1] * 2 * (fd.dp[ad] * fd.dp[bd] + fd.p * fd.hp[ad][bd] + fd.dq[ad] * fd.dq[bd] + fd.q * fd.hq[ad][bd]);
        out.emplace_back(a, b, h);
      }
  }

 private:
  // Local edge slot of variable j (0 = V_d, 1 = theta_d).
  static int slot(bool forward, int j) {
    if (forward) return j == 0 ? kVt : kThetaT;
    return j == 0 ? kVo : kThetaO;
  }

  const MaxTransferSpec& spec_;
  bool dc_;
  Network net_;
  double omega_ = 0.0, scale_ = 1.0;
  VectorXd start_;
};

}  // namespace

MaxTransferResult max_transfer(const MaxTransferSpec& spec, double hz, const IpmOptions& options,
                               const MaxTransferResult* warm) {
  if (!(hz >= 0.0) || !std::isfinite(hz)) throw InvalidInput("max-transfer frequency must be finite and nonnegative");
  MaxTransferNlp nlp(spec, hz);
  if (warm && warm->x.size() == 2) nlp.set_start(warm->x);
  const IpmResult r = solve_nlp(nlp, options);

  MaxTransferResult out;
  out.hz = hz;
  out.status = r.status;
  out.x = r.x;
  const EdgeFlow fo = nlp.flow(r.x, true), fd = nlp.flow(r.x, false);
  out.p_origin = fo.p;
  out.q_origin = fo.q;
  out.p_dest = fd.p;
  out.q_dest = fd.q;
  out.v_dest = r.x[0];
  out.theta_dest = r.x[1];
  out.loss = fo.p + fd.p;
  if (r.status != IpmStatus::Optimal) {
    out.regime = TransferRegime::Infeasible;
    return out;
  }
  const double tol = 1e-5;
  const double v_lo = (hz == 0.0 ? kSqrt2 : 1.0) * spec.v_min;
  if (hz > 0.0 && relative_gap(std::abs(out.theta_dest), spec.angle_limit) <= tol)
    out.regime = TransferRegime::Angle;
  else if (relative_gap(out.v_dest, v_lo) <= tol)
    out.regime = TransferRegime::ThermalReactive;
  else
    out.regime = TransferRegime::Thermal;
  return out;
}

std::vector<MaxTransferResult> max_transfer_sweep(const MaxTransferSpec& spec, const std::vector<double>& hz_grid,
                                                  const IpmOptions& options, int workers) {
  std::vector<MaxTransferResult> out(hz_grid.size());
  parallel_chunks(static_cast<int>(hz_grid.size()), workers, [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      try {
        out[k] = max_transfer(spec, hz_grid[k], options);
      } catch (const std::exception&) {
        out[k].hz = hz_grid[k];
        out[k].status = IpmStatus::NumericalFailure;
        out[k].regime = TransferRegime::Infeasible;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

void write_bus_csv(std::ostream& os, const Network& net, const OpfSolution& s) {
  os << "bus,subnetwork,v,theta_rad\n";
  for (std::size_t b = 0; b < net.buses.size(); ++b)
    os << net.buses[b].id << ',' << net.subnetwork_of(static_cast<int>(b)).id << ',' << format_double(s.v[b]) << ','
       << format_double(s.theta[b]) << '\n';
}

void write_branch_csv(std::ostream& os, const Network& net, const OpfSolution& s) {
  os << "branch,origin,target,p,q\n";
  for (std::size_t k = 0; k < s.edges.size(); ++k) {
    const DirectedEdge& e = s.edges[k];
    os << net.branches[e.branch].id << ',' << net.buses[e.origin].id << ',' << net.buses[e.target].id << ','
       << format_double(s.edge_p[k]) << ',' << format_double(s.edge_q[k]) << '\n';
  }
}

void write_generator_csv(std::ostream& os, const Network& net, const OpfSolution& s) {
  os << "generator,bus,p,q,cost\n";
  for (std::size_t g = 0; g < net.generators.size(); ++g) {
    const Generator& gen = net.generators[g];
    os << gen.id << ',' << net.buses[gen.bus].id << ',' << format_double(s.pg[g]) << ',' << format_double(s.qg[g])
       << ',' << format_double(gen.cost.value(s.pg[g])) << '\n';
  }
}

void write_converter_csv(std::ostream& os, const Network& net, const OpfSolution& s) {
  os << "converter,bus_i,bus_j,p_i,q_i,p_j,q_j\n";
  for (std::size_t c = 0; c < net.converters.size(); ++c) {
    const Converter& cv = net.converters[c];
    os << cv.id << ',' << net.buses[cv.bus_i].id << ',' << net.buses[cv.bus_j].id << ','
       << format_double(s.conv_p_i[c]) << ',' << format_double(s.conv_q_i[c]) << ','
       << format_double(s.conv_p_j[c]) << ',' << format_double(s.conv_q_j[c]) << '\n';
  }
}

void write_subnetwork_csv(std::ostream& os, const Network& net, const OpfSolution& s) {
  os << "subnetwork,mode,frequency_hz\n";
  for (std::size_t k = 0; k < net.subnetworks.size(); ++k)
    os << net.subnetworks[k].id << ',' << to_string(net.subnetworks[k].mode) << ','
       << format_double(s.frequency_hz[k]) << '\n';
}

void write_binding_table(std::ostream& os, const OpfSolution& s) {
  std::size_t wk = 4, we = 7;
  for (const auto& b : s.binding) {
    wk = std::max(wk, b.kind.size());
    we = std::max(we, b.element.size());
  }
  auto pad = [](const std::string& t, std::size_t w) { return t + std::string(w - t.size(), ' '); };
  os << pad("kind", wk) << "  " << pad("element", we) << "  multiplier\n";
  for (const auto& b : s.binding)
    os << pad(b.kind, wk) << "  " << pad(b.element, we) << "  " << format_double(b.multiplier) << '\n';
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "hz,objective,loss,status\n";
  for (const SweepRow& r : rows)
    os << format_double(r.hz) << ',' << format_double(r.objective) << ',' << format_double(r.loss) << ','
       << to_string(r.status) << '\n';
}

void write_max_transfer_csv(std::ostream& os, const std::vector<MaxTransferResult>& rows) {
  os << "hz,p_origin,q_origin,p_dest,q_dest,v_dest,theta_dest_deg,loss,regime,status\n";
  for (const MaxTransferResult& r : rows)
    os << format_double(r.hz) << ',' << format_double(r.p_origin) << ',' << format_double(r.q_origin) << ','
       << format_double(r.p_dest) << ',' << format_double(r.q_dest) << ',' << format_double(r.v_dest) << ','
       << format_double(r.theta_dest * 180.0 / std::numbers::pi) << ',' << format_double(r.loss) << ','
       << to_string(r.regime) << ',' << to_string(r.status) << '\n';
}

namespace {

// JSON numbers cannot hold nan or inf.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

nlohmann::json solution_to_json(const Network& net, const OpfSolution& s) {
  using nlohmann::json;
  json j;
  j["case"] = net.name;
  j["status"] = to_string(s.status);
  j["message"] = s.message;
  j["objective"] = number(s.objective);
  j["total_loss"] = number(s.total_loss);
  j["iterations"] = s.iterations;
  j["kkt"] = {{"stationarity", number(s.kkt.stationarity)},
              {"primal", number(s.kkt.primal)},
              {"complementarity", number(s.kkt.complementarity)}};
  j["kkt_scaled"] = {{"stationarity", number(s.kkt_scaled.stationarity)},
                     {"primal", number(s.kkt_scaled.primal)},
                     {"complementarity", number(s.kkt_scaled.complementarity)}};
  json subs = json::array();
  for (std::size_t k = 0; k < net.subnetworks.size() && k < s.omega.size(); ++k)
    subs.push_back({{"id", net.subnetworks[k].id},
                    {"mode", to_string(net.subnetworks[k].mode)},
                    {"omega", number(s.omega[k])},
                    {"frequency_hz", number(s.frequency_hz[k])}});
  j["subnetworks"] = subs;
  json buses = json::array();
  for (std::size_t b = 0; b < net.buses.size() && b < s.v.size(); ++b)
    buses.push_back({{"id", net.buses[b].id}, {"v", number(s.v[b])}, {"theta_rad", number(s.theta[b])}});
  j["buses"] = buses;
  json gens = json::array();
  for (std::size_t g = 0; g < net.generators.size() && g < s.pg.size(); ++g)
    gens.push_back({{"id", net.generators[g].id},
                    {"p", number(s.pg[g])},
                    {"q", number(s.qg[g])},
                    {"cost", number(net.generators[g].cost.value(s.pg[g]))}});
  j["generators"] = gens;
  json convs = json::array();
  for (std::size_t c = 0; c < net.converters.size() && c < s.conv_p_i.size(); ++c)
    convs.push_back({{"id", net.converters[c].id},
                     {"p_i", number(s.conv_p_i[c])},
                     {"q_i", number(s.conv_q_i[c])},
                     {"p_j", number(s.conv_p_j[c])},
                     {"q_j", number(s.conv_q_j[c])}});
  j["converters"] = convs;
  json edges = json::array();
  for (std::size_t k = 0; k < s.edges.size(); ++k)
    edges.push_back({{"branch", net.branches[s.edges[k].branch].id},
                     {"origin", net.buses[s.edges[k].origin].id},
                     {"target", net.buses[s.edges[k].target].id},
                     {"p", number(s.edge_p[k])},
                     {"q", number(s.edge_q[k])}});
  j["edges"] = edges;
  json binding = json::array();
  for (const auto& b : s.binding)
    binding.push_back({{"kind", b.kind}, {"element", b.element}, {"multiplier", number(b.multiplier)}});
  j["binding"] = binding;
  if (s.status != OpfStatus::Optimal) {
    json viol = json::array();
    for (const auto& v : s.most_violated)
      viol.push_back({{"kind", v.kind}, {"element", v.element}, {"violation", number(v.violation)}});
    j["elastic_total"] = number(s.elastic_total);
    j["max_violation"] = number(s.max_violation);
    j["most_violated"] = viol;
  }
  return j;
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const SweepRow& r : rows)
    out.push_back({{"hz", number(r.hz)},
                   {"objective", number(r.objective)},
                   {"loss", number(r.loss)},
                   {"status", to_string(r.status)},
                   {"message", r.message}});
  return out;
}

nlohmann::json max_transfer_to_json(const std::vector<MaxTransferResult>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const MaxTransferResult& r : rows)
    out.push_back({{"hz", number(r.hz)},
                   {"p_origin", number(r.p_origin)},
                   {"q_origin", number(r.q_origin)},
                   {"p_dest", number(r.p_dest)},
                   {"q_dest", number(r.q_dest)},
                   {"v_dest", number(r.v_dest)},
                   {"theta_dest_deg", number(r.theta_dest * 180.0 / std::numbers::pi)},
                   {"loss", number(r.loss)},
                   {"regime", to_string(r.regime)},
                   {"status", to_string(r.status)}});
  return out;
}

}  // namespace lfac
