#include "causal/eif.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "causal/error.hpp"

namespace causal::eif {

namespace {

constexpr double kSumTolerance = 1e-12;

std::string point_text(const Point& z) {
  std::string out = "(";
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(z[i]);
  }
  return out + ")";
}

/// Groups support points by their covariate sub-vector (all coords except treatment/outcome).
struct CausalLayout {
  std::size_t treatment = 0;
  std::size_t outcome = 0;
  std::vector<std::size_t> covariates;

  CausalLayout(const DiscreteMeasure& m, const std::string& t, const std::string& y)
      : treatment(m.coord(t)), outcome(m.coord(y)) {
    if (treatment == outcome) throw Error(ErrorKind::Config, "treatment and outcome coordinates coincide");
    for (std::size_t c = 0; c < m.coords().size(); ++c) {
      if (c != treatment && c != outcome) covariates.push_back(c);
    }
  }

  Point key(const Point& z) const {
    Point k;
    k.reserve(covariates.size());
    for (std::size_t c : covariates) k.push_back(z[c]);
    return k;
  }

  int arm(const Point& z, std::size_t index) const {
    const double v = z[treatment];
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorKind::Validation, "treatment coordinate must be 0 or 1 at support point " +
                                             std::to_string(index));
    }
    return static_cast<int>(v);
  }
};

/// Per covariate cell: total mass, arm masses and arm outcome sums under given weights.
struct CellStats {
  double mass = 0.0;
  double arm_mass[2] = {0.0, 0.0};
  double arm_sum[2] = {0.0, 0.0};

  double mu(int a) const { return arm_sum[a] / arm_mass[a]; }
  double pi(int a) const { return arm_mass[a] / mass; }
};

std::map<Point, CellStats> cell_stats(const DiscreteMeasure& m, const CausalLayout& layout,
                                      std::span<const double> w) {
  std::map<Point, CellStats> cells;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const Point& z = m.points()[j];
    auto& cell = cells[layout.key(z)];
    const int a = layout.arm(z, j);
    cell.mass += w[j];
    cell.arm_mass[a] += w[j];
    cell.arm_sum[a] += w[j] * z[layout.outcome];
  }
  return cells;
}

double total_weight(std::span<const double> w) {
  double t = 0.0;
  for (double v : w) t += v;
  if (t == 0.0) throw Error(ErrorKind::Evaluability, "measure has zero total mass");
  return t;
}

double counterfactual(const std::map<Point, CellStats>& cells, int arm, double total) {
  double psi = 0.0;
  for (const auto& [key, cell] : cells) {
    if (cell.mass == 0.0) continue;
    if (cell.arm_mass[arm] == 0.0) {
      throw Error(ErrorKind::Evaluability, "arm " + std::to_string(arm) +
                                               " has zero mass in covariate cell " + point_text(key));
    }
    psi += cell.mass * cell.mu(arm);
  }
  return psi / total;
}

bool satisfies(const Point& z, const std::vector<std::pair<std::size_t, double>>& conds) {
  return std::all_of(conds.begin(), conds.end(), [&](const auto& c) { return z[c.first] == c.second; });
}

/// Richardson (Neville) extrapolation in h^2 of central differences.
Derivative extrapolate(const std::vector<double>& steps, const std::vector<double>& diffs) {
  const std::size_t m = diffs.size();
  std::vector<std::vector<double>> table(m);
  for (std::size_t k = 0; k < m; ++k) {
    table[k].push_back(diffs[k]);
    for (std::size_t level = 1; level <= k; ++level) {
      const double ratio = (steps[k - level] * steps[k - level]) / (steps[k] * steps[k]);
      const double prev = table[k][level - 1];
      table[k].push_back(prev + (prev - table[k - 1][level - 1]) / (ratio - 1.0));
    }
  }
  Derivative d;
  d.value = table[m - 1][m - 1];
  d.error_estimate = m >= 2 ? std::abs(table[m - 1][m - 1] - table[m - 1][m - 2]) : 0.0;
  return d;
}

void check_schedule(const EpsSchedule& schedule) {
  if (schedule.steps.empty()) throw Error(ErrorKind::Config, "empty finite-difference schedule");
  for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
    if (!(schedule.steps[i] > 0.0)) throw Error(ErrorKind::Config, "schedule steps must be positive");
    if (i > 0 && schedule.steps[i] == schedule.steps[i - 1]) {
      throw Error(ErrorKind::Config, "schedule steps must be distinct");
    }
  }
}

template <class WeightsAt>
Derivative central_difference(const Functional& f, const DiscreteMeasure& m, const EpsSchedule& schedule,
                              WeightsAt weights_at) {
  check_schedule(schedule);
  std::vector<double> diffs;
  diffs.reserve(schedule.steps.size());
  for (double h : schedule.steps) {
    const double up = f.evaluate(m, weights_at(h));
    const double down = f.evaluate(m, weights_at(-h));
    diffs.push_back((up - down) / (2.0 * h));
  }
  return extrapolate(schedule.steps, diffs);
}

void require_same_coords(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.coords() != q.coords()) throw Error(ErrorKind::Support, "measures use different coordinates");
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure::DiscreteMeasure(std::vector<std::string> coords, std::vector<Point> points,
                                 std::vector<double> probs)
    : coords_(std::move(coords)), points_(std::move(points)), probs_(std::move(probs)) {
  if (points_.size() != probs_.size()) throw Error(ErrorKind::Validation, "point and probability counts differ");
  if (points_.empty()) throw Error(ErrorKind::Validation, "measure needs at least one support point");
  std::set<std::string> names(coords_.begin(), coords_.end());
  if (names.size() != coords_.size()) throw Error(ErrorKind::Validation, "duplicate coordinate names");
  std::set<Point> seen;
  double sum = 0.0;
  for (std::size_t j = 0; j < points_.size(); ++j) {
    if (points_[j].size() != coords_.size()) {
      throw Error(ErrorKind::Validation, "support point " + std::to_string(j) + " has the wrong dimension");
    }
    for (double v : points_[j]) {
      if (!std::isfinite(v)) throw Error(ErrorKind::Validation, "non-finite support coordinate");
    }
    if (!seen.insert(points_[j]).second) {
      throw Error(ErrorKind::Validation, "duplicate support point " + point_text(points_[j]));
    }
    if (!(probs_[j] >= 0.0) || !std::isfinite(probs_[j])) {
      throw Error(ErrorKind::Validation, "probabilities must be finite and non-negative");
    }
    sum += probs_[j];
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(ErrorKind::Validation, "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

DiscreteMeasure DiscreteMeasure::empirical(std::vector<std::string> coords, std::span<const Point> sample) {
  if (sample.empty()) throw Error(ErrorKind::InsufficientData, "empty sample");
  std::map<Point, std::size_t> index;
  std::vector<Point> points;
  std::vector<double> counts;
  for (const auto& z : sample) {
    const auto [it, inserted] = index.emplace(z, points.size());
    if (inserted) {
      points.push_back(z);
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
  }
  const double n = static_cast<double>(sample.size());
  for (double& c : counts) c /= n;
  // Renormalize away rounding so the sum check holds for any n.
  double sum = 0.0;
  for (double c : counts) sum += c;
  for (double& c : counts) c /= sum;
  return DiscreteMeasure(std::move(coords), std::move(points), std::move(counts));
}

std::size_t DiscreteMeasure::coord(const std::string& name) const {
  const auto it = std::find(coords_.begin(), coords_.end(), name);
  if (it == coords_.end()) throw Error(ErrorKind::Support, "measure has no coordinate '" + name + "'");
  return static_cast<std::size_t>(it - coords_.begin());
}

std::optional<std::size_t> DiscreteMeasure::find(const Point& z) const {
  for (std::size_t j = 0; j < points_.size(); ++j) {
    if (points_[j] == z) return j;
  }
  return std::nullopt;
}

DiscreteMeasure DiscreteMeasure::with_point(const Point& z) const {
  if (z.size() != coords_.size()) throw Error(ErrorKind::Support, "point dimension differs from measure");
  if (find(z)) return *this;
  auto points = points_;
  auto probs = probs_;
  points.push_back(z);
  probs.push_back(0.0);
  return DiscreteMeasure(coords_, std::move(points), std::move(probs));
}

double DiscreteMeasure::expect(std::span<const double> values) const {
  if (values.size() != size()) throw Error(ErrorKind::Validation, "value count differs from support size");
  double e = 0.0;
  for (std::size_t j = 0; j < size(); ++j) e += probs_[j] * values[j];
  return e;
}

// ---------------------------------------------------------------------------
// Functional

Functional Functional::mean(std::string coord) {
  Functional f;
  f.kind_ = Kind::Mean;
  f.coord_ = std::move(coord);
  return f;
}

Functional Functional::cond_mean(std::string coord, std::vector<Condition> conditions) {
  Functional f;
  f.kind_ = Kind::CondMean;
  f.coord_ = std::move(coord);
  f.conditions_ = std::move(conditions);
  return f;
}

Functional Functional::counterfactual_mean(int arm, std::string treatment, std::string outcome) {
  if (arm != 0 && arm != 1) throw Error(ErrorKind::Config, "arm must be 0 or 1");
  Functional f;
  f.kind_ = Kind::CounterfactualMean;
  f.arm_ = arm;
  f.treatment_ = std::move(treatment);
  f.outcome_ = std::move(outcome);
  return f;
}

Functional Functional::ate(std::string treatment, std::string outcome) {
  Functional f;
  f.kind_ = Kind::Ate;
  f.treatment_ = std::move(treatment);
  f.outcome_ = std::move(outcome);
  return f;
}

std::string Functional::label() const {
  switch (kind_) {
    case Kind::Mean: return "mean(" + coord_ + ")";
    case Kind::CondMean: {
      std::string out = "cond_mean(" + coord_ + " |";
      for (std::size_t i = 0; i < conditions_.size(); ++i) {
        out += (i > 0 ? ", " : " ") + conditions_[i].coord + "=" + std::to_string(conditions_[i].value);
      }
      return out + ")";
    }
    case Kind::CounterfactualMean: return "counterfactual_mean(" + std::to_string(arm_) + ")";
    case Kind::Ate: return "ate";
  }
  return "unknown";
}

double Functional::evaluate(const DiscreteMeasure& m, std::span<const double> w) const {
  if (w.size() != m.size()) throw Error(ErrorKind::Validation, "weight count differs from support size");
  switch (kind_) {
    case Kind::Mean: {
      const std::size_t c = m.coord(coord_);
      double s = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) s += w[j] * m.points()[j][c];
      return s / total_weight(w);
    }
    case Kind::CondMean: {
      const std::size_t c = m.coord(coord_);
      std::vector<std::pair<std::size_t, double>> conds;
      for (const auto& cond : conditions_) conds.emplace_back(m.coord(cond.coord), cond.value);
      double mass = 0.0;
      double s = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (!satisfies(m.points()[j], conds)) continue;
        mass += w[j];
        s += w[j] * m.points()[j][c];
      }
      if (mass == 0.0) throw Error(ErrorKind::Evaluability, "conditioning event has zero mass in " + label());
      return s / mass;
    }
    case Kind::CounterfactualMean:
    case Kind::Ate: {
      const CausalLayout layout(m, treatment_, outcome_);
      const auto cells = cell_stats(m, layout, w);
      const double total = total_weight(w);
      if (kind_ == Kind::CounterfactualMean) return counterfactual(cells, arm_, total);
      return counterfactual(cells, 1, total) - counterfactual(cells, 0, total);
    }
  }
  return 0.0;
}

double Functional::closed_form_influence(const DiscreteMeasure& m, const Point& z) const {
  if (z.size() != m.coords().size()) throw Error(ErrorKind::Support, "point dimension differs from measure");
  switch (kind_) {
    case Kind::Mean: return z[m.coord(coord_)] - (*this)(m);
    case Kind::CondMean: {
      std::vector<std::pair<std::size_t, double>> conds;
      for (const auto& cond : conditions_) conds.emplace_back(m.coord(cond.coord), cond.value);
      double mass = 0.0;
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (satisfies(m.points()[j], conds)) mass += m.probs()[j];
      }
      if (mass == 0.0) throw Error(ErrorKind::Evaluability, "conditioning event has zero mass in " + label());
      if (!satisfies(z, conds)) return 0.0;
      return (z[m.coord(coord_)] - (*this)(m)) / mass;
    }
    case Kind::CounterfactualMean:
    case Kind::Ate: {
      const CausalLayout layout(m, treatment_, outcome_);
      const auto cells = cell_stats(m, layout, m.probs());
      const auto it = cells.find(layout.key(z));
      if (it == cells.end() || it->second.mass == 0.0) {
        throw Error(ErrorKind::Evaluability, "covariate cell of " + point_text(z) + " has zero mass");
      }
      const CellStats& cell = it->second;
      const int a_z = layout.arm(z, 0);
      const double y_z = z[layout.outcome];
      const auto arm_term = [&](int arm) {
        if (cell.arm_mass[arm] == 0.0) {
          throw Error(ErrorKind::Evaluability, "arm " + std::to_string(arm) + " has zero mass in the cell of " +
                                                   point_text(z));
        }
        const double mu = cell.mu(arm);
        const double psi = counterfactual(cells, arm, 1.0);
        const double weighted = a_z == arm ? (y_z - mu) / cell.pi(arm) : 0.0;
        return weighted + mu - psi;
      };
      if (kind_ == Kind::CounterfactualMean) return arm_term(arm_);
      return arm_term(1) - arm_term(0);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Paths and derivatives

DiscreteMeasure mix(const DiscreteMeasure& p, const DiscreteMeasure& g, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw Error(ErrorKind::Epsilon, "mixing weight must lie in [0, 1]");
  require_same_coords(p, g);
  std::vector<Point> points = p.points();
  std::vector<double> probs;
  probs.reserve(points.size() + g.size());
  for (double v : p.probs()) probs.push_back((1.0 - eps) * v);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (const auto idx = p.find(g.points()[j])) {
      probs[*idx] += eps * g.probs()[j];
    } else {
      points.push_back(g.points()[j]);
      probs.push_back(eps * g.probs()[j]);
    }
  }
  // Clean rounding drift in the total.
  double sum = 0.0;
  for (double v : probs) sum += v;
  for (double& v : probs) v /= sum;
  return DiscreteMeasure(p.coords(), std::move(points), std::move(probs));
}

std::vector<double> score_of_path(const DiscreteMeasure& p, const DiscreteMeasure& ptilde) {
  require_same_coords(p, ptilde);
  std::vector<double> tilde(p.size(), 0.0);
  for (std::size_t j = 0; j < ptilde.size(); ++j) {
    const auto idx = p.find(ptilde.points()[j]);
    if (!idx) {
      if (ptilde.probs()[j] > 0.0) {
        throw Error(ErrorKind::Support, "Ptilde charges " + point_text(ptilde.points()[j]) +
                                            " outside the support of P");
      }
      continue;
    }
    tilde[*idx] = ptilde.probs()[j];
  }
  std::vector<double> s(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.probs()[j] == 0.0) {
      if (tilde[j] > 0.0) {
        throw Error(ErrorKind::Support, "P does not dominate Ptilde at " + point_text(p.points()[j]));
      }
      continue;
    }
    s[j] = tilde[j] / p.probs()[j] - 1.0;
  }
  return s;
}

Derivative gateaux_if(const Functional& f, const DiscreteMeasure& p, const Point& z,
                      const EpsSchedule& schedule) {
  const DiscreteMeasure m = p.with_point(z);
  const std::size_t target = *m.find(z);
  std::vector<double> w(m.size());
  return central_difference(f, m, schedule, [&](double eps) -> std::span<const double> {
    for (std::size_t j = 0; j < m.size(); ++j) w[j] = (1.0 - eps) * m.probs()[j];
    w[target] += eps;
    return w;
  });
}

std::vector<double> gateaux_if_all(const Functional& f, const DiscreteMeasure& p, const EpsSchedule& schedule) {
  std::vector<double> phi;
  phi.reserve(p.size());
  for (const auto& z : p.points()) phi.push_back(gateaux_if(f, p, z, schedule).value);
  return phi;
}

Derivative pathwise_derivative(const Functional& f, const DiscreteMeasure& p, std::span<const double> score,
                               const EpsSchedule& schedule) {
  if (score.size() != p.size()) throw Error(ErrorKind::Validation, "score length differs from support size");
  check_schedule(schedule);
  for (double h : schedule.steps) {
    for (double s : score) {
      if (1.0 + h * s < 0.0 || 1.0 - h * s < 0.0) {
        throw Error(ErrorKind::Epsilon, "step " + std::to_string(h) + " makes a perturbed mass negative");
      }
    }
  }
  std::vector<double> w(p.size());
  return central_difference(f, p, schedule, [&](double eps) -> std::span<const double> {
    for (std::size_t j = 0; j < p.size(); ++j) w[j] = (1.0 + eps * score[j]) * p.probs()[j];
    return w;
  });
}

CentralIdentity central_identity_check(const Functional& f, const DiscreteMeasure& p,
                                       std::span<const double> score, const EpsSchedule& schedule) {
  CentralIdentity out;
  out.lhs = pathwise_derivative(f, p, score, schedule).value;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.probs()[j] == 0.0) continue;
    out.rhs += p.probs()[j] * gateaux_if(f, p, p.points()[j], schedule).value * score[j];
  }
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

// ---------------------------------------------------------------------------
// Score factorization

std::vector<double> conditional_expectation(const DiscreteMeasure& p, std::span<const double> values,
                                            const std::vector<std::string>& coords) {
  if (values.size() != p.size()) throw Error(ErrorKind::Validation, "value count differs from support size");
  std::vector<std::size_t> idx;
  for (const auto& c : coords) idx.push_back(p.coord(c));
  const auto key = [&](const Point& z) {
    Point k;
    for (std::size_t c : idx) k.push_back(z[c]);
    return k;
  };
  std::map<Point, std::pair<double, double>> groups;  // mass, weighted sum
  for (std::size_t j = 0; j < p.size(); ++j) {
    auto& g = groups[key(p.points()[j])];
    g.first += p.probs()[j];
    g.second += p.probs()[j] * values[j];
  }
  std::vector<double> out(p.size(), 0.0);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto& g = groups[key(p.points()[j])];
    out[j] = g.first > 0.0 ? g.second / g.first : 0.0;
  }
  return out;
}

ScoreSplit split_score(const DiscreteMeasure& p, std::span<const double> score,
                       const std::vector<std::string>& coords) {
  ScoreSplit split;
  split.marginal = conditional_expectation(p, score, coords);
  split.conditional.resize(score.size());
  for (std::size_t j = 0; j < score.size(); ++j) split.conditional[j] = score[j] - split.marginal[j];
  return split;
}

CausalScoreFactors factorize_causal_score(const DiscreteMeasure& p, std::span<const double> score,
                                          const std::string& treatment, const std::string& outcome) {
  const CausalLayout layout(p, treatment, outcome);
  std::vector<std::string> x_coords;
  for (std::size_t c : layout.covariates) x_coords.push_back(p.coords()[c]);
  std::vector<std::string> ax_coords = x_coords;
  ax_coords.push_back(treatment);

  const auto e_x = conditional_expectation(p, score, x_coords);
  const auto e_ax = conditional_expectation(p, score, ax_coords);
  CausalScoreFactors out;
  out.x = e_x;
  out.a_given_x.resize(score.size());
  out.y_given_ax.resize(score.size());
  for (std::size_t j = 0; j < score.size(); ++j) {
    out.a_given_x[j] = e_ax[j] - e_x[j];
    out.y_given_ax[j] = score[j] - e_ax[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// One-step estimator and remainders

OneStep one_step(const Functional& f, const DiscreteMeasure& p_est, const DiscreteMeasure& sample,
                 InfluenceMethod method, const EpsSchedule& schedule) {
  require_same_coords(p_est, sample);
  OneStep out;
  out.plug_in = f(p_est);
  for (std::size_t j = 0; j < sample.size(); ++j) {
    const Point& z = sample.points()[j];
    const double phi = method == InfluenceMethod::ClosedForm ? f.closed_form_influence(p_est, z)
                                                             : gateaux_if(f, p_est, z, schedule).value;
    out.correction += sample.probs()[j] * phi;
  }
  out.estimate = out.plug_in + out.correction;
  return out;
}

double plug_in_remainder(const Functional& f, const DiscreteMeasure& p_true, const DiscreteMeasure& p_est) {
  require_same_coords(p_true, p_est);
  double correction = 0.0;
  for (std::size_t j = 0; j < p_true.size(); ++j) {
    if (p_true.probs()[j] == 0.0) continue;
    correction += p_true.probs()[j] * f.closed_form_influence(p_est, p_true.points()[j]);
  }
  return f(p_est) + correction - f(p_true);
}

SecondOrderRemainder second_order_remainder(const DiscreteMeasure& p_true, const DiscreteMeasure& p_est,
                                            const std::string& treatment, const std::string& outcome) {
  require_same_coords(p_true, p_est);
  const CausalLayout layout_true(p_true, treatment, outcome);
  const CausalLayout layout_est(p_est, treatment, outcome);
  const auto truth = cell_stats(p_true, layout_true, p_true.probs());
  const auto est = cell_stats(p_est, layout_est, p_est.probs());

  SecondOrderRemainder out;
  for (int arm : {0, 1}) {
    double r2 = 0.0, dpi_w = 0.0, dpi = 0.0, dmu = 0.0;
    for (const auto& [key, cell] : truth) {
      if (cell.mass == 0.0) continue;
      if (cell.arm_mass[arm] == 0.0) {
        throw Error(ErrorKind::Positivity, "true measure has zero arm-" + std::to_string(arm) +
                                               " mass in cell " + point_text(key));
      }
      const auto it = est.find(key);
      if (it == est.end() || it->second.mass == 0.0 || it->second.arm_mass[arm] == 0.0) {
        throw Error(ErrorKind::Positivity, "estimated measure has zero arm-" + std::to_string(arm) +
                                               " mass in cell " + point_text(key));
      }
      const double pi = cell.pi(arm);
      const double pi_hat = it->second.pi(arm);
      const double mu_gap = cell.mu(arm) - it->second.mu(arm);
      const double pi_gap = pi - pi_hat;
      r2 += cell.mass * pi_gap * mu_gap / pi_hat;
      dpi_w += cell.mass * (pi_gap / pi_hat) * (pi_gap / pi_hat);
      dpi += cell.mass * pi_gap * pi_gap;
      dmu += cell.mass * mu_gap * mu_gap;
    }
    ArmRemainder& a = arm == 1 ? out.arm1 : out.arm0;
    a.r2 = r2;
    a.bound = std::sqrt(dpi_w) * std::sqrt(dmu);
    a.unweighted_product = std::sqrt(dpi) * std::sqrt(dmu);
  }
  out.r2 = out.arm1.r2 - out.arm0.r2;
  out.bound = out.arm1.bound + out.arm0.bound;
  out.within_bound = std::abs(out.arm1.r2) <= out.arm1.bound + 1e-12 &&
                     std::abs(out.arm0.r2) <= out.arm0.bound + 1e-12 &&
                     std::abs(out.r2) <= out.bound + 1e-12;
  return out;
}

}  // namespace causal::eif
