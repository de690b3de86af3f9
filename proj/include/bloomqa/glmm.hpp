#ifndef BLOOMQA_GLMM_HPP
#define BLOOMQA_GLMM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bloomqa/corpus.hpp"

namespace bloomqa {

struct GlmmError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------- model spec

struct ModelSpec {
  // Categorical fixed factors in order, e.g. {"model", "bloom", "domain"}.
  std::vector<std::string> fixed_factors{"model", "bloom"};
  // Reference level per factor; defaults to the first level in sorted order.
  std::map<std::string, std::string> reference_levels;
  // Pairwise interaction terms, e.g. {{"model", "domain"}}.
  std::vector<std::pair<std::string, std::string>> interactions;
  // Grouping field for the random intercept: "practice" or
  // "domain:practice".
  std::string random_intercept_key = "practice";
};

inline std::string factor_value(const TrialRecord& t, const std::string& f) {
  if (f == "model") return t.model_id;
  if (f == "bloom") return bloom_name(t.bloom);
  if (f == "domain") return domain_name(t.domain);
  if (f == "practice") return t.practice_id;
  throw GlmmError("unknown factor: " + f);
}

inline std::string group_key(const TrialRecord& t, const std::string& key) {
  std::string out;
  std::size_t start = 0;
  while (start <= key.size()) {
    std::size_t colon = key.find(':', start);
    std::string f = key.substr(start, colon == std::string::npos
                                          ? std::string::npos
                                          : colon - start);
    if (!out.empty()) out += ':';
    out += factor_value(t, f);
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  return out;
}

// ---------------------------------------------------------- design layout

// Treatment-coded design built from the trials. Identical covariate rows
// within a group are aggregated into binomial cells, which keeps likelihood
// evaluations cheap at the 10^4-trial scale.
class GlmmDesign {
public:
  GlmmDesign() = default;

  GlmmDesign(const std::vector<TrialRecord>& trials, const ModelSpec& spec)
      : spec_(spec) {
    if (trials.empty()) throw GlmmError("no trials");
    for (const auto& f : spec.fixed_factors) {
      std::set<std::string> levels;
      for (const auto& t : trials) levels.insert(factor_value(t, f));
      if (levels.size() < 2)
        throw GlmmError("factor '" + f + "' has fewer than 2 levels");
      std::string ref;
      auto it = spec.reference_levels.find(f);
      if (it != spec.reference_levels.end()) {
        if (!levels.count(it->second))
          throw GlmmError("reference level '" + it->second +
                          "' absent from data for factor '" + f + "'");
        ref = it->second;
      } else {
        ref = *levels.begin();
      }
      levels_[f] = std::vector<std::string>(levels.begin(), levels.end());
      refs_[f] = ref;
    }

    // Main-effect columns, then interaction columns.
    for (const auto& f : spec.fixed_factors)
      for (const auto& level : levels_[f])
        if (level != refs_[f]) {
          col_index_[f + ":" + level] = static_cast<int>(coef_names_.size());
          coef_names_.push_back(f + ":" + level);
        }
    for (const auto& [f1, f2] : spec.interactions) {
      if (!levels_.count(f1) || !levels_.count(f2))
        throw GlmmError("interaction references unknown factor");
      for (const auto& l1 : levels_[f1])
        for (const auto& l2 : levels_[f2]) {
          if (l1 == refs_[f1] || l2 == refs_[f2]) continue;
          std::string name = f1 + ":" + l1 + "*" + f2 + ":" + l2;
          col_index_[name] = static_cast<int>(coef_names_.size());
          coef_names_.push_back(name);
        }
    }

    // Group indexing.
    for (const auto& t : trials) {
      std::string g = group_key(t, spec.random_intercept_key);
      if (!group_index_.count(g)) {
        group_index_[g] = static_cast<int>(group_names_.size());
        group_names_.push_back(g);
      }
    }

    // Binomial cell aggregation.
    std::map<std::pair<int, std::vector<int>>, std::pair<int, int>> agg;
    for (const auto& t : trials) {
      int g = group_index_.at(group_key(t, spec.random_intercept_key));
      std::vector<int> cols = active_columns_for(t);
      auto& cell = agg[{g, cols}];
      cell.first += 1;
      cell.second += t.correct ? 1 : 0;
    }
    cells_by_group_.resize(group_names_.size());
    for (const auto& [key, counts] : agg) {
      Cell c;
      c.cols = key.second;
      c.n = counts.first;
      c.k = counts.second;
      cells_by_group_[static_cast<std::size_t>(key.first)].push_back(c);
    }
  }

  struct Cell {
    std::vector<int> cols;  // active (value 1) design columns
    int n = 0;              // trials in cell
    int k = 0;              // correct trials
  };

  int n_coef() const { return static_cast<int>(coef_names_.size()); }
  int n_groups() const { return static_cast<int>(group_names_.size()); }
  const std::vector<std::string>& coef_names() const { return coef_names_; }
  const std::vector<std::string>& group_names() const { return group_names_; }
  const std::vector<std::vector<Cell>>& cells_by_group() const {
    return cells_by_group_;
  }
  const std::map<std::string, std::vector<std::string>>& levels() const {
    return levels_;
  }
  const std::map<std::string, std::string>& references() const { return refs_; }
  const ModelSpec& spec() const { return spec_; }

  int column(const std::string& name) const {
    auto it = col_index_.find(name);
    if (it == col_index_.end()) throw GlmmError("unknown coefficient: " + name);
    return it->second;
  }

  // Active columns for a concrete factor-level assignment.
  std::vector<int> active_columns(
      const std::map<std::string, std::string>& assignment) const {
    std::vector<int> cols;
    for (const auto& f : spec_.fixed_factors) {
      auto it = assignment.find(f);
      if (it == assignment.end())
        throw GlmmError("missing level for factor '" + f + "'");
      const auto& lv = levels_.at(f);
      if (std::find(lv.begin(), lv.end(), it->second) == lv.end())
        throw GlmmError("unknown level '" + it->second + "' for factor '" +
                        f + "'");
      if (it->second != refs_.at(f))
        cols.push_back(col_index_.at(f + ":" + it->second));
    }
    for (const auto& [f1, f2] : spec_.interactions) {
      const std::string &l1 = assignment.at(f1), &l2 = assignment.at(f2);
      if (l1 != refs_.at(f1) && l2 != refs_.at(f2))
        cols.push_back(col_index_.at(f1 + ":" + l1 + "*" + f2 + ":" + l2));
    }
    std::sort(cols.begin(), cols.end());
    return cols;
  }

private:
  std::vector<int> active_columns_for(const TrialRecord& t) const {
    std::map<std::string, std::string> assignment;
    for (const auto& f : spec_.fixed_factors)
      assignment[f] = factor_value(t, f);
    return active_columns(assignment);
  }

  ModelSpec spec_;
  std::map<std::string, std::vector<std::string>> levels_;
  std::map<std::string, std::string> refs_;
  std::vector<std::string> coef_names_;
  std::map<std::string, int> col_index_;
  std::map<std::string, int> group_index_;
  std::vector<std::string> group_names_;
  std::vector<std::vector<Cell>> cells_by_group_;
};

// ----------------------------------------------------------- quadrature

// Gauss-Hermite nodes/weights via the Golub-Welsch tridiagonal eigenproblem.
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd log_weights;  // log w_j + x_j^2, the adaptive-form term

  static const GaussHermite& get(int n) {
    static std::map<int, GaussHermite> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
      double b = std::sqrt(i / 2.0);
      jacobi(i, i - 1) = b;
      jacobi(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussHermite gh;
    gh.nodes = solver.eigenvalues();
    gh.log_weights.resize(n);
    const double log_sqrt_pi = 0.5 * std::log(M_PI);
    for (int j = 0; j < n; ++j) {
      double v0 = solver.eigenvectors()(0, j);
      gh.log_weights[j] =
          std::log(v0 * v0) + log_sqrt_pi + gh.nodes[j] * gh.nodes[j];
    }
    return cache.emplace(n, std::move(gh)).first->second;
  }
};

inline double logistic(double eta) {
  if (eta > 35.0) eta = 35.0;
  if (eta < -35.0) eta = -35.0;
  return 1.0 / (1.0 + std::exp(-eta));
}

// ------------------------------------------------------------ likelihood

struct GlmmParams {
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double log_sigma = 0.0;

  Eigen::VectorXd pack() const {
    Eigen::VectorXd v(beta.size() + 2);
    v[0] = beta0;
    v.segment(1, beta.size()) = beta;
    v[v.size() - 1] = log_sigma;
    return v;
  }
  static GlmmParams unpack(const Eigen::VectorXd& v) {
    GlmmParams p;
    p.beta0 = v[0];
    p.beta = v.segment(1, v.size() - 2);
    p.log_sigma = v[v.size() - 1];
    return p;
  }
};

// Marginal log-likelihood machinery. The 1-D group integrals are evaluated
// with adaptive Gauss-Hermite quadrature centered at the per-group posterior
// mode; the exact factorization over groups is exploited throughout.
class GlmmProblem {
public:
  GlmmProblem(const std::vector<TrialRecord>& trials, const ModelSpec& spec)
      : design_(trials, spec) {}
  explicit GlmmProblem(GlmmDesign design) : design_(std::move(design)) {}

  const GlmmDesign& design() const { return design_; }

  // Conditional binomial log-likelihood of one group given intercept u.
  double group_cond_loglik(int g, const Eigen::VectorXd& theta,
                           double u) const {
    double ll = 0.0;
    const auto& cells = design_.cells_by_group()[static_cast<std::size_t>(g)];
    for (const auto& c : cells) {
      double eta = theta[0] + u;
      for (int col : c.cols) eta += theta[col + 1];
      double p = logistic(eta);
      ll += c.k * std::log(p) + (c.n - c.k) * std::log1p(-p);
    }
    return ll;
  }

  // Posterior mode of u for one group (Newton on the concave objective)
  // and the curvature at the mode.
  void group_mode(int g, const Eigen::VectorXd& theta, double sigma,
                  double& mode, double& neg_h2) const {
    const auto& cells = design_.cells_by_group()[static_cast<std::size_t>(g)];
    double u = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
      double g1 = -u / (sigma * sigma);
      double g2 = -1.0 / (sigma * sigma);
      for (const auto& c : cells) {
        double eta = theta[0] + u;
        for (int col : c.cols) eta += theta[col + 1];
        double p = logistic(eta);
        g1 += c.k - c.n * p;
        g2 -= c.n * p * (1.0 - p);
      }
      double step = -g1 / g2;
      if (step > 2.0) step = 2.0;
      if (step < -2.0) step = -2.0;
      u += step;
      if (std::abs(step) < 1e-12) break;
    }
    double h2 = -1.0 / (sigma * sigma);
    for (const auto& c : cells) {
      double eta = theta[0] + u;
      for (int col : c.cols) eta += theta[col + 1];
      double p = logistic(eta);
      h2 -= c.n * p * (1.0 - p);
    }
    mode = u;
    neg_h2 = -h2;
  }

  // Marginal log-likelihood at packed parameters (beta0, beta, log_sigma).
  double loglik(const Eigen::VectorXd& theta_full, int quad_nodes,
                bool sigma_zero = false,
                std::vector<double>* modes_out = nullptr) const {
    Eigen::VectorXd theta = theta_full.head(theta_full.size() - 1);
    double total = 0.0;
    if (sigma_zero) {
      for (int g = 0; g < design_.n_groups(); ++g) {
        total += group_cond_loglik(g, theta, 0.0);
        if (modes_out) (*modes_out)[static_cast<std::size_t>(g)] = 0.0;
      }
      return total;
    }
    if (quad_nodes < 1) throw GlmmError("quad_nodes must be >= 1");
    double sigma = std::exp(theta_full[theta_full.size() - 1]);
    const auto& gh = GaussHermite::get(quad_nodes);
    const double log_norm = -0.5 * std::log(2.0 * M_PI) - std::log(sigma);
    for (int g = 0; g < design_.n_groups(); ++g) {
      double mode, neg_h2;
      group_mode(g, theta, sigma, mode, neg_h2);
      double tau = 1.0 / std::sqrt(neg_h2);
      double scale = std::log(std::sqrt(2.0) * tau);
      double max_term = -std::numeric_limits<double>::infinity();
      std::vector<double> terms(static_cast<std::size_t>(quad_nodes));
      for (int j = 0; j < quad_nodes; ++j) {
        double u = mode + std::sqrt(2.0) * tau * gh.nodes[j];
        double h = group_cond_loglik(g, theta, u) + log_norm -
                   u * u / (2.0 * sigma * sigma);
        terms[static_cast<std::size_t>(j)] = gh.log_weights[j] + h;
        max_term = std::max(max_term, terms[static_cast<std::size_t>(j)]);
      }
      double sum = 0.0;
      for (double t : terms) sum += std::exp(t - max_term);
      double group_ll = scale + max_term + std::log(sum);
      if (!std::isfinite(group_ll))
        throw GlmmError("non-finite marginal likelihood for group '" +
                        design_.group_names()[static_cast<std::size_t>(g)] +
                        "'");
      total += group_ll;
      if (modes_out) (*modes_out)[static_cast<std::size_t>(g)] = mode;
    }
    return total;
  }

  // Gradient of the marginal log-likelihood, by differentiating under the
  // integral sign with the same adaptive rule:
  //   d/d beta_p  = E_post[ sum_cells x_p (k - n p(u)) ]
  //   d/d log_sig = E_post[ u^2 / sigma^2 - 1 ]
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta_full, int quad_nodes,
                           bool sigma_zero = false) const {
    const int P = static_cast<int>(theta_full.size()) - 2;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_full.size());
    Eigen::VectorXd theta = theta_full.head(theta_full.size() - 1);

    if (sigma_zero) {
      for (int g = 0; g < design_.n_groups(); ++g) {
        const auto& cells =
            design_.cells_by_group()[static_cast<std::size_t>(g)];
        for (const auto& c : cells) {
          double eta = theta[0];
          for (int col : c.cols) eta += theta[col + 1];
          double resid = c.k - c.n * logistic(eta);
          grad[0] += resid;
          for (int col : c.cols) grad[col + 1] += resid;
        }
      }
      return grad;
    }

    double sigma = std::exp(theta_full[theta_full.size() - 1]);
    const auto& gh = GaussHermite::get(quad_nodes);
    const double log_norm = -0.5 * std::log(2.0 * M_PI) - std::log(sigma);
    for (int g = 0; g < design_.n_groups(); ++g) {
      double mode, neg_h2;
      group_mode(g, theta, sigma, mode, neg_h2);
      double tau = 1.0 / std::sqrt(neg_h2);
      const auto& cells = design_.cells_by_group()[static_cast<std::size_t>(g)];

      std::vector<double> log_terms(static_cast<std::size_t>(quad_nodes));
      std::vector<Eigen::VectorXd> node_grads(
          static_cast<std::size_t>(quad_nodes));
      double max_term = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < quad_nodes; ++j) {
        double u = mode + std::sqrt(2.0) * tau * gh.nodes[j];
        double h = group_cond_loglik(g, theta, u) + log_norm -
                   u * u / (2.0 * sigma * sigma);
        log_terms[static_cast<std::size_t>(j)] = gh.log_weights[j] + h;
        max_term = std::max(max_term, log_terms[static_cast<std::size_t>(j)]);

        Eigen::VectorXd ng = Eigen::VectorXd::Zero(P + 2);
        for (const auto& c : cells) {
          double eta = theta[0] + u;
          for (int col : c.cols) eta += theta[col + 1];
          double resid = c.k - c.n * logistic(eta);
          ng[0] += resid;
          for (int col : c.cols) ng[col + 1] += resid;
        }
        ng[P + 1] = u * u / (sigma * sigma) - 1.0;
        node_grads[static_cast<std::size_t>(j)] = std::move(ng);
      }
      double denom = 0.0;
      Eigen::VectorXd numer = Eigen::VectorXd::Zero(P + 2);
      for (int j = 0; j < quad_nodes; ++j) {
        double w = std::exp(log_terms[static_cast<std::size_t>(j)] - max_term);
        denom += w;
        numer += w * node_grads[static_cast<std::size_t>(j)];
      }
      grad += numer / denom;
    }
    return grad;
  }

private:
  GlmmDesign design_;
};

// Spec-level entry point: marginal log-likelihood at explicit parameters.
inline double marginal_loglik(const GlmmParams& params,
                              const std::vector<TrialRecord>& trials,
                              const ModelSpec& spec, int quad_nodes) {
  GlmmProblem problem(trials, spec);
  if (problem.design().n_coef() != params.beta.size())
    throw GlmmError("coefficient count mismatch");
  return problem.loglik(params.pack(), quad_nodes);
}

// ------------------------------------------------------------------- fit

struct GlmmOptions {
  int quad_nodes = 15;
  int max_iterations = 500;
  double grad_tol = 1e-6;       // max-norm convergence tolerance
  // A stalled line search still counts as converged below this gradient
  // max-norm: near the optimum the Armijo improvement drops under the
  // floating-point resolution of a log-likelihood of magnitude ~1e4.
  double stall_tol = 1e-3;
  double coef_cap = 15.0;       // separation guard on |beta|, |beta0|
  bool fix_sigma_zero = false;  // degenerate no-random-effect fit
  double log_sigma_init = 0.0;
};

struct GlmmFit {
  GlmmDesign design;
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double sigma = 0.0;
  Eigen::VectorXd standard_errors;  // aligned with (beta0, beta...)
  std::map<std::string, double> blup;
  double loglik = 0.0;
  bool converged = false;
  int n_iterations = 0;
  int n_parameters = 0;  // optimized parameter count (incl. log_sigma)
  std::vector<std::string> warnings;

  const std::vector<std::string>& coef_names() const {
    return design.coef_names();
  }

  double coefficient(const std::string& name) const {
    return beta[design.column(name)];
  }

  // logistic(beta0 + sum of active coefficients + blup[group]).
  double predict_cell(const std::map<std::string, std::string>& levels,
                      const std::string& group_id) const {
    auto it = blup.find(group_id);
    if (it == blup.end()) throw GlmmError("unknown group: " + group_id);
    double eta = beta0 + it->second;
    for (int col : design.active_columns(levels)) eta += beta[col];
    return logistic(eta);
  }
};

// Detects factor levels whose outcomes are all-correct or all-incorrect.
inline std::vector<std::string> separation_warnings(
    const std::vector<TrialRecord>& trials, const ModelSpec& spec) {
  std::vector<std::string> warnings;
  for (const auto& f : spec.fixed_factors) {
    std::map<std::string, std::pair<int, int>> tally;  // level -> (n, k)
    for (const auto& t : trials) {
      auto& c = tally[factor_value(t, f)];
      c.first += 1;
      c.second += t.correct ? 1 : 0;
    }
    for (const auto& [level, c] : tally)
      if (c.second == 0 || c.second == c.first)
        warnings.push_back("separation: " + f + ":" + level + " is all-" +
                           (c.second == 0 ? "incorrect" : "correct"));
  }
  return warnings;
}

// Maximizes the marginal likelihood with BFGS (on the negative log-
// likelihood) plus a backtracking Armijo line search. Standard errors come
// from the inverse observed information at the optimum; BLUPs are the
// per-group posterior modes.
inline GlmmFit fit_glmm(const std::vector<TrialRecord>& trials,
                        const ModelSpec& spec, const GlmmOptions& options = {}) {
  GlmmProblem problem(trials, spec);
  const GlmmDesign& design = problem.design();
  const int P = design.n_coef();
  const int dim = P + 2;

  // Init: intercept at the logit of the pooled rate, slopes at zero.
  long total_n = 0, total_k = 0;
  for (const auto& t : trials) {
    ++total_n;
    total_k += t.correct ? 1 : 0;
  }
  double rate = std::clamp(static_cast<double>(total_k) /
                               static_cast<double>(total_n),
                           1e-3, 1.0 - 1e-3);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  theta[0] = std::log(rate / (1.0 - rate));
  theta[dim - 1] = options.log_sigma_init;

  const bool sz = options.fix_sigma_zero;
  auto clamp_theta = [&](Eigen::VectorXd& v) {
    for (int i = 0; i < dim - 1; ++i)
      v[i] = std::clamp(v[i], -options.coef_cap, options.coef_cap);
    v[dim - 1] = std::clamp(v[dim - 1], -10.0, 5.0);
  };

  auto value = [&](const Eigen::VectorXd& v) {
    try {
      return problem.loglik(v, options.quad_nodes, sz);
    } catch (const GlmmError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto grad_fn = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd g = problem.gradient(v, options.quad_nodes, sz);
    if (sz) g[dim - 1] = 0.0;
    return g;
  };

  double f = value(theta);
  Eigen::VectorXd g = grad_fn(theta);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);  // inverse Hessian
  int iter = 0;
  bool converged = false;
  bool stalled_once = false;
  for (; iter < options.max_iterations; ++iter) {
    double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < options.grad_tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd direction = H * g;  // ascent direction
    if (direction.dot(g) <= 0.0) {
      H = Eigen::MatrixXd::Identity(dim, dim);
      direction = g;
    }
    double step = 1.0;
    Eigen::VectorXd theta_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      theta_new = theta + step * direction;
      clamp_theta(theta_new);
      f_new = value(theta_new);
      if (std::isfinite(f_new) &&
          f_new >= f + 1e-4 * step * direction.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Stall: retry once along the raw gradient in case the BFGS
      // approximation went bad; a second stall ends the search.
      if (!stalled_once) {
        stalled_once = true;
        H = Eigen::MatrixXd::Identity(dim, dim);
        continue;
      }
      if (gnorm < options.stall_tol) converged = true;
      break;
    }
    stalled_once = false;

    Eigen::VectorXd g_new = grad_fn(theta_new);
    Eigen::VectorXd s = theta_new - theta;
    Eigen::VectorXd y = g - g_new;  // gradient of the *negative* loglik
    double sy = s.dot(y);
    if (sy > 1e-12) {
      Eigen::VectorXd Hy = H * y;
      H += ((sy + y.dot(Hy)) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    theta = theta_new;
    f = f_new;
    g = g_new;
  }

  GlmmFit fit;
  fit.design = design;
  GlmmParams params = GlmmParams::unpack(theta);
  fit.beta0 = params.beta0;
  fit.beta = params.beta;
  fit.sigma = sz ? 0.0 : std::exp(params.log_sigma);
  fit.loglik = f;
  fit.converged = converged;
  fit.n_iterations = iter;
  fit.n_parameters = sz ? P + 1 : P + 2;
  fit.warnings = separation_warnings(trials, spec);

  // BLUPs: posterior modes at the optimum.
  std::vector<double> modes(static_cast<std::size_t>(design.n_groups()), 0.0);
  problem.loglik(theta, options.quad_nodes, sz, &modes);
  for (int gidx = 0; gidx < design.n_groups(); ++gidx)
    fit.blup[design.group_names()[static_cast<std::size_t>(gidx)]] =
        modes[static_cast<std::size_t>(gidx)];

  // Observed information via central differences of the analytic gradient.
  const int se_dim = sz ? P + 1 : dim;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(se_dim, se_dim);
  const double h = 1e-5;
  for (int i = 0; i < se_dim; ++i) {
    Eigen::VectorXd tp = theta, tm = theta;
    tp[i] += h;
    tm[i] -= h;
    Eigen::VectorXd gp = grad_fn(tp), gm = grad_fn(tm);
    for (int j = 0; j < se_dim; ++j)
      info(i, j) = -(gp[j] - gm[j]) / (2.0 * h);
  }
  info = 0.5 * (info + info.transpose().eval());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  fit.standard_errors = Eigen::VectorXd::Constant(P + 1,
      std::numeric_limits<double>::quiet_NaN());
  if (lu.isInvertible()) {
    Eigen::MatrixXd cov = lu.inverse();
    for (int i = 0; i <= P; ++i)
      fit.standard_errors[i] = cov(i, i) > 0.0 ? std::sqrt(cov(i, i))
                                               : std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.warnings.push_back("observed information singular; no standard errors");
  }
  return fit;
}

}  // namespace bloomqa

#endif  // BLOOMQA_GLMM_HPP
