#ifndef BLOOMQA_SCREENING_HPP
#define BLOOMQA_SCREENING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bloomqa/glmm.hpp"

namespace bloomqa {

// ---------------------------------------------------------------- BH-FDR

// Benjamini-Hochberg step-up: reject the k smallest p-values where k is the
// largest index with p_(k) <= k*q/m.
inline std::vector<bool> bh_fdr(const std::vector<double>& p_values, double q) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return p_values[a] < p_values[b];
  });
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double cutoff = static_cast<double>(i + 1) * q / static_cast<double>(m);
    if (p_values[order[i]] <= cutoff) k = i + 1;
  }
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < k; ++i) reject[order[i]] = true;
  return reject;
}

// --------------------------------------------------------- delta measures

enum class DeltaAggregation {
  // Spread between the extreme fitted Model x Bloom cells of a practice.
  CellRange,
  // Average each model over the four Bloom levels first, then max - min.
  BloomAveraged,
};

inline std::vector<std::string> fit_levels(const GlmmFit& fit,
                                           const std::string& factor) {
  return fit.design.levels().at(factor);
}

// Per-practice discrimination index: spread between the best and worst
// model's fitted correctness probability.
inline double delta_model(const GlmmFit& fit, const std::string& group_id,
                          DeltaAggregation agg = DeltaAggregation::CellRange) {
  const auto& models = fit_levels(fit, "model");
  const auto& blooms = fit_levels(fit, "bloom");
  double lo = 1.0, hi = 0.0;
  for (const auto& m : models) {
    if (agg == DeltaAggregation::CellRange) {
      for (const auto& b : blooms) {
        double p = fit.predict_cell({{"model", m}, {"bloom", b}}, group_id);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
    } else {
      double acc = 0.0;
      for (const auto& b : blooms)
        acc += fit.predict_cell({{"model", m}, {"bloom", b}}, group_id);
      acc /= static_cast<double>(blooms.size());
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
    }
  }
  return hi - lo;
}

// Per-practice Bloom spread: max - min over the four levels of the observed
// correctness rate pooled over models.
inline double delta_bloom(const std::vector<TrialRecord>& trials,
                          const std::string& practice_id) {
  std::array<int, 4> n{}, k{};
  for (const auto& t : trials) {
    if (t.practice_id != practice_id) continue;
    int b = static_cast<int>(t.bloom);
    ++n[static_cast<std::size_t>(b)];
    k[static_cast<std::size_t>(b)] += t.correct ? 1 : 0;
  }
  double lo = 1.0, hi = 0.0;
  for (int b = 0; b < 4; ++b) {
    if (n[static_cast<std::size_t>(b)] == 0)
      throw GlmmError("no trials at bloom level " +
                      bloom_name(static_cast<Bloom>(b)) + " for practice " +
                      practice_id);
    double p = static_cast<double>(k[static_cast<std::size_t>(b)]) /
               n[static_cast<std::size_t>(b)];
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return hi - lo;
}

// -------------------------------------------------------------- screening

struct ScreeningThresholds {
  double chance = 0.20;           // 0.20 for 5-option, 0.25 for 4-option
  double model_cut = 0.20;        // meaningful model separation
  double model_strong = 0.50;     // unusually strong separation
  double bloom_cut = 0.30;        // meaningful bloom differentiation
  double bloom_negligible = 0.10; // bloom labels exert little influence
  DeltaAggregation aggregation = DeltaAggregation::CellRange;
};

struct PracticeScreen {
  std::string practice_id;
  double marginal_prob = 0.0;  // mean fitted probability over model x bloom
  double delta_model = 0.0;
  double delta_bloom = 0.0;
  bool below_chance = false;
};

struct SweepPoint {
  double threshold = 0.0;
  int model_sep_count = 0;
  int bloom_sep_count = 0;
};

struct ScreeningReport {
  std::vector<PracticeScreen> practices;
  std::vector<std::string> flagged;  // below-chance practice ids
  double median_delta_model = 0.0;
  int model_sep_count = 0;     // delta_model >= model_cut
  int model_strong_count = 0;  // delta_model >= model_strong
  int bloom_sep_count = 0;     // delta_bloom >= bloom_cut
  int bloom_negligible_count = 0;
  int union_sep_count = 0;  // model-strong or bloom-separated
  double model_sep_share = 0.0;
  double bloom_sep_share = 0.0;
  std::vector<SweepPoint> sweep;  // threshold grid 0..1
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Per-practice marginal fitted probability: mean of predict_cell over every
// model x bloom combination present in the data.
inline double practice_marginal_prob(const GlmmFit& fit,
                                     const std::string& group_id) {
  const auto& models = fit_levels(fit, "model");
  const auto& blooms = fit_levels(fit, "bloom");
  double acc = 0.0;
  for (const auto& m : models)
    for (const auto& b : blooms)
      acc += fit.predict_cell({{"model", m}, {"bloom", b}}, group_id);
  return acc / static_cast<double>(models.size() * blooms.size());
}

inline ScreeningReport screen_practices(const GlmmFit& fit,
                                        const std::vector<TrialRecord>& trials,
                                        const ScreeningThresholds& thresholds) {
  ScreeningReport report;
  std::vector<double> deltas;
  for (const auto& group_id : fit.design.group_names()) {
    PracticeScreen s;
    s.practice_id = group_id;
    s.marginal_prob = practice_marginal_prob(fit, group_id);
    s.delta_model = delta_model(fit, group_id, thresholds.aggregation);
    // Group ids may be "domain:practice"; delta_bloom keys on practice id.
    std::string practice =
        group_id.substr(group_id.find_last_of(':') == std::string::npos
                            ? 0
                            : group_id.find_last_of(':') + 1);
    s.delta_bloom = delta_bloom(trials, practice);
    s.below_chance = s.marginal_prob < thresholds.chance;
    if (s.below_chance) report.flagged.push_back(group_id);
    deltas.push_back(s.delta_model);
    if (s.delta_model >= thresholds.model_cut) ++report.model_sep_count;
    if (s.delta_model >= thresholds.model_strong) ++report.model_strong_count;
    if (s.delta_bloom >= thresholds.bloom_cut) ++report.bloom_sep_count;
    if (s.delta_bloom <= thresholds.bloom_negligible)
      ++report.bloom_negligible_count;
    if (s.delta_model >= thresholds.model_strong ||
        s.delta_bloom >= thresholds.bloom_cut)
      ++report.union_sep_count;
    report.practices.push_back(std::move(s));
  }
  report.median_delta_model = median_of(deltas);
  double n = static_cast<double>(report.practices.size());
  report.model_sep_share = n > 0 ? report.model_sep_count / n : 0.0;
  report.bloom_sep_share = n > 0 ? report.bloom_sep_count / n : 0.0;
  for (int i = 0; i <= 20; ++i) {
    SweepPoint pt;
    pt.threshold = i * 0.05;
    for (const auto& s : report.practices) {
      if (s.delta_model >= pt.threshold) ++pt.model_sep_count;
      if (s.delta_bloom >= pt.threshold) ++pt.bloom_sep_count;
    }
    report.sweep.push_back(pt);
  }
  return report;
}

// ---------------------------------------------------------- rank stability

struct RankStability {
  double max_shift = 0.0;
  bool ranking_identical = true;
  bool refit_converged = true;
  std::map<std::string, double> accuracy_before;
  std::map<std::string, double> accuracy_after;
};

// Per-model fitted accuracy: trial-weighted mean of the fitted cell
// probabilities over the fit's own data.
inline std::map<std::string, double> model_marginal_accuracy(
    const GlmmFit& fit, const std::vector<TrialRecord>& trials,
    const ModelSpec& spec) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& t : trials) {
    std::map<std::string, std::string> levels;
    for (const auto& f : spec.fixed_factors) levels[f] = factor_value(t, f);
    double p = fit.predict_cell(levels, group_key(t, spec.random_intercept_key));
    auto& a = acc[t.model_id];
    a.first += p;
    a.second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& [m, a] : acc) out[m] = a.first / a.second;
  return out;
}

inline std::vector<std::string> ranking_of(
    const std::map<std::string, double>& accuracy) {
  std::vector<std::string> models;
  for (const auto& [m, _] : accuracy) models.push_back(m);
  std::sort(models.begin(), models.end(),
            [&](const std::string& a, const std::string& b) {
              double da = accuracy.at(a), db = accuracy.at(b);
              return da != db ? da > db : a < b;
            });
  return models;
}

// Refits without the flagged practices and reports the largest per-model
// marginal accuracy shift plus whether the model ranking survived.
inline RankStability rank_stability(const std::vector<TrialRecord>& trials,
                                    const std::vector<std::string>& flagged,
                                    const ModelSpec& spec,
                                    const GlmmOptions& options = {}) {
  RankStability result;
  GlmmFit full = fit_glmm(trials, spec, options);
  result.accuracy_before = model_marginal_accuracy(full, trials, spec);
  if (flagged.empty()) {
    result.accuracy_after = result.accuracy_before;
    return result;
  }
  std::set<std::string> drop(flagged.begin(), flagged.end());
  std::vector<TrialRecord> retained;
  for (const auto& t : trials)
    if (!drop.count(group_key(t, spec.random_intercept_key)))
      retained.push_back(t);
  GlmmFit refit = fit_glmm(retained, spec, options);
  if (!refit.converged) {
    result.refit_converged = false;
    return result;
  }
  result.accuracy_after = model_marginal_accuracy(refit, retained, spec);
  for (const auto& [m, before] : result.accuracy_before) {
    auto it = result.accuracy_after.find(m);
    if (it == result.accuracy_after.end()) continue;
    result.max_shift = std::max(result.max_shift, std::abs(before - it->second));
  }
  result.ranking_identical =
      ranking_of(result.accuracy_before) == ranking_of(result.accuracy_after);
  return result;
}

// ---------------------------------------------------------- residual cells

enum class ResidualGrouping { ModelPractice, ModelPracticeBloom };

struct ResidualCell {
  std::string model_id;
  std::string practice_id;
  std::optional<Bloom> bloom;
  double observed = 0.0;
  double expected = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  bool flagged = false;
  std::string direction;  // "better" | "worse" | ""
};

struct ResidualReport {
  std::vector<ResidualCell> cells;
  int flagged_count = 0;
  int better_count = 0;
  int worse_count = 0;
  int excluded_zero_variance = 0;
};

// Observed-vs-expected fairness check. Cells flag when |z| > 3 AND the
// two-sided p-value survives Benjamini-Hochberg at alpha (the +-3 gate can
// be dropped with require_z_gate = false).
inline ResidualReport residual_cells(const GlmmFit& fit,
                                     const std::vector<TrialRecord>& trials,
                                     ResidualGrouping grouping,
                                     double alpha = 0.05,
                                     bool require_z_gate = true) {
  const ModelSpec& spec = fit.design.spec();
  struct Acc {
    double observed = 0.0, expected = 0.0, variance = 0.0;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> cells;
  for (const auto& t : trials) {
    std::map<std::string, std::string> levels;
    for (const auto& f : spec.fixed_factors) levels[f] = factor_value(t, f);
    double p = fit.predict_cell(levels, group_key(t, spec.random_intercept_key));
    int b = grouping == ResidualGrouping::ModelPracticeBloom
                ? static_cast<int>(t.bloom)
                : -1;
    auto& acc = cells[{t.model_id, t.practice_id, b}];
    acc.observed += t.correct ? 1.0 : 0.0;
    acc.expected += p;
    acc.variance += p * (1.0 - p);
  }

  ResidualReport report;
  std::vector<double> p_values;
  for (const auto& [key, acc] : cells) {
    if (acc.variance <= 0.0) {
      ++report.excluded_zero_variance;
      continue;
    }
    ResidualCell cell;
    cell.model_id = std::get<0>(key);
    cell.practice_id = std::get<1>(key);
    if (std::get<2>(key) >= 0) cell.bloom = static_cast<Bloom>(std::get<2>(key));
    cell.observed = acc.observed;
    cell.expected = acc.expected;
    cell.variance = acc.variance;
    cell.z = (acc.observed - acc.expected) / std::sqrt(acc.variance);
    cell.p_value = std::erfc(std::abs(cell.z) / std::sqrt(2.0));
    p_values.push_back(cell.p_value);
    report.cells.push_back(std::move(cell));
  }
  auto reject = bh_fdr(p_values, alpha);
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    auto& cell = report.cells[i];
    bool z_ok = !require_z_gate || std::abs(cell.z) > 3.0;
    cell.flagged = z_ok && reject[i];
    if (cell.flagged) {
      ++report.flagged_count;
      cell.direction = cell.z > 0 ? "better" : "worse";
      if (cell.z > 0)
        ++report.better_count;
      else
        ++report.worse_count;
    }
  }
  return report;
}

// ------------------------------------------------------------------- BHPR

struct BhprResult {
  // sgs[i][j] = P(correct at level j | correct at level i), pairing trials
  // by (model, scenario); sgf conditions on failure at level i. Entries
  // with an empty conditioning set stay unset.
  std::array<std::array<std::optional<double>, 4>, 4> sgs;
  std::array<std::array<std::optional<double>, 4>, 4> sgf;
  std::array<std::array<int, 4>, 4> sgs_pairs{};
  std::array<std::array<int, 4>, 4> sgf_pairs{};
  // Directional means over defined off-diagonal entries.
  std::optional<double> sgs_lower_to_higher, sgs_higher_to_lower;
  std::optional<double> sgf_lower_to_higher, sgf_higher_to_lower;
};

// Default scenario key: the mcq id with its own "_<Bloom>" suffix stripped,
// which matches the generator's id scheme. Pass an explicit map otherwise.
inline std::string scenario_key_of(const TrialRecord& t) {
  std::string suffix = "_" + bloom_name(t.bloom);
  if (t.mcq_id.size() > suffix.size() &&
      t.mcq_id.compare(t.mcq_id.size() - suffix.size(), suffix.size(),
                       suffix) == 0)
    return t.mcq_id.substr(0, t.mcq_id.size() - suffix.size());
  return t.mcq_id;
}

inline BhprResult bhpr(
    const std::vector<TrialRecord>& trials,
    const std::map<std::string, std::string>& scenario_by_mcq = {}) {
  // (model, scenario) -> outcome per level, if observed.
  std::map<std::pair<std::string, std::string>,
           std::array<std::optional<bool>, 4>>
      outcomes;
  for (const auto& t : trials) {
    std::string scenario = scenario_by_mcq.empty()
                               ? scenario_key_of(t)
                               : scenario_by_mcq.at(t.mcq_id);
    outcomes[{t.model_id, scenario}][static_cast<std::size_t>(t.bloom)] =
        t.correct;
  }

  std::array<std::array<int, 4>, 4> sgs_hit{}, sgf_hit{};
  BhprResult result;
  for (const auto& [key, o] : outcomes) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i == j) continue;
        const auto &oi = o[static_cast<std::size_t>(i)],
                   &oj = o[static_cast<std::size_t>(j)];
        if (!oi.has_value() || !oj.has_value()) continue;
        if (*oi) {
          ++result.sgs_pairs[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j)];
          if (*oj)
            ++sgs_hit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        } else {
          ++result.sgf_pairs[static_cast<std::size_t>(i)]
                            [static_cast<std::size_t>(j)];
          if (*oj)
            ++sgf_hit[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
      }
    }
  }
  double sgs_lh = 0.0, sgs_hl = 0.0, sgf_lh = 0.0, sgf_hl = 0.0;
  int sgs_lh_n = 0, sgs_hl_n = 0, sgf_lh_n = 0, sgf_hl_n = 0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      auto si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
      if (result.sgs_pairs[si][sj] > 0) {
        double r = static_cast<double>(sgs_hit[si][sj]) /
                   result.sgs_pairs[si][sj];
        result.sgs[si][sj] = r;
        (i < j ? sgs_lh : sgs_hl) += r;
        ++(i < j ? sgs_lh_n : sgs_hl_n);
      }
      if (result.sgf_pairs[si][sj] > 0) {
        double r = static_cast<double>(sgf_hit[si][sj]) /
                   result.sgf_pairs[si][sj];
        result.sgf[si][sj] = r;
        (i < j ? sgf_lh : sgf_hl) += r;
        ++(i < j ? sgf_lh_n : sgf_hl_n);
      }
    }
  }
  if (sgs_lh_n) result.sgs_lower_to_higher = sgs_lh / sgs_lh_n;
  if (sgs_hl_n) result.sgs_higher_to_lower = sgs_hl / sgs_hl_n;
  if (sgf_lh_n) result.sgf_lower_to_higher = sgf_lh / sgf_lh_n;
  if (sgf_hl_n) result.sgf_higher_to_lower = sgf_hl / sgf_hl_n;
  return result;
}

// ---------------------------------------------------------------------- LRT

struct LrtResult {
  double delta_chi2 = 0.0;
  int df = 0;
  double p = 1.0;
};

inline LrtResult likelihood_ratio_test(const GlmmFit& fit_null,
                                       const GlmmFit& fit_alt) {
  if (fit_null.design.spec().random_intercept_key !=
      fit_alt.design.spec().random_intercept_key)
    throw GlmmError("LRT requires the same random-intercept structure");
  std::set<std::string> alt_terms(fit_alt.coef_names().begin(),
                                  fit_alt.coef_names().end());
  for (const auto& term : fit_null.coef_names())
    if (!alt_terms.count(term))
      throw GlmmError("models are not nested: null term '" + term +
                      "' absent from alternative");
  LrtResult result;
  result.delta_chi2 = std::max(0.0, 2.0 * (fit_alt.loglik - fit_null.loglik));
  result.df = fit_alt.n_parameters - fit_null.n_parameters;
  if (result.df > 0 && result.delta_chi2 > 0.0)
    result.p = boost::math::gamma_q(result.df / 2.0, result.delta_chi2 / 2.0);
  else
    result.p = 1.0;
  return result;
}

}  // namespace bloomqa

#endif  // BLOOMQA_SCREENING_HPP
