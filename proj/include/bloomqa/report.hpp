#ifndef BLOOMQA_REPORT_HPP
#define BLOOMQA_REPORT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bloomqa/corpus.hpp"
#include "bloomqa/screening.hpp"
#include "bloomqa/text.hpp"

namespace bloomqa {

inline constexpr const char* kToolVersion = "0.1.0";

// ------------------------------------------------------------- formatting

// Fixed numeric formats keep every report diffable: 6 significant digits
// for statistics, 3 decimals for accuracy tables.
inline std::string format_sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string format_acc3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// --------------------------------------------------------- accuracy table

// Tab-separated table: rows = models, columns = the four Bloom levels plus
// the average across them; the best cell per column is starred. The null
// rate (answers the parser could not read) is surfaced per model so a
// misbehaving parser is visible.
inline std::string render_accuracy_table(
    const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw std::runtime_error("accuracy table: no trials");
  struct Tally {
    std::array<int, 4> n{}, k{};
    int total = 0, nulls = 0;
  };
  std::map<std::string, Tally> rows;
  for (const auto& t : trials) {
    auto& r = rows[t.model_id];
    auto b = static_cast<std::size_t>(t.bloom);
    ++r.n[b];
    r.k[b] += t.correct ? 1 : 0;
    ++r.total;
    if (!t.chosen_label.has_value()) ++r.nulls;
  }

  std::map<std::string, std::array<double, 5>> values;  // 4 blooms + avg
  for (const auto& [model, r] : rows) {
    std::array<double, 5> v{};
    double sum = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      v[b] = r.n[b] > 0 ? static_cast<double>(r.k[b]) / r.n[b] : 0.0;
      sum += v[b];
    }
    v[4] = sum / 4.0;
    values[model] = v;
  }
  // Column maxima are compared at printed precision so ties mark together.
  std::array<std::string, 5> col_max;
  for (std::size_t c = 0; c < 5; ++c) {
    for (const auto& [_, v] : values) {
      std::string s = format_acc3(v[c]);
      if (col_max[c].empty() || s > col_max[c]) col_max[c] = s;
    }
  }

  std::ostringstream out;
  out << "model\tremember\tunderstand\tapply\tanalyze\tavg\tnull_rate\n";
  for (const auto& [model, v] : values) {
    out << model;
    for (std::size_t c = 0; c < 5; ++c) {
      std::string s = format_acc3(v[c]);
      out << '\t' << s << (s == col_max[c] ? "*" : "");
    }
    const auto& r = rows.at(model);
    out << '\t'
        << format_acc3(r.total > 0 ? static_cast<double>(r.nulls) / r.total
                                   : 0.0)
        << '\n';
  }
  return out.str();
}

// --------------------------------------------------------- scatter data

// One point per residual cell: (expected, observed, status). Status is
// "ok" unless the cell was flagged, in which case it carries the flag
// direction ("better" / "worse").
inline std::string render_scatter_data(const ResidualReport& report) {
  std::ostringstream out;
  out << "model\tpractice\tbloom\texpected\tobserved\tstatus\n";
  for (const auto& c : report.cells) {
    out << c.model_id << '\t' << c.practice_id << '\t'
        << (c.bloom.has_value() ? bloom_name(*c.bloom) : "all") << '\t'
        << format_sig6(c.expected) << '\t' << format_sig6(c.observed) << '\t'
        << (c.flagged ? c.direction : "ok") << '\n';
  }
  return out.str();
}

// Minimal SVG of observed-vs-expected cells with the identity diagonal;
// behind a flag in the CLI to keep the default outputs plain-text.
inline std::string render_scatter_svg(const ResidualReport& report) {
  double max_val = 1.0;
  for (const auto& c : report.cells)
    max_val = std::max({max_val, c.expected, c.observed});
  const double size = 480.0, margin = 40.0;
  auto sx = [&](double v) { return margin + v / max_val * (size - 2 * margin); };
  auto sy = [&](double v) {
    return size - margin - v / max_val * (size - 2 * margin);
  };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" "
         "height=\"480\" viewBox=\"0 0 480 480\">\n";
  out << "<line x1=\"" << format_sig6(sx(0)) << "\" y1=\"" << format_sig6(sy(0))
      << "\" x2=\"" << format_sig6(sx(max_val)) << "\" y2=\""
      << format_sig6(sy(max_val)) << "\" stroke=\"#888\"/>\n";
  for (const auto& c : report.cells) {
    const char* fill = !c.flagged ? "#3366cc"
                       : c.direction == "better" ? "#33aa55"
                                                 : "#cc3333";
    out << "<circle cx=\"" << format_sig6(sx(c.expected)) << "\" cy=\""
        << format_sig6(sy(c.observed)) << "\" r=\"3\" fill=\"" << fill
        << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// ------------------------------------------------------------ fit summary

inline double coef_p_value(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

inline std::string render_fit_summary(const GlmmFit& fit) {
  std::ostringstream out;
  out << "term\testimate\tse\tz\tp\n";
  auto row = [&](const std::string& name, double est, double se) {
    out << name << '\t' << format_sig6(est) << '\t';
    if (std::isfinite(se) && se > 0.0) {
      double z = est / se;
      out << format_sig6(se) << '\t' << format_sig6(z) << '\t'
          << format_sig6(coef_p_value(z));
    } else {
      out << "NA\tNA\tNA";
    }
    out << '\n';
  };
  row("(intercept)", fit.beta0, fit.standard_errors.size() > 0
                                    ? fit.standard_errors[0]
                                    : std::nan(""));
  const auto& names = fit.coef_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    row(names[i], fit.beta[static_cast<Eigen::Index>(i)],
        fit.standard_errors.size() > static_cast<Eigen::Index>(i + 1)
            ? fit.standard_errors[static_cast<Eigen::Index>(i + 1)]
            : std::nan(""));
  out << "sigma\t" << format_sig6(fit.sigma) << "\tNA\tNA\tNA\n";
  out << "# loglik " << format_sig6(fit.loglik) << '\n';
  out << "# converged " << (fit.converged ? "true" : "false") << '\n';
  out << "# iterations " << fit.n_iterations << '\n';
  for (const auto& w : fit.warnings) out << "# warning " << w << '\n';
  return out.str();
}

// --------------------------------------------------------- screening file

inline std::string render_screening_report(const ScreeningReport& report) {
  std::ostringstream out;
  out << "practice\tmarginal_prob\tdelta_model\tdelta_bloom\tbelow_chance\n";
  for (const auto& s : report.practices)
    out << s.practice_id << '\t' << format_sig6(s.marginal_prob) << '\t'
        << format_sig6(s.delta_model) << '\t' << format_sig6(s.delta_bloom)
        << '\t' << (s.below_chance ? "yes" : "no") << '\n';
  out << "# median_delta_model " << format_sig6(report.median_delta_model)
      << '\n';
  out << "# flagged_below_chance " << report.flagged.size() << '\n';
  out << "# model_separated " << report.model_sep_count << " ("
      << format_sig6(report.model_sep_share) << ")\n";
  out << "# model_strongly_separated " << report.model_strong_count << '\n';
  out << "# bloom_separated " << report.bloom_sep_count << " ("
      << format_sig6(report.bloom_sep_share) << ")\n";
  out << "# bloom_negligible " << report.bloom_negligible_count << '\n';
  out << "# separated_union " << report.union_sep_count << '\n';
  out << "# sweep threshold\tmodel_count\tbloom_count\n";
  for (const auto& pt : report.sweep)
    out << "# sweep " << format_sig6(pt.threshold) << '\t'
        << pt.model_sep_count << '\t' << pt.bloom_sep_count << '\n';
  return out.str();
}

inline std::string render_residual_report(const ResidualReport& report) {
  std::ostringstream out;
  out << "model\tpractice\tbloom\tobserved\texpected\tvariance\tz\tp\t"
         "flagged\tdirection\n";
  for (const auto& c : report.cells)
    out << c.model_id << '\t' << c.practice_id << '\t'
        << (c.bloom.has_value() ? bloom_name(*c.bloom) : "all") << '\t'
        << format_sig6(c.observed) << '\t' << format_sig6(c.expected) << '\t'
        << format_sig6(c.variance) << '\t' << format_sig6(c.z) << '\t'
        << format_sig6(c.p_value) << '\t' << (c.flagged ? "yes" : "no") << '\t'
        << (c.flagged ? c.direction : "-") << '\n';
  out << "# flagged " << report.flagged_count << " (better "
      << report.better_count << ", worse " << report.worse_count << ")\n";
  out << "# excluded_zero_variance " << report.excluded_zero_variance << '\n';
  return out.str();
}

inline std::string render_bhpr_report(const BhprResult& r) {
  auto matrix = [&](const char* label,
                    const std::array<std::array<std::optional<double>, 4>, 4>&
                        m,
                    const std::array<std::array<int, 4>, 4>& pairs) {
    std::ostringstream out;
    out << label << "\tfrom\\to";
    for (auto b : kBloomLevels) out << '\t' << bloom_name(b);
    out << '\n';
    for (std::size_t i = 0; i < 4; ++i) {
      out << label << '\t' << bloom_name(kBloomLevels[i]);
      for (std::size_t j = 0; j < 4; ++j) {
        out << '\t';
        if (m[i][j].has_value())
          out << format_sig6(*m[i][j]) << " (n=" << pairs[i][j] << ")";
        else
          out << "NA";
      }
      out << '\n';
    }
    return out.str();
  };
  std::ostringstream out;
  out << matrix("sgs", r.sgs, r.sgs_pairs);
  out << matrix("sgf", r.sgf, r.sgf_pairs);
  auto summary = [&](const char* label, const std::optional<double>& v) {
    out << "# " << label << ' ' << (v.has_value() ? format_sig6(*v) : "NA")
        << '\n';
  };
  summary("sgs_lower_to_higher", r.sgs_lower_to_higher);
  summary("sgs_higher_to_lower", r.sgs_higher_to_lower);
  summary("sgf_lower_to_higher", r.sgf_lower_to_higher);
  summary("sgf_higher_to_lower", r.sgf_higher_to_lower);
  return out.str();
}

// ------------------------------------------------------------- manifest

// Every stage writes a manifest so any output is traceable to its exact
// inputs: digests of the config and each input file, the seed, and the
// tool version.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return content_hash(buf.str());
}

inline void write_run_manifest(
    const std::filesystem::path& out_path, const std::string& stage,
    const std::string& config_text, std::uint64_t seed,
    const std::vector<std::filesystem::path>& inputs) {
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["stage"] = stage;
  j["config_digest"] = content_hash(config_text);
  j["seed"] = seed;
  ordered_json in = ordered_json::object();
  for (const auto& p : inputs) in[p.string()] = file_digest(p);
  j["input_digests"] = in;
  write_text_file(out_path, j.dump() + "\n");
}

}  // namespace bloomqa

#endif  // BLOOMQA_REPORT_HPP
