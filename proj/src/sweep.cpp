#include "asymbpe/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "asymbpe/error.hpp"

namespace asymbpe::sweep {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t parse_digits(std::string_view s, std::string_view whole) {
  if (!all_digits(s) || s.size() > 15) throw Error("invalid NMO '" + std::string(whole) + "'");
  std::size_t v = 0;
  for (char c : s) v = v * 10 + static_cast<std::size_t>(c - '0');
  return v;
}

}  // namespace

std::size_t parse_nmo(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw Error("invalid NMO ''");
  if (text.back() != 'K' && text.back() != 'k') return parse_digits(text, whole);

  text.remove_suffix(1);
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) return parse_digits(text, whole) * 1000;
  std::string_view int_part = text.substr(0, dot);
  std::string_view frac_part = text.substr(dot + 1);
  if (frac_part.empty() || frac_part.size() > 3) throw Error("invalid NMO '" + std::string(whole) + "'");
  std::size_t integer = int_part.empty() ? 0 : parse_digits(int_part, whole);
  std::string frac(frac_part);
  frac.resize(3, '0');
  return integer * 1000 + parse_digits(frac, whole);
}

std::string format_nmo(std::size_t nmo) {
  if (nmo >= 1000 && nmo % 1000 == 0) return std::to_string(nmo / 1000) + "K";
  if (nmo > 1000 && nmo % 100 == 0) {
    return std::to_string(nmo / 1000) + "." + std::to_string((nmo % 1000) / 100) + "K";
  }
  return std::to_string(nmo);
}

std::string BpeConfig::label() const { return format_nmo(src_nmo) + "_" + format_nmo(tgt_nmo); }

BpeConfig BpeConfig::parse(std::string_view label) {
  const auto sep = label.find('_');
  if (sep == std::string_view::npos || label.find('_', sep + 1) != std::string_view::npos) {
    throw Error("invalid BPE configuration label '" + std::string(label) + "'");
  }
  BpeConfig c{parse_nmo(label.substr(0, sep)), parse_nmo(label.substr(sep + 1))};
  if (c.src_nmo == 0 || c.tgt_nmo == 0) {
    throw Error("invalid BPE configuration label '" + std::string(label) + "': NMO must be positive");
  }
  return c;
}

Symmetry classify(const BpeConfig& config) {
  return config.symmetric() ? Symmetry::symmetric : Symmetry::asymmetric;
}

std::vector<BpeConfig> enumerate_grid(std::span<const std::size_t> nmo_set) {
  if (nmo_set.empty()) throw Error("NMO set is empty");
  std::set<std::size_t> seen;
  for (std::size_t n : nmo_set) {
    if (n == 0) throw Error("NMO set contains 0");
    if (!seen.insert(n).second) throw Error("NMO set contains " + format_nmo(n) + " more than once");
  }
  std::vector<BpeConfig> grid;
  grid.reserve(nmo_set.size() * nmo_set.size());
  for (std::size_t s : nmo_set) {
    for (std::size_t t : nmo_set) grid.push_back(BpeConfig{s, t});
  }
  return grid;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

std::vector<std::pair<std::string, const TierEntry*>> TierReport::rows() const {
  return {{"Low A", &low_a}, {"Low B", &low_b}, {"Baseline", &baseline}, {"High B", &high_b}, {"High A", &high_a}};
}

TierReport tier_report(std::span<const SystemResult> results, const TierOptions& options) {
  if (results.empty()) throw Error("tier report: no results");
  std::set<BpeConfig> seen;
  std::vector<const SystemResult*> symmetric, asymmetric;
  for (const auto& r : results) {
    if (r.direction != results.front().direction || r.dataset_size != results.front().dataset_size ||
        r.testset != results.front().testset) {
      throw Error("tier report: results mix cells (" + results.front().direction + "/" +
                  std::to_string(results.front().dataset_size) + "/" + results.front().testset + " vs " +
                  r.direction + "/" + std::to_string(r.dataset_size) + "/" + r.testset + ")");
    }
    if (!seen.insert(r.config).second) throw Error("tier report: duplicate result for " + r.config.label());
    (r.config.symmetric() ? symmetric : asymmetric).push_back(&r);
  }
  if (symmetric.empty() || asymmetric.size() < 2) {
    std::string missing;
    if (symmetric.empty()) missing += "a symmetric configuration";
    if (asymmetric.size() < 2) {
      if (!missing.empty()) missing += " and ";
      missing += std::to_string(2 - asymmetric.size()) + " more asymmetric configuration(s)";
    }
    throw Error("tier report: insufficient coverage, missing " + missing);
  }

  auto higher = [](const SystemResult* x, const SystemResult* y) {
    if (x->score != y->score) return x->score > y->score;
    return x->config < y->config;
  };
  auto lower = [](const SystemResult* x, const SystemResult* y) {
    if (x->score != y->score) return x->score < y->score;
    return x->config < y->config;
  };

  std::sort(symmetric.begin(), symmetric.end(), higher);
  const SystemResult* baseline = symmetric.front();

  std::vector<const SystemResult*> highs = asymmetric;
  std::sort(highs.begin(), highs.end(), higher);

  std::vector<const SystemResult*> lows = asymmetric;
  if (options.lows_include_symmetric) {
    for (const auto* s : symmetric) {
      if (s != baseline) lows.push_back(s);
    }
  }
  std::sort(lows.begin(), lows.end(), lower);

  auto entry = [&](const SystemResult* r) {
    TierEntry e{*r, 0.0};
    if (options.rounding == DeltaRounding::after_subtract) {
      e.delta = round2(r->score - baseline->score);
    } else {
      e.delta = round2(round2(r->score) - round2(baseline->score));
    }
    if (e.delta == 0.0) e.delta = 0.0;  // no "-0.00"
    return e;
  };

  TierReport report;
  report.baseline = entry(baseline);
  report.high_a = entry(highs[0]);
  report.high_b = entry(highs[1]);
  report.low_a = entry(lows[0]);
  report.low_b = entry(lows[1]);
  return report;
}

SignificanceMarker significance_marker(std::optional<double> p) {
  SignificanceMarker m;
  if (!p) return m;
  m.bold = *p < 0.05;
  if (*p < 0.01) m.star = "*";
  return m;
}

namespace {

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

}  // namespace

std::string format_tier_tsv(const TierReport& report, bool header) {
  std::ostringstream out;
  if (header) out << "tier\tsrc\ttgt\tchrf\tdelta\tbold\tsig\n";
  for (const auto& [name, e] : report.rows()) {
    const auto m = significance_marker(e->result.p_vs_baseline);
    out << name << '\t' << format_nmo(e->result.config.src_nmo) << '\t' << format_nmo(e->result.config.tgt_nmo)
        << '\t' << fixed2(e->result.score) << '\t' << fixed2(e->delta) << '\t' << (m.bold ? "1" : "0") << '\t'
        << m.star << '\n';
  }
  return out.str();
}

std::string format_tier_text(const TierReport& report) {
  std::ostringstream out;
  const auto& b = report.baseline.result;
  out << "direction " << b.direction << "  size " << b.dataset_size << "  testset " << b.testset << '\n';
  out << std::left << std::setw(10) << "Tier" << std::right << std::setw(6) << "src" << std::setw(6) << "tgt"
      << std::setw(10) << "CHRF++" << std::setw(9) << "delta" << '\n';
  for (const auto& [name, e] : report.rows()) {
    const auto m = significance_marker(e->result.p_vs_baseline);
    std::string score = fixed2(e->result.score) + m.star;
    if (m.bold) score = "[" + score + "]";
    out << std::left << std::setw(10) << name << std::right << std::setw(6) << format_nmo(e->result.config.src_nmo)
        << std::setw(6) << format_nmo(e->result.config.tgt_nmo) << std::setw(10) << score << std::setw(9)
        << fixed2(e->delta) << '\n';
  }
  return out.str();
}

std::vector<MaxTracePoint> max_trace(std::span<const SystemResult> results) {
  std::map<std::size_t, MaxTracePoint> best;
  for (const auto& r : results) {
    auto [it, inserted] = best.try_emplace(r.config.src_nmo, MaxTracePoint{r.config.src_nmo, r.config.tgt_nmo, r.score});
    if (inserted) continue;
    auto& p = it->second;
    if (r.score > p.max_score || (r.score == p.max_score && r.config.tgt_nmo < p.best_tgt_nmo)) {
      p.best_tgt_nmo = r.config.tgt_nmo;
      p.max_score = r.score;
    }
  }
  std::vector<MaxTracePoint> out;
  for (const auto& [src, p] : best) out.push_back(p);
  return out;
}

std::string_view to_string(ResourceBand band) {
  switch (band) {
    case ResourceBand::low: return "low";
    case ResourceBand::medium: return "medium";
    case ResourceBand::high: return "high";
  }
  return "low";
}

Recommendation recommend(std::size_t dataset_size, const RecommendBands& bands) {
  Recommendation r;
  if (dataset_size < bands.medium_from) {
    r.band = ResourceBand::low;
    r.src_range = bands.low_src;
    r.tgt_range = bands.low_tgt;
    r.rationale =
        "low band: prefer a large source NMO with a small target NMO";
  } else if (dataset_size < bands.high_from) {
    r.band = ResourceBand::medium;
    r.src_range = bands.medium_src;
    r.tgt_range = bands.medium_tgt;
    r.rationale =
        "medium band: both NMOs from the middle of the grid";
  } else {
    r.band = ResourceBand::high;
    r.src_range = bands.high_src;
    r.tgt_range = bands.high_tgt;
    r.rationale =
        "high band: configurations differ little; a large symmetric NMO is a safe default";
  }
  return r;
}

}  // namespace asymbpe::sweep
