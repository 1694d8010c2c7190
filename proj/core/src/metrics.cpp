// Copyright 2026 The gatspoof authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gatspoof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "gatspoof/errors.hpp"

namespace gatspoof {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<DetPoint> det_curve(const ScoreSet& scores) {
  std::vector<double> bona, spoof;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw ContractError("det_curve: non-finite score for \"" + s.utt_id +
                          "\"");
    }
    (s.bonafide ? bona : spoof).push_back(s.score);
  }
  if (bona.empty() || spoof.empty()) {
    throw ContractError(
        "det_curve: need at least one bona fide and one spoof trial (got " +
        std::to_string(bona.size()) + " bona fide, " +
        std::to_string(spoof.size()) + " spoof)");
  }
  std::sort(bona.begin(), bona.end());
  std::sort(spoof.begin(), spoof.end());

  std::vector<double> thresholds;
  thresholds.reserve(bona.size() + spoof.size());
  std::merge(bona.begin(), bona.end(), spoof.begin(), spoof.end(),
             std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  std::vector<DetPoint> curve;
  curve.reserve(thresholds.size() + 1);
  // Sentinel below every score: nothing is missed, everything passes.
  curve.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  const double nb = double(bona.size()), ns = double(spoof.size());
  std::size_t ib = 0, is = 0;
  for (double t : thresholds) {
    while (ib < bona.size() && bona[ib] <= t) ++ib;
    while (is < spoof.size() && spoof[is] <= t) ++is;
    curve.push_back({t, double(ib) / nb, double(spoof.size() - is) / ns});
  }
  return curve;
}

double eer(const ScoreSet& scores) {
  const auto curve = det_curve(scores);
  // diff is nondecreasing from -1; find the first nonnegative point.
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double d = curve[i].p_miss - curve[i].p_fa;
    if (d >= 0.0) {
      const double m1 = curve[i - 1].p_miss, f1 = curve[i - 1].p_fa;
      const double m2 = curve[i].p_miss, f2 = curve[i].p_fa;
      const double denom = (m2 - m1) + (f1 - f2);
      if (denom <= 0.0) return m2;
      const double lam = (f1 - m1) / denom;
      return m1 + lam * (m2 - m1);
    }
  }
  // Unreachable: the final sweep point is (1, 0).
  return curve.back().p_miss;
}

void TdcfCosts::validate() const {
  const double prior_sum = p_tar + p_non + p_spoof;
  if (!(p_tar >= 0.0 && p_non >= 0.0 && p_spoof >= 0.0) ||
      std::abs(prior_sum - 1.0) > 1e-12) {
    throw ConfigError("t-DCF priors must be nonnegative and sum to 1, got " +
                      format_double(prior_sum));
  }
  if (!(c_miss_asv > 0.0 && c_fa_asv > 0.0 && c_miss_cm > 0.0 &&
        c_fa_cm > 0.0)) {
    throw ConfigError("t-DCF detection costs must be positive");
  }
  auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(asv_p_fa) || !rate_ok(asv_p_miss) ||
      !rate_ok(asv_p_miss_spoof)) {
    throw ConfigError("ASV operating-point rates must lie in [0, 1]");
  }
}

double min_tdcf(const ScoreSet& scores, const TdcfCosts& costs) {
  costs.validate();
  const double c1 =
      costs.p_tar * (costs.c_miss_cm - costs.c_miss_asv * costs.asv_p_miss) -
      costs.p_non * costs.c_fa_asv * costs.asv_p_fa;
  const double c2 =
      costs.c_fa_cm * costs.p_spoof * (1.0 - costs.asv_p_miss_spoof);
  if (c1 <= 0.0 || c2 <= 0.0) {
    throw ConfigError(
        "t-DCF cost coefficients are not both positive (C1 = " +
        format_double(c1) + ", C2 = " + format_double(c2) +
        "); the ASV operating point makes the countermeasure unusable");
  }
  const double norm = std::min(c1, c2);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : det_curve(scores)) {
    best = std::min(best, (c1 * p.p_miss + c2 * p.p_fa) / norm);
  }
  return best;
}

MetricReport per_attack_report(const ScoreSet& scores, const TdcfCosts& costs) {
  MetricReport report;
  report.pooled_eer = eer(scores);
  report.pooled_min_tdcf = min_tdcf(scores, costs);

  std::map<std::string, ScoreSet> by_attack;
  ScoreSet bona;
  for (const auto& s : scores) {
    if (s.bonafide) {
      bona.push_back(s);
    } else {
      by_attack[s.attack_id].push_back(s);
    }
  }
  for (auto& [attack, subset] : by_attack) {
    subset.insert(subset.end(), bona.begin(), bona.end());
    report.per_attack.emplace_back(
        attack, AttackMetrics{eer(subset), min_tdcf(subset, costs)});
  }
  return report;
}

std::string format_report(const MetricReport& report) {
  std::ostringstream out;
  out << "pooled.eer = " << format_double(report.pooled_eer) << "\n";
  out << "pooled.min_tdcf = " << format_double(report.pooled_min_tdcf) << "\n";
  for (const auto& [attack, m] : report.per_attack) {
    out << "attack." << attack << ".eer = " << format_double(m.eer) << "\n";
    out << "attack." << attack << ".min_tdcf = " << format_double(m.min_tdcf)
        << "\n";
  }
  return out.str();
}

std::string format_report_csv(const MetricReport& report) {
  std::ostringstream out;
  out << "attack,eer,min_tdcf\n";
  out << "pooled," << format_double(report.pooled_eer) << ","
      << format_double(report.pooled_min_tdcf) << "\n";
  for (const auto& [attack, m] : report.per_attack) {
    out << attack << "," << format_double(m.eer) << ","
        << format_double(m.min_tdcf) << "\n";
  }
  return out.str();
}

void write_score_file(const std::filesystem::path& path,
                      std::span<const ScoredUtt> scores) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_score_file: cannot open " + path.string());
  for (const auto& s : scores) {
    f << s.utt_id << " " << format_double(s.score) << "\n";
  }
  if (!f) throw Error("write_score_file: write failed for " + path.string());
}

std::vector<ScoredUtt> read_score_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("read_score_file: cannot open " + path.string());
  std::vector<ScoredUtt> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    ScoredUtt s;
    std::string score_text, extra;
    if (!(iss >> s.utt_id >> score_text) || (iss >> extra)) {
      throw ParseError("read_score_file: " + path.string() + ":" +
                       std::to_string(line_no) +
                       ": expected \"utt_id score\"");
    }
    try {
      std::size_t pos = 0;
      s.score = std::stod(score_text, &pos);
      if (pos != score_text.size()) throw std::invalid_argument(score_text);
    } catch (const std::exception&) {
      throw ParseError("read_score_file: " + path.string() + ":" +
                       std::to_string(line_no) + ": bad score \"" +
                       score_text + "\"");
    }
    out.push_back(std::move(s));
  }
  return out;
}

ScoreSet join_scores(const std::vector<ScoredUtt>& scores,
                     const std::vector<TrialRecord>& protocol) {
  std::unordered_map<std::string, const TrialRecord*> by_utt;
  by_utt.reserve(protocol.size());
  for (const auto& r : protocol) by_utt[r.utt_id] = &r;

  auto list_offenders = [](std::vector<std::string>& ids) {
    std::sort(ids.begin(), ids.end());
    std::string msg;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) msg += ", ";
      msg += ids[i];
    }
    if (ids.size() > shown) {
      msg += ", ... (" + std::to_string(ids.size()) + " total)";
    }
    return msg;
  };

  ScoreSet out;
  out.reserve(scores.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& s : scores) {
    if (++seen[s.utt_id] > 1) {
      throw ContractError("join_scores: duplicate score for \"" + s.utt_id +
                          "\"");
    }
    auto it = by_utt.find(s.utt_id);
    if (it == by_utt.end()) {
      missing.push_back(s.utt_id);
      continue;
    }
    out.push_back({s.utt_id, s.score, it->second->bonafide,
                   it->second->attack_id});
  }
  if (!missing.empty()) {
    throw ContractError("join_scores: scores without protocol entries: " +
                        list_offenders(missing));
  }
  if (out.size() != protocol.size()) {
    std::vector<std::string> unscored;
    for (const auto& r : protocol) {
      if (!seen.count(r.utt_id)) unscored.push_back(r.utt_id);
    }
    throw ContractError("join_scores: protocol entries without scores: " +
                        list_offenders(unscored));
  }
  return out;
}

}  // namespace gatspoof
