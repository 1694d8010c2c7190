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

#ifndef GATSPOOF_METRICS_HPP
#define GATSPOOF_METRICS_HPP

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gatspoof/audio_io.hpp"

namespace gatspoof {

/// One scored trial. Higher scores indicate bona fide speech.
struct ScoreEntry {
  std::string utt_id;
  double score = 0.0;
  bool bonafide = false;
  std::string attack_id = "-";  // "-" for bona fide trials
};

using ScoreSet = std::vector<ScoreEntry>;

/// One operating point of the detection error tradeoff sweep.
struct DetPoint {
  double threshold = 0.0;  // decide bona fide iff score > threshold
  double p_miss = 0.0;     // fraction of bona fide at or below threshold
  double p_fa = 0.0;       // fraction of spoof above threshold
};

/// Sweeps a threshold over every distinct score plus a below-everything
/// sentinel, so the curve always starts at (p_miss, p_fa) = (0, 1) and
/// ends at (1, 0). Requires at least one bona fide and one spoof trial.
std::vector<DetPoint> det_curve(const ScoreSet& scores);

/// Equal error rate, linearly interpolated between the two sweep
/// points bracketing the p_miss = p_fa crossing.
double eer(const ScoreSet& scores);

/// Tandem cost model: priors, detection costs, and the fixed operating
/// point of the upstream speaker verifier.
struct TdcfCosts {
  double p_tar = 0.9405;
  double p_non = 0.0095;
  double p_spoof = 0.05;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double asv_p_fa = 0.05;
  double asv_p_miss = 0.05;
  double asv_p_miss_spoof = 0.05;

  /// Priors must sum to one, costs must be positive, rates lie in [0, 1].
  void validate() const;
};

/// Minimum normalized tandem detection cost over the same threshold
/// sweep as det_curve. Constant-score inputs yield exactly 1.0.
double min_tdcf(const ScoreSet& scores, const TdcfCosts& costs);

struct AttackMetrics {
  double eer = 0.0;
  double min_tdcf = 0.0;
};

struct MetricReport {
  double pooled_eer = 0.0;
  double pooled_min_tdcf = 0.0;
  /// Per-attack rows: the attack's spoof trials pooled with every bona
  /// fide trial, sorted by attack id.
  std::vector<std::pair<std::string, AttackMetrics>> per_attack;
};

MetricReport per_attack_report(const ScoreSet& scores, const TdcfCosts& costs);

/// Key-value text: pooled metrics first, then per-attack rows.
std::string format_report(const MetricReport& report);
/// Comma-separated table with a header row, pooled row first.
std::string format_report_csv(const MetricReport& report);

struct ScoredUtt {
  std::string utt_id;
  double score = 0.0;
};

/// Score files are "utt_id score" lines; scores are written with
/// enough digits to round-trip doubles exactly.
void write_score_file(const std::filesystem::path& path,
                      std::span<const ScoredUtt> scores);
std::vector<ScoredUtt> read_score_file(const std::filesystem::path& path);

/// Joins scores with protocol labels by utt_id. Every score must have
/// a protocol entry and vice versa; offenders are listed in the error.
ScoreSet join_scores(const std::vector<ScoredUtt>& scores,
                     const std::vector<TrialRecord>& protocol);

/// Shared fixed-precision float formatting ("%.17g") so repeated runs
/// produce byte-identical text outputs.
std::string format_double(double v);

}  // namespace gatspoof

#endif  // GATSPOOF_METRICS_HPP
