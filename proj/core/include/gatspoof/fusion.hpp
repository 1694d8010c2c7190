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

#ifndef GATSPOOF_FUSION_HPP
#define GATSPOOF_FUSION_HPP

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gatspoof/metrics.hpp"

namespace gatspoof {

/// Linear score-fusion model: per-system standardization followed by
/// an affine map. Fitting requires K >= 2 systems; applying accepts
/// any K >= 1 so a single-system identity model stays expressible.
struct FusionModel {
  std::vector<std::string> system_names;  // size K
  std::vector<double> mean, stddev;       // size K, stddev > 0
  std::vector<double> weights;            // size K
  double bias = 0.0;

  std::size_t k() const { return weights.size(); }
};

/// Inner join of K score sets over a shared utt_id population, rows
/// sorted by utt_id. Labels and attack ids must agree across sets.
struct AlignedScores {
  std::vector<std::string> system_names;  // size K
  std::vector<std::string> utt_ids;       // size T, sorted
  std::vector<double> x;                  // [T x K] row-major raw scores
  std::vector<bool> bonafide;             // size T
  std::vector<std::string> attacks;       // size T

  std::size_t t() const { return utt_ids.size(); }
  std::size_t k() const { return system_names.size(); }
};

AlignedScores align_scores(const std::vector<ScoreSet>& sets,
                           std::vector<std::string> system_names = {});

/// Soft-margin linear SVM on standardized columns, minimizing
/// (1/2)||w||^2 + C * sum_i hinge_i. Solved to a certified duality gap
/// of 1e-6 by deterministic pairwise dual coordinate ascent. Warnings
/// (T <= K, iteration cap) go to `warn` when non-null.
FusionModel fit_svm(const AlignedScores& data, double c = 1.0,
                    std::ostream* warn = nullptr);

/// Fused scores with trial metadata carried through.
ScoreSet fuse(const FusionModel& model, const AlignedScores& data);

void write_fusion_model(const std::filesystem::path& path,
                        const FusionModel& model);
FusionModel read_fusion_model(const std::filesystem::path& path);

}  // namespace gatspoof

#endif  // GATSPOOF_FUSION_HPP
