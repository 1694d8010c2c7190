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

#include "gatspoof/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "gatspoof/errors.hpp"

namespace gatspoof {
namespace {

std::string list_some(std::vector<std::string> ids) {
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
}

/// Exact minimizer of sum_i max(0, 1 - u_i - y_i b) over b, where
/// u_i = y_i <w, x_i>. The derivative steps up by one at each
/// breakpoint y_i (1 - u_i); it is zero exactly on the interval
/// between the n_pos-th and (n_pos+1)-th smallest breakpoints.
double optimal_bias(const std::vector<double>& u, const std::vector<int>& y) {
  std::vector<double> breaks(u.size());
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    breaks[i] = double(y[i]) * (1.0 - u[i]);
    if (y[i] > 0) ++n_pos;
  }
  std::sort(breaks.begin(), breaks.end());
  return 0.5 * (breaks[n_pos - 1] + breaks[n_pos]);
}

}  // namespace

AlignedScores align_scores(const std::vector<ScoreSet>& sets,
                           std::vector<std::string> system_names) {
  if (sets.empty()) throw ContractError("align_scores: no score sets");
  const std::size_t k = sets.size();
  if (system_names.empty()) {
    for (std::size_t i = 0; i < k; ++i) {
      system_names.push_back("sys" + std::to_string(i + 1));
    }
  }
  if (system_names.size() != k) {
    throw ContractError("align_scores: " + std::to_string(k) +
                        " sets but " + std::to_string(system_names.size()) +
                        " system names");
  }

  // Rows follow the sorted union of utt ids; each set must cover it.
  std::map<std::string, std::size_t> row_of;
  for (const auto& set : sets) {
    for (const auto& e : set) row_of.emplace(e.utt_id, 0);
  }
  if (row_of.empty()) throw ContractError("align_scores: empty score sets");
  {
    std::size_t r = 0;
    for (auto& [utt, row] : row_of) row = r++;
  }
  const std::size_t t = row_of.size();

  AlignedScores out;
  out.system_names = std::move(system_names);
  out.utt_ids.resize(t);
  for (const auto& [utt, row] : row_of) out.utt_ids[row] = utt;
  out.x.assign(t * k, 0.0);
  out.bonafide.assign(t, false);
  out.attacks.assign(t, std::string());

  std::vector<bool> meta_set(t, false);
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<bool> seen(t, false);
    for (const auto& e : sets[s]) {
      const std::size_t row = row_of.at(e.utt_id);
      if (seen[row]) {
        throw ContractError("align_scores: duplicate utt_id \"" + e.utt_id +
                            "\" in system " + out.system_names[s]);
      }
      seen[row] = true;
      out.x[row * k + s] = e.score;
      if (!meta_set[row]) {
        meta_set[row] = true;
        out.bonafide[row] = e.bonafide;
        out.attacks[row] = e.attack_id;
      } else if (out.bonafide[row] != e.bonafide ||
                 out.attacks[row] != e.attack_id) {
        throw ContractError("align_scores: conflicting labels for \"" +
                            e.utt_id + "\" across systems");
      }
    }
    std::vector<std::string> missing;
    for (std::size_t r = 0; r < t; ++r) {
      if (!seen[r]) missing.push_back(out.utt_ids[r]);
    }
    if (!missing.empty()) {
      throw ContractError("align_scores: system " + out.system_names[s] +
                          " is missing trials: " + list_some(missing));
    }
  }
  return out;
}

FusionModel fit_svm(const AlignedScores& data, double c, std::ostream* warn) {
  const std::size_t t = data.t(), k = data.k();
  if (k < 2) {
    throw ContractError("fit_svm: need at least 2 systems, got " +
                        std::to_string(k));
  }
  if (!(c > 0.0)) throw ConfigError("fit_svm: C must be positive");
  std::size_t n_pos = 0;
  for (bool b : data.bonafide) n_pos += b ? 1 : 0;
  if (n_pos == 0 || n_pos == t) {
    throw ContractError("fit_svm: both classes must be present (got " +
                        std::to_string(n_pos) + " bona fide of " +
                        std::to_string(t) + ")");
  }
  if (t <= k && warn) {
    *warn << "fit_svm: only " << t << " trials for " << k
          << " systems; the model may be underdetermined\n";
  }

  FusionModel model;
  model.system_names = data.system_names;
  model.mean.assign(k, 0.0);
  model.stddev.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < t; ++i) mu += data.x[i * k + j];
    mu /= double(t);
    double var = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double d = data.x[i * k + j] - mu;
      var += d * d;
    }
    var /= double(t);
    if (!(var > 0.0) || !std::isfinite(var)) {
      throw ContractError("fit_svm: system " + data.system_names[j] +
                          " has zero score variance");
    }
    model.mean[j] = mu;
    model.stddev[j] = std::sqrt(var);
  }

  std::vector<double> z(t * k);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      z[i * k + j] = (data.x[i * k + j] - model.mean[j]) / model.stddev[j];
    }
  }
  std::vector<int> y(t);
  for (std::size_t i = 0; i < t; ++i) y[i] = data.bonafide[i] ? 1 : -1;

  // Dual: max sum(alpha) - 0.5 ||w(alpha)||^2 with w = sum alpha_i y_i z_i,
  // 0 <= alpha <= C, sum alpha_i y_i = 0. Each iteration moves the most
  // violating pair; the loop stops on a certified primal-dual gap.
  std::vector<double> alpha(t, 0.0), w(k, 0.0), u(t, 0.0);
  double bias = 0.0;
  const double gap_tol = 1e-6;
  const std::size_t max_iters = 500000;
  bool converged = false;

  auto dot_row = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += w[j] * z[i * k + j];
    return s;
  };

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < t; ++i) u[i] = double(y[i]) * dot_row(i);

    if (iter % 8 == 0 || iter + 1 == max_iters) {
      bias = optimal_bias(u, y);
      double w2 = 0.0, hinge = 0.0, asum = 0.0;
      for (std::size_t j = 0; j < k; ++j) w2 += w[j] * w[j];
      for (std::size_t i = 0; i < t; ++i) {
        hinge += std::max(0.0, 1.0 - u[i] - double(y[i]) * bias);
        asum += alpha[i];
      }
      const double primal = 0.5 * w2 + c * hinge;
      const double dual = asum - 0.5 * w2;
      if (primal - dual <= gap_tol * std::max(1.0, std::abs(primal))) {
        converged = true;
        break;
      }
    }

    // Most violating pair under the equality constraint: the largest
    // ascent direction -y_i grad_i among coordinates free to move up,
    // the smallest among those free to move down.
    double best_up = -std::numeric_limits<double>::infinity();
    double best_low = std::numeric_limits<double>::infinity();
    std::size_t iu = t, il = t;
    for (std::size_t i = 0; i < t; ++i) {
      const double v = double(y[i]) * (1.0 - u[i]);  // -y_i * grad_i of 0.5w2-sum
      const bool can_up = (y[i] > 0 && alpha[i] < c) || (y[i] < 0 && alpha[i] > 0.0);
      const bool can_low = (y[i] > 0 && alpha[i] > 0.0) || (y[i] < 0 && alpha[i] < c);
      if (can_up && v > best_up) {
        best_up = v;
        iu = i;
      }
      if (can_low && v < best_low) {
        best_low = v;
        il = i;
      }
    }
    if (iu == t || il == t || iu == il || best_up - best_low <= 0.0) {
      // Dual optimum reached for the current active set; the next gap
      // check will confirm and exit.
      bias = optimal_bias(u, y);
      double w2 = 0.0, hinge = 0.0, asum = 0.0;
      for (std::size_t j = 0; j < k; ++j) w2 += w[j] * w[j];
      for (std::size_t i = 0; i < t; ++i) {
        hinge += std::max(0.0, 1.0 - u[i] - double(y[i]) * bias);
        asum += alpha[i];
      }
      converged =
          (0.5 * w2 + c * hinge) - (asum - 0.5 * w2) <=
          gap_tol * std::max(1.0, std::abs(0.5 * w2 + c * hinge));
      break;
    }

    // Move alpha[iu] by y_iu * d and alpha[il] by -y_il * d (d > 0),
    // which preserves the equality constraint for any label pair; the
    // dual is an exact parabola in d.
    const std::size_t i = iu, j2 = il;
    double diff2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double diff = z[i * k + j] - z[j2 * k + j];
      diff2 += diff * diff;
    }
    const double dg0 = best_up - best_low;  // = dg/dd at d = 0
    double d = diff2 > 0.0 ? dg0 / diff2
                           : std::numeric_limits<double>::infinity();
    const double bound_i = y[i] > 0 ? c - alpha[i] : alpha[i];
    const double bound_j = y[j2] > 0 ? alpha[j2] : c - alpha[j2];
    d = std::min(d, std::min(bound_i, bound_j));
    if (!(d > 0.0)) break;  // numerically stuck; final gap decides
    alpha[i] += double(y[i]) * d;
    alpha[j2] -= double(y[j2]) * d;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] += d * (z[i * k + j] - z[j2 * k + j]);
    }
  }

  for (std::size_t i = 0; i < t; ++i) u[i] = double(y[i]) * dot_row(i);
  model.weights = w;
  model.bias = optimal_bias(u, y);
  if (!converged) {
    double w2 = 0.0, hinge = 0.0, asum = 0.0;
    for (std::size_t j = 0; j < k; ++j) w2 += w[j] * w[j];
    for (std::size_t i = 0; i < t; ++i) {
      hinge += std::max(0.0, 1.0 - u[i] - double(y[i]) * model.bias);
      asum += alpha[i];
    }
    const double primal = 0.5 * w2 + c * hinge;
    converged = primal - (asum - 0.5 * w2) <=
                gap_tol * std::max(1.0, std::abs(primal));
  }
  if (!converged && warn) {
    *warn << "fit_svm: stopped before reaching the duality-gap tolerance\n";
  }
  return model;
}

ScoreSet fuse(const FusionModel& model, const AlignedScores& data) {
  const std::size_t k = model.k();
  if (k == 0 || model.mean.size() != k || model.stddev.size() != k) {
    throw ContractError("fuse: malformed fusion model");
  }
  if (data.k() != k) {
    throw ShapeError("fuse: model has " + std::to_string(k) +
                     " systems but data has " + std::to_string(data.k()));
  }
  ScoreSet out;
  out.reserve(data.t());
  for (std::size_t i = 0; i < data.t(); ++i) {
    double s = model.bias;
    for (std::size_t j = 0; j < k; ++j) {
      s += model.weights[j] *
           ((data.x[i * k + j] - model.mean[j]) / model.stddev[j]);
    }
    out.push_back({data.utt_ids[i], s, data.bonafide[i], data.attacks[i]});
  }
  return out;
}

void write_fusion_model(const std::filesystem::path& path,
                        const FusionModel& model) {
  const std::size_t k = model.k();
  if (k == 0 || model.system_names.size() != k || model.mean.size() != k ||
      model.stddev.size() != k) {
    throw ContractError("write_fusion_model: malformed model");
  }
  for (const auto& name : model.system_names) {
    if (name.empty() ||
        name.find_first_of(" \t\r\n") != std::string::npos) {
      throw ContractError("write_fusion_model: system name \"" + name +
                          "\" is empty or contains whitespace");
    }
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_fusion_model: cannot open " + path.string());
  f << "gatspoof_fusion_model_v1\n";
  f << "systems " << k << "\n";
  for (std::size_t j = 0; j < k; ++j) {
    f << "system " << model.system_names[j] << " "
      << format_double(model.mean[j]) << " "
      << format_double(model.stddev[j]) << " "
      << format_double(model.weights[j]) << "\n";
  }
  f << "bias " << format_double(model.bias) << "\n";
  if (!f) throw Error("write_fusion_model: write failed for " + path.string());
}

FusionModel read_fusion_model(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("read_fusion_model: cannot open " + path.string());
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError("read_fusion_model: " + path.string() + ": " + why);
  };
  std::string line;
  if (!std::getline(f, line) || line != "gatspoof_fusion_model_v1") {
    throw fail("bad header");
  }
  std::size_t k = 0;
  {
    if (!std::getline(f, line)) throw fail("missing systems line");
    std::istringstream iss(line);
    std::string tag;
    if (!(iss >> tag >> k) || tag != "systems" || k == 0) {
      throw fail("bad systems line \"" + line + "\"");
    }
  }
  FusionModel model;
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::getline(f, line)) throw fail("missing system line");
    std::istringstream iss(line);
    std::string tag, name, extra;
    double mean = 0.0, sd = 0.0, wj = 0.0;
    if (!(iss >> tag >> name >> mean >> sd >> wj) || tag != "system" ||
        (iss >> extra)) {
      throw fail("bad system line \"" + line + "\"");
    }
    if (!(sd > 0.0)) throw fail("nonpositive std for system " + name);
    model.system_names.push_back(name);
    model.mean.push_back(mean);
    model.stddev.push_back(sd);
    model.weights.push_back(wj);
  }
  {
    if (!std::getline(f, line)) throw fail("missing bias line");
    std::istringstream iss(line);
    std::string tag, extra;
    double b = 0.0;
    if (!(iss >> tag >> b) || tag != "bias" || (iss >> extra)) {
      throw fail("bad bias line \"" + line + "\"");
    }
    model.bias = b;
  }
  while (std::getline(f, line)) {
    if (!line.empty()) throw fail("trailing content \"" + line + "\"");
  }
  return model;
}

}  // namespace gatspoof
