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

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "gatspoof/audio_io.hpp"
#include "gatspoof/checkpoint.hpp"
#include "gatspoof/config.hpp"
#include "gatspoof/errors.hpp"
#include "gatspoof/features.hpp"
#include "gatspoof/fusion.hpp"
#include "gatspoof/metrics.hpp"
#include "gatspoof/synthdata.hpp"
#include "gatspoof/systems.hpp"
#include "gatspoof/training.hpp"

namespace {

namespace fs = std::filesystem;

// Flags shared by every subcommand; precedence is defaults < config
// file < GATSPOOF_* environment < explicit flag.
struct CommonOpts {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> workers;
  std::string system;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path,
                  "configuration file (\"key = value\" lines, '#' comments)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override train.seed");
  cmd->add_option("--workers", c.workers, "override run.workers");
  cmd->add_option("--system", c.system, "override train.system")
      ->check(CLI::IsMember(
          {"gat_t", "gat_s", "resnet_sp", "resnet_sap", "resnet_asp"}));
}

gatspoof::PipelineConfig resolve_config(const CommonOpts& c) {
  gatspoof::PipelineConfig cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  cfg.apply_env();
  if (c.seed) cfg.set("train.seed", std::to_string(*c.seed));
  if (c.workers) cfg.set("run.workers", std::to_string(*c.workers));
  if (!c.system.empty()) cfg.set("train.system", c.system);
  return cfg;
}

// Claims indices from a shared counter so results land in preassigned
// slots: output order stays the input order no matter which worker
// finishes first.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(workers, 1);
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

int run_synth(const CommonOpts& common, const std::string& out_dir,
              std::size_t n_bona, std::size_t n_spoof,
              const std::string& prefix,
              const std::vector<std::string>& attacks) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  gatspoof::SynthSpec spec;
  spec.n_bonafide = n_bona;
  spec.n_spoof = n_spoof;
  if (!attacks.empty()) spec.attacks = attacks;
  spec.seed = std::uint64_t(cfg.get_int("train.seed"));
  spec.n_samples = cfg.target_len();
  spec.sample_rate = cfg.sample_rate();
  spec.prefix = prefix;
  const gatspoof::SynthResult res = gatspoof::generate_corpus(spec, out_dir);
  std::cout << "synth: wrote " << res.records.size() << " utterances under "
            << out_dir << "\n"
            << "synth: protocol " << res.protocol_path.string() << "\n";
  return 0;
}

int run_extract(const CommonOpts& common, const std::string& protocol_path,
                const std::string& audio_dir, const std::string& out_path) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  const gatspoof::LfbConfig lcfg = cfg.lfb_config();
  const std::size_t target_len = cfg.target_len();
  const int want_sr = cfg.sample_rate();
  const std::vector<gatspoof::TrialRecord> records =
      gatspoof::parse_protocol(protocol_path);

  std::vector<gatspoof::CachedFeatures> out(records.size());
  std::vector<std::string> failures(records.size());
  parallel_for(records.size(), cfg.workers(), [&](std::size_t i) {
    const fs::path wav_path = fs::path(audio_dir) / (records[i].utt_id + ".wav");
    try {
      if (!fs::exists(wav_path))
        throw gatspoof::FormatError("missing audio file: " +
                                    wav_path.string());
      gatspoof::Waveform w = gatspoof::read_wav(wav_path);
      if (w.sample_rate != want_sr)
        throw gatspoof::FormatError(
            wav_path.string() + ": sample rate " +
            std::to_string(w.sample_rate) + ", expected " +
            std::to_string(want_sr));
      w = gatspoof::fix_length(w, target_len);
      out[i] = gatspoof::CachedFeatures{records[i].utt_id,
                                        gatspoof::lfb(w, lcfg)};
    } catch (const gatspoof::Error& e) {
      failures[i] = e.what();
    }
  });

  std::size_t n_failed = 0;
  for (const std::string& f : failures) {
    if (f.empty()) continue;
    ++n_failed;
    std::cerr << "extract: " << f << "\n";
  }
  if (n_failed > 0) {
    std::cerr << "extract: " << n_failed << " of " << records.size()
              << " utterances failed\n";
    return 1;
  }
  gatspoof::write_feature_cache(out_path, out);
  std::cout << "extract: wrote " << out.size() << " feature maps to "
            << out_path << "\n";
  return 0;
}

template <typename T>
int run_train_typed(const gatspoof::PipelineConfig& cfg,
                    const std::vector<gatspoof::TrainItem>& train_items,
                    const std::vector<gatspoof::TrainItem>& dev_items,
                    const fs::path& out_dir) {
  gatspoof::SpoofSystem<T> system(cfg.system(), cfg.encoder_config(),
                                  cfg.gat_proj_dim(),
                                  std::uint64_t(cfg.get_int("train.seed")));
  const gatspoof::TrainOutcome outcome =
      gatspoof::train_full(system, cfg.train_config(), cfg.tdcf_costs(),
                           train_items, dev_items, out_dir, &std::cout);
  std::cout << "train: best epoch " << outcome.best_epoch << " dev_eer "
            << gatspoof::format_double(outcome.best_dev_eer) << "\n"
            << "train: checkpoint " << outcome.checkpoint_path.string()
            << "\n"
            << "train: log " << outcome.log_path.string() << "\n";
  return 0;
}

int run_train(const CommonOpts& common, const std::string& train_cache,
              const std::string& train_protocol, const std::string& dev_cache,
              const std::string& dev_protocol, const std::string& out_dir) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  // Validate the full configuration before touching any data.
  cfg.train_config();
  cfg.tdcf_costs();
  cfg.encoder_config();
  cfg.gat_proj_dim();
  cfg.system();

  const std::vector<gatspoof::TrainItem> train_items =
      gatspoof::make_train_items(gatspoof::read_feature_cache(train_cache),
                                 gatspoof::parse_protocol(train_protocol));
  const std::string dev_cache_path =
      dev_cache.empty() ? train_cache : dev_cache;
  const std::vector<gatspoof::TrainItem> dev_items = gatspoof::make_train_items(
      gatspoof::read_feature_cache(dev_cache_path),
      gatspoof::parse_protocol(dev_protocol));
  fs::create_directories(out_dir);
  if (cfg.precision_is_double())
    return run_train_typed<double>(cfg, train_items, dev_items, out_dir);
  return run_train_typed<float>(cfg, train_items, dev_items, out_dir);
}

template <typename T>
std::vector<gatspoof::ScoredUtt> score_items_typed(
    const gatspoof::PipelineConfig& cfg, const fs::path& checkpoint_path,
    const std::vector<gatspoof::TrainItem>& items) {
  gatspoof::SpoofSystem<T> system(cfg.system(), cfg.encoder_config(),
                                  cfg.gat_proj_dim(),
                                  std::uint64_t(cfg.get_int("train.seed")));
  gatspoof::load_checkpoint(checkpoint_path, system.params());

  std::vector<gatspoof::ScoredUtt> scored(items.size());
  parallel_for(items.size(), cfg.workers(), [&](std::size_t i) {
    const gatspoof::FeatureMap& f = items[i].features;
    std::vector<T> data(f.values.size());
    for (std::size_t j = 0; j < data.size(); ++j) data[j] = T(f.values[j]);
    gatspoof::ad::Tensor<T> x(
        gatspoof::ad::Shape{1, 1, f.n_bands, f.n_frames}, std::move(data));
    const gatspoof::ad::Tensor<T> logit =
        system.forward(x, gatspoof::ad::Mode::kEval);
    scored[i] = gatspoof::ScoredUtt{items[i].utt_id,
                                    double(logit.value()[0])};
  });
  return scored;
}

int run_score(const CommonOpts& common, const std::string& cache_path,
              const std::string& protocol_path,
              const std::string& checkpoint_path,
              const std::string& out_path) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  cfg.encoder_config();
  cfg.gat_proj_dim();
  cfg.system();

  const std::vector<gatspoof::TrainItem> items = gatspoof::make_train_items(
      gatspoof::read_feature_cache(cache_path),
      gatspoof::parse_protocol(protocol_path));
  const std::vector<gatspoof::ScoredUtt> scored =
      cfg.precision_is_double()
          ? score_items_typed<double>(cfg, checkpoint_path, items)
          : score_items_typed<float>(cfg, checkpoint_path, items);
  gatspoof::write_score_file(out_path, scored);
  std::cout << "score: wrote " << scored.size() << " scores to " << out_path
            << "\n";
  return 0;
}

int run_evaluate(const CommonOpts& common, const std::string& scores_path,
                 const std::string& protocol_path, const std::string& out_txt,
                 const std::string& out_csv) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  const gatspoof::TdcfCosts costs = cfg.tdcf_costs();
  const gatspoof::ScoreSet set =
      gatspoof::join_scores(gatspoof::read_score_file(scores_path),
                            gatspoof::parse_protocol(protocol_path));
  const gatspoof::MetricReport report =
      gatspoof::per_attack_report(set, costs);
  const std::string text = gatspoof::format_report(report);
  std::cout << text;
  if (!out_txt.empty()) {
    std::ofstream f(out_txt, std::ios::binary);
    if (!f) throw gatspoof::Error("cannot write " + out_txt);
    f << text;
  }
  if (!out_csv.empty()) {
    std::ofstream f(out_csv, std::ios::binary);
    if (!f) throw gatspoof::Error("cannot write " + out_csv);
    f << gatspoof::format_report_csv(report);
  }
  return 0;
}

// Default system names come from the score file stems; collisions must
// be resolved explicitly so model columns stay unambiguous.
std::vector<std::string> system_names_for(
    const std::vector<std::string>& score_paths,
    const std::vector<std::string>& names) {
  if (!names.empty()) {
    if (names.size() != score_paths.size())
      throw gatspoof::ConfigError(
          "--names count does not match the number of score files");
    return names;
  }
  std::vector<std::string> derived;
  derived.reserve(score_paths.size());
  for (const std::string& p : score_paths)
    derived.push_back(fs::path(p).stem().string());
  for (std::size_t i = 0; i < derived.size(); ++i)
    for (std::size_t j = i + 1; j < derived.size(); ++j)
      if (derived[i] == derived[j])
        throw gatspoof::ConfigError("duplicate system name \"" + derived[i] +
                                    "\" derived from score file stems; pass "
                                    "--names");
  return derived;
}

gatspoof::AlignedScores align_from_files(
    const std::vector<std::string>& score_paths,
    const std::vector<std::string>& names,
    const std::string& protocol_path) {
  const std::vector<gatspoof::TrialRecord> protocol =
      gatspoof::parse_protocol(protocol_path);
  std::vector<gatspoof::ScoreSet> sets;
  sets.reserve(score_paths.size());
  for (const std::string& p : score_paths)
    sets.push_back(
        gatspoof::join_scores(gatspoof::read_score_file(p), protocol));
  return gatspoof::align_scores(sets, system_names_for(score_paths, names));
}

int run_fuse_fit(const CommonOpts& common,
                 const std::vector<std::string>& score_paths,
                 const std::vector<std::string>& names,
                 const std::string& protocol_path,
                 const std::string& out_model) {
  const gatspoof::PipelineConfig cfg = resolve_config(common);
  const double c = cfg.get_real("fusion.c");
  const gatspoof::AlignedScores aligned =
      align_from_files(score_paths, names, protocol_path);
  const gatspoof::FusionModel model =
      gatspoof::fit_svm(aligned, c, &std::cerr);
  gatspoof::write_fusion_model(out_model, model);
  std::cout << "fuse: fitted " << model.k() << " systems over " << aligned.t()
            << " trials\n";
  for (std::size_t k = 0; k < model.k(); ++k)
    std::cout << "fuse: weight." << model.system_names[k] << " = "
              << gatspoof::format_double(model.weights[k]) << "\n";
  std::cout << "fuse: bias = " << gatspoof::format_double(model.bias) << "\n"
            << "fuse: model " << out_model << "\n";
  return 0;
}

int run_fuse_apply(const CommonOpts& common,
                   const std::vector<std::string>& score_paths,
                   std::vector<std::string> names,
                   const std::string& protocol_path,
                   const std::string& model_path,
                   const std::string& out_path) {
  resolve_config(common);
  const gatspoof::FusionModel model = gatspoof::read_fusion_model(model_path);
  if (names.empty() && score_paths.size() == model.k())
    names = model.system_names;
  const gatspoof::AlignedScores aligned =
      align_from_files(score_paths, names, protocol_path);
  if (aligned.system_names != model.system_names) {
    std::string msg = "system names do not match the fusion model; model has";
    for (const std::string& n : model.system_names) msg += " " + n;
    throw gatspoof::ConfigError(msg);
  }
  const gatspoof::ScoreSet fused = gatspoof::fuse(model, aligned);
  std::vector<gatspoof::ScoredUtt> out;
  out.reserve(fused.size());
  for (const gatspoof::ScoreEntry& e : fused)
    out.push_back(gatspoof::ScoredUtt{e.utt_id, e.score});
  gatspoof::write_score_file(out_path, out);
  std::cout << "fuse: wrote " << out.size() << " fused scores to " << out_path
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gatspoof: graph-attention anti-spoofing pipeline"};
  app.require_subcommand(1);
  app.footer(gatspoof::PipelineConfig::help_text());

  int rc = 0;

  CommonOpts synth_common;
  std::string synth_out, synth_prefix = "SYN";
  std::size_t synth_bona = 10, synth_spoof = 10;
  std::vector<std::string> synth_attacks;
  CLI::App* synth = app.add_subcommand(
      "synth", "generate a synthetic labeled corpus plus protocol file");
  add_common(synth, synth_common);
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--bona", synth_bona, "number of bona fide utterances");
  synth->add_option("--spoof", synth_spoof, "number of spoofed utterances");
  synth->add_option("--prefix", synth_prefix, "utterance id prefix");
  synth->add_option("--attacks", synth_attacks,
                    "attack ids cycled over spoof utterances")
      ->delimiter(',');
  synth->callback([&] {
    rc = run_synth(synth_common, synth_out, synth_bona, synth_spoof,
                   synth_prefix, synth_attacks);
  });

  CommonOpts extract_common;
  std::string extract_protocol, extract_audio_dir, extract_out;
  CLI::App* extract = app.add_subcommand(
      "extract", "compute log filterbank features for every protocol entry");
  add_common(extract, extract_common);
  extract->add_option("--protocol", extract_protocol, "protocol file")
      ->required();
  extract->add_option("--audio-dir", extract_audio_dir,
                      "directory holding <utt_id>.wav files")
      ->required();
  extract->add_option("--out", extract_out, "output feature cache")
      ->required();
  extract->callback([&] {
    rc = run_extract(extract_common, extract_protocol, extract_audio_dir,
                     extract_out);
  });

  CommonOpts train_common;
  std::string train_cache, train_protocol, train_dev_cache,
      train_dev_protocol, train_out;
  CLI::App* train = app.add_subcommand(
      "train", "train a system and keep the best-dev-EER checkpoint");
  add_common(train, train_common);
  train->add_option("--cache", train_cache, "training feature cache")
      ->required();
  train->add_option("--protocol", train_protocol, "training protocol")
      ->required();
  train->add_option("--dev-cache", train_dev_cache,
                    "development feature cache (defaults to --cache)");
  train->add_option("--dev-protocol", train_dev_protocol,
                    "development protocol")
      ->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->callback([&] {
    rc = run_train(train_common, train_cache, train_protocol, train_dev_cache,
                   train_dev_protocol, train_out);
  });

  CommonOpts score_common;
  std::string score_cache, score_protocol, score_checkpoint, score_out;
  CLI::App* score = app.add_subcommand(
      "score", "write per-utterance logits for a trained checkpoint");
  add_common(score, score_common);
  score->add_option("--cache", score_cache, "feature cache")->required();
  score->add_option("--protocol", score_protocol, "protocol file")
      ->required();
  score->add_option("--checkpoint", score_checkpoint, "model checkpoint")
      ->required();
  score->add_option("--out", score_out, "output score file")->required();
  score->callback([&] {
    rc = run_score(score_common, score_cache, score_protocol,
                   score_checkpoint, score_out);
  });

  CommonOpts eval_common;
  std::string eval_scores, eval_protocol, eval_out, eval_csv;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "pooled and per-attack EER / min t-DCF for a score file");
  add_common(evaluate, eval_common);
  evaluate->add_option("--scores", eval_scores, "score file")->required();
  evaluate->add_option("--protocol", eval_protocol, "protocol file")
      ->required();
  evaluate->add_option("--out", eval_out, "also write the report here");
  evaluate->add_option("--csv", eval_csv, "also write a CSV table here");
  evaluate->callback([&] {
    rc = run_evaluate(eval_common, eval_scores, eval_protocol, eval_out,
                      eval_csv);
  });

  CLI::App* fuse = app.add_subcommand(
      "fuse", "score-level fusion of multiple systems");
  fuse->require_subcommand(1);

  CommonOpts fit_common;
  std::vector<std::string> fit_scores, fit_names;
  std::string fit_protocol, fit_out;
  CLI::App* fit = fuse->add_subcommand(
      "fit", "fit a linear SVM over standardized system scores");
  add_common(fit, fit_common);
  fit->add_option("--scores", fit_scores, "one score file per system")
      ->required()
      ->expected(-1);
  fit->add_option("--names", fit_names,
                  "system names (default: score file stems)")
      ->delimiter(',');
  fit->add_option("--protocol", fit_protocol, "protocol file")->required();
  fit->add_option("--out", fit_out, "output model file")->required();
  fit->callback([&] {
    rc = run_fuse_fit(fit_common, fit_scores, fit_names, fit_protocol,
                      fit_out);
  });

  CommonOpts apply_common;
  std::vector<std::string> apply_scores, apply_names;
  std::string apply_protocol, apply_model, apply_out;
  CLI::App* apply = fuse->add_subcommand(
      "apply", "apply a fitted fusion model to score files");
  add_common(apply, apply_common);
  apply->add_option("--scores", apply_scores, "one score file per system")
      ->required()
      ->expected(-1);
  apply->add_option("--names", apply_names,
                    "system names (default: the model's names)")
      ->delimiter(',');
  apply->add_option("--protocol", apply_protocol, "protocol file")
      ->required();
  apply->add_option("--model", apply_model, "fusion model file")->required();
  apply->add_option("--out", apply_out, "output fused score file")
      ->required();
  apply->callback([&] {
    rc = run_fuse_apply(apply_common, apply_scores, apply_names,
                        apply_protocol, apply_model, apply_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const gatspoof::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
