#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "realera/diffusion.hpp"
#include "realera/pipeline.hpp"

namespace realera {

// Full run description parsed from a JSON document. Every stage seed may be
// set explicitly; when omitted it derives from the run seed, so `--seed N`
// reseeds the whole run while explicitly pinned stages stay put. The
// effective-config echo always shows the resolved values.
struct RunConfig {
  std::uint64_t seed = 0;

  // vocabulary
  int vocab_dim = 32;
  std::vector<std::string> concepts = {"airplane", "automobile", "bird", "cat",
                                       "deer"};
  std::optional<std::uint64_t> vocabulary_seed;

  // model
  DenoiserConfig model;
  std::optional<std::uint64_t> model_seed;

  // schedule
  int schedule_steps = 100;
  double beta_min = 1e-3;
  double beta_max = 0.15;

  // dataset
  double dataset_mean_scale = 1.2;
  double dataset_std = 0.4;
  std::optional<std::uint64_t> dataset_seed;

  // base_training
  TrainParams base_training;
  std::optional<std::uint64_t> base_training_seed;

  // erasure (ErasureSpec::seed is resolved separately)
  ErasureSpec erasure = [] {
    ErasureSpec s;
    s.erase_concept = "airplane";
    s.anchor_concept = "bird";
    return s;
  }();
  std::optional<std::uint64_t> erasure_seed;

  // evaluation
  int eval_n_probes = 8;
  int eval_samples_per_probe = 200;
  std::vector<std::string> eval_retained;  // empty -> all but erase concept
  std::optional<std::uint64_t> evaluation_seed;

  // output
  std::string out_dir = "out";

  std::uint64_t effective_vocabulary_seed() const;
  std::uint64_t effective_model_seed() const;
  std::uint64_t effective_dataset_seed() const;
  std::uint64_t effective_base_training_seed() const;
  std::uint64_t effective_erasure_seed() const;
  std::uint64_t effective_evaluation_seed() const;

  // ErasureSpec with its seed resolved.
  ErasureSpec make_erasure_spec() const;
  // Retained list with the empty-means-all-but-erase default applied.
  std::vector<std::string> effective_retained() const;

  void validate() const;
};

// Throws ConfigError with a line number on malformed JSON and a
// section/key-labeled message on unknown keys or bad values. An absent or
// null document section keeps its defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// JSON echo of every parameter actually used, derived seeds included.
std::string effective_config(const RunConfig& config);

}  // namespace realera
