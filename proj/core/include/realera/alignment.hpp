#pragma once

#include <cstdint>
#include <vector>

#include "realera/diffusion.hpp"
#include "realera/sampler.hpp"

namespace realera {

struct AlignmentConfig {
  int epochs = 200;
  // 1e-3 suits the toy loss scale; a full-size diffusion model would want
  // something closer to 1e-5. Surfaced in the effective config either way.
  double lr = 1e-3;
  int steps_per_epoch = 10;
  std::uint64_t seed = 0;
  // gamma1/gamma2 are reserved weighting knobs: parsed, validated, and echoed
  // through the effective config for forward compatibility, but applied
  // nowhere in the current losses.
  double gamma1 = 0.3;
  double gamma2 = 0.7;

  void validate() const;
};

// What the LoRA stage aligns: the erase/anchor embeddings plus the sampling
// band used for per-epoch resampling. The two switches select the ablation
// variant (no mining: even steps fall back to the raw erase embedding; no
// beyond: even steps drop the preservation term).
struct AlignmentTask {
  Embedding erase;
  Embedding anchor;
  SamplerParams sampler;
  bool use_mining = true;
  bool use_beyond = true;
};

// |eps_adapted(z_t, t, p_c) - eps_orig(z_t, t, p_anchor)|^2; the target term
// is frozen (no gradient).
double odd_step_loss(const ToyDenoiser& edited, const LoraSet& adapters,
                     const ToyDenoiser& orig, const Eigen::VectorXd& z_t, int t,
                     const Embedding& p_c, const Embedding& p_anchor);

// |eps_adapted(p_assoc) - eps_orig(p_anchor)|^2 +
// |eps_adapted(p_pres) - eps_orig(p_pres)|^2, both targets frozen.
double even_step_loss(const ToyDenoiser& edited, const LoraSet& adapters,
                      const ToyDenoiser& orig, const Eigen::VectorXd& z_t,
                      int t, const Embedding& p_assoc, const Embedding& p_pres,
                      const Embedding& p_anchor);

// One row per optimizer step; doubles are NaN where a field does not apply
// (odd steps have no assoc/preserve sample).
struct AlignmentStepRecord {
  int step = 0;   // global, 1-based; odd steps align the erase prompt to the
                  // anchor, even steps the mined/preserved samples
  int epoch = 0;  // 1-based
  char parity = 'o';
  double loss = 0.0;
  double assoc_term = 0.0;
  double preserve_term = 0.0;
  double assoc_radius = 0.0;
  double assoc_cosine = 0.0;
  double pres_radius = 0.0;
  double pres_cosine = 0.0;
};

struct AlignmentResult {
  LoraSet adapters;
  std::vector<AlignmentStepRecord> log;
};

// SGD over the adapters of the edited model, alternating odd/even losses by
// global step parity; mined/preserved sets are resampled every epoch, and
// each step draws a fresh anchor-conditioned latent, timestep and noise.
// The original model and the edited base weights are never touched.
AlignmentResult train_lora(const ToyDenoiser& edited_model,
                           const ToyDenoiser& orig_model,
                           const AlignmentTask& task,
                           const AlignmentConfig& config, int lora_rank,
                           const NoiseSchedule& schedule, Rng& rng);

}  // namespace realera
