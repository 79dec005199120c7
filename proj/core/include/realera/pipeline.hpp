#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "realera/alignment.hpp"
#include "realera/attention_edit.hpp"
#include "realera/diffusion.hpp"
#include "realera/embedding.hpp"
#include "realera/sampler.hpp"

namespace realera {

// Full erasure run description. The three use_* switches select the ablation
// variants: closed-form-only, closed-form + mining, and the full method.
struct ErasureSpec {
  std::string erase_concept;
  std::string anchor_concept;
  SamplerParams sampler;
  double lambda1 = 0.1;
  // Pull of the closed form toward W_org. The pipeline default is stronger
  // than the solver's own 1e-4 so the single-pair edit stays soft enough for
  // the mining stage to have measurable work to do at toy scale.
  double ridge = 0.3;
  AlignmentConfig alignment;
  int lora_rank = 4;
  std::uint64_t seed = 0;
  bool use_mining = true;
  bool use_beyond = true;
  bool use_alignment = true;

  void validate(const ConceptVocabulary& vocab) const;
};

// Everything needed to replay the run bit-identically plus the raw sample
// sets and training log for constraint audits.
struct ErasureAudit {
  std::uint64_t run_seed = 0;
  std::uint64_t mine_seed = 0;
  std::uint64_t beyond_seed = 0;
  std::uint64_t align_seed = 0;
  std::vector<MinedPair> mined;
  std::vector<PreservedSample> preserved;
  std::vector<AlignmentStepRecord> alignment_log;
};

struct ErasureResult {
  ToyDenoiser model;
  ErasureAudit audit;
};

// Algorithm: sample sets -> closed-form K/V edit (erase pairs = (e, e*) plus
// mined pairs; preserve = beyond samples plus retained vocabulary) -> LoRA
// alignment with per-epoch resampling -> merge. The base model is never
// mutated. Errors from stages are re-thrown with a stage label.
ErasureResult erase(const ToyDenoiser& base_model,
                    const ConceptVocabulary& vocab,
                    const NoiseSchedule& schedule, const ErasureSpec& spec);

}  // namespace realera
