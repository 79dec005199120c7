#include "realera/pipeline.hpp"

#include <utility>

#include "realera/errors.hpp"
#include "realera/rng.hpp"

namespace realera {

void ErasureSpec::validate(const ConceptVocabulary& vocab) const {
  if (erase_concept == anchor_concept)
    throw ValidationError("erase and anchor concepts must differ");
  if (!vocab.contains(erase_concept))
    throw UnknownConceptError("erase concept '" + erase_concept +
                              "' not in vocabulary");
  if (!vocab.contains(anchor_concept))
    throw UnknownConceptError("anchor concept '" + anchor_concept +
                              "' not in vocabulary");
  sampler.validate();
  if (lambda1 < 0.0) throw ValidationError("lambda1 must be nonnegative");
  if (ridge < 0.0) throw ValidationError("ridge must be nonnegative");
  alignment.validate();
  if (lora_rank < 1) throw ValidationError("lora_rank must be >= 1");
}

namespace {

[[noreturn]] void rethrow_labeled(const std::string& stage, const Error& err) {
  throw Error("stage '" + stage + "': " + err.what());
}

}  // namespace

ErasureResult erase(const ToyDenoiser& base_model,
                    const ConceptVocabulary& vocab,
                    const NoiseSchedule& schedule, const ErasureSpec& spec) {
  spec.validate(vocab);

  const Embedding& e = encode(vocab, spec.erase_concept);
  const Embedding& e_star = encode(vocab, spec.anchor_concept);

  ErasureResult result;
  ErasureAudit& audit = result.audit;
  audit.run_seed = spec.seed;
  audit.mine_seed = derive_seed(spec.seed, "erase/mine");
  audit.beyond_seed = derive_seed(spec.seed, "erase/beyond");
  audit.align_seed = derive_seed(spec.seed, "erase/align");

  if (spec.use_mining) {
    try {
      Rng rng(audit.mine_seed);
      audit.mined = mine_neighbor_batch(e, e_star, spec.sampler, rng).pairs;
    } catch (const Error& err) {
      rethrow_labeled("mining", err);
    }
  }
  if (spec.use_beyond) {
    try {
      Rng rng(audit.beyond_seed);
      audit.preserved = sample_beyond_batch(e, spec.sampler, rng).samples;
    } catch (const Error& err) {
      rethrow_labeled("beyond-sampling", err);
    }
  }

  // Closed-form K/V edit: erase set starts from the unperturbed pair, the
  // preserve side combines beyond samples with the retained vocabulary.
  EditInstance inst;
  inst.lambda1 = spec.lambda1;
  inst.ridge = spec.ridge;
  inst.erase_pairs.emplace_back(e, e_star);
  for (const auto& pair : audit.mined)
    inst.erase_pairs.emplace_back(pair.perturbed_erase, pair.perturbed_anchor);
  for (const auto& sample : audit.preserved)
    inst.preserve_inputs.push_back(sample.embedding);
  for (const auto& [id, emb] : vocab.concepts)
    if (id != spec.erase_concept) inst.preserve_inputs.push_back(emb);

  ToyDenoiser edited = base_model;
  try {
    edited.attn = edit_model(base_model.attn, inst);
  } catch (const Error& err) {
    rethrow_labeled("closed-form-edit", err);
  }

  if (!spec.use_alignment || spec.alignment.epochs == 0) {
    result.model = std::move(edited);
    return result;
  }

  AlignmentTask task;
  task.erase = e;
  task.anchor = e_star;
  task.sampler = spec.sampler;
  task.use_mining = spec.use_mining;
  task.use_beyond = spec.use_beyond;

  try {
    Rng rng(audit.align_seed);
    AlignmentResult aligned = train_lora(edited, base_model, task,
                                         spec.alignment, spec.lora_rank,
                                         schedule, rng);
    audit.alignment_log = std::move(aligned.log);
    result.model = merge_lora_set(edited, aligned.adapters);
  } catch (const Error& err) {
    rethrow_labeled("alignment", err);
  }
  return result;
}

}  // namespace realera
