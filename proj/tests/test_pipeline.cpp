#include <cmath>

#include "doctest.h"
#include "realera/errors.hpp"
#include "realera/pipeline.hpp"

using namespace realera;

namespace {

// Small but structurally complete rig; the model is untrained because these
// tests audit pipeline mechanics, not erasure quality.
struct Rig {
  ConceptVocabulary vocab =
      build_vocabulary(8, {"a", "b", "c", "d"}, 71);
  DenoiserConfig cfg;
  ToyDenoiser base;
  NoiseSchedule schedule = build_schedule(20, 1e-3, 0.15);

  Rig() {
    cfg.latent_dim = 4;
    cfg.cond_dim = 8;
    cfg.hidden = 16;
    cfg.time_features = 8;
    cfg.n_tokens = 4;
    base = init_denoiser(cfg, 72);
  }

  ErasureSpec spec() const {
    ErasureSpec s;
    s.erase_concept = "a";
    s.anchor_concept = "c";
    s.sampler.m = 6;
    s.sampler.n = 7;
    s.alignment.epochs = 3;
    s.alignment.steps_per_epoch = 2;
    s.seed = 1234;
    return s;
  }
};

}  // namespace

TEST_CASE("erase produces a full audit with in-band samples") {
  Rig rig;
  const ErasureSpec spec = rig.spec();
  const ErasureResult res = erase(rig.base, rig.vocab, rig.schedule, spec);

  CHECK(res.audit.run_seed == 1234);
  CHECK(res.audit.mine_seed == derive_seed(1234, "erase/mine"));
  CHECK(res.audit.beyond_seed == derive_seed(1234, "erase/beyond"));
  CHECK(res.audit.align_seed == derive_seed(1234, "erase/align"));

  REQUIRE(res.audit.mined.size() == 6);
  REQUIRE(res.audit.preserved.size() == 7);
  const Embedding& e = encode(rig.vocab, "a");
  for (const auto& p : res.audit.mined) {
    CHECK(p.cosine_to_center >= spec.sampler.s2);
    CHECK(p.cosine_to_center <= spec.sampler.s1);
    CHECK(euclid(p.perturbed_erase, e) < spec.sampler.d1);
  }
  for (const auto& s : res.audit.preserved) {
    CHECK(s.cosine_to_center < spec.sampler.s2);
    CHECK(s.radius >= spec.sampler.d1);
    CHECK(s.radius < spec.sampler.d2);
  }
  CHECK(res.audit.alignment_log.size() == 6);  // 3 epochs x 2 steps
}

TEST_CASE("erase never mutates the base model and edits only K/V") {
  Rig rig;
  const ToyDenoiser before = rig.base;
  const ErasureResult res = erase(rig.base, rig.vocab, rig.schedule, rig.spec());

  CHECK(rig.base.attn.layers[0].wk == before.attn.layers[0].wk);
  CHECK(rig.base.attn.layers[0].wv == before.attn.layers[0].wv);
  CHECK(rig.base.mlp1 == before.mlp1);

  // Condition-independent weights are carried over untouched; only the
  // cross-attention projections change.
  CHECK(res.model.input_proj == rig.base.input_proj);
  CHECK(res.model.time_embed == rig.base.time_embed);
  CHECK(res.model.wq == rig.base.wq);
  CHECK(res.model.mlp1 == rig.base.mlp1);
  CHECK(res.model.mlp2 == rig.base.mlp2);
  CHECK(res.model.output_proj == rig.base.output_proj);
  CHECK(res.model.attn.layers[0].wk != rig.base.attn.layers[0].wk);
  CHECK(res.model.attn.layers[0].wv != rig.base.attn.layers[0].wv);
}

TEST_CASE("erase is a pure function of its spec seed") {
  Rig rig;
  const ErasureResult a = erase(rig.base, rig.vocab, rig.schedule, rig.spec());
  const ErasureResult b = erase(rig.base, rig.vocab, rig.schedule, rig.spec());
  CHECK(a.model.attn.layers[0].wk == b.model.attn.layers[0].wk);
  CHECK(a.model.attn.layers[0].wv == b.model.attn.layers[0].wv);
  REQUIRE(a.audit.mined.size() == b.audit.mined.size());
  for (std::size_t i = 0; i < a.audit.mined.size(); ++i)
    CHECK(a.audit.mined[i].perturbed_erase == b.audit.mined[i].perturbed_erase);

  ErasureSpec other = rig.spec();
  other.seed = 4321;
  const ErasureResult c = erase(rig.base, rig.vocab, rig.schedule, other);
  CHECK(a.model.attn.layers[0].wk != c.model.attn.layers[0].wk);
}

TEST_CASE("ablation switches skip their stages") {
  Rig rig;
  ErasureSpec cf_only = rig.spec();
  cf_only.use_mining = false;
  cf_only.use_beyond = false;
  cf_only.use_alignment = false;
  const ErasureResult res = erase(rig.base, rig.vocab, rig.schedule, cf_only);
  CHECK(res.audit.mined.empty());
  CHECK(res.audit.preserved.empty());
  CHECK(res.audit.alignment_log.empty());
  CHECK(res.model.attn.layers[0].wk != rig.base.attn.layers[0].wk);

  ErasureSpec no_align = rig.spec();
  no_align.use_alignment = false;
  const ErasureResult res2 = erase(rig.base, rig.vocab, rig.schedule, no_align);
  CHECK(res2.audit.alignment_log.empty());
  CHECK(res2.audit.mined.size() == 6);

  // The three variants genuinely differ.
  const ErasureResult full = erase(rig.base, rig.vocab, rig.schedule, rig.spec());
  CHECK(res.model.attn.layers[0].wk != res2.model.attn.layers[0].wk);
  CHECK(res2.model.attn.layers[0].wk != full.model.attn.layers[0].wk);
}

TEST_CASE("spec validation rejects unusable runs") {
  Rig rig;
  ErasureSpec spec = rig.spec();
  spec.anchor_concept = "a";  // same as erase
  CHECK_THROWS_AS(spec.validate(rig.vocab), ValidationError);
  spec = rig.spec();
  spec.erase_concept = "zebra";
  CHECK_THROWS_AS(spec.validate(rig.vocab), UnknownConceptError);
  spec = rig.spec();
  spec.anchor_concept = "zebra";
  CHECK_THROWS_AS(spec.validate(rig.vocab), UnknownConceptError);
  spec = rig.spec();
  spec.lora_rank = 0;
  CHECK_THROWS_AS(spec.validate(rig.vocab), ValidationError);
  spec = rig.spec();
  spec.ridge = -0.1;
  CHECK_THROWS_AS(spec.validate(rig.vocab), ValidationError);
}

TEST_CASE("stage failures carry a stage label") {
  Rig rig;
  ErasureSpec spec = rig.spec();
  spec.sampler.s1 = 0.99999;  // infeasible band
  spec.sampler.s2 = 0.99998;
  spec.sampler.max_attempts = 20;
  try {
    (void)erase(rig.base, rig.vocab, rig.schedule, spec);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(std::string(err.what()).find("mining") != std::string::npos);
  }
}
