#include <cmath>

#include "doctest.h"
#include "realera/alignment.hpp"
#include "realera/errors.hpp"

using namespace realera;

namespace {

struct Rig {
  ConceptVocabulary vocab = build_vocabulary(8, {"a", "b", "c"}, 51);
  DenoiserConfig cfg;
  ToyDenoiser orig;
  ToyDenoiser edited;
  NoiseSchedule schedule = build_schedule(20, 1e-3, 0.15);

  Rig() {
    cfg.latent_dim = 4;
    cfg.cond_dim = 8;
    cfg.hidden = 16;
    cfg.time_features = 8;
    cfg.n_tokens = 4;
    orig = init_denoiser(cfg, 52);
    edited = init_denoiser(cfg, 53);  // stands in for a K/V-edited model
  }

  AlignmentTask task() const {
    AlignmentTask t;
    t.erase = encode(vocab, "a");
    t.anchor = encode(vocab, "b");
    t.sampler.m = 5;
    t.sampler.n = 5;
    return t;
  }
};

}  // namespace

TEST_CASE("odd step loss matches its definition") {
  Rig rig;
  const LoraSet adapters = init_lora_set(rig.edited, 2, 54);
  Rng rng(55);
  const Eigen::VectorXd z = rng.gaussian_vector(4);
  const int t = 7;
  const double loss = odd_step_loss(rig.edited, adapters, rig.orig, z, t,
                                    encode(rig.vocab, "a"),
                                    encode(rig.vocab, "b"));
  const Eigen::VectorXd pred =
      predict_noise(rig.edited, &adapters, z, t, encode(rig.vocab, "a"));
  const Eigen::VectorXd target =
      predict_noise(rig.orig, nullptr, z, t, encode(rig.vocab, "b"));
  CHECK(loss == doctest::Approx((pred - target).squaredNorm()));
  CHECK(loss > 0.0);
}

TEST_CASE("even step loss is the unweighted sum of its two terms") {
  Rig rig;
  const LoraSet adapters = init_lora_set(rig.edited, 2, 56);
  Rng rng(57);
  const Eigen::VectorXd z = rng.gaussian_vector(4);
  const int t = 11;
  const Embedding assoc = encode(rig.vocab, "a");
  const Embedding pres = encode(rig.vocab, "c");
  const Embedding anchor = encode(rig.vocab, "b");
  const double loss =
      even_step_loss(rig.edited, adapters, rig.orig, z, t, assoc, pres, anchor);

  const double term_a =
      (predict_noise(rig.edited, &adapters, z, t, assoc) -
       predict_noise(rig.orig, nullptr, z, t, anchor))
          .squaredNorm();
  const double term_p =
      (predict_noise(rig.edited, &adapters, z, t, pres) -
       predict_noise(rig.orig, nullptr, z, t, pres))
          .squaredNorm();
  CHECK(loss == doctest::Approx(term_a + term_p));
}

TEST_CASE("training log covers every step with alternating parity") {
  Rig rig;
  AlignmentConfig config;
  config.epochs = 4;
  config.steps_per_epoch = 3;
  config.lr = 1e-3;
  Rng rng(58);
  const AlignmentResult res =
      train_lora(rig.edited, rig.orig, rig.task(), config, 2, rig.schedule, rng);

  REQUIRE(res.log.size() == 12);
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    const AlignmentStepRecord& rec = res.log[i];
    CHECK(rec.step == static_cast<int>(i) + 1);
    CHECK(rec.epoch == static_cast<int>(i) / 3 + 1);
    CHECK(rec.parity == (rec.step % 2 == 1 ? 'o' : 'e'));
    CHECK(std::isfinite(rec.loss));
    if (rec.parity == 'o') {
      CHECK(rec.preserve_term == 0.0);
      CHECK(rec.loss == doctest::Approx(rec.assoc_term));
      CHECK(std::isnan(rec.assoc_radius));
    } else {
      CHECK(rec.loss == doctest::Approx(rec.assoc_term + rec.preserve_term));
      CHECK(rec.preserve_term > 0.0);  // beyond term active by default
      CHECK(!std::isnan(rec.assoc_radius));
      CHECK(!std::isnan(rec.pres_radius));
      // Sampled from the mining band and the beyond shell respectively.
      CHECK(rec.assoc_cosine >= rig.task().sampler.s2);
      CHECK(rec.assoc_cosine <= rig.task().sampler.s1);
      CHECK(rec.pres_cosine < rig.task().sampler.s2);
      CHECK(rec.pres_radius >= rig.task().sampler.d1);
    }
  }
  // Training actually moved the adapters.
  CHECK(res.adapters[0].k.b.norm() > 0.0);
  CHECK(res.adapters[0].v.b.norm() > 0.0);
}

TEST_CASE("ablation switches gate the even-step samples") {
  Rig rig;
  AlignmentConfig config;
  config.epochs = 2;
  config.steps_per_epoch = 4;

  AlignmentTask no_mining = rig.task();
  no_mining.use_mining = false;
  Rng r1(59);
  const auto res1 = train_lora(rig.edited, rig.orig, no_mining, config, 2,
                               rig.schedule, r1);
  for (const auto& rec : res1.log)
    if (rec.parity == 'e') {
      CHECK(std::isnan(rec.assoc_radius));  // falls back to the raw embedding
      CHECK(!std::isnan(rec.pres_radius));
    }

  AlignmentTask no_beyond = rig.task();
  no_beyond.use_beyond = false;
  Rng r2(60);
  const auto res2 = train_lora(rig.edited, rig.orig, no_beyond, config, 2,
                               rig.schedule, r2);
  for (const auto& rec : res2.log)
    if (rec.parity == 'e') {
      CHECK(rec.preserve_term == 0.0);
      CHECK(std::isnan(rec.pres_radius));
    }
}

TEST_CASE("training is deterministic in the rng stream") {
  Rig rig;
  AlignmentConfig config;
  config.epochs = 2;
  config.steps_per_epoch = 2;
  Rng r1(61), r2(61);
  const auto a =
      train_lora(rig.edited, rig.orig, rig.task(), config, 2, rig.schedule, r1);
  const auto b =
      train_lora(rig.edited, rig.orig, rig.task(), config, 2, rig.schedule, r2);
  CHECK(a.adapters[0].k.a == b.adapters[0].k.a);
  CHECK(a.adapters[0].k.b == b.adapters[0].k.b);
  CHECK(a.adapters[0].v.b == b.adapters[0].v.b);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i)
    CHECK(a.log[i].loss == b.log[i].loss);
}

TEST_CASE("zero epochs returns untouched zero adapters") {
  Rig rig;
  AlignmentConfig config;
  config.epochs = 0;
  Rng rng(62);
  const auto res =
      train_lora(rig.edited, rig.orig, rig.task(), config, 3, rig.schedule, rng);
  CHECK(res.log.empty());
  CHECK(res.adapters[0].k.b.isZero(0.0));
  CHECK(res.adapters[0].v.b.isZero(0.0));
}

TEST_CASE("config validation") {
  AlignmentConfig config;
  CHECK_NOTHROW(config.validate());
  config.epochs = -1;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config = AlignmentConfig{};
  config.lr = 0.0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
  config = AlignmentConfig{};
  config.steps_per_epoch = 0;
  CHECK_THROWS_AS(config.validate(), ValidationError);
}
