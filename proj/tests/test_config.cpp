#include <set>
#include <string>

#include "doctest.h"
#include "realera/config.hpp"
#include "realera/errors.hpp"
#include "realera/rng.hpp"

using namespace realera;

TEST_CASE("empty document yields the shipped defaults") {
  const RunConfig cfg = parse_run_config("{}");
  CHECK(cfg.seed == 0);
  CHECK(cfg.vocab_dim == 32);
  CHECK(cfg.concepts.size() == 5);
  CHECK(cfg.erasure.erase_concept == "airplane");
  CHECK(cfg.erasure.anchor_concept == "bird");
  CHECK(cfg.model.cond_dim == 32);
  CHECK(cfg.model.latent_dim == 8);
  CHECK(cfg.schedule_steps == 100);
  CHECK(cfg.base_training.steps == 4000);
  CHECK(cfg.eval_samples_per_probe == 200);
  CHECK(!cfg.vocabulary_seed.has_value());
  CHECK(cfg.out_dir == "out");
}

TEST_CASE("explicit values override defaults everywhere") {
  const std::string doc = R"({
    "seed": 7,
    "vocabulary": {"dim": 16, "concepts": ["a", "b", "c"], "seed": 100},
    "model": {"latent_dim": 4, "cond_dim": 16, "hidden": 32,
              "time_features": 8, "n_tokens": 4, "init_scale": 0.4,
              "seed": 101},
    "schedule": {"steps": 50, "beta_min": 0.002, "beta_max": 0.12},
    "dataset": {"mean_scale": 1.5, "std": 0.3, "seed": 102},
    "base_training": {"steps": 500, "lr": 0.005, "batch_size": 16,
                      "seed": 103},
    "erasure": {
      "erase_concept": "a", "anchor_concept": "b",
      "sampler": {"d1": 1.0, "d2": 2.0, "d1_anchor": 0.2, "s1": 0.95,
                  "s2": 0.5, "m": 10, "n": 20, "max_attempts": 500,
                  "zero_on_reject": false},
      "lambda1": 0.2, "ridge": 0.25,
      "alignment": {"epochs": 50, "lr": 0.002, "steps_per_epoch": 5,
                    "gamma1": 0.3, "gamma2": 0.7},
      "lora_rank": 2, "seed": 104,
      "use_mining": true, "use_beyond": false, "use_alignment": true
    },
    "evaluation": {"n_probes": 4, "samples_per_probe": 60,
                   "retained_concepts": ["b"], "seed": 105},
    "output": {"dir": "runs/x"}
  })";
  const RunConfig cfg = parse_run_config(doc);
  CHECK(cfg.seed == 7);
  CHECK(cfg.vocab_dim == 16);
  CHECK(cfg.concepts == std::vector<std::string>{"a", "b", "c"});
  CHECK(cfg.effective_vocabulary_seed() == 100);
  CHECK(cfg.effective_model_seed() == 101);
  CHECK(cfg.effective_dataset_seed() == 102);
  CHECK(cfg.effective_base_training_seed() == 103);
  CHECK(cfg.effective_erasure_seed() == 104);
  CHECK(cfg.effective_evaluation_seed() == 105);
  CHECK(cfg.model.hidden == 32);
  CHECK(cfg.schedule_steps == 50);
  CHECK(cfg.dataset_mean_scale == 1.5);
  CHECK(cfg.base_training.batch_size == 16);
  CHECK(cfg.erasure.sampler.m == 10);
  CHECK(cfg.erasure.sampler.zero_on_reject == false);
  CHECK(cfg.erasure.ridge == 0.25);
  CHECK(cfg.erasure.alignment.epochs == 50);
  CHECK(cfg.erasure.use_beyond == false);
  CHECK(cfg.eval_retained == std::vector<std::string>{"b"});
  CHECK(cfg.out_dir == "runs/x");
  const ErasureSpec spec = cfg.make_erasure_spec();
  CHECK(spec.seed == 104);
  CHECK(spec.erase_concept == "a");
}

TEST_CASE("stage seeds derive from the run seed when not pinned") {
  RunConfig cfg = parse_run_config(R"({"seed": 42})");
  CHECK(cfg.effective_vocabulary_seed() ==
        derive_seed(42, "stage/vocabulary"));
  CHECK(cfg.effective_model_seed() == derive_seed(42, "stage/model"));
  CHECK(cfg.effective_dataset_seed() == derive_seed(42, "stage/dataset"));
  CHECK(cfg.effective_base_training_seed() ==
        derive_seed(42, "stage/base-training"));
  CHECK(cfg.effective_erasure_seed() == derive_seed(42, "stage/erasure"));
  CHECK(cfg.effective_evaluation_seed() ==
        derive_seed(42, "stage/evaluation"));
  // All six stage streams are distinct.
  std::set<std::uint64_t> seeds{
      cfg.effective_vocabulary_seed(),    cfg.effective_model_seed(),
      cfg.effective_dataset_seed(),       cfg.effective_base_training_seed(),
      cfg.effective_erasure_seed(),       cfg.effective_evaluation_seed()};
  CHECK(seeds.size() == 6);
}

TEST_CASE("json syntax errors come back with a line number") {
  try {
    (void)parse_run_config("{\n  \"seed\": 1,\n  oops\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected with their section") {
  try {
    (void)parse_run_config(R"({"vocabulary": {"dimension": 32}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("dimension") != std::string::npos);
    CHECK(msg.find("vocabulary") != std::string::npos);
  }
  CHECK_THROWS_AS((void)parse_run_config(R"({"sed": 3})"), ConfigError);
  CHECK_THROWS_AS(
      (void)parse_run_config(R"({"erasure": {"sampler": {"d3": 1.0}}})"),
      ConfigError);
}

TEST_CASE("type errors name the offending key") {
  try {
    (void)parse_run_config(R"({"schedule": {"steps": "many"}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("schedule.steps") != std::string::npos);
  }
}

TEST_CASE("semantic validation rejects inconsistent configs") {
  // cond_dim must track vocabulary dim.
  CHECK_THROWS_AS((void)parse_run_config(R"({"vocabulary": {"dim": 16}})"),
                  ConfigError);
  CHECK_NOTHROW((void)parse_run_config(
      R"({"vocabulary": {"dim": 16}, "model": {"cond_dim": 16}})"));
  CHECK_THROWS_AS(
      (void)parse_run_config(R"({"schedule": {"beta_min": 0.5,
                                              "beta_max": 0.2}})"),
      ConfigError);
  CHECK_THROWS_AS(
      (void)parse_run_config(R"({"evaluation": {"samples_per_probe": 10}})"),
      ConfigError);
  CHECK_THROWS_AS((void)parse_run_config(R"({"dataset": {"std": 0.0}})"),
                  ConfigError);
  CHECK_THROWS_AS((void)parse_run_config("[1, 2]"), ConfigError);
}

TEST_CASE("null sections and keys keep defaults") {
  const RunConfig cfg = parse_run_config(
      R"({"vocabulary": null, "erasure": {"ridge": null}})");
  CHECK(cfg.vocab_dim == 32);
  CHECK(cfg.erasure.ridge == RunConfig{}.erasure.ridge);
}

TEST_CASE("effective config echo parses back to the same effective run") {
  RunConfig cfg = parse_run_config(R"({"seed": 9})");
  const std::string echo = effective_config(cfg);
  const RunConfig back = parse_run_config(echo);
  // Every stage seed is now pinned explicitly to the same value.
  CHECK(back.effective_vocabulary_seed() == cfg.effective_vocabulary_seed());
  CHECK(back.effective_model_seed() == cfg.effective_model_seed());
  CHECK(back.effective_dataset_seed() == cfg.effective_dataset_seed());
  CHECK(back.effective_base_training_seed() ==
        cfg.effective_base_training_seed());
  CHECK(back.effective_erasure_seed() == cfg.effective_erasure_seed());
  CHECK(back.effective_evaluation_seed() == cfg.effective_evaluation_seed());
  CHECK(back.vocab_dim == cfg.vocab_dim);
  CHECK(back.erasure.sampler.m == cfg.erasure.sampler.m);
  CHECK(back.erasure.sampler.n == cfg.erasure.sampler.n);
  CHECK(back.erasure.ridge == cfg.erasure.ridge);
  CHECK(back.erasure.alignment.epochs == cfg.erasure.alignment.epochs);
  CHECK(back.eval_samples_per_probe == cfg.eval_samples_per_probe);
  CHECK(back.effective_retained() == cfg.effective_retained());
  // Echo of the echo is the identical document (fixpoint).
  CHECK(effective_config(back) == echo);
}

TEST_CASE("effective retained defaults to all concepts but the erased one") {
  RunConfig cfg;
  const auto retained = cfg.effective_retained();
  CHECK(retained == std::vector<std::string>{"automobile", "bird", "cat",
                                             "deer"});
  cfg.eval_retained = {"bird"};
  CHECK(cfg.effective_retained() == std::vector<std::string>{"bird"});
}
