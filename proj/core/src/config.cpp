#include "realera/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

#include "realera/errors.hpp"
#include "realera/rng.hpp"

namespace realera {

namespace {

using Json = nlohmann::ordered_json;

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

void reject_unknown_keys(const Json& obj, const std::string& section,
                         const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in section '" + section +
                        "'");
}

template <typename T>
void get_to(const Json& obj, const std::string& section, const std::string& key,
            T& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    obj.at(key).get_to(out);
  } catch (const Json::exception& e) {
    throw ConfigError("bad value for '" + section + "." + key +
                      "': " + e.what());
  }
}

void get_seed(const Json& obj, const std::string& section,
              std::optional<std::uint64_t>& out) {
  if (!obj.contains("seed") || obj.at("seed").is_null()) return;
  std::uint64_t value = 0;
  get_to(obj, section, "seed", value);
  out = value;
}

Json section(const Json& doc, const std::string& name) {
  if (!doc.contains(name) || doc.at(name).is_null())
    return Json::object();
  const Json& s = doc.at(name);
  if (!s.is_object())
    throw ConfigError("section '" + name + "' must be an object");
  return s;
}

}  // namespace

std::uint64_t RunConfig::effective_vocabulary_seed() const {
  return vocabulary_seed.value_or(derive_seed(seed, "stage/vocabulary"));
}
std::uint64_t RunConfig::effective_model_seed() const {
  return model_seed.value_or(derive_seed(seed, "stage/model"));
}
std::uint64_t RunConfig::effective_dataset_seed() const {
  return dataset_seed.value_or(derive_seed(seed, "stage/dataset"));
}
std::uint64_t RunConfig::effective_base_training_seed() const {
  return base_training_seed.value_or(derive_seed(seed, "stage/base-training"));
}
std::uint64_t RunConfig::effective_erasure_seed() const {
  return erasure_seed.value_or(derive_seed(seed, "stage/erasure"));
}
std::uint64_t RunConfig::effective_evaluation_seed() const {
  return evaluation_seed.value_or(derive_seed(seed, "stage/evaluation"));
}

ErasureSpec RunConfig::make_erasure_spec() const {
  ErasureSpec spec = erasure;
  spec.seed = effective_erasure_seed();
  return spec;
}

std::vector<std::string> RunConfig::effective_retained() const {
  if (!eval_retained.empty()) return eval_retained;
  std::vector<std::string> retained;
  for (const auto& id : concepts)
    if (id != erasure.erase_concept) retained.push_back(id);
  return retained;
}

void RunConfig::validate() const {
  model.validate();
  if (schedule_steps < 1 || schedule_steps > 10000)
    throw ConfigError("schedule.steps must be in [1, 10000]");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 0.999))
    throw ConfigError("schedule betas must satisfy 0 < beta_min <= beta_max < 0.999");
  if (!(dataset_std > 0.0))
    throw ConfigError("dataset.std must be positive");
  if (!(dataset_mean_scale > 0.0))
    throw ConfigError("dataset.mean_scale must be positive");
  if (base_training.steps < 0)
    throw ConfigError("base_training.steps must be non-negative");
  if (!(base_training.lr > 0.0))
    throw ConfigError("base_training.lr must be positive");
  if (base_training.batch_size < 1)
    throw ConfigError("base_training.batch_size must be positive");
  if (eval_n_probes < 1)
    throw ConfigError("evaluation.n_probes must be positive");
  if (eval_samples_per_probe < 50)
    throw ConfigError("evaluation.samples_per_probe must be >= 50");
  if (model.cond_dim != vocab_dim)
    throw ConfigError("model.cond_dim must equal vocabulary.dim");
}

RunConfig parse_run_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config parse error at line " +
                      std::to_string(line_of_byte(text, e.byte)) + ": " +
                      e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  reject_unknown_keys(doc, "(root)",
                      {"seed", "vocabulary", "model", "schedule", "dataset",
                       "base_training", "erasure", "evaluation", "output"});

  RunConfig cfg;
  get_to(doc, "(root)", "seed", cfg.seed);

  {
    const Json s = section(doc, "vocabulary");
    reject_unknown_keys(s, "vocabulary", {"dim", "concepts", "seed"});
    get_to(s, "vocabulary", "dim", cfg.vocab_dim);
    get_to(s, "vocabulary", "concepts", cfg.concepts);
    get_seed(s, "vocabulary", cfg.vocabulary_seed);
  }
  {
    const Json s = section(doc, "model");
    reject_unknown_keys(s, "model",
                        {"latent_dim", "cond_dim", "hidden", "time_features",
                         "n_tokens", "init_scale", "seed"});
    get_to(s, "model", "latent_dim", cfg.model.latent_dim);
    get_to(s, "model", "cond_dim", cfg.model.cond_dim);
    get_to(s, "model", "hidden", cfg.model.hidden);
    get_to(s, "model", "time_features", cfg.model.time_features);
    get_to(s, "model", "n_tokens", cfg.model.n_tokens);
    get_to(s, "model", "init_scale", cfg.model.init_scale);
    get_seed(s, "model", cfg.model_seed);
  }
  {
    const Json s = section(doc, "schedule");
    reject_unknown_keys(s, "schedule", {"steps", "beta_min", "beta_max"});
    get_to(s, "schedule", "steps", cfg.schedule_steps);
    get_to(s, "schedule", "beta_min", cfg.beta_min);
    get_to(s, "schedule", "beta_max", cfg.beta_max);
  }
  {
    const Json s = section(doc, "dataset");
    reject_unknown_keys(s, "dataset", {"mean_scale", "std", "seed"});
    get_to(s, "dataset", "mean_scale", cfg.dataset_mean_scale);
    get_to(s, "dataset", "std", cfg.dataset_std);
    get_seed(s, "dataset", cfg.dataset_seed);
  }
  {
    const Json s = section(doc, "base_training");
    reject_unknown_keys(s, "base_training",
                        {"steps", "lr", "batch_size", "seed"});
    get_to(s, "base_training", "steps", cfg.base_training.steps);
    get_to(s, "base_training", "lr", cfg.base_training.lr);
    get_to(s, "base_training", "batch_size", cfg.base_training.batch_size);
    get_seed(s, "base_training", cfg.base_training_seed);
  }
  {
    const Json s = section(doc, "erasure");
    reject_unknown_keys(
        s, "erasure",
        {"erase_concept", "anchor_concept", "sampler", "lambda1", "ridge",
         "alignment", "lora_rank", "seed", "use_mining", "use_beyond",
         "use_alignment"});
    get_to(s, "erasure", "erase_concept", cfg.erasure.erase_concept);
    get_to(s, "erasure", "anchor_concept", cfg.erasure.anchor_concept);
    get_to(s, "erasure", "lambda1", cfg.erasure.lambda1);
    get_to(s, "erasure", "ridge", cfg.erasure.ridge);
    get_to(s, "erasure", "lora_rank", cfg.erasure.lora_rank);
    get_seed(s, "erasure", cfg.erasure_seed);
    get_to(s, "erasure", "use_mining", cfg.erasure.use_mining);
    get_to(s, "erasure", "use_beyond", cfg.erasure.use_beyond);
    get_to(s, "erasure", "use_alignment", cfg.erasure.use_alignment);
    if (s.contains("sampler") && !s.at("sampler").is_null()) {
      const Json& p = s.at("sampler");
      if (!p.is_object())
        throw ConfigError("section 'erasure.sampler' must be an object");
      reject_unknown_keys(p, "erasure.sampler",
                          {"d1", "d2", "d1_anchor", "s1", "s2", "m", "n",
                           "max_attempts", "zero_on_reject"});
      get_to(p, "erasure.sampler", "d1", cfg.erasure.sampler.d1);
      get_to(p, "erasure.sampler", "d2", cfg.erasure.sampler.d2);
      get_to(p, "erasure.sampler", "d1_anchor", cfg.erasure.sampler.d1_anchor);
      get_to(p, "erasure.sampler", "s1", cfg.erasure.sampler.s1);
      get_to(p, "erasure.sampler", "s2", cfg.erasure.sampler.s2);
      get_to(p, "erasure.sampler", "m", cfg.erasure.sampler.m);
      get_to(p, "erasure.sampler", "n", cfg.erasure.sampler.n);
      get_to(p, "erasure.sampler", "max_attempts",
             cfg.erasure.sampler.max_attempts);
      get_to(p, "erasure.sampler", "zero_on_reject", cfg.erasure.sampler.zero_on_reject);
    }
    if (s.contains("alignment") && !s.at("alignment").is_null()) {
      const Json& a = s.at("alignment");
      if (!a.is_object())
        throw ConfigError("section 'erasure.alignment' must be an object");
      reject_unknown_keys(a, "erasure.alignment",
                          {"epochs", "lr", "steps_per_epoch", "gamma1",
                           "gamma2"});
      get_to(a, "erasure.alignment", "epochs", cfg.erasure.alignment.epochs);
      get_to(a, "erasure.alignment", "lr", cfg.erasure.alignment.lr);
      get_to(a, "erasure.alignment", "steps_per_epoch",
             cfg.erasure.alignment.steps_per_epoch);
      get_to(a, "erasure.alignment", "gamma1", cfg.erasure.alignment.gamma1);
      get_to(a, "erasure.alignment", "gamma2", cfg.erasure.alignment.gamma2);
    }
  }
  {
    const Json s = section(doc, "evaluation");
    reject_unknown_keys(
        s, "evaluation",
        {"n_probes", "samples_per_probe", "retained_concepts", "seed"});
    get_to(s, "evaluation", "n_probes", cfg.eval_n_probes);
    get_to(s, "evaluation", "samples_per_probe", cfg.eval_samples_per_probe);
    get_to(s, "evaluation", "retained_concepts", cfg.eval_retained);
    get_seed(s, "evaluation", cfg.evaluation_seed);
  }
  {
    const Json s = section(doc, "output");
    reject_unknown_keys(s, "output", {"dir"});
    get_to(s, "output", "dir", cfg.out_dir);
  }

  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string effective_config(const RunConfig& c) {
  Json doc;
  doc["seed"] = c.seed;
  doc["vocabulary"] = {{"dim", c.vocab_dim},
                       {"concepts", c.concepts},
                       {"seed", c.effective_vocabulary_seed()}};
  doc["model"] = {{"latent_dim", c.model.latent_dim},
                  {"cond_dim", c.model.cond_dim},
                  {"hidden", c.model.hidden},
                  {"time_features", c.model.time_features},
                  {"n_tokens", c.model.n_tokens},
                  {"init_scale", c.model.init_scale},
                  {"seed", c.effective_model_seed()}};
  doc["schedule"] = {{"steps", c.schedule_steps},
                     {"beta_min", c.beta_min},
                     {"beta_max", c.beta_max}};
  doc["dataset"] = {{"mean_scale", c.dataset_mean_scale},
                    {"std", c.dataset_std},
                    {"seed", c.effective_dataset_seed()}};
  doc["base_training"] = {{"steps", c.base_training.steps},
                          {"lr", c.base_training.lr},
                          {"batch_size", c.base_training.batch_size},
                          {"seed", c.effective_base_training_seed()}};
  doc["erasure"] = {
      {"erase_concept", c.erasure.erase_concept},
      {"anchor_concept", c.erasure.anchor_concept},
      {"sampler",
       {{"d1", c.erasure.sampler.d1},
        {"d2", c.erasure.sampler.d2},
        {"d1_anchor", c.erasure.sampler.d1_anchor},
        {"s1", c.erasure.sampler.s1},
        {"s2", c.erasure.sampler.s2},
        {"m", c.erasure.sampler.m},
        {"n", c.erasure.sampler.n},
        {"max_attempts", c.erasure.sampler.max_attempts},
        {"zero_on_reject", c.erasure.sampler.zero_on_reject}}},
      {"lambda1", c.erasure.lambda1},
      {"ridge", c.erasure.ridge},
      {"alignment",
       {{"epochs", c.erasure.alignment.epochs},
        {"lr", c.erasure.alignment.lr},
        {"steps_per_epoch", c.erasure.alignment.steps_per_epoch},
        {"gamma1", c.erasure.alignment.gamma1},
        {"gamma2", c.erasure.alignment.gamma2}}},
      {"lora_rank", c.erasure.lora_rank},
      {"seed", c.effective_erasure_seed()},
      {"use_mining", c.erasure.use_mining},
      {"use_beyond", c.erasure.use_beyond},
      {"use_alignment", c.erasure.use_alignment}};
  doc["evaluation"] = {{"n_probes", c.eval_n_probes},
                       {"samples_per_probe", c.eval_samples_per_probe},
                       {"retained_concepts", c.effective_retained()},
                       {"seed", c.effective_evaluation_seed()}};
  doc["output"] = {{"dir", c.out_dir}};
  return doc.dump(2) + "\n";
}

}  // namespace realera
