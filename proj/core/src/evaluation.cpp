#include "realera/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "realera/errors.hpp"
#include "realera/sampler.hpp"

namespace realera {

CentroidClassifier make_classifier(const ConceptVocabulary& vocab,
                                   const LatentDataset& dataset) {
  if (vocab.concepts.size() != dataset.means.size())
    throw DimensionMismatchError(
        "classifier: vocabulary and dataset concept counts differ");
  CentroidClassifier clf;
  clf.centroids.reserve(vocab.concepts.size());
  for (std::size_t i = 0; i < vocab.concepts.size(); ++i)
    clf.centroids.emplace_back(vocab.concepts[i].first, dataset.means[i]);
  return clf;
}

std::string classify(const CentroidClassifier& clf, const Eigen::VectorXd& z) {
  if (clf.centroids.empty()) throw ValidationError("classifier has no centroids");
  const std::string* best_id = nullptr;
  double best_dist = 0.0;
  for (const auto& [id, centroid] : clf.centroids) {
    const double dist = (z - centroid).norm();
    if (!best_id || dist < best_dist ||
        (dist == best_dist && id < *best_id)) {
      best_id = &id;
      best_dist = dist;
    }
  }
  return *best_id;
}

void EvalSetup::validate() const {
  if (samples_per_probe < 50)
    throw ValidationError("samples_per_probe must be >= 50");
  for (const auto& id : retained_concepts)
    if (id == erase_concept)
      throw ValidationError("retained concepts must exclude the erase concept");
  if (associated_probes.empty())
    throw ValidationError("need at least one associated probe");
}

EvalSetup make_eval_setup(const ConceptVocabulary& vocab,
                          const std::string& erase_concept,
                          const std::string& anchor_concept,
                          const SamplerParams& sampler, int n_probes,
                          int samples_per_probe, std::uint64_t eval_seed) {
  EvalSetup setup;
  setup.erase_concept = erase_concept;
  setup.anchor_concept = anchor_concept;
  setup.samples_per_probe = samples_per_probe;
  for (const auto& [id, _] : vocab.concepts)
    if (id != erase_concept) setup.retained_concepts.push_back(id);

  SamplerParams probe_params = sampler;
  probe_params.m = n_probes;
  Rng rng(derive_seed(eval_seed, "eval/probes"));
  const auto mined =
      mine_neighbor_batch(encode(vocab, erase_concept),
                          encode(vocab, anchor_concept), probe_params, rng);
  for (const auto& pair : mined.pairs)
    setup.associated_probes.push_back(pair.perturbed_erase);
  setup.validate();
  return setup;
}

double accuracy(const ToyDenoiser& model, const LoraSet* adapters,
                const CentroidClassifier& clf,
                const std::string& target_concept, const Embedding& probe,
                int n, const NoiseSchedule& schedule, Rng& rng) {
  if (n < 1) throw ValidationError("accuracy: n must be >= 1");
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z = generate(model, adapters, probe, schedule, rng);
    if (classify(clf, z) == target_concept) ++hits;
  }
  return 100.0 * hits / n;
}

double harmonic_mean(double acc_e, double acc_s, double acc_g) {
  if (!(acc_s > 0.0) || !(acc_e < 100.0) || !(acc_g < 100.0))
    throw DomainError(
        "harmonic_mean requires acc_s > 0 and acc_e, acc_g < 100");
  return 3.0 / (1.0 / (100.0 - acc_e) + 1.0 / acc_s + 1.0 / (100.0 - acc_g));
}

namespace {

EvalReport evaluate_one(const ToyDenoiser& model, const ConceptVocabulary& vocab,
                        const CentroidClassifier& clf, const EvalSetup& setup,
                        const NoiseSchedule& schedule, std::uint64_t seed) {
  EvalReport report;
  const int n = setup.samples_per_probe;
  const Embedding& e = encode(vocab, setup.erase_concept);

  {
    Rng rng(derive_seed(seed, "probe/erase"));
    report.acc_e =
        accuracy(model, nullptr, clf, setup.erase_concept, e, n, schedule, rng);
    report.rows.push_back({"erase", setup.erase_concept, report.acc_e, n});
  }
  double s_total = 0.0;
  for (const auto& id : setup.retained_concepts) {
    Rng rng(derive_seed(seed, "probe/retained/" + id));
    const double acc = accuracy(model, nullptr, clf, id, encode(vocab, id), n,
                                schedule, rng);
    s_total += acc;
    report.rows.push_back({"retained/" + id, id, acc, n});
  }
  report.acc_s = s_total / setup.retained_concepts.size();
  double g_total = 0.0;
  for (std::size_t k = 0; k < setup.associated_probes.size(); ++k) {
    Rng rng(derive_seed(seed, "probe/assoc/" + std::to_string(k)));
    const double acc =
        accuracy(model, nullptr, clf, setup.erase_concept,
                 setup.associated_probes[k], n, schedule, rng);
    g_total += acc;
    report.rows.push_back(
        {"assoc/" + std::to_string(k), setup.erase_concept, acc, n});
  }
  report.acc_g = g_total / setup.associated_probes.size();

  if (report.acc_s > 0.0 && report.acc_e < 100.0 && report.acc_g < 100.0)
    report.h_o = harmonic_mean(report.acc_e, report.acc_s, report.acc_g);
  return report;
}

}  // namespace

EvalPair evaluate_erasure(const ToyDenoiser& base_model,
                          const ToyDenoiser& erased_model,
                          const ConceptVocabulary& vocab,
                          const CentroidClassifier& clf, const EvalSetup& setup,
                          const NoiseSchedule& schedule, std::uint64_t seed) {
  setup.validate();
  if (base_model.cfg.latent_dim != erased_model.cfg.latent_dim ||
      base_model.cfg.cond_dim != erased_model.cfg.cond_dim)
    throw DimensionMismatchError(
        "evaluate_erasure: models disagree on latent/cond dims");
  EvalPair pair;
  pair.erased = evaluate_one(erased_model, vocab, clf, setup, schedule,
                             derive_seed(seed, "eval/erased"));
  pair.base = evaluate_one(base_model, vocab, clf, setup, schedule,
                           derive_seed(seed, "eval/base"));
  return pair;
}

}  // namespace realera
