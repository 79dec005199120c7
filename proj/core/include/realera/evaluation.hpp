#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "realera/diffusion.hpp"
#include "realera/embedding.hpp"
#include "realera/sampler.hpp"

namespace realera {

// Nearest-centroid concept classifier over generated latents; stands in for
// the CLIP classifier of the source protocol.
struct CentroidClassifier {
  std::vector<std::pair<std::string, Eigen::VectorXd>> centroids;
};

CentroidClassifier make_classifier(const ConceptVocabulary& vocab,
                                   const LatentDataset& dataset);

// Argmin Euclidean distance; ties broken toward the lexicographically
// smaller concept id.
std::string classify(const CentroidClassifier& clf, const Eigen::VectorXd& z);

struct EvalSetup {
  std::string erase_concept;
  std::string anchor_concept;
  std::vector<Embedding> associated_probes;  // geometric synonym stand-ins
  std::vector<std::string> retained_concepts;
  int samples_per_probe = 200;

  void validate() const;
};

// Mines the associated probes from the same [s2, s1] band with an
// evaluation-only stream, so eval never reuses pipeline samples.
EvalSetup make_eval_setup(const ConceptVocabulary& vocab,
                          const std::string& erase_concept,
                          const std::string& anchor_concept,
                          const SamplerParams& sampler, int n_probes,
                          int samples_per_probe, std::uint64_t eval_seed);

// 100 x fraction of n generations conditioned on probe that classify as
// target_concept.
double accuracy(const ToyDenoiser& model, const LoraSet* adapters,
                const CentroidClassifier& clf,
                const std::string& target_concept, const Embedding& probe,
                int n, const NoiseSchedule& schedule, Rng& rng);

// 3 / (1/(100-acc_e) + 1/acc_s + 1/(100-acc_g)); erasure accuracies enter as
// complements. Throws DomainError outside acc_s > 0, acc_e < 100, acc_g < 100.
double harmonic_mean(double acc_e, double acc_s, double acc_g);

struct ProbeRow {
  std::string probe;   // "erase", "retained/<id>", "assoc/<k>"
  std::string target;  // concept counted as a hit
  double acc = 0.0;
  int samples = 0;
};

struct EvalReport {
  double acc_e = 0.0;
  double acc_s = 0.0;
  double acc_g = 0.0;
  // Unset when the triple leaves harmonic_mean's domain (e.g. a base model
  // with acc_e = 100).
  std::optional<double> h_o;
  std::vector<ProbeRow> rows;
};

struct EvalPair {
  EvalReport erased;
  EvalReport base;
};

// Identical protocol applied to both models: Acc_e probes the erase concept
// at itself, Acc_s averages retained concepts at themselves, Acc_g averages
// the associated probes targeted at the erase concept.
EvalPair evaluate_erasure(const ToyDenoiser& base_model,
                          const ToyDenoiser& erased_model,
                          const ConceptVocabulary& vocab,
                          const CentroidClassifier& clf, const EvalSetup& setup,
                          const NoiseSchedule& schedule, std::uint64_t seed);

}  // namespace realera
