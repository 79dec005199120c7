#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace realera {

using Embedding = Eigen::VectorXd;

// Deterministic stand-in for a text encoder: one unit-norm embedding per
// concept id, pairwise |cosine| bounded so neighborhood constraints are
// geometrically meaningful.
struct ConceptVocabulary {
  int dim = 0;
  std::vector<std::pair<std::string, Embedding>> concepts;
  std::uint64_t seed = 0;

  bool contains(const std::string& id) const;
  // Index into `concepts`; throws UnknownConceptError if absent.
  std::size_t index_of(const std::string& id) const;
};

// Draw Gaussian candidates, normalize, reject until every pairwise cosine
// magnitude is <= 0.8. Pure function of (dim, ids, seed); throws
// ConstructionFailureError after 10,000 rejected candidates for one concept.
ConceptVocabulary build_vocabulary(int dim,
                                   const std::vector<std::string>& concept_ids,
                                   std::uint64_t seed);

const Embedding& encode(const ConceptVocabulary& vocab,
                        const std::string& concept_id);

double euclid(const Embedding& a, const Embedding& b);

// <a,b>/(|a||b|), clamped into [-1, 1].
double cosine(const Embedding& a, const Embedding& b);

}  // namespace realera
