#include "realera/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "realera/errors.hpp"
#include "realera/rng.hpp"

namespace realera {

namespace {
constexpr double kPairwiseCosineCap = 0.8;
constexpr int kDrawCapPerConcept = 10000;
}  // namespace

bool ConceptVocabulary::contains(const std::string& id) const {
  for (const auto& [cid, _] : concepts)
    if (cid == id) return true;
  return false;
}

std::size_t ConceptVocabulary::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < concepts.size(); ++i)
    if (concepts[i].first == id) return i;
  throw UnknownConceptError("unknown concept id: '" + id + "'");
}

ConceptVocabulary build_vocabulary(int dim,
                                   const std::vector<std::string>& concept_ids,
                                   std::uint64_t seed) {
  if (dim < 8) throw ValidationError("vocabulary dim must be >= 8");
  const auto n = concept_ids.size();
  if (n < 2 || n > static_cast<std::size_t>(dim))
    throw ValidationError("need 2 <= concept count <= dim, got " +
                          std::to_string(n) + " concepts for dim " +
                          std::to_string(dim));
  {
    std::set<std::string> uniq(concept_ids.begin(), concept_ids.end());
    if (uniq.size() != n)
      throw ValidationError("concept ids must be unique");
  }

  Rng rng(derive_seed(seed, "vocabulary"));
  ConceptVocabulary vocab;
  vocab.dim = dim;
  vocab.seed = seed;
  vocab.concepts.reserve(n);

  for (const auto& id : concept_ids) {
    bool placed = false;
    for (int attempt = 0; attempt < kDrawCapPerConcept; ++attempt) {
      Embedding cand = rng.gaussian_vector(dim);
      const double norm = cand.norm();
      if (norm < 1e-12) continue;
      cand /= norm;
      bool ok = true;
      for (const auto& [_, other] : vocab.concepts) {
        if (std::abs(cand.dot(other)) > kPairwiseCosineCap) {
          ok = false;
          break;
        }
      }
      if (ok) {
        vocab.concepts.emplace_back(id, std::move(cand));
        placed = true;
        break;
      }
    }
    if (!placed)
      throw ConstructionFailureError(
          "could not place concept '" + id + "' within " +
          std::to_string(kDrawCapPerConcept) +
          " draws (dim too small for the concept count?)");
  }
  return vocab;
}

const Embedding& encode(const ConceptVocabulary& vocab,
                        const std::string& concept_id) {
  return vocab.concepts[vocab.index_of(concept_id)].second;
}

double euclid(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw DimensionMismatchError("euclid: lengths " + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()));
  return (a - b).norm();
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw DimensionMismatchError("cosine: lengths " + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()));
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-300 || nb < 1e-300)
    throw ZeroVectorError("cosine of zero vector is undefined");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace realera
