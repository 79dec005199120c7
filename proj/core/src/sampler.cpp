#include "realera/sampler.hpp"

#include <string>

#include "realera/errors.hpp"

namespace realera {

void SamplerParams::validate() const {
  if (!(d1 > 0.0)) throw ValidationError("sampler: d1 must be positive");
  if (!(d1 < d2)) throw ValidationError("sampler: requires d1 < d2");
  if (d1_anchor < 0.0)
    throw ValidationError("sampler: d1_anchor must be nonnegative");
  if (!(s1 > -1.0 && s1 <= 1.0))
    throw ValidationError("sampler: s1 must lie in (-1, 1]");
  if (!(s2 > -1.0 && s2 < 1.0))
    throw ValidationError("sampler: s2 must lie in (-1, 1)");
  if (!(s2 < s1)) throw ValidationError("sampler: requires s2 < s1");
  if (m < 1) throw ValidationError("sampler: m must be >= 1");
  if (n < 1) throw ValidationError("sampler: n must be >= 1");
  if (max_attempts < 1)
    throw ValidationError("sampler: max_attempts must be >= 1");
}

Eigen::VectorXd sample_direction(const Embedding& e, Rng& rng) {
  for (int attempt = 0; attempt < 16; ++attempt) {
    Eigen::VectorXd v = rng.gaussian_vector(e.size());
    Eigen::VectorXd d = v - e;
    const double norm = d.norm();
    if (norm >= 1e-12) return d / norm;
  }
  throw DegenerateDrawError(
      "sample_direction: 16 consecutive draws collapsed onto the center");
}

namespace {

double cosine_to(const Embedding& e, const Eigen::VectorXd& eta) {
  const Embedding shifted = e + eta;
  const double denom = e.norm() * shifted.norm();
  if (denom < 1e-300) return 1.0;
  const double c = e.dot(shifted) / denom;
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

}  // namespace

MineDraw mine_neighbor(const Embedding& e, const SamplerParams& params,
                       Rng& rng) {
  params.validate();
  MineDraw draw;
  draw.direction = sample_direction(e, rng);
  draw.radius = rng.uniform(0.0, params.d1);
  draw.eta = draw.radius * draw.direction;
  draw.cosine_to_center = cosine_to(e, draw.eta);
  draw.accepted =
      params.s2 <= draw.cosine_to_center && draw.cosine_to_center <= params.s1;
  if (!draw.accepted && params.zero_on_reject) {
    // Fidelity mode: constraint failure zeroes the perturbation rather than
    // rejecting the draw.
    draw.eta.setZero();
    draw.radius = 0.0;
    draw.cosine_to_center = 1.0;
    draw.accepted = true;
  }
  return draw;
}

MineBatchResult mine_neighbor_batch(const Embedding& e,
                                    const Embedding& e_star,
                                    const SamplerParams& params, Rng& rng) {
  params.validate();
  if ((e - e_star).norm() < 1e-12)
    throw ValidationError("mine_neighbor_batch: e and e* must differ");
  SamplerParams draw_params = params;
  draw_params.zero_on_reject = false;  // batch path always resamples

  MineBatchResult result;
  result.pairs.reserve(params.m);
  const std::size_t cap =
      static_cast<std::size_t>(params.m) *
      static_cast<std::size_t>(params.max_attempts);
  while (result.pairs.size() < static_cast<std::size_t>(params.m)) {
    if (result.attempts >= cap)
      throw SamplingExhaustedError(
          "mine_neighbor_batch: exceeded " + std::to_string(cap) +
          " attempts for m=" + std::to_string(params.m) +
          " (infeasible d1/s1/s2 band?)");
    ++result.attempts;
    MineDraw draw = mine_neighbor(e, draw_params, rng);
    result.attempt_radii.push_back(draw.radius);
    if (!draw.accepted) continue;
    const double r_anchor = rng.uniform(0.0, params.d1_anchor);
    MinedPair pair;
    pair.perturbed_erase = e + draw.eta;
    pair.perturbed_anchor = e_star + r_anchor * draw.direction;
    pair.radius = draw.radius;
    pair.anchor_radius = r_anchor;
    pair.cosine_to_center = draw.cosine_to_center;
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

BeyondBatchResult sample_beyond_batch(const Embedding& e,
                                      const SamplerParams& params, Rng& rng) {
  params.validate();
  BeyondBatchResult result;
  result.samples.reserve(params.n);
  const std::size_t cap =
      static_cast<std::size_t>(params.n) *
      static_cast<std::size_t>(params.max_attempts);
  while (result.samples.size() < static_cast<std::size_t>(params.n)) {
    if (result.attempts >= cap)
      throw SamplingExhaustedError(
          "sample_beyond_batch: exceeded " + std::to_string(cap) +
          " attempts for n=" + std::to_string(params.n) +
          " (infeasible d1/d2/s2 band?)");
    ++result.attempts;
    const Eigen::VectorXd direction = sample_direction(e, rng);
    const double radius = rng.uniform(params.d1, params.d2);
    result.attempt_radii.push_back(radius);
    const Eigen::VectorXd eta = radius * direction;
    const double c = cosine_to(e, eta);
    if (c < params.s2) {
      PreservedSample sample;
      sample.embedding = e + eta;
      sample.radius = radius;
      sample.cosine_to_center = c;
      result.samples.push_back(std::move(sample));
    }
  }
  return result;
}

}  // namespace realera
