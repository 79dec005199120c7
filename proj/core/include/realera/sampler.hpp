#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "realera/embedding.hpp"
#include "realera/rng.hpp"

namespace realera {

// Rejection-sampling parameters for neighbor mining (band [s2, s1] within
// radius d1) and beyond-neighborhood preservation (radius [d1, d2), cosine
// below s2). Defaults are tuned for unit-norm embeddings of dim ~32; see
// docs in README for the acceptance-rate measurements behind them.
struct SamplerParams {
  double d1 = 1.1;          // neighborhood Euclidean radius D1
  double d2 = 2.1;          // outer radius D2 for preservation sampling
  double d1_anchor = 0.3;   // anchor jitter radius D1'
  double s1 = 0.96;         // upper cosine bound S1
  double s2 = 0.55;         // lower cosine bound S2
  int m = 40;               // mined associated concepts M
  int n = 80;               // preserved beyond-samples N
  int max_attempts = 10000; // rejection cap per accepted sample
  // Fidelity mode: a failed constraint yields eta = 0 instead of a rejection
  // (single-draw path only; batch mining always resamples).
  bool zero_on_reject = false;

  void validate() const;  // throws ValidationError on invariant violation
};

struct MinedPair {
  Embedding perturbed_erase;   // e + eta
  Embedding perturbed_anchor;  // e* + eta'
  double radius = 0.0;         // r
  double anchor_radius = 0.0;  // r'
  double cosine_to_center = 0.0;
};

struct PreservedSample {
  Embedding embedding;  // e + eta with |eta| in [d1, d2)
  double radius = 0.0;
  double cosine_to_center = 0.0;
};

// One draw-and-test outcome of mine_neighbor.
struct MineDraw {
  bool accepted = false;
  Eigen::VectorXd eta;
  Eigen::VectorXd direction;  // the unit v-hat behind eta
  double radius = 0.0;
  double cosine_to_center = 0.0;
};

struct MineBatchResult {
  std::vector<MinedPair> pairs;
  std::size_t attempts = 0;
  // Pre-filter radii of every attempt (uniform on [0, d1) by construction;
  // audited by the KS test).
  std::vector<double> attempt_radii;
};

struct BeyondBatchResult {
  std::vector<PreservedSample> samples;
  std::size_t attempts = 0;
  std::vector<double> attempt_radii;  // uniform on [d1, d2) pre-filter
};

// v-hat = (v - e)/|v - e| with v ~ N(0, I). Retries internally up to 16
// times on a degenerate draw, then throws DegenerateDrawError.
Eigen::VectorXd sample_direction(const Embedding& e, Rng& rng);

// Single draw: eta = r * v-hat with r ~ U[0, d1); accepted iff
// s2 <= cos(e, e+eta) <= s1. In zero_on_reject a failed test returns an accepted
// draw with eta = 0 (radius 0, cosine 1).
MineDraw mine_neighbor(const Embedding& e, const SamplerParams& params,
                       Rng& rng);

// Repeat mine_neighbor until exactly M acceptances; each acceptance draws
// r' ~ U[0, d1_anchor) and reuses the accepted direction for the anchor
// jitter. Throws SamplingExhaustedError past m * max_attempts attempts.
MineBatchResult mine_neighbor_batch(const Embedding& e,
                                    const Embedding& e_star,
                                    const SamplerParams& params, Rng& rng);

// Repeat {l ~ U[d1, d2); eta = l * v-hat; accept iff cos(e, e+eta) < s2}
// until N acceptances.
BeyondBatchResult sample_beyond_batch(const Embedding& e,
                                      const SamplerParams& params, Rng& rng);

}  // namespace realera
