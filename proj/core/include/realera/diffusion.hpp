#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "realera/attention_edit.hpp"
#include "realera/embedding.hpp"
#include "realera/lora.hpp"
#include "realera/rng.hpp"

namespace realera {

struct NoiseSchedule {
  int steps = 0;               // T_diff
  Eigen::VectorXd betas;       // length steps, each in (0, 1)
  Eigen::VectorXd alphas_bar;  // cumulative products of (1 - beta)
};

// Linear beta interpolation between beta_min and beta_max.
NoiseSchedule build_schedule(int steps, double beta_min, double beta_max);

struct DenoiserConfig {
  int latent_dim = 8;      // k
  int cond_dim = 32;       // d
  int hidden = 64;         // H; must be divisible by n_tokens
  int time_features = 16;  // F; must be even
  // The hidden state is reshaped into n_tokens x (hidden / n_tokens) for the
  // attention block, so softmax runs over a nondegenerate token axis and the
  // K projection genuinely shapes the output.
  int n_tokens = 4;
  double init_scale = 0.5;

  int token_dim() const { return hidden / n_tokens; }
  void validate() const;
};

// Minimal epsilon-predicting denoiser. The ONLY condition-dependent path is
// the cross-attention block: h0 = Wi z + We tau(t); Q from h0, K/V from the
// concept embedding; output = Wo mlp(h0 + attention).
struct ToyDenoiser {
  DenoiserConfig cfg;
  Eigen::MatrixXd input_proj;   // H x k
  Eigen::MatrixXd time_embed;   // H x F
  Eigen::MatrixXd wq;           // H x H
  CrossAttentionWeights attn;   // single layer: wk, wv both H x d
  Eigen::MatrixXd mlp1;         // H x H
  Eigen::MatrixXd mlp2;         // H x H
  Eigen::MatrixXd output_proj;  // k x H
};

ToyDenoiser init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

// One zero-initialized (K, V) adapter pair per attention layer.
struct LoraKV {
  LoraAdapter k;
  LoraAdapter v;
};
using LoraSet = std::vector<LoraKV>;

LoraSet init_lora_set(const ToyDenoiser& model, int rank, std::uint64_t seed);
// Merges every adapter into its attention matrix (model returned by value).
ToyDenoiser merge_lora_set(const ToyDenoiser& model, const LoraSet& adapters);

// 8 sin + 8 cos features at log-spaced frequencies (for the default F = 16).
Eigen::VectorXd time_feature(int t, int n_features);

// Everything the backward pass needs from one forward evaluation.
struct ForwardTape {
  Eigen::VectorXd z, tau, h0, q, kv, vv, att, u, mm, g, y;
  Eigen::MatrixXd attn_weights;  // n_tokens x n_tokens, post-softmax
  Embedding cond;
};

// adapters == nullptr means "no adapters". Pass a tape pointer to record
// intermediates for backward().
Eigen::VectorXd predict_noise(const ToyDenoiser& model, const LoraSet* adapters,
                              const Eigen::VectorXd& z_t, int t,
                              const Embedding& cond,
                              ForwardTape* tape = nullptr);

// Gradients with respect to every weight matrix; wk/wv are gradients with
// respect to the EFFECTIVE (adapter-merged) projections, from which adapter
// gradients follow by the chain rule (dB = dW A^T, dA = B^T dW).
struct DenoiserGrads {
  Eigen::MatrixXd input_proj, time_embed, wq, wk, wv, mlp1, mlp2, output_proj;
  void set_zero(const ToyDenoiser& model);
  void accumulate(const DenoiserGrads& other, double weight);
};

DenoiserGrads backward(const ToyDenoiser& model, const ForwardTape& tape,
                       const Eigen::VectorXd& d_eps);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, eps ~ N(0, I).
struct NoisedLatent {
  Eigen::VectorXd z_t;
  Eigen::VectorXd eps;
};
NoisedLatent forward_noise(const Eigen::VectorXd& z0, int t,
                           const NoiseSchedule& schedule, Rng& rng);

// Per-concept isotropic Gaussian generators in latent space; means pairwise
// separated by >= 6 std so the centroid classifier is meaningful.
struct LatentDataset {
  std::vector<Eigen::VectorXd> means;  // one per concept, vocab order
  double std_dev = 0.4;
  std::uint64_t seed = 0;

  Eigen::VectorXd sample(std::size_t concept_index, Rng& rng) const;
};

LatentDataset build_dataset(int latent_dim, std::size_t n_concepts,
                            double std_dev, double mean_scale,
                            std::uint64_t seed);

struct LdmBatchItem {
  Eigen::VectorXd z0;
  int t = 1;
  Embedding cond;
};

// Mean over the batch of |eps - predict_noise(z_t, t, cond)|^2 with fresh
// noise drawn from rng.
double loss_ldm(const ToyDenoiser& model, const std::vector<LdmBatchItem>& batch,
                const NoiseSchedule& schedule, Rng& rng);

struct TrainParams {
  int steps = 4000;
  double lr = 1e-2;
  int batch_size = 32;
};

// Plain SGD on the denoising objective with analytic gradients. Throws
// DivergenceError if the loss goes non-finite.
ToyDenoiser train_base(const ToyDenoiser& model, const LatentDataset& dataset,
                       const ConceptVocabulary& vocab, const TrainParams& params,
                       const NoiseSchedule& schedule, Rng& rng);

// DDPM ancestral sampling driven by an arbitrary epsilon predictor (lets
// tests drive the sampler with an oracle denoiser).
using EpsFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& z, int t)>;
Eigen::VectorXd ancestral_sample(const EpsFn& eps_fn, int latent_dim,
                                 const NoiseSchedule& schedule, Rng& rng);

Eigen::VectorXd generate(const ToyDenoiser& model, const LoraSet* adapters,
                         const Embedding& cond, const NoiseSchedule& schedule,
                         Rng& rng);

}  // namespace realera
