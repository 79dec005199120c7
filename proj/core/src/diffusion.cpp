#include "realera/diffusion.hpp"

#include <cmath>
#include <string>

#include "realera/errors.hpp"

namespace realera {

NoiseSchedule build_schedule(int steps, double beta_min, double beta_max) {
  if (steps < 1 || steps > 10000)
    throw ValidationError("schedule steps must lie in [1, 10000]");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 0.999))
    throw ValidationError("schedule requires 0 < beta_min <= beta_max < 0.999");
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(steps);
  s.alphas_bar.resize(steps);
  double running = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double beta =
        steps == 1 ? beta_min
                   : beta_min + (beta_max - beta_min) * t / (steps - 1.0);
    s.betas[t] = beta;
    running *= 1.0 - beta;
    s.alphas_bar[t] = running;
  }
  return s;
}

void DenoiserConfig::validate() const {
  if (latent_dim < 1 || cond_dim < 1 || hidden < 1)
    throw ValidationError("denoiser dims must be positive");
  if (time_features < 2 || time_features % 2 != 0)
    throw ValidationError("time_features must be a positive even number");
  if (n_tokens < 1 || hidden % n_tokens != 0)
    throw ValidationError("hidden must be divisible by n_tokens");
}

ToyDenoiser init_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const double s = cfg.init_scale;
  // Explicit return type: a deduced return would be the scalar-product
  // expression referencing the destroyed gaussian_matrix temporary.
  auto draw = [&](int rows, int cols, double fan_in) -> Eigen::MatrixXd {
    return (s / std::sqrt(fan_in)) * rng.gaussian_matrix(rows, cols);
  };
  ToyDenoiser m;
  m.cfg = cfg;
  m.input_proj = draw(cfg.hidden, cfg.latent_dim, cfg.latent_dim);
  m.time_embed = draw(cfg.hidden, cfg.time_features, cfg.time_features);
  m.wq = draw(cfg.hidden, cfg.hidden, cfg.hidden);
  m.attn.d = cfg.cond_dim;
  m.attn.layers.resize(1);
  m.attn.layers[0].wk = draw(cfg.hidden, cfg.cond_dim, cfg.cond_dim);
  m.attn.layers[0].wv = draw(cfg.hidden, cfg.cond_dim, cfg.cond_dim);
  m.mlp1 = draw(cfg.hidden, cfg.hidden, cfg.hidden);
  m.mlp2 = draw(cfg.hidden, cfg.hidden, cfg.hidden);
  m.output_proj = draw(cfg.latent_dim, cfg.hidden, cfg.hidden);
  return m;
}

LoraSet init_lora_set(const ToyDenoiser& model, int rank, std::uint64_t seed) {
  LoraSet set;
  set.reserve(model.attn.layers.size());
  for (std::size_t i = 0; i < model.attn.layers.size(); ++i) {
    LoraKV kv;
    kv.k = init_lora(model.cfg.hidden, model.cfg.cond_dim, rank,
                     derive_seed(seed, "lora/" + std::to_string(i) + "/k"));
    kv.k.target = "attn/" + std::to_string(i) + "/wk";
    kv.v = init_lora(model.cfg.hidden, model.cfg.cond_dim, rank,
                     derive_seed(seed, "lora/" + std::to_string(i) + "/v"));
    kv.v.target = "attn/" + std::to_string(i) + "/wv";
    set.push_back(std::move(kv));
  }
  return set;
}

ToyDenoiser merge_lora_set(const ToyDenoiser& model, const LoraSet& adapters) {
  if (adapters.size() != model.attn.layers.size())
    throw DimensionMismatchError("adapter count does not match layer count");
  ToyDenoiser merged = model;
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    merged.attn.layers[i].wk = merge(model.attn.layers[i].wk, adapters[i].k);
    merged.attn.layers[i].wv = merge(model.attn.layers[i].wv, adapters[i].v);
  }
  return merged;
}

Eigen::VectorXd time_feature(int t, int n_features) {
  const int half = n_features / 2;
  Eigen::VectorXd f(n_features);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    f[i] = std::sin(t * freq);
    f[half + i] = std::cos(t * freq);
  }
  return f;
}

namespace {

// Softmax over each row of an n x n matrix, numerically shifted.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd out(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    Eigen::ArrayXd e = (s.row(r).array() - mx).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

// Row-major view of a hidden vector as n_tokens x token_dim.
Eigen::MatrixXd to_tokens(const Eigen::VectorXd& h, int n_tokens, int dh) {
  Eigen::MatrixXd m(n_tokens, dh);
  for (int r = 0; r < n_tokens; ++r)
    for (int c = 0; c < dh; ++c) m(r, c) = h[r * dh + c];
  return m;
}

Eigen::VectorXd from_tokens(const Eigen::MatrixXd& m) {
  Eigen::VectorXd h(m.rows() * m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) h[r * m.cols() + c] = m(r, c);
  return h;
}

}  // namespace

Eigen::VectorXd predict_noise(const ToyDenoiser& model, const LoraSet* adapters,
                              const Eigen::VectorXd& z_t, int t,
                              const Embedding& cond, ForwardTape* tape) {
  const auto& cfg = model.cfg;
  if (z_t.size() != cfg.latent_dim)
    throw DimensionMismatchError("predict_noise: latent size " +
                                 std::to_string(z_t.size()) + " vs " +
                                 std::to_string(cfg.latent_dim));
  if (cond.size() != cfg.cond_dim)
    throw DimensionMismatchError("predict_noise: cond size " +
                                 std::to_string(cond.size()) + " vs " +
                                 std::to_string(cfg.cond_dim));
  if (adapters && adapters->size() != model.attn.layers.size())
    throw DimensionMismatchError("predict_noise: adapter/layer count mismatch");

  const Eigen::VectorXd tau = time_feature(t, cfg.time_features);
  const Eigen::VectorXd h0 = model.input_proj * z_t + model.time_embed * tau;
  const Eigen::VectorXd q = model.wq * h0;
  const auto& layer = model.attn.layers[0];
  Eigen::VectorXd kv, vv;
  if (adapters) {
    kv = apply(layer.wk, (*adapters)[0].k, cond);
    vv = apply(layer.wv, (*adapters)[0].v, cond);
  } else {
    kv = layer.wk * cond;
    vv = layer.wv * cond;
  }

  const int dh = cfg.token_dim();
  const Eigen::MatrixXd Q = to_tokens(q, cfg.n_tokens, dh);
  const Eigen::MatrixXd K = to_tokens(kv, cfg.n_tokens, dh);
  const Eigen::MatrixXd V = to_tokens(vv, cfg.n_tokens, dh);
  const Eigen::MatrixXd scores = Q * K.transpose() / std::sqrt(double(dh));
  const Eigen::MatrixXd A = softmax_rows(scores);
  const Eigen::VectorXd att = from_tokens(A * V);

  const Eigen::VectorXd u = h0 + att;
  const Eigen::VectorXd mm = model.mlp1 * u;
  const Eigen::VectorXd g = mm.array().tanh();
  const Eigen::VectorXd y = model.mlp2 * g;
  Eigen::VectorXd eps = model.output_proj * y;

  if (tape) {
    tape->z = z_t;
    tape->tau = tau;
    tape->h0 = h0;
    tape->q = q;
    tape->kv = kv;
    tape->vv = vv;
    tape->att = att;
    tape->u = u;
    tape->mm = mm;
    tape->g = g;
    tape->y = y;
    tape->attn_weights = A;
    tape->cond = cond;
  }
  return eps;
}

void DenoiserGrads::set_zero(const ToyDenoiser& model) {
  input_proj = Eigen::MatrixXd::Zero(model.input_proj.rows(),
                                     model.input_proj.cols());
  time_embed = Eigen::MatrixXd::Zero(model.time_embed.rows(),
                                     model.time_embed.cols());
  wq = Eigen::MatrixXd::Zero(model.wq.rows(), model.wq.cols());
  wk = Eigen::MatrixXd::Zero(model.attn.layers[0].wk.rows(),
                             model.attn.layers[0].wk.cols());
  wv = Eigen::MatrixXd::Zero(model.attn.layers[0].wv.rows(),
                             model.attn.layers[0].wv.cols());
  mlp1 = Eigen::MatrixXd::Zero(model.mlp1.rows(), model.mlp1.cols());
  mlp2 = Eigen::MatrixXd::Zero(model.mlp2.rows(), model.mlp2.cols());
  output_proj = Eigen::MatrixXd::Zero(model.output_proj.rows(),
                                      model.output_proj.cols());
}

void DenoiserGrads::accumulate(const DenoiserGrads& other, double weight) {
  input_proj += weight * other.input_proj;
  time_embed += weight * other.time_embed;
  wq += weight * other.wq;
  wk += weight * other.wk;
  wv += weight * other.wv;
  mlp1 += weight * other.mlp1;
  mlp2 += weight * other.mlp2;
  output_proj += weight * other.output_proj;
}

DenoiserGrads backward(const ToyDenoiser& model, const ForwardTape& tape,
                       const Eigen::VectorXd& d_eps) {
  const auto& cfg = model.cfg;
  const int dh = cfg.token_dim();

  DenoiserGrads grads;
  grads.output_proj = d_eps * tape.y.transpose();
  const Eigen::VectorXd dy = model.output_proj.transpose() * d_eps;
  grads.mlp2 = dy * tape.g.transpose();
  const Eigen::VectorXd dg = model.mlp2.transpose() * dy;
  const Eigen::VectorXd dmm =
      dg.array() * (1.0 - tape.g.array() * tape.g.array());
  grads.mlp1 = dmm * tape.u.transpose();
  const Eigen::VectorXd du = model.mlp1.transpose() * dmm;

  Eigen::VectorXd dh0 = du;  // residual branch
  const Eigen::MatrixXd dO = to_tokens(du, cfg.n_tokens, dh);

  const Eigen::MatrixXd V = to_tokens(tape.vv, cfg.n_tokens, dh);
  const Eigen::MatrixXd K = to_tokens(tape.kv, cfg.n_tokens, dh);
  const Eigen::MatrixXd Q = to_tokens(tape.q, cfg.n_tokens, dh);
  const Eigen::MatrixXd& A = tape.attn_weights;

  const Eigen::MatrixXd dA = dO * V.transpose();
  const Eigen::MatrixXd dV = A.transpose() * dO;
  // Softmax rows: dS_i = A_i . (dA_i - <dA_i, A_i> 1)
  Eigen::MatrixXd dS(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const double inner = dA.row(r).dot(A.row(r));
    dS.row(r) = A.row(r).array() * (dA.row(r).array() - inner);
  }
  dS /= std::sqrt(double(dh));
  const Eigen::MatrixXd dQ = dS * K;
  const Eigen::MatrixXd dK = dS.transpose() * Q;

  const Eigen::VectorXd dq = from_tokens(dQ);
  const Eigen::VectorXd dkv = from_tokens(dK);
  const Eigen::VectorXd dvv = from_tokens(dV);

  grads.wq = dq * tape.h0.transpose();
  dh0 += model.wq.transpose() * dq;
  grads.wk = dkv * tape.cond.transpose();
  grads.wv = dvv * tape.cond.transpose();
  grads.input_proj = dh0 * tape.z.transpose();
  grads.time_embed = dh0 * tape.tau.transpose();
  return grads;
}

NoisedLatent forward_noise(const Eigen::VectorXd& z0, int t,
                           const NoiseSchedule& schedule, Rng& rng) {
  if (t < 1 || t > schedule.steps)
    throw ValidationError("forward_noise: t = " + std::to_string(t) +
                          " outside [1, " + std::to_string(schedule.steps) +
                          "]");
  NoisedLatent out;
  out.eps = rng.gaussian_vector(z0.size());
  const double ab = schedule.alphas_bar[t - 1];
  out.z_t = std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * out.eps;
  return out;
}

Eigen::VectorXd LatentDataset::sample(std::size_t concept_index,
                                      Rng& rng) const {
  return means.at(concept_index) +
         std_dev * rng.gaussian_vector(means.at(concept_index).size());
}

LatentDataset build_dataset(int latent_dim, std::size_t n_concepts,
                            double std_dev, double mean_scale,
                            std::uint64_t seed) {
  if (latent_dim < 1 || n_concepts < 1)
    throw ValidationError("dataset needs positive dims and concept count");
  if (!(std_dev > 0.0) || !(mean_scale > 0.0))
    throw ValidationError("dataset std and mean scale must be positive");
  Rng rng(derive_seed(seed, "dataset"));
  LatentDataset ds;
  ds.std_dev = std_dev;
  ds.seed = seed;
  // Redraw the whole mean set until the 6-std separation holds; each redraw
  // is cheap at toy scale.
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<Eigen::VectorXd> means;
    means.reserve(n_concepts);
    for (std::size_t i = 0; i < n_concepts; ++i)
      means.push_back(mean_scale * rng.gaussian_vector(latent_dim));
    bool ok = true;
    for (std::size_t i = 0; i < n_concepts && ok; ++i)
      for (std::size_t j = i + 1; j < n_concepts && ok; ++j)
        if ((means[i] - means[j]).norm() < 6.0 * std_dev) ok = false;
    if (ok) {
      ds.means = std::move(means);
      return ds;
    }
  }
  throw ConstructionFailureError(
      "could not separate dataset means by 6 std within the attempt budget "
      "(mean_scale too small for the concept count?)");
}

double loss_ldm(const ToyDenoiser& model, const std::vector<LdmBatchItem>& batch,
                const NoiseSchedule& schedule, Rng& rng) {
  if (batch.empty()) throw ValidationError("loss_ldm: empty batch");
  double total = 0.0;
  for (const auto& item : batch) {
    const NoisedLatent noised = forward_noise(item.z0, item.t, schedule, rng);
    const Eigen::VectorXd pred =
        predict_noise(model, nullptr, noised.z_t, item.t, item.cond);
    total += (noised.eps - pred).squaredNorm();
  }
  return total / static_cast<double>(batch.size());
}

ToyDenoiser train_base(const ToyDenoiser& model, const LatentDataset& dataset,
                       const ConceptVocabulary& vocab, const TrainParams& params,
                       const NoiseSchedule& schedule, Rng& rng) {
  if (params.steps < 1 || !(params.lr > 0.0) || params.batch_size < 1)
    throw ValidationError("train_base: steps, lr, batch_size must be positive");
  if (dataset.means.size() != vocab.concepts.size())
    throw DimensionMismatchError(
        "train_base: dataset concept count does not match vocabulary");

  ToyDenoiser m = model;
  const std::size_t n_concepts = vocab.concepts.size();
  DenoiserGrads grads, step_grads;
  for (int step = 0; step < params.steps; ++step) {
    grads.set_zero(m);
    double loss = 0.0;
    for (int b = 0; b < params.batch_size; ++b) {
      const auto c = static_cast<std::size_t>(rng.uniform_below(n_concepts));
      const Eigen::VectorXd z0 = dataset.sample(c, rng);
      const int t = 1 + static_cast<int>(rng.uniform_below(schedule.steps));
      const NoisedLatent noised = forward_noise(z0, t, schedule, rng);
      ForwardTape tape;
      const Eigen::VectorXd pred = predict_noise(
          m, nullptr, noised.z_t, t, vocab.concepts[c].second, &tape);
      const Eigen::VectorXd r = pred - noised.eps;
      loss += r.squaredNorm();
      step_grads = backward(m, tape, 2.0 * r);
      grads.accumulate(step_grads, 1.0 / params.batch_size);
    }
    if (!std::isfinite(loss))
      throw DivergenceError("train_base: non-finite loss at step " +
                            std::to_string(step));
    m.input_proj -= params.lr * grads.input_proj;
    m.time_embed -= params.lr * grads.time_embed;
    m.wq -= params.lr * grads.wq;
    m.attn.layers[0].wk -= params.lr * grads.wk;
    m.attn.layers[0].wv -= params.lr * grads.wv;
    m.mlp1 -= params.lr * grads.mlp1;
    m.mlp2 -= params.lr * grads.mlp2;
    m.output_proj -= params.lr * grads.output_proj;
  }
  return m;
}

Eigen::VectorXd ancestral_sample(const EpsFn& eps_fn, int latent_dim,
                                 const NoiseSchedule& schedule, Rng& rng) {
  Eigen::VectorXd z = rng.gaussian_vector(latent_dim);
  for (int t = schedule.steps; t >= 1; --t) {
    const double beta = schedule.betas[t - 1];
    const double ab_t = schedule.alphas_bar[t - 1];
    const Eigen::VectorXd eps = eps_fn(z, t);
    const Eigen::VectorXd mu =
        (z - beta / std::sqrt(1.0 - ab_t) * eps) / std::sqrt(1.0 - beta);
    if (t > 1) {
      const double ab_prev = schedule.alphas_bar[t - 2];
      const double var = (1.0 - ab_prev) / (1.0 - ab_t) * beta;
      z = mu + std::sqrt(var) * rng.gaussian_vector(latent_dim);
    } else {
      z = mu;
    }
  }
  return z;
}

Eigen::VectorXd generate(const ToyDenoiser& model, const LoraSet* adapters,
                         const Embedding& cond, const NoiseSchedule& schedule,
                         Rng& rng) {
  return ancestral_sample(
      [&](const Eigen::VectorXd& z, int t) {
        return predict_noise(model, adapters, z, t, cond);
      },
      model.cfg.latent_dim, schedule, rng);
}

}  // namespace realera
