#include "realera/alignment.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "realera/errors.hpp"

namespace realera {

void AlignmentConfig::validate() const {
  if (epochs < 0) throw ValidationError("alignment epochs must be >= 0");
  if (!(lr > 0.0)) throw ValidationError("alignment lr must be positive");
  if (steps_per_epoch < 1)
    throw ValidationError("alignment steps_per_epoch must be >= 1");
}

namespace {

struct AdapterGrads {
  Eigen::MatrixXd ak, bk, av, bv;
};

// d(loss)/d(adapters) for one term |eps'(cond) - target|^2, added into acc.
// Returns the term value.
double term_grad(const ToyDenoiser& edited, const LoraSet& adapters,
                 const Eigen::VectorXd& z_t, int t, const Embedding& cond,
                 const Eigen::VectorXd& target, AdapterGrads& acc) {
  ForwardTape tape;
  const Eigen::VectorXd pred =
      predict_noise(edited, &adapters, z_t, t, cond, &tape);
  const Eigen::VectorXd diff = pred - target;
  const DenoiserGrads g = backward(edited, tape, 2.0 * diff);
  const LoraKV& kv = adapters[0];
  acc.bk += g.wk * kv.k.a.transpose();
  acc.ak += kv.k.b.transpose() * g.wk;
  acc.bv += g.wv * kv.v.a.transpose();
  acc.av += kv.v.b.transpose() * g.wv;
  return diff.squaredNorm();
}

}  // namespace

double odd_step_loss(const ToyDenoiser& edited, const LoraSet& adapters,
                     const ToyDenoiser& orig, const Eigen::VectorXd& z_t, int t,
                     const Embedding& p_c, const Embedding& p_anchor) {
  const Eigen::VectorXd target = predict_noise(orig, nullptr, z_t, t, p_anchor);
  const Eigen::VectorXd pred = predict_noise(edited, &adapters, z_t, t, p_c);
  return (pred - target).squaredNorm();
}

double even_step_loss(const ToyDenoiser& edited, const LoraSet& adapters,
                      const ToyDenoiser& orig, const Eigen::VectorXd& z_t,
                      int t, const Embedding& p_assoc, const Embedding& p_pres,
                      const Embedding& p_anchor) {
  const Eigen::VectorXd target_a =
      predict_noise(orig, nullptr, z_t, t, p_anchor);
  const Eigen::VectorXd pred_a = predict_noise(edited, &adapters, z_t, t, p_assoc);
  const Eigen::VectorXd target_p = predict_noise(orig, nullptr, z_t, t, p_pres);
  const Eigen::VectorXd pred_p = predict_noise(edited, &adapters, z_t, t, p_pres);
  return (pred_a - target_a).squaredNorm() + (pred_p - target_p).squaredNorm();
}

AlignmentResult train_lora(const ToyDenoiser& edited_model,
                           const ToyDenoiser& orig_model,
                           const AlignmentTask& task,
                           const AlignmentConfig& config, int lora_rank,
                           const NoiseSchedule& schedule, Rng& rng) {
  config.validate();
  task.sampler.validate();

  AlignmentResult result;
  result.adapters =
      init_lora_set(edited_model, lora_rank, rng.next_u64());
  LoraSet& adapters = result.adapters;
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  int global_step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    // Fresh mined/preserved sets every epoch.
    std::vector<MinedPair> mined;
    if (task.use_mining)
      mined = mine_neighbor_batch(task.erase, task.anchor, task.sampler, rng)
                  .pairs;
    std::vector<PreservedSample> preserved;
    if (task.use_beyond)
      preserved = sample_beyond_batch(task.erase, task.sampler, rng).samples;

    for (int s = 0; s < config.steps_per_epoch; ++s) {
      ++global_step;
      // Fresh anchor-conditioned latent from the frozen original model,
      // fresh timestep, fresh forward noise.
      const Eigen::VectorXd z0 =
          generate(orig_model, nullptr, task.anchor, schedule, rng);
      const int t = 1 + static_cast<int>(rng.uniform_below(schedule.steps));
      const Eigen::VectorXd z_t = forward_noise(z0, t, schedule, rng).z_t;

      AdapterGrads grads;
      grads.ak = Eigen::MatrixXd::Zero(adapters[0].k.a.rows(),
                                       adapters[0].k.a.cols());
      grads.bk = Eigen::MatrixXd::Zero(adapters[0].k.b.rows(),
                                       adapters[0].k.b.cols());
      grads.av = grads.ak;
      grads.bv = grads.bk;

      AlignmentStepRecord rec;
      rec.step = global_step;
      rec.epoch = epoch;
      rec.assoc_radius = kNaN;
      rec.assoc_cosine = kNaN;
      rec.pres_radius = kNaN;
      rec.pres_cosine = kNaN;

      if (global_step % 2 == 1) {
        rec.parity = 'o';
        rec.assoc_term = term_grad(edited_model, adapters, z_t, t, task.erase,
                                   predict_noise(orig_model, nullptr, z_t, t,
                                                 task.anchor),
                                   grads);
        rec.preserve_term = 0.0;
        rec.loss = rec.assoc_term;
      } else {
        rec.parity = 'e';
        const Eigen::VectorXd anchor_target =
            predict_noise(orig_model, nullptr, z_t, t, task.anchor);
        const Embedding* assoc = &task.erase;
        if (!mined.empty()) {
          const auto& pick = mined[rng.uniform_below(mined.size())];
          assoc = &pick.perturbed_erase;
          rec.assoc_radius = pick.radius;
          rec.assoc_cosine = pick.cosine_to_center;
        }
        rec.assoc_term =
            term_grad(edited_model, adapters, z_t, t, *assoc, anchor_target,
                      grads);
        rec.preserve_term = 0.0;
        if (!preserved.empty()) {
          const auto& pick = preserved[rng.uniform_below(preserved.size())];
          rec.pres_radius = pick.radius;
          rec.pres_cosine = pick.cosine_to_center;
          rec.preserve_term = term_grad(
              edited_model, adapters, z_t, t, pick.embedding,
              predict_noise(orig_model, nullptr, z_t, t, pick.embedding),
              grads);
        }
        rec.loss = rec.assoc_term + rec.preserve_term;
      }

      if (!std::isfinite(rec.loss))
        throw DivergenceError("alignment loss non-finite at step " +
                              std::to_string(global_step));

      adapters[0].k.a -= config.lr * grads.ak;
      adapters[0].k.b -= config.lr * grads.bk;
      adapters[0].v.a -= config.lr * grads.av;
      adapters[0].v.b -= config.lr * grads.bv;
      result.log.push_back(rec);
    }
  }
  return result;
}

}  // namespace realera
