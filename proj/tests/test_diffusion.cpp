#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "realera/diffusion.hpp"
#include "realera/embedding.hpp"
#include "realera/errors.hpp"

using namespace realera;

namespace {

DenoiserConfig small_config() {
  DenoiserConfig cfg;
  cfg.latent_dim = 4;
  cfg.cond_dim = 8;
  cfg.hidden = 16;
  cfg.time_features = 8;
  cfg.n_tokens = 4;
  return cfg;
}

ConceptVocabulary small_vocab() {
  return build_vocabulary(8, {"a", "b", "c"}, 5);
}

}  // namespace

TEST_CASE("schedule interpolates betas and accumulates alpha bars") {
  const NoiseSchedule s = build_schedule(100, 1e-3, 0.15);
  REQUIRE(s.steps == 100);
  REQUIRE(s.betas.size() == 100);
  REQUIRE(s.alphas_bar.size() == 100);
  CHECK(s.betas(0) == doctest::Approx(1e-3));
  CHECK(s.betas(99) == doctest::Approx(0.15));
  for (int i = 1; i < 100; ++i) CHECK(s.betas(i) > s.betas(i - 1));
  double prod = 1.0;
  for (int i = 0; i < 100; ++i) {
    prod *= 1.0 - s.betas(i);
    CHECK(s.alphas_bar(i) == doctest::Approx(prod));
  }
  CHECK(s.alphas_bar(99) < 0.05);  // end state is near-pure noise
  CHECK_THROWS_AS((void)build_schedule(0, 1e-3, 0.15), ValidationError);
  CHECK_THROWS_AS((void)build_schedule(10, 0.5, 0.2), ValidationError);
  CHECK_THROWS_AS((void)build_schedule(10, 0.0, 0.2), ValidationError);
  CHECK_THROWS_AS((void)build_schedule(10, 1e-3, 1.0), ValidationError);
}

TEST_CASE("time features are bounded sin/cos pairs that separate steps") {
  const Eigen::VectorXd f1 = time_feature(1, 16);
  const Eigen::VectorXd f2 = time_feature(50, 16);
  CHECK(f1.size() == 16);
  CHECK(f1.cwiseAbs().maxCoeff() <= 1.0);
  CHECK((f1 - f2).norm() > 0.1);
  CHECK(time_feature(50, 16) == f2);
}

TEST_CASE("forward_noise composes z0 and eps with the schedule weights") {
  const NoiseSchedule s = build_schedule(100, 1e-3, 0.15);
  Rng rng(61);
  const Eigen::VectorXd z0 = rng.gaussian_vector(4);
  for (int t : {1, 17, 100}) {
    const NoisedLatent nl = forward_noise(z0, t, s, rng);
    const double ab = s.alphas_bar(t - 1);
    const Eigen::VectorXd expect =
        std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * nl.eps;
    CHECK((nl.z_t - expect).norm() < 1e-12);
  }
  CHECK_THROWS_AS((void)forward_noise(z0, 0, s, rng), ValidationError);
  CHECK_THROWS_AS((void)forward_noise(z0, 101, s, rng), ValidationError);
}

TEST_CASE("denoiser init is deterministic and condition-sensitive") {
  const DenoiserConfig cfg = small_config();
  const ToyDenoiser m1 = init_denoiser(cfg, 9);
  const ToyDenoiser m2 = init_denoiser(cfg, 9);
  CHECK(m1.input_proj == m2.input_proj);
  CHECK(m1.attn.layers[0].wk == m2.attn.layers[0].wk);

  const auto vocab = small_vocab();
  Rng rng(62);
  const Eigen::VectorXd z = rng.gaussian_vector(4);
  const Eigen::VectorXd eps_a =
      predict_noise(m1, nullptr, z, 10, encode(vocab, "a"));
  const Eigen::VectorXd eps_b =
      predict_noise(m1, nullptr, z, 10, encode(vocab, "b"));
  CHECK(eps_a.allFinite());
  CHECK((eps_a - eps_b).norm() > 1e-8);  // cross-attention sees the condition
  // Timestep matters too.
  const Eigen::VectorXd eps_t =
      predict_noise(m1, nullptr, z, 90, encode(vocab, "a"));
  CHECK((eps_a - eps_t).norm() > 1e-8);
}

TEST_CASE("denoiser config validation") {
  DenoiserConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.hidden = 15;  // not divisible by n_tokens
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.time_features = 7;  // must be even
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.latent_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("backward matches central finite differences on every matrix") {
  const DenoiserConfig cfg = small_config();
  ToyDenoiser model = init_denoiser(cfg, 33);
  const auto vocab = small_vocab();
  Rng rng(63);
  const Eigen::VectorXd z = rng.gaussian_vector(4);
  const Eigen::VectorXd target = rng.gaussian_vector(4);
  const Embedding cond = encode(vocab, "b");
  const int t = 37;

  const auto loss = [&](const ToyDenoiser& m) {
    return (target - predict_noise(m, nullptr, z, t, cond)).squaredNorm();
  };

  ForwardTape tape;
  const Eigen::VectorXd pred = predict_noise(model, nullptr, z, t, cond, &tape);
  const DenoiserGrads grads = backward(model, tape, 2.0 * (pred - target));

  const auto check_matrix = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& g,
                                const char* name) {
    CAPTURE(name);
    REQUIRE(g.rows() == w.rows());
    REQUIRE(g.cols() == w.cols());
    for (int probe = 0; probe < 4; ++probe) {
      const int r = (probe * 7) % static_cast<int>(w.rows());
      const int c = (probe * 13) % static_cast<int>(w.cols());
      const double fd = oracles::central_diff(
          [&](double v) {
            const double saved = w(r, c);
            w(r, c) = v;
            const double out = loss(model);
            w(r, c) = saved;
            return out;
          },
          w(r, c), 1e-5);
      CHECK(std::abs(fd - g(r, c)) <
            1e-6 * std::max({1.0, std::abs(fd), std::abs(g(r, c))}) + 1e-7);
    }
  };

  check_matrix(model.input_proj, grads.input_proj, "input_proj");
  check_matrix(model.time_embed, grads.time_embed, "time_embed");
  check_matrix(model.wq, grads.wq, "wq");
  check_matrix(model.attn.layers[0].wk, grads.wk, "wk");
  check_matrix(model.attn.layers[0].wv, grads.wv, "wv");
  check_matrix(model.mlp1, grads.mlp1, "mlp1");
  check_matrix(model.mlp2, grads.mlp2, "mlp2");
  check_matrix(model.output_proj, grads.output_proj, "output_proj");
}

TEST_CASE("dataset means are separated by six standard deviations") {
  const LatentDataset ds = build_dataset(8, 5, 0.4, 1.2, 71);
  REQUIRE(ds.means.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      CHECK((ds.means[i] - ds.means[j]).norm() >= 6.0 * ds.std_dev);
  // Samples concentrate around their mean.
  Rng rng(72);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(8);
  const int n = 4000;
  for (int i = 0; i < n; ++i) acc += ds.sample(2, rng);
  CHECK((acc / n - ds.means[2]).norm() < 0.1);
}

TEST_CASE("loss_ldm is a positive batch mean, deterministic in the rng") {
  const DenoiserConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg, 12);
  const auto vocab = small_vocab();
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.15);
  Rng data_rng(73);
  std::vector<LdmBatchItem> batch;
  for (int i = 0; i < 6; ++i)
    batch.push_back({data_rng.gaussian_vector(4), 1 + i * 8,
                     vocab.concepts[i % 3].second});
  Rng r1(9), r2(9), r3(10);
  const double l1 = loss_ldm(model, batch, s, r1);
  const double l2 = loss_ldm(model, batch, s, r2);
  const double l3 = loss_ldm(model, batch, s, r3);
  CHECK(l1 > 0.0);
  CHECK(l1 == l2);
  CHECK(l1 != l3);  // noise comes from the stream
}

TEST_CASE("short training run reduces evaluation loss") {
  const DenoiserConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg, 14);
  const auto vocab = small_vocab();
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.15);
  const LatentDataset ds = build_dataset(4, 3, 0.4, 1.2, 15);

  const auto eval_loss = [&](const ToyDenoiser& m) {
    Rng rng(999);
    std::vector<LdmBatchItem> batch;
    for (int i = 0; i < 64; ++i) {
      const std::size_t c = i % 3;
      batch.push_back({ds.sample(c, rng),
                       1 + static_cast<int>(rng.uniform_below(50)),
                       vocab.concepts[c].second});
    }
    return loss_ldm(m, batch, s, rng);
  };

  const double before = eval_loss(model);
  TrainParams params;
  params.steps = 400;
  params.lr = 1e-2;
  params.batch_size = 16;
  Rng rng(16);
  const ToyDenoiser trained = train_base(model, ds, vocab, params, s, rng);
  const double after = eval_loss(trained);
  CHECK(after < 0.8 * before);
}

TEST_CASE("zero-initialized adapter set leaves predictions unchanged") {
  const DenoiserConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg, 17);
  const LoraSet adapters = init_lora_set(model, 2, 18);
  REQUIRE(adapters.size() == model.attn.layers.size());
  const auto vocab = small_vocab();
  Rng rng(19);
  const Eigen::VectorXd z = rng.gaussian_vector(4);
  const Eigen::VectorXd without =
      predict_noise(model, nullptr, z, 5, encode(vocab, "c"));
  const Eigen::VectorXd with_adapters =
      predict_noise(model, &adapters, z, 5, encode(vocab, "c"));
  CHECK(without == with_adapters);
  const ToyDenoiser merged = merge_lora_set(model, adapters);
  CHECK(merged.attn.layers[0].wk == model.attn.layers[0].wk);
  CHECK(merged.attn.layers[0].wv == model.attn.layers[0].wv);
}

TEST_CASE("merged adapters and live adapters predict identically") {
  const DenoiserConfig cfg = small_config();
  const ToyDenoiser model = init_denoiser(cfg, 20);
  LoraSet adapters = init_lora_set(model, 2, 21);
  Rng rng(22);
  adapters[0].k.b = 0.1 * rng.gaussian_matrix(cfg.hidden, 2);
  adapters[0].v.b = 0.1 * rng.gaussian_matrix(cfg.hidden, 2);
  const auto vocab = small_vocab();
  const ToyDenoiser merged = merge_lora_set(model, adapters);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd z = rng.gaussian_vector(4);
    const Eigen::VectorXd live =
        predict_noise(model, &adapters, z, 3 + i, encode(vocab, "a"));
    const Eigen::VectorXd folded =
        predict_noise(merged, nullptr, z, 3 + i, encode(vocab, "a"));
    CHECK((live - folded).norm() < 1e-12);
  }
}

TEST_CASE("ancestral sampling is deterministic and finite") {
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.15);
  const EpsFn zero_eps = [](const Eigen::VectorXd& z, int) {
    return Eigen::VectorXd::Zero(z.size()).eval();
  };
  Rng r1(88), r2(88), r3(89);
  const Eigen::VectorXd a = ancestral_sample(zero_eps, 4, s, r1);
  const Eigen::VectorXd b = ancestral_sample(zero_eps, 4, s, r2);
  const Eigen::VectorXd c = ancestral_sample(zero_eps, 4, s, r3);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.allFinite());
}

TEST_CASE("a trained model generates samples near the conditioned cluster") {
  const DenoiserConfig cfg = small_config();
  const auto vocab = small_vocab();
  const NoiseSchedule s = build_schedule(50, 1e-3, 0.15);
  const LatentDataset ds = build_dataset(4, 3, 0.3, 1.6, 23);
  TrainParams params;
  params.steps = 1500;
  params.batch_size = 16;
  Rng train_rng(24);
  const ToyDenoiser trained =
      train_base(init_denoiser(cfg, 25), ds, vocab, params, s, train_rng);

  Rng gen_rng(26);
  int hits = 0;
  const int n = 60;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd z =
        generate(trained, nullptr, encode(vocab, "a"), s, gen_rng);
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if ((z - ds.means[c]).norm() < (z - ds.means[best]).norm()) best = c;
    if (best == 0) ++hits;
  }
  CHECK(hits > n / 2);  // far better than the 1/3 chance level
}
