#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace realera {

// Low-rank adapter h = Wx + B(Ax); A Gaussian-initialized, B zero, so a
// fresh adapter is an exact no-op.
struct LoraAdapter {
  Eigen::MatrixXd a;  // rank x d, trainable
  Eigen::MatrixXd b;  // out_dim x rank, trainable
  int rank = 0;
  std::string target;  // e.g. "attn/0/wk"
};

// a ~ N(0, 1/rank) entrywise, b = 0.
LoraAdapter init_lora(int out_dim, int d, int rank, std::uint64_t seed);

// Wx + B(Ax), evaluated without forming W + BA.
Eigen::VectorXd apply(const Eigen::MatrixXd& w, const LoraAdapter& lora,
                      const Eigen::VectorXd& x);

// W + BA.
Eigen::MatrixXd merge(const Eigen::MatrixXd& w, const LoraAdapter& lora);

}  // namespace realera
