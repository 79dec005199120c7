#include "realera/lora.hpp"

#include <cmath>
#include <string>

#include "realera/errors.hpp"
#include "realera/rng.hpp"

namespace realera {

LoraAdapter init_lora(int out_dim, int d, int rank, std::uint64_t seed) {
  if (rank < 1 || rank > std::min(out_dim, d))
    throw ValidationError("lora rank " + std::to_string(rank) +
                          " violates 1 <= rank <= min(out_dim, d) = " +
                          std::to_string(std::min(out_dim, d)));
  Rng rng(seed);
  LoraAdapter lora;
  lora.rank = rank;
  const double sigma = 1.0 / std::sqrt(static_cast<double>(rank));
  lora.a = sigma * rng.gaussian_matrix(rank, d);
  lora.b = Eigen::MatrixXd::Zero(out_dim, rank);
  return lora;
}

Eigen::VectorXd apply(const Eigen::MatrixXd& w, const LoraAdapter& lora,
                      const Eigen::VectorXd& x) {
  if (w.cols() != x.size() || lora.a.cols() != x.size() ||
      lora.b.rows() != w.rows() || lora.b.cols() != lora.a.rows())
    throw DimensionMismatchError("lora apply: shape mismatch");
  return w * x + lora.b * (lora.a * x);
}

Eigen::MatrixXd merge(const Eigen::MatrixXd& w, const LoraAdapter& lora) {
  if (lora.a.cols() != w.cols() || lora.b.rows() != w.rows() ||
      lora.b.cols() != lora.a.rows())
    throw DimensionMismatchError("lora merge: shape mismatch");
  return w + lora.b * lora.a;
}

}  // namespace realera
