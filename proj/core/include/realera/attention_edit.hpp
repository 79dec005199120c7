#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "realera/embedding.hpp"

namespace realera {

// The editable K/V projection matrices of each cross-attention block.
struct CrossAttentionWeights {
  struct Layer {
    Eigen::MatrixXd wk;  // out_dim x d
    Eigen::MatrixXd wv;  // out_dim x d
  };
  std::vector<Layer> layers;
  int d = 0;  // embedding dim (column count of every wk/wv)
};

// One closed-form editing problem: map each erase input to the original
// model's output at its target, keep preserve inputs fixed, with a ridge
// pull toward W_org for uniqueness on rank-deficient systems.
struct EditInstance {
  std::vector<std::pair<Embedding, Embedding>> erase_pairs;  // (e_i, e_i*)
  std::vector<Embedding> preserve_inputs;                    // e_j
  double lambda1 = 0.1;
  double ridge = 1e-4;

  void validate(Eigen::Index dim) const;
};

// sum_E |W e_i - W_org e_i*|^2 + lambda1 * sum_P |W e_j - W_org e_j|^2
//   + ridge * |W - W_org|_F^2
double objective_value(const Eigen::MatrixXd& w, const Eigen::MatrixXd& w_org,
                       const EditInstance& inst);

// Unique minimizer of objective_value:
//   W = (sum_E W_org e_i* e_i^T + lambda1 sum_P W_org e_j e_j^T + ridge W_org)
//       (sum_E e_i e_i^T + lambda1 sum_P e_j e_j^T + ridge I)^{-1}
// solved by an SPD factorization; throws SingularSystemError when ridge = 0
// leaves the Gram matrix rank-deficient.
Eigen::MatrixXd solve_closed_form(const Eigen::MatrixXd& w_org,
                                  const EditInstance& inst);

// Applies solve_closed_form to every layer's wk and wv independently.
CrossAttentionWeights edit_model(const CrossAttentionWeights& weights,
                                 const EditInstance& inst);

}  // namespace realera
