#include "realera/attention_edit.hpp"

#include <string>

#include "realera/errors.hpp"

namespace realera {

void EditInstance::validate(Eigen::Index dim) const {
  if (erase_pairs.empty() && preserve_inputs.empty())
    throw ValidationError(
        "edit instance needs at least one erase pair or preserve input");
  if (lambda1 < 0.0) throw ValidationError("lambda1 must be nonnegative");
  if (ridge < 0.0) throw ValidationError("ridge must be nonnegative");
  for (const auto& [e, e_star] : erase_pairs) {
    if (e.size() != dim || e_star.size() != dim)
      throw DimensionMismatchError(
          "erase pair dim " + std::to_string(e.size()) + "/" +
          std::to_string(e_star.size()) + " vs weights dim " +
          std::to_string(dim));
  }
  for (const auto& e : preserve_inputs) {
    if (e.size() != dim)
      throw DimensionMismatchError("preserve input dim " +
                                   std::to_string(e.size()) +
                                   " vs weights dim " + std::to_string(dim));
  }
}

double objective_value(const Eigen::MatrixXd& w, const Eigen::MatrixXd& w_org,
                       const EditInstance& inst) {
  if (w.rows() != w_org.rows() || w.cols() != w_org.cols())
    throw DimensionMismatchError("objective_value: W and W_org shapes differ");
  inst.validate(w.cols());
  double value = 0.0;
  for (const auto& [e, e_star] : inst.erase_pairs)
    value += (w * e - w_org * e_star).squaredNorm();
  for (const auto& e : inst.preserve_inputs)
    value += inst.lambda1 * (w * e - w_org * e).squaredNorm();
  value += inst.ridge * (w - w_org).squaredNorm();
  return value;
}

Eigen::MatrixXd solve_closed_form(const Eigen::MatrixXd& w_org,
                                  const EditInstance& inst) {
  inst.validate(w_org.cols());
  const Eigen::Index d = w_org.cols();

  Eigen::MatrixXd gram = inst.ridge * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd cross = inst.ridge * w_org;
  for (const auto& [e, e_star] : inst.erase_pairs) {
    gram.noalias() += e * e.transpose();
    cross.noalias() += (w_org * e_star) * e.transpose();
  }
  for (const auto& e : inst.preserve_inputs) {
    gram.noalias() += inst.lambda1 * (e * e.transpose());
    cross.noalias() += inst.lambda1 * (w_org * e) * e.transpose();
  }

  // W G = C with G symmetric positive (semi-)definite; solve G W^T = C^T.
  if (inst.ridge == 0.0) {
    // Without the ridge an undersized sample set leaves G singular; LLT can
    // slip through on rounding noise, so test the spectrum explicitly.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const auto& eig = es.eigenvalues();
    if (eig(0) <= eig(d - 1) * 1e-12)
      throw SingularSystemError(
          "closed-form Gram matrix is rank-deficient and ridge = 0");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SingularSystemError(
        "closed-form Gram matrix is not positive definite (rank-deficient "
        "sample set with ridge = " +
        std::to_string(inst.ridge) + ")");
  return llt.solve(cross.transpose()).transpose();
}

CrossAttentionWeights edit_model(const CrossAttentionWeights& weights,
                                 const EditInstance& inst) {
  inst.validate(weights.d);
  CrossAttentionWeights edited = weights;
  for (std::size_t i = 0; i < weights.layers.size(); ++i) {
    try {
      edited.layers[i].wk = solve_closed_form(weights.layers[i].wk, inst);
    } catch (const SingularSystemError& err) {
      throw SingularSystemError("layer " + std::to_string(i) +
                                " (K): " + err.what());
    }
    try {
      edited.layers[i].wv = solve_closed_form(weights.layers[i].wv, inst);
    } catch (const SingularSystemError& err) {
      throw SingularSystemError("layer " + std::to_string(i) +
                                " (V): " + err.what());
    }
  }
  return edited;
}

}  // namespace realera
