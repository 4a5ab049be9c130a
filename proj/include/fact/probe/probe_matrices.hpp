#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fact/models/model.hpp"

namespace fact::probe {

/// A sentence plus the position of its embedding verb.
struct ProbeItem {
  models::SentenceInput input;
  std::size_t verb_index = 0;
};

/// Stacks, per sentence, the embedding-verb embedding (rows of X) and the
/// final-layer bidirectional hidden state at the embedded predicate (rows
/// of Y). X is n x e; Y is n x 2h (4h for the hybrid).
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> extract_probe_matrices(
    models::FactualityModel& model, const std::vector<ProbeItem>& items) {
  if (items.empty())
    throw validation_error("extract_probe_matrices: no items");
  const std::size_t e = model.embedding.dim();
  Eigen::MatrixXd X(items.size(), e);
  Eigen::MatrixXd Y(items.size(), model.state_width());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    if (item.verb_index >= item.input.tokens.size())
      throw validation_error("extract_probe_matrices: verb index out of range "
                             "at row " + std::to_string(i));
    const std::size_t row =
        model.embedding.index_of(item.input.tokens[item.verb_index]);
    for (std::size_t j = 0; j < e; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          model.embedding.vectors.value[row * e + j];
    gradcore::Graph g;
    gradcore::Tensor* h = model.encode_at_target(g, item.input);
    for (std::size_t j = 0; j < h->size(); ++j)
      Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          h->value[j];
  }
  return {std::move(X), std::move(Y)};
}

}  // namespace fact::probe
