#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fact/gradcore/tensor.hpp"

namespace fact::models {

using gradcore::Graph;
using gradcore::Tensor;

/// Token embedding table with a single UNK row. Every out-of-vocabulary
/// lookup resolves to the UNK row; the UNK vector itself is randomly drawn
/// at construction and trained like any other row.
struct EmbeddingTable {
  std::unordered_map<std::string, std::size_t> vocab;
  Tensor vectors;  // V x e, row unk_index is the UNK vector
  std::size_t unk_index = 0;

  EmbeddingTable() = default;

  EmbeddingTable(const std::vector<std::string>& tokens, std::size_t dim,
                 std::mt19937_64& rng) {
    std::vector<std::string> uniq;
    for (const auto& t : tokens)
      if (!vocab.count(t)) {
        vocab.emplace(t, uniq.size());
        uniq.push_back(t);
      }
    unk_index = uniq.size();
    vectors = Tensor({uniq.size() + 1, dim});
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (double& v : vectors.value) v = u(rng);
  }

  std::size_t dim() const { return vectors.cols(); }

  std::size_t index_of(const std::string& token) const {
    auto it = vocab.find(token);
    return it == vocab.end() ? unk_index : it->second;
  }

  bool in_vocab(const std::string& token) const { return vocab.count(token) > 0; }
};

/// Embeds a token sequence. Positions listed in `unk_positions` are forced
/// to the UNK row regardless of vocabulary membership.
inline std::vector<Tensor*> embed(Graph& g, EmbeddingTable& table,
                                  const std::vector<std::string>& tokens,
                                  const std::set<std::size_t>& unk_positions = {}) {
  if (tokens.empty())
    throw validation_error("embed: empty token sequence");
  std::vector<Tensor*> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t idx =
        unk_positions.count(i) ? table.unk_index : table.index_of(tokens[i]);
    out.push_back(g.row(&table.vectors, idx));
  }
  return out;
}

/// Same, over precomputed indices.
inline std::vector<Tensor*> embed_indices(Graph& g, EmbeddingTable& table,
                                          const std::vector<std::size_t>& indices,
                                          const std::set<std::size_t>& unk_positions = {}) {
  if (indices.empty())
    throw validation_error("embed: empty token sequence");
  std::vector<Tensor*> out;
  out.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t idx = unk_positions.count(i) ? table.unk_index : indices[i];
    out.push_back(g.row(&table.vectors, idx));
  }
  return out;
}

}  // namespace fact::models
