#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include "spd/autodiff/graph.hpp"
#include "spd/rng.hpp"

namespace spd {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;

/// Word embedding table. Row kPadId is all-zero and never updated.
class EmbeddingTable {
 public:
  // Random uniform(-0.1, 0.1) initialisation.
  EmbeddingTable(ad::ParameterStore& store, std::string name, std::size_t vocab_size,
                 std::size_t dim, bool trainable, Rng& rng);
  // Pre-built (e.g. pretrained) values; the PAD row is forced to zero.
  EmbeddingTable(ad::ParameterStore& store, std::string name, ad::Tensor values, bool trainable);

  ad::Var lookup(ad::Graph& graph, std::span<const std::int32_t> ids) const;

  ad::ParamId param() const { return param_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dim() const { return dim_; }

 private:
  ad::ParamId param_;
  std::size_t vocab_size_;
  std::size_t dim_;
};

struct WordVectorLoad {
  ad::Tensor table;
  std::size_t found = 0;  // vocabulary entries covered by the file
};

/// Builds a vocab_size x dim table from a whitespace-separated word-vector
/// text file (token followed by dim reals per line). Tokens missing from the
/// file keep a uniform(-0.1, 0.1) row; PAD stays zero. Lines whose width does
/// not match dim are rejected with IoError.
WordVectorLoad load_word_vectors(std::istream& in, const std::vector<std::string>& tokens_by_id,
                                 std::size_t dim, Rng& rng);

}  // namespace spd
