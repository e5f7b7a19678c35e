#include "spd/encoders/embedding.hpp"

#include <sstream>
#include <unordered_map>

#include "spd/autodiff/ops.hpp"
#include "spd/errors.hpp"

namespace spd {

namespace {

ad::Tensor random_table(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  require(vocab_size > static_cast<std::size_t>(kUnkId), "embedding table needs PAD and UNK rows");
  require(dim > 0, "embedding dimension must be positive");
  ad::Tensor t({vocab_size, dim});
  for (std::size_t i = dim; i < t.numel(); ++i) t[i] = rng.uniform(-0.1, 0.1);
  return t;
}

}  // namespace

EmbeddingTable::EmbeddingTable(ad::ParameterStore& store, std::string name,
                               std::size_t vocab_size, std::size_t dim, bool trainable, Rng& rng)
    : EmbeddingTable(store, std::move(name), random_table(vocab_size, dim, rng), trainable) {}

EmbeddingTable::EmbeddingTable(ad::ParameterStore& store, std::string name, ad::Tensor values,
                               bool trainable)
    : vocab_size_(values.rows()), dim_(values.cols()) {
  require(values.rank() == 2, "embedding table must be a matrix");
  for (std::size_t c = 0; c < dim_; ++c) values(static_cast<std::size_t>(kPadId), c) = 0.0;
  param_ = store.add(std::move(name), std::move(values), trainable);
}

ad::Var EmbeddingTable::lookup(ad::Graph& graph, std::span<const std::int32_t> ids) const {
  return ad::embedding_lookup(graph.param(param_), ids);
}

WordVectorLoad load_word_vectors(std::istream& in, const std::vector<std::string>& tokens_by_id,
                                 std::size_t dim, Rng& rng) {
  WordVectorLoad out{random_table(tokens_by_id.size(), dim, rng), 0};
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 2; i < tokens_by_id.size(); ++i) index.emplace(tokens_by_id[i], i);

  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    auto it = index.find(token);
    if (it == index.end()) continue;
    row.clear();
    double v = 0.0;
    while (fields >> v) row.push_back(v);
    if (row.size() != dim) {
      throw IoError("word vector line " + std::to_string(line_no) + " has " +
                    std::to_string(row.size()) + " values, expected " + std::to_string(dim));
    }
    for (std::size_t c = 0; c < dim; ++c) out.table(it->second, c) = row[c];
    index.erase(it);
    ++out.found;
  }
  return out;
}

}  // namespace spd
