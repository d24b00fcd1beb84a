#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "streamal/stream.hpp"

namespace streamal {

// Dense word-vector table loaded from a text file (one token per line:
// token v1 v2 ... vD, whitespace-separated).
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, FeatureVector> vectors;
  // Input lines whose vector width disagreed with the table dimension.
  std::size_t skipped_lines = 0;
};

// Loads an embedding table, keeping only lines of exactly expected_dim
// values; other widths are counted and skipped. Tokens are lowercased; a
// token seen twice keeps its last vector. Throws if no line is usable.
EmbeddingTable load_embeddings(const std::string& path, int expected_dim);

// Lowercased ASCII tokens of `text`, split on whitespace, with leading and
// trailing punctuation stripped. Tokens that strip to nothing are dropped.
std::vector<std::string> tokenize(std::string_view text);

// Mean of the embedding vectors of in-vocabulary tokens. Out-of-vocabulary
// tokens are dropped; if nothing is left the zero vector comes back.
FeatureVector featurize(const EmbeddingTable& table, std::string_view text);

// Hashed bag-of-words: each token increments bucket fnv1a64(token, seed) mod
// dim, then the vector is L2-normalised (all-zero stays all-zero). dim >= 8.
FeatureVector hashed_bow(std::string_view text, int dim, std::uint64_t seed);

// Ensures every instance carries a dense feature vector of one shared width,
// deriving missing ones from text via `embed` (may be null => hashed_bow).
// Returns the feature dimension.
int materialize_features(Dataset& data, const EmbeddingTable* table,
                         int hash_dim, std::uint64_t hash_seed);

}  // namespace streamal
