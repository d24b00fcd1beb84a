#include "streamal/features.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "streamal/io_util.hpp"
#include "streamal/rng.hpp"

namespace streamal {

namespace {

bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

char ascii_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

EmbeddingTable load_embeddings(const std::string& path, int expected_dim) {
  if (expected_dim < 1) {
    throw std::invalid_argument("embedding dimension must be positive");
  }
  const std::string content = read_file(path);
  EmbeddingTable table;
  table.dim = expected_dim;

  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string::npos) end = content.size();
    std::string_view line = std::string_view(content).substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    // token v1 v2 ... vD
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_ascii_space(line[i])) ++i;
      const std::size_t start = i;
      while (i < line.size() && !is_ascii_space(line[i])) ++i;
      if (i > start) parts.push_back(line.substr(start, i - start));
    }
    if (parts.size() < 2) {
      ++table.skipped_lines;
      continue;
    }

    FeatureVector vec;
    vec.reserve(parts.size() - 1);
    bool ok = true;
    for (std::size_t p = 1; p < parts.size(); ++p) {
      double v = 0.0;
      const auto sv = parts[p];
      auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (ec != std::errc{} || ptr != sv.data() + sv.size()) {
        ok = false;
        break;
      }
      vec.push_back(v);
    }
    if (!ok || static_cast<int>(vec.size()) != expected_dim) {
      ++table.skipped_lines;
      continue;
    }

    std::string token(parts[0]);
    for (char& c : token) c = ascii_lower(c);
    table.vectors[std::move(token)] = std::move(vec);  // last one wins
  }

  if (table.vectors.empty()) {
    throw std::runtime_error(path + ": no usable embedding rows");
  }
  return table;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_ascii_space(text[i])) ++i;
    std::size_t stop = i;
    while (start < stop && is_ascii_punct(text[start])) ++start;
    while (stop > start && is_ascii_punct(text[stop - 1])) --stop;
    if (stop > start) {
      std::string tok(text.substr(start, stop - start));
      for (char& c : tok) c = ascii_lower(c);
      tokens.push_back(std::move(tok));
    }
  }
  return tokens;
}

FeatureVector featurize(const EmbeddingTable& table, std::string_view text) {
  FeatureVector mean(static_cast<std::size_t>(table.dim), 0.0);
  std::size_t hits = 0;
  for (const auto& tok : tokenize(text)) {
    auto it = table.vectors.find(tok);
    if (it == table.vectors.end()) continue;
    ++hits;
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += it->second[d];
  }
  if (hits > 0) {
    for (auto& v : mean) v /= static_cast<double>(hits);
  }
  return mean;
}

FeatureVector hashed_bow(std::string_view text, int dim, std::uint64_t seed) {
  if (dim < 8) {
    throw std::invalid_argument("hashed_bow dim must be >= 8");
  }
  FeatureVector vec(static_cast<std::size_t>(dim), 0.0);
  for (const auto& tok : tokenize(text)) {
    const std::uint64_t h = splitmix64(seed ^ fnv1a64(tok));
    vec[h % static_cast<std::uint64_t>(dim)] += 1.0;
  }
  double norm_sq = 0.0;
  for (double v : vec) norm_sq += v * v;
  if (norm_sq > 0.0) {
    const double norm = std::sqrt(norm_sq);
    for (auto& v : vec) v /= norm;
  }
  return vec;
}

int materialize_features(Dataset& data, const EmbeddingTable* table,
                         int hash_dim, std::uint64_t hash_seed) {
  int dim = -1;
  for (auto& inst : data.instances) {
    if (!inst.features) {
      inst.features = table ? featurize(*table, inst.text)
                            : hashed_bow(inst.text, hash_dim, hash_seed);
    }
    const int d = static_cast<int>(inst.features->size());
    if (dim < 0) {
      dim = d;
    } else if (d != dim) {
      throw std::runtime_error("instance '" + inst.id + "' has " +
                               std::to_string(d) + "-dim features, expected " +
                               std::to_string(dim));
    }
  }
  if (dim <= 0) {
    throw std::runtime_error("dataset has no instances to featurize");
  }
  return dim;
}

}  // namespace streamal
