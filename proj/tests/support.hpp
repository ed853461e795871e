#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dcom/embedding.hpp"

namespace dcom::test {

inline EmbeddingSet line(std::vector<float> xs, std::vector<Label> labels = {}) {
  const auto n = xs.size();
  if (labels.empty()) return EmbeddingSet(n, 1, std::move(xs));
  return EmbeddingSet(n, 1, std::move(xs), std::move(labels));
}

inline EmbeddingSet uniform_cloud(std::size_t n, std::size_t dim, std::uint64_t seed,
                                  float scale = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, scale);
  std::vector<float> v(n * dim);
  for (auto& x : v) x = u(rng);
  return EmbeddingSet(n, dim, std::move(v));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dcom_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace dcom::test
