// Copyright 2026 The kgsynth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KGSYNTH_EMBEDDING_H_
#define KGSYNTH_EMBEDDING_H_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace kgsynth {

template <class Scalar>
using EmbeddingT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Embedding = EmbeddingT<double>;

// Cosine similarity; 0 when either vector has zero norm.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm(), nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) return Scalar(0);
  return a.dot(b) / (na * nb);
}

// Rows are the unit-normalized inputs (zero vectors stay zero).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized_rows(
    const std::vector<EmbeddingT<Scalar>>& vectors) {
  Eigen::Index dim = vectors.empty() ? 0 : vectors.front().size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(
      static_cast<Eigen::Index>(vectors.size()), dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    Scalar n = vectors[i].norm();
    if (n > Scalar(0)) {
      m.row(static_cast<Eigen::Index>(i)) = (vectors[i] / n).transpose();
    } else {
      m.row(static_cast<Eigen::Index>(i)) = vectors[i].transpose();
    }
  }
  return m;
}

// Pairwise cosine similarities.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> similarity_matrix(
    const std::vector<EmbeddingT<Scalar>>& vectors) {
  auto rows = normalized_rows(vectors);
  return rows * rows.transpose();
}

// Single-link clusters of the graph "cosine >= threshold", restricted to
// pairs for which `compatible(i, j)` holds. Clusters are listed by smallest
// member, members ascending.
template <class Scalar, class Compatible>
std::vector<std::vector<std::size_t>> single_link_clusters(
    const std::vector<EmbeddingT<Scalar>>& vectors, Scalar threshold, Compatible&& compatible) {
  const std::size_t n = vectors.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto sims = similarity_matrix(vectors);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sims(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) >= threshold &&
          compatible(i, j)) {
        std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::vector<std::size_t>> by_root(n);
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& c : by_root) {
    if (!c.empty()) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace kgsynth

#endif  // KGSYNTH_EMBEDDING_H_
