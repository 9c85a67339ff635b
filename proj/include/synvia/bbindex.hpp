//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_BBINDEX_HPP
#define SYNVIA_BBINDEX_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synvia/catalog.hpp"
#include "synvia/fingerprint.hpp"

namespace synvia {

/// Fingerprint rows for nearest-neighbor retrieval, aligned with the
/// catalog's dense ids. Fingerprints are recomputed at build time, never
/// trusted from a file.
class BlockIndex {
public:
  static BlockIndex build(const Catalog &catalog);

  int size() const { return static_cast<int>(rows_.size()); }
  int nbits() const { return 256; }
  const FingerprintBits &row(int dense_id) const {
    return rows_[static_cast<size_t>(dense_id)];
  }
  const std::string &id(int dense_id) const {
    return ids_[static_cast<size_t>(dense_id)];
  }

  /// Top-k blocks by squared Euclidean distance between the real-valued
  /// query (length 256, entries in [0,1]) and the 0/1 fingerprint rows.
  /// Ties break toward the lower dense id. Exhaustive scan.
  std::vector<std::pair<int, double>> nearest(std::span<const double> query,
                                              int k) const;

  /// Versioned binary file ("SVBI"). Loading verifies structure only;
  /// callers cross-check ids against their catalog.
  void save(const std::string &path) const;
  static BlockIndex load(const std::string &path);

private:
  std::vector<FingerprintBits> rows_;
  std::vector<std::string> ids_;
};

/// Lloyd's algorithm with k-means++ seeding over the 256-bit fingerprints
/// (as reals). Stops after 200 iterations or when every centroid moves less
/// than 1e-6. Returns cluster index per block, values in [0, k).
std::vector<int> kmeans_clusters(const BlockIndex &index, int k, uint64_t seed);

struct SplitResult {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

/// Reserves one cluster for testing, the rest for training.
SplitResult kmeans_split(const BlockIndex &index, int k, uint64_t seed,
                         int test_cluster);

/// Keeps test block b iff max over train blocks t of Tanimoto similarity
/// between their 4096-bit Morgan fingerprints is <= threshold. An empty
/// train set keeps everything (max over the empty set is 0).
std::vector<int> max_train_similarity_filter(const Catalog &catalog,
                                             const std::vector<int> &test_ids,
                                             const std::vector<int> &train_ids,
                                             double threshold = 0.6);

}  // namespace synvia

#endif  // SYNVIA_BBINDEX_HPP
