//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/bbindex.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "synvia/rng.hpp"

namespace synvia {

BlockIndex BlockIndex::build(const Catalog &catalog) {
  BlockIndex index;
  index.rows_.reserve(static_cast<size_t>(catalog.size()));
  index.ids_.reserve(static_cast<size_t>(catalog.size()));
  for (const CatalogBlock &block : catalog.blocks()) {
    index.rows_.push_back(morgan_fingerprint(block.mol, 2, 256));
    index.ids_.push_back(block.id);
  }
  return index;
}

std::vector<std::pair<int, double>> BlockIndex::nearest(
    std::span<const double> query, int k) const {
  if (rows_.empty()) throw EmptyIndex("nearest on an empty index");
  if (k < 1) throw Error("nearest requires k >= 1");
  if (static_cast<int>(query.size()) != nbits())
    throw LengthMismatch("query length must be 256");
  std::vector<std::pair<double, int>> scored;
  scored.reserve(rows_.size());
  for (size_t r = 0; r < rows_.size(); ++r) {
    const FingerprintBits &fp = rows_[r];
    double dist = 0;
    for (int j = 0; j < nbits(); ++j) {
      const double d = query[static_cast<size_t>(j)] - (fp.test(j) ? 1.0 : 0.0);
      dist += d * d;
    }
    scored.emplace_back(dist, static_cast<int>(r));
  }
  const size_t take = std::min<size_t>(static_cast<size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(take),
                    scored.end());
  std::vector<std::pair<int, double>> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i)
    out.emplace_back(scored[i].second, scored[i].first);
  return out;
}

// ---------------------------------------------------------------------------
// SVBI file

namespace {
constexpr char kMagic[4] = {'S', 'V', 'B', 'I'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string &buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
uint32_t get_u32(const std::string &buf, size_t &pos) {
  if (pos + 4 > buf.size()) throw DataError("index file truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + static_cast<size_t>(i)]))
         << (8 * i);
  pos += 4;
  return v;
}
}  // namespace

void BlockIndex::save(const std::string &path) const {
  std::string buf(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<uint32_t>(rows_.size()));
  for (size_t i = 0; i < rows_.size(); ++i) {
    put_u32(buf, static_cast<uint32_t>(ids_[i].size()));
    buf += ids_[i];
    const std::vector<uint8_t> bytes = rows_[i].to_bytes();
    buf.append(reinterpret_cast<const char *>(bytes.data()), bytes.size());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index: " + tmp);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("short write on index: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename index into place: " + path);
}

BlockIndex BlockIndex::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError("not an index file (bad magic)");
  size_t pos = 4;
  const uint32_t version = get_u32(buf, pos);
  if (version != kVersion)
    throw DataError("unsupported index version " + std::to_string(version));
  const uint32_t count = get_u32(buf, pos);
  BlockIndex index;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t len = get_u32(buf, pos);
    if (pos + len + 32 > buf.size()) throw DataError("index file truncated");
    index.ids_.push_back(buf.substr(pos, len));
    pos += len;
    std::vector<uint8_t> bytes(32);
    std::memcpy(bytes.data(), buf.data() + pos, 32);
    pos += 32;
    index.rows_.push_back(FingerprintBits::from_bytes(bytes, 2));
  }
  if (pos != buf.size()) throw DataError("trailing bytes in index file");
  return index;
}

// ---------------------------------------------------------------------------
// K-means split

std::vector<int> kmeans_clusters(const BlockIndex &index, int k, uint64_t seed) {
  const int n = index.size();
  if (k < 1) throw Error("k must be >= 1");
  if (n < k) throw DataError("too few blocks for k=" + std::to_string(k));
  const int dim = index.nbits();

  std::vector<std::vector<double>> points(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) points[static_cast<size_t>(i)] = index.row(i).to_real();

  auto sqdist = [dim](const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0;
    for (int j = 0; j < dim; ++j) {
      const double d = a[static_cast<size_t>(j)] - b[static_cast<size_t>(j)];
      s += d * d;
    }
    return s;
  };

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  std::vector<char> chosen(static_cast<size_t>(n), 0);
  {
    const int first = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
    centroids.push_back(points[static_cast<size_t>(first)]);
    chosen[static_cast<size_t>(first)] = 1;
  }
  std::vector<double> d2(static_cast<size_t>(n), 0.0);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0;
    for (int i = 0; i < n; ++i) {
      double best = 1e300;
      for (const auto &c : centroids) best = std::min(best, sqdist(points[static_cast<size_t>(i)], c));
      d2[static_cast<size_t>(i)] = chosen[static_cast<size_t>(i)] ? 0.0 : best;
      total += d2[static_cast<size_t>(i)];
    }
    int pick = -1;
    if (total > 0) {
      const double target = rng.uniform() * total;
      double acc = 0;
      for (int i = 0; i < n; ++i) {
        acc += d2[static_cast<size_t>(i)];
        if (acc >= target && d2[static_cast<size_t>(i)] > 0) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      // All remaining distances are zero (duplicate rows); take the lowest
      // unchosen index.
      for (int i = 0; i < n; ++i)
        if (!chosen[static_cast<size_t>(i)]) {
          pick = i;
          break;
        }
    }
    centroids.push_back(points[static_cast<size_t>(pick)]);
    chosen[static_cast<size_t>(pick)] = 1;
  }

  // Lloyd iterations.
  std::vector<int> assign(static_cast<size_t>(n), 0);
  for (int iter = 0; iter < 200; ++iter) {
    for (int i = 0; i < n; ++i) {
      double best = 1e300;
      int best_c = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sqdist(points[static_cast<size_t>(i)],
                                centroids[static_cast<size_t>(c)]);
        if (d < best) {
          best = d;
          best_c = c;
        }
      }
      assign[static_cast<size_t>(i)] = best_c;
    }
    // Recompute centroids; reseed empty clusters deterministically with the
    // point farthest from its centroid.
    std::vector<std::vector<double>> next(
        static_cast<size_t>(k), std::vector<double>(static_cast<size_t>(dim), 0.0));
    std::vector<int> count(static_cast<size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      const int c = assign[static_cast<size_t>(i)];
      ++count[static_cast<size_t>(c)];
      for (int j = 0; j < dim; ++j)
        next[static_cast<size_t>(c)][static_cast<size_t>(j)] +=
            points[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    for (int c = 0; c < k; ++c) {
      if (count[static_cast<size_t>(c)] == 0) {
        double worst = -1;
        int worst_i = 0;
        for (int i = 0; i < n; ++i) {
          const double d =
              sqdist(points[static_cast<size_t>(i)],
                     centroids[static_cast<size_t>(assign[static_cast<size_t>(i)])]);
          if (d > worst) {
            worst = d;
            worst_i = i;
          }
        }
        next[static_cast<size_t>(c)] = points[static_cast<size_t>(worst_i)];
        assign[static_cast<size_t>(worst_i)] = c;
        count[static_cast<size_t>(c)] = 1;
      } else {
        for (int j = 0; j < dim; ++j)
          next[static_cast<size_t>(c)][static_cast<size_t>(j)] /=
              static_cast<double>(count[static_cast<size_t>(c)]);
      }
    }
    double max_move = 0;
    for (int c = 0; c < k; ++c)
      max_move = std::max(max_move, std::sqrt(sqdist(next[static_cast<size_t>(c)],
                                                     centroids[static_cast<size_t>(c)])));
    centroids = std::move(next);
    if (max_move < 1e-6) break;
  }
  // Final assignment against the converged centroids.
  for (int i = 0; i < n; ++i) {
    double best = 1e300;
    int best_c = 0;
    for (int c = 0; c < k; ++c) {
      const double d =
          sqdist(points[static_cast<size_t>(i)], centroids[static_cast<size_t>(c)]);
      if (d < best) {
        best = d;
        best_c = c;
      }
    }
    assign[static_cast<size_t>(i)] = best_c;
  }
  return assign;
}

SplitResult kmeans_split(const BlockIndex &index, int k, uint64_t seed,
                         int test_cluster) {
  if (test_cluster < 0 || test_cluster >= k)
    throw Error("test_cluster out of range");
  const std::vector<int> clusters = kmeans_clusters(index, k, seed);
  SplitResult split;
  for (int i = 0; i < index.size(); ++i) {
    if (clusters[static_cast<size_t>(i)] == test_cluster)
      split.test_ids.push_back(i);
    else
      split.train_ids.push_back(i);
  }
  return split;
}

std::vector<int> max_train_similarity_filter(const Catalog &catalog,
                                             const std::vector<int> &test_ids,
                                             const std::vector<int> &train_ids,
                                             double threshold) {
  std::vector<FingerprintBits> train_fp;
  train_fp.reserve(train_ids.size());
  for (int t : train_ids)
    train_fp.push_back(morgan_fingerprint(catalog.block(t).mol, 2, 4096));
  std::vector<int> kept;
  for (int b : test_ids) {
    const FingerprintBits fp = morgan_fingerprint(catalog.block(b).mol, 2, 4096);
    double max_sim = 0.0;  // max over the empty set is 0
    for (const FingerprintBits &t : train_fp)
      max_sim = std::max(max_sim, tanimoto(fp, t));
    if (max_sim <= threshold) kept.push_back(b);
  }
  return kept;
}

}  // namespace synvia
