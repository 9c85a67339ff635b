//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_CATALOG_HPP
#define SYNVIA_CATALOG_HPP

#include <string>
#include <vector>

#include "synvia/fingerprint.hpp"
#include "synvia/molgraph.hpp"
#include "synvia/reaction.hpp"

namespace synvia {

struct CatalogBlock {
  std::string id;        // identifier from the catalog file
  Molecule mol;
  CanonicalForm canon;
  FingerprintBits fp256;  // Morgan radius 2, 256 bits; recomputed at load
};

struct CatalogReport {
  std::vector<std::string> duplicates_removed;
  std::vector<std::pair<std::string, std::string>> rejected;  // (id, reason)
  std::vector<std::string> unmatched_removed;  // no template slot matches
};

/// Building-block catalog with dense ids 0..n-1 in file order after
/// preprocessing. Immutable once loaded.
class Catalog {
public:
  /// Loads `<id>\t<smiles>` lines ('#' comments). Duplicate canonical forms
  /// and blocks that fail sanitization are dropped and reported. When
  /// `templates` is nonempty, blocks matching no reactant slot of any
  /// template are dropped as well.
  static Catalog load(const std::string &path,
                      const std::vector<ReactionTemplate> &templates,
                      CatalogReport *report = nullptr);
  static Catalog from_content(std::string_view content,
                              const std::vector<ReactionTemplate> &templates,
                              CatalogReport *report = nullptr);

  int size() const { return static_cast<int>(blocks_.size()); }
  bool empty() const { return blocks_.empty(); }
  const CatalogBlock &block(int dense_id) const {
    return blocks_[static_cast<size_t>(dense_id)];
  }
  const std::vector<CatalogBlock> &blocks() const { return blocks_; }

  /// Dense id for a file id; -1 when absent.
  int find(const std::string &id) const;

private:
  std::vector<CatalogBlock> blocks_;
};

}  // namespace synvia

#endif  // SYNVIA_CATALOG_HPP
