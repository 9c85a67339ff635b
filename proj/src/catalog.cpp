//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/catalog.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace synvia {

Catalog Catalog::from_content(std::string_view content,
                              const std::vector<ReactionTemplate> &templates,
                              CatalogReport *report) {
  CatalogReport local;
  CatalogReport &rep = report ? *report : local;

  Catalog catalog;
  std::set<std::string> seen_canon;
  std::set<std::string> seen_ids;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("catalog line " + std::to_string(line_no) +
                      ": expected <id>\\t<smiles>");
    CatalogBlock block;
    block.id = line.substr(0, tab);
    const std::string smiles = line.substr(tab + 1);
    if (block.id.empty() || smiles.empty())
      throw DataError("catalog line " + std::to_string(line_no) +
                      ": empty id or smiles");
    if (!seen_ids.insert(block.id).second)
      throw DataError("catalog line " + std::to_string(line_no) +
                      ": duplicate id '" + block.id + "'");
    try {
      block.mol = parse_smiles(smiles);
    } catch (const Error &e) {
      rep.rejected.emplace_back(block.id, e.what());
      continue;
    }
    block.canon = canonical_form(block.mol);
    if (!seen_canon.insert(block.canon.text).second) {
      rep.duplicates_removed.push_back(block.id);
      continue;
    }
    if (!templates.empty()) {
      bool matched = false;
      for (const ReactionTemplate &t : templates) {
        for (const PatternGraph &p : t.reactants) {
          if (pattern_matches(p, block.mol)) {
            matched = true;
            break;
          }
        }
        if (matched) break;
      }
      if (!matched) {
        rep.unmatched_removed.push_back(block.id);
        continue;
      }
    }
    block.fp256 = morgan_fingerprint(block.mol, 2, 256);
    catalog.blocks_.push_back(std::move(block));
  }
  return catalog;
}

Catalog Catalog::load(const std::string &path,
                      const std::vector<ReactionTemplate> &templates,
                      CatalogReport *report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open catalog file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_content(ss.str(), templates, report);
}

int Catalog::find(const std::string &id) const {
  for (size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].id == id) return static_cast<int>(i);
  return -1;
}

}  // namespace synvia
