//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_TESTS_FIXTURES_HPP
#define SYNVIA_TESTS_FIXTURES_HPP

#include <string>

#include "synvia/catalog.hpp"
#include "synvia/reaction.hpp"
#include "synvia/synthesis.hpp"

namespace synvia::testing {

inline const char *kTemplatesText =
    "amide\t2\t[C:1](=[O:2])O.[N:3]>>[C:1](=[O:2])[N:3]\n"
    "nalkyl\t2\t[C:1]Br.[N:2]>>[C:1][N:2]\n"
    "suzuki\t2\t[c:1]Br.[c:2]B(O)O>>[c:1]-[c:2]\n"
    "nitro_red\t1\t[N+:1](=[O])[O-]>>[N+0:1]\n"
    "ester_hyd\t1\t[C:1](=[O:2])[O:3][C:4]>>[C:1](=[O:2])O.[O:3][C:4]\n"
    "nn_link\t3\t[C:1]Br.[N:2].[C:3]Br>>[C:1][N:2][C:3]\n";

inline const char *kCatalogText =
    "acid_acetic\tCC(=O)O\n"
    "acid_prop\tCCC(=O)O\n"
    "acid_pbb\tOC(=O)c1ccc(Br)cc1\n"
    "amine_methyl\tCN\n"
    "amine_ethyl\tNCC\n"
    "bromide_et\tCCBr\n"
    "bromide_bn\tBrCc1ccccc1\n"
    "boronic_ph\tOB(O)c1ccccc1\n"
    "nitrobenzene\tO=[N+]([O-])c1ccccc1\n"
    "ester_ethyl\tCC(=O)OCC\n";

struct TestEnv {
  std::vector<ReactionTemplate> templates;
  Catalog catalog;

  TestEnv()
      : templates(parse_template_file(kTemplatesText)),
        catalog(Catalog::from_content(kCatalogText, templates)) { }

  ExecutionContext ctx() const { return {catalog, templates}; }
  int tmpl(const std::string &id) const {
    for (const auto &t : templates)
      if (t.id == id) return t.index;
    throw std::runtime_error("no such template " + id);
  }
  int block(const std::string &id) const {
    const int i = catalog.find(id);
    if (i < 0) throw std::runtime_error("no such block " + id);
    return i;
  }
};

inline const TestEnv &env() {
  static const TestEnv e;
  return e;
}

}  // namespace synvia::testing

#endif
