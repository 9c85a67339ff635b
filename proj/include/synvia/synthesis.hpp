//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_SYNTHESIS_HPP
#define SYNVIA_SYNTHESIS_HPP

#include <optional>
#include <string>
#include <vector>

#include "synvia/catalog.hpp"
#include "synvia/molgraph.hpp"
#include "synvia/reaction.hpp"

namespace synvia {

struct PostfixToken {
  enum class Kind { Start, BB, Rxn, End };
  Kind kind = Kind::Start;
  int id = -1;           // block dense id (BB) or template index (Rxn)
  int product_rank = 0;  // Rxn only: which candidate product was chosen

  static PostfixToken start() { return {Kind::Start, -1, 0}; }
  static PostfixToken bb(int block) { return {Kind::BB, block, 0}; }
  static PostfixToken rxn(int tmpl, int rank = 0) { return {Kind::Rxn, tmpl, rank}; }
  static PostfixToken end() { return {Kind::End, -1, 0}; }

  bool operator==(const PostfixToken &o) const {
    return kind == o.kind && id == o.id && product_rank == o.product_rank;
  }
};

/// Token sequence [Start, body..., End]; End is optional until finalized.
class PostfixProgram {
public:
  PostfixProgram() { tokens_.push_back(PostfixToken::start()); }
  explicit PostfixProgram(std::vector<PostfixToken> tokens);

  const std::vector<PostfixToken> &tokens() const { return tokens_; }
  size_t size() const { return tokens_.size(); }
  bool finalized() const {
    return !tokens_.empty() && tokens_.back().kind == PostfixToken::Kind::End;
  }
  void push(PostfixToken t);

  /// Body = tokens without Start/End.
  std::vector<PostfixToken> body() const;
  int reaction_count() const;

  bool operator==(const PostfixProgram &o) const { return tokens_ == o.tokens_; }

  std::string to_json() const;
  static PostfixProgram from_json(const std::string &line);

private:
  std::vector<PostfixToken> tokens_;
};

/// AST of a synthesis: leaves are building blocks, internal nodes reactions.
struct SynthesisTree {
  struct Node {
    int block = -1;        // leaf: block dense id
    int tmpl = -1;         // apply: template index
    int product_rank = 0;  // apply: candidate product choice
    std::vector<Node> children;

    bool is_leaf() const { return tmpl < 0; }
    static Node leaf(int block) {
      Node n;
      n.block = block;
      return n;
    }
    static Node apply(int tmpl, std::vector<Node> children, int rank = 0) {
      Node n;
      n.tmpl = tmpl;
      n.children = std::move(children);
      n.product_rank = rank;
      return n;
    }
    bool operator==(const Node &o) const {
      return block == o.block && tmpl == o.tmpl && product_rank == o.product_rank &&
             children == o.children;
    }
  };
  Node root;
  bool operator==(const SynthesisTree &o) const { return root == o.root; }
};

struct ExecutionContext {
  const Catalog &catalog;
  const std::vector<ReactionTemplate> &templates;
};

/// Post-order emission of the tree wrapped in Start/End.
/// Throws on unknown block / template ids or child-count mismatches.
PostfixProgram compile_tree(const SynthesisTree &tree, const ExecutionContext &ctx);

/// Inverse of compile_tree. The program must simulate to stack depth exactly 1.
SynthesisTree parse_program(const PostfixProgram &prog, const ExecutionContext &ctx);

enum class ExecStatus { Success, StackUnderflow, NoMatch, ValenceFail, LengthLimit };
const char *to_string(ExecStatus s);

struct TraceStep {
  int step = 0;            // 0-based index into the program body
  std::string op;          // "push" or "apply"
  PostfixToken token;
  int depth_after = 0;
  std::string canonical;   // canonical form of the molecule pushed
};

struct ExecutionResult {
  ExecStatus status = ExecStatus::Success;
  std::optional<Molecule> product;
  std::vector<TraceStep> trace;
};

struct ProductPolicy {
  // Candidate product choice for a Rxn token: the token's recorded rank by
  // default, optionally overridden with a fixed rank for every reaction.
  std::optional<int> fixed_rank;
};

/// Runs a finalized program on the stack machine. Chemistry-level failures
/// are reported through status; structural problems (missing End, unknown
/// ids) throw.
ExecutionResult execute(const PostfixProgram &prog, const ExecutionContext &ctx,
                        const ProductPolicy &policy = {});

/// Stack-validity check: simulated depth never drops below a reaction's
/// arity, and a finalized program leaves depth >= 1.
bool program_valid(const PostfixProgram &prog, const ExecutionContext &ctx);

}  // namespace synvia

#endif  // SYNVIA_SYNTHESIS_HPP
