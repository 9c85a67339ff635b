//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/synthesis.hpp"

#include <json.hpp>

namespace synvia {

using nlohmann::json;

PostfixProgram::PostfixProgram(std::vector<PostfixToken> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_.front().kind != PostfixToken::Kind::Start)
    throw InvalidProgram("program must begin with Start");
  for (size_t i = 1; i < tokens_.size(); ++i) {
    if (tokens_[i].kind == PostfixToken::Kind::Start)
      throw InvalidProgram("Start token inside program body");
    if (tokens_[i].kind == PostfixToken::Kind::End && i + 1 != tokens_.size())
      throw InvalidProgram("token after End");
  }
}

void PostfixProgram::push(PostfixToken t) {
  if (finalized()) throw InvalidProgram("cannot append to a finalized program");
  if (t.kind == PostfixToken::Kind::Start)
    throw InvalidProgram("Start token inside program body");
  tokens_.push_back(t);
}

std::vector<PostfixToken> PostfixProgram::body() const {
  std::vector<PostfixToken> out;
  for (const PostfixToken &t : tokens_)
    if (t.kind == PostfixToken::Kind::BB || t.kind == PostfixToken::Kind::Rxn)
      out.push_back(t);
  return out;
}

int PostfixProgram::reaction_count() const {
  int c = 0;
  for (const PostfixToken &t : tokens_)
    if (t.kind == PostfixToken::Kind::Rxn) ++c;
  return c;
}

std::string PostfixProgram::to_json() const {
  json tokens = json::array();
  for (const PostfixToken &t : tokens_) {
    json jt;
    switch (t.kind) {
    case PostfixToken::Kind::Start: jt["t"] = "START"; break;
    case PostfixToken::Kind::BB:
      jt["t"] = "BB";
      jt["id"] = t.id;
      break;
    case PostfixToken::Kind::Rxn:
      jt["t"] = "RXN";
      jt["r"] = t.id;
      if (t.product_rank != 0) jt["rank"] = t.product_rank;
      break;
    case PostfixToken::Kind::End: jt["t"] = "END"; break;
    }
    tokens.push_back(jt);
  }
  json out;
  out["tokens"] = tokens;
  return out.dump();
}

PostfixProgram PostfixProgram::from_json(const std::string &line) {
  json parsed;
  try {
    parsed = json::parse(line);
  } catch (const json::exception &e) {
    throw DataError(std::string("bad program json: ") + e.what());
  }
  if (!parsed.contains("tokens") || !parsed["tokens"].is_array())
    throw DataError("program json lacks a tokens array");
  std::vector<PostfixToken> tokens;
  for (const json &jt : parsed["tokens"]) {
    const std::string kind = jt.value("t", "");
    if (kind == "START") {
      tokens.push_back(PostfixToken::start());
    } else if (kind == "BB") {
      if (!jt.contains("id")) throw DataError("BB token lacks id");
      tokens.push_back(PostfixToken::bb(jt["id"].get<int>()));
    } else if (kind == "RXN") {
      if (!jt.contains("r")) throw DataError("RXN token lacks r");
      tokens.push_back(PostfixToken::rxn(jt["r"].get<int>(), jt.value("rank", 0)));
    } else if (kind == "END") {
      tokens.push_back(PostfixToken::end());
    } else {
      throw DataError("unknown token type '" + kind + "'");
    }
  }
  return PostfixProgram(std::move(tokens));
}

namespace {

void check_token_refs(const PostfixToken &t, const ExecutionContext &ctx) {
  if (t.kind == PostfixToken::Kind::BB) {
    if (t.id < 0 || t.id >= ctx.catalog.size())
      throw DataError("unknown block id " + std::to_string(t.id));
  } else if (t.kind == PostfixToken::Kind::Rxn) {
    if (t.id < 0 || t.id >= static_cast<int>(ctx.templates.size()))
      throw DataError("unknown template index " + std::to_string(t.id));
  }
}

void emit_post_order(const SynthesisTree::Node &node, const ExecutionContext &ctx,
                     PostfixProgram &prog) {
  if (node.is_leaf()) {
    if (node.block < 0 || node.block >= ctx.catalog.size())
      throw DataError("unknown block id " + std::to_string(node.block));
    prog.push(PostfixToken::bb(node.block));
    return;
  }
  if (node.tmpl < 0 || node.tmpl >= static_cast<int>(ctx.templates.size()))
    throw DataError("unknown template index " + std::to_string(node.tmpl));
  const ReactionTemplate &tmpl = ctx.templates[static_cast<size_t>(node.tmpl)];
  if (static_cast<int>(node.children.size()) != tmpl.arity)
    throw InvalidProgram("apply node has " + std::to_string(node.children.size()) +
                         " children but template arity is " +
                         std::to_string(tmpl.arity));
  for (const SynthesisTree::Node &child : node.children)
    emit_post_order(child, ctx, prog);
  prog.push(PostfixToken::rxn(node.tmpl, node.product_rank));
}

}  // namespace

PostfixProgram compile_tree(const SynthesisTree &tree, const ExecutionContext &ctx) {
  PostfixProgram prog;
  emit_post_order(tree.root, ctx, prog);
  prog.push(PostfixToken::end());
  return prog;
}

SynthesisTree parse_program(const PostfixProgram &prog, const ExecutionContext &ctx) {
  std::vector<SynthesisTree::Node> stack;
  for (const PostfixToken &t : prog.tokens()) {
    check_token_refs(t, ctx);
    switch (t.kind) {
    case PostfixToken::Kind::Start:
    case PostfixToken::Kind::End:
      break;
    case PostfixToken::Kind::BB:
      stack.push_back(SynthesisTree::Node::leaf(t.id));
      break;
    case PostfixToken::Kind::Rxn: {
      const int arity = ctx.templates[static_cast<size_t>(t.id)].arity;
      if (static_cast<int>(stack.size()) < arity)
        throw InvalidProgram("stack underflow at reaction token");
      std::vector<SynthesisTree::Node> children(
          stack.end() - arity, stack.end());
      stack.erase(stack.end() - arity, stack.end());
      stack.push_back(
          SynthesisTree::Node::apply(t.id, std::move(children), t.product_rank));
      break;
    }
    }
  }
  if (stack.size() != 1)
    throw InvalidProgram("program leaves stack depth " +
                         std::to_string(stack.size()) + ", expected 1");
  SynthesisTree tree;
  tree.root = std::move(stack.front());
  return tree;
}

const char *to_string(ExecStatus s) {
  switch (s) {
  case ExecStatus::Success: return "Success";
  case ExecStatus::StackUnderflow: return "StackUnderflow";
  case ExecStatus::NoMatch: return "NoMatch";
  case ExecStatus::ValenceFail: return "ValenceFail";
  case ExecStatus::LengthLimit: return "LengthLimit";
  }
  return "?";
}

ExecutionResult execute(const PostfixProgram &prog, const ExecutionContext &ctx,
                        const ProductPolicy &policy) {
  if (!prog.finalized())
    throw InvalidProgram("execute requires a finalized program (End token)");
  ExecutionResult result;
  std::vector<Molecule> stack;
  int step = 0;
  for (const PostfixToken &t : prog.tokens()) {
    check_token_refs(t, ctx);
    switch (t.kind) {
    case PostfixToken::Kind::Start:
      break;
    case PostfixToken::Kind::BB: {
      const CatalogBlock &block = ctx.catalog.block(t.id);
      stack.push_back(block.mol);
      result.trace.push_back({step++, "push", t, static_cast<int>(stack.size()),
                              block.canon.text});
      break;
    }
    case PostfixToken::Kind::Rxn: {
      const ReactionTemplate &tmpl = ctx.templates[static_cast<size_t>(t.id)];
      if (static_cast<int>(stack.size()) < tmpl.arity) {
        result.status = ExecStatus::StackUnderflow;
        return result;
      }
      std::vector<Molecule> operands(stack.end() - tmpl.arity, stack.end());
      const ApplyResult applied = apply_template(tmpl, operands);
      if (applied.products.empty()) {
        result.status = applied.match_count > 0 ? ExecStatus::ValenceFail
                                                : ExecStatus::NoMatch;
        return result;
      }
      const int rank = policy.fixed_rank.value_or(t.product_rank);
      if (rank < 0 || rank >= static_cast<int>(applied.products.size())) {
        result.status = ExecStatus::NoMatch;  // requested candidate absent
        return result;
      }
      stack.erase(stack.end() - tmpl.arity, stack.end());
      stack.push_back(applied.products[static_cast<size_t>(rank)]);
      result.trace.push_back({step++, "apply", t, static_cast<int>(stack.size()),
                              canonical_form(stack.back()).text});
      break;
    }
    case PostfixToken::Kind::End:
      if (stack.empty()) {
        result.status = ExecStatus::StackUnderflow;
        return result;
      }
      result.product = stack.back();
      return result;
    }
  }
  throw InvalidProgram("program ended without End token");
}

bool program_valid(const PostfixProgram &prog, const ExecutionContext &ctx) {
  int depth = 0;
  for (const PostfixToken &t : prog.tokens()) {
    if (t.kind == PostfixToken::Kind::BB) {
      if (t.id < 0 || t.id >= ctx.catalog.size()) return false;
      ++depth;
    } else if (t.kind == PostfixToken::Kind::Rxn) {
      if (t.id < 0 || t.id >= static_cast<int>(ctx.templates.size())) return false;
      const int arity = ctx.templates[static_cast<size_t>(t.id)].arity;
      if (depth < arity) return false;
      depth -= arity - 1;
    }
  }
  if (prog.finalized() && depth < 1) return false;
  return true;
}

}  // namespace synvia
