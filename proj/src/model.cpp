//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "synvia/rng.hpp"

namespace synvia {

using nn::Var;

void ModelConfig::validate() const {
  if (d_model <= 0 || d_model % n_heads != 0)
    throw ShapeMismatch("d_model must be a positive multiple of n_heads");
  if (max_seq_len < 2) throw ShapeMismatch("max_seq_len must be >= 2");
  if (n_reaction_types <= 0)
    throw ShapeMismatch("n_reaction_types must be positive");
  if (fingerprint_dim <= 0 || fingerprint_dim % 8 != 0)
    throw ShapeMismatch("fingerprint_dim must be a positive multiple of 8");
  if (n_encoder_layers < 1 || n_decoder_layers < 1 || ffn_mult < 1)
    throw ShapeMismatch("layer counts and ffn_mult must be positive");
}

bool ModelConfig::operator==(const ModelConfig &o) const {
  return d_model == o.d_model && n_heads == o.n_heads &&
         n_encoder_layers == o.n_encoder_layers &&
         n_decoder_layers == o.n_decoder_layers &&
         n_reaction_types == o.n_reaction_types && max_seq_len == o.max_seq_len &&
         fingerprint_dim == o.fingerprint_dim && ffn_mult == o.ffn_mult &&
         seed == o.seed;
}

int atom_invariant_id(const Atom &a) {
  const int elem = static_cast<int>(a.element);
  const int h = std::min<int>(a.hydrogens, 4);
  const int arom = a.aromatic ? 1 : 0;
  const int charge = std::clamp<int>(a.charge, -1, 1) + 1;
  return ((elem * 5 + h) * 2 + arom) * 3 + charge;
}

GraphBatch make_graph_batch(const std::vector<const Molecule *> &mols) {
  GraphBatch g;
  g.batch = static_cast<int>(mols.size());
  g.max_atoms = 1;
  for (const Molecule *m : mols)
    g.max_atoms = std::max(g.max_atoms, m->atom_count());
  const int B = g.batch, A = g.max_atoms;
  g.invariants.assign(static_cast<size_t>(B) * A, -1);
  g.bond_codes.assign(static_cast<size_t>(B) * A * A, 0);
  g.atom_mask.assign(static_cast<size_t>(B) * A, 0.0);
  for (int b = 0; b < B; ++b) {
    const Molecule &mol = *mols[static_cast<size_t>(b)];
    if (mol.empty()) throw ShapeMismatch("cannot encode an empty molecule");
    for (int i = 0; i < mol.atom_count(); ++i) {
      g.invariants[static_cast<size_t>(b * A + i)] = atom_invariant_id(mol.atom(i));
      g.atom_mask[static_cast<size_t>(b * A + i)] = 1.0;
    }
    for (const Bond &bond : mol.bonds()) {
      const int code = static_cast<int>(bond.order);
      g.bond_codes[static_cast<size_t>((b * A + bond.a) * A + bond.b)] = code;
      g.bond_codes[static_cast<size_t>((b * A + bond.b) * A + bond.a)] = code;
    }
  }
  return g;
}

namespace {

void fill_positions(SeqBatch &s, int b, const std::vector<PostfixToken> &input,
                    const std::vector<PostfixToken> &targets, const Catalog &catalog,
                    const ModelConfig &config) {
  const int L = s.max_len;
  const int fp_dim = config.fingerprint_dim;
  for (size_t p = 0; p < input.size(); ++p) {
    const size_t row = static_cast<size_t>(b) * L + p;
    const PostfixToken &t = input[p];
    switch (t.kind) {
    case PostfixToken::Kind::Start: s.kind[row] = 0; break;
    case PostfixToken::Kind::BB: {
      s.kind[row] = 1;
      const FingerprintBits &fp = catalog.block(t.id).fp256;
      for (int j = 0; j < fp_dim; ++j)
        s.fp.data[row * static_cast<size_t>(fp_dim) + static_cast<size_t>(j)] =
            fp.test(j) ? 1.0 : 0.0;
      break;
    }
    case PostfixToken::Kind::Rxn:
      s.kind[row] = 2;
      s.rxn_id[row] = t.id;
      break;
    case PostfixToken::Kind::End:
      throw InvalidProgram("End token cannot be a decoder input");
    }
  }
  for (size_t p = 0; p < targets.size(); ++p) {
    const size_t row = static_cast<size_t>(b) * L + p;
    const PostfixToken &t = targets[p];
    s.valid[row] = 1.0;
    switch (t.kind) {
    case PostfixToken::Kind::BB: {
      s.target_kind[row] = kTargetBB;
      const FingerprintBits &fp = catalog.block(t.id).fp256;
      for (int j = 0; j < fp_dim; ++j)
        s.target_fp.data[row * static_cast<size_t>(fp_dim) + static_cast<size_t>(j)] =
            fp.test(j) ? 1.0 : 0.0;
      break;
    }
    case PostfixToken::Kind::Rxn:
      s.target_kind[row] = kTargetRXN;
      s.target_rxn[row] = t.id;
      break;
    case PostfixToken::Kind::End: s.target_kind[row] = kTargetEND; break;
    case PostfixToken::Kind::Start:
      throw InvalidProgram("Start token cannot be a target");
    }
  }
}

}  // namespace

SeqBatch make_seq_batch(const std::vector<const PostfixProgram *> &programs,
                        const Catalog &catalog, const ModelConfig &config) {
  SeqBatch s;
  s.batch = static_cast<int>(programs.size());
  s.max_len = 1;
  for (const PostfixProgram *p : programs) {
    const int input_len = 1 + static_cast<int>(p->body().size());
    if (input_len > config.max_seq_len)
      throw SequenceTooLong("program body of " + std::to_string(input_len - 1) +
                            " tokens exceeds max_seq_len " +
                            std::to_string(config.max_seq_len));
    s.max_len = std::max(s.max_len, input_len);
  }
  const int B = s.batch, L = s.max_len, fp_dim = config.fingerprint_dim;
  s.kind.assign(static_cast<size_t>(B) * L, -1);
  s.fp = Tensor::zeros({static_cast<long long>(B) * L, fp_dim});
  s.rxn_id.assign(static_cast<size_t>(B) * L, -1);
  s.valid.assign(static_cast<size_t>(B) * L, 0.0);
  s.target_kind.assign(static_cast<size_t>(B) * L, -1);
  s.target_fp = Tensor::zeros({static_cast<long long>(B) * L, fp_dim});
  s.target_rxn.assign(static_cast<size_t>(B) * L, -1);
  for (int b = 0; b < B; ++b) {
    const std::vector<PostfixToken> body = programs[static_cast<size_t>(b)]->body();
    std::vector<PostfixToken> input{PostfixToken::start()};
    input.insert(input.end(), body.begin(), body.end());
    std::vector<PostfixToken> targets = body;
    targets.push_back(PostfixToken::end());
    fill_positions(s, b, input, targets, catalog, config);
  }
  return s;
}

SeqBatch make_prefix_batch(const std::vector<PostfixToken> &prefix,
                           const Catalog &catalog, const ModelConfig &config) {
  if (prefix.empty() || prefix.front().kind != PostfixToken::Kind::Start)
    throw InvalidProgram("prefix must begin with Start");
  if (static_cast<int>(prefix.size()) > config.max_seq_len)
    throw SequenceTooLong("prefix of " + std::to_string(prefix.size()) +
                          " tokens exceeds max_seq_len " +
                          std::to_string(config.max_seq_len));
  SeqBatch s;
  s.batch = 1;
  s.max_len = static_cast<int>(prefix.size());
  const int L = s.max_len, fp_dim = config.fingerprint_dim;
  s.kind.assign(static_cast<size_t>(L), -1);
  s.fp = Tensor::zeros({L, fp_dim});
  s.rxn_id.assign(static_cast<size_t>(L), -1);
  s.valid.assign(static_cast<size_t>(L), 0.0);
  s.target_kind.assign(static_cast<size_t>(L), -1);
  s.target_fp = Tensor::zeros({L, fp_dim});
  s.target_rxn.assign(static_cast<size_t>(L), -1);
  fill_positions(s, 0, prefix, {}, catalog, config);
  return s;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

void round_tensor_f32(Tensor &t) {
  for (double &v : t.data) v = round_f32(v);
}

struct ParamShape {
  std::string name;
  std::vector<long long> shape;
};

void push_linear(std::vector<ParamShape> &out, const std::string &prefix,
                 long long in, long long hidden, long long out_dim) {
  out.push_back({prefix + ".w1", {in, hidden}});
  out.push_back({prefix + ".b1", {hidden}});
  out.push_back({prefix + ".w2", {hidden, out_dim}});
  out.push_back({prefix + ".b2", {out_dim}});
}

void push_attention(std::vector<ParamShape> &out, const std::string &prefix,
                    long long d) {
  for (const char *w : {"wq", "wk", "wv", "wo"})
    out.push_back({prefix + "." + w, {d, d}});
  for (const char *b : {"bq", "bk", "bv", "bo"})
    out.push_back({prefix + "." + b, {d}});
}

void push_ln(std::vector<ParamShape> &out, const std::string &prefix, long long d) {
  out.push_back({prefix + ".g", {d}});
  out.push_back({prefix + ".b", {d}});
}

std::vector<ParamShape> build_param_shapes(const ModelConfig &c) {
  const long long d = c.d_model;
  const long long f = static_cast<long long>(c.ffn_mult) * d;
  std::vector<ParamShape> out;
  out.push_back({"atom_embed", {kAtomVocabSize, d}});
  out.push_back({"bond_bias", {c.n_heads, kBondCodeCount}});
  for (int i = 0; i < c.n_encoder_layers; ++i) {
    const std::string p = "enc." + std::to_string(i);
    push_ln(out, p + ".ln1", d);
    push_attention(out, p + ".attn", d);
    push_ln(out, p + ".ln2", d);
    push_linear(out, p + ".ffn", d, f, d);
  }
  push_ln(out, "enc.ln", d);
  out.push_back({"e_start", {1, d}});
  push_linear(out, "mlp_fp", c.fingerprint_dim, f, d);
  out.push_back({"embed_rxn", {c.n_reaction_types, d}});
  for (int i = 0; i < c.n_decoder_layers; ++i) {
    const std::string p = "dec." + std::to_string(i);
    push_ln(out, p + ".ln1", d);
    push_attention(out, p + ".self", d);
    push_ln(out, p + ".ln2", d);
    push_attention(out, p + ".cross", d);
    push_ln(out, p + ".ln3", d);
    push_linear(out, p + ".ffn", d, f, d);
  }
  push_ln(out, "dec.ln", d);
  push_linear(out, "head.type", d, d, 3);
  push_linear(out, "head.fp", d, f, c.fingerprint_dim);
  push_linear(out, "head.rxn", d, d, c.n_reaction_types);
  return out;
}

bool is_weight_matrix(const ParamShape &p) { return p.shape.size() == 2; }
bool is_ln_gain(const std::string &name) {
  return name.size() >= 2 && name.substr(name.size() - 2) == ".g";
}
bool is_table(const std::string &name) {
  return name == "atom_embed" || name == "embed_rxn" || name == "e_start" ||
         name == "bond_bias";
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig &config) {
  config.validate();
  ModelParams params;
  params.config = config;
  Rng rng(derive_seed(config.seed, 0x6d6f64656cULL));
  for (const ParamShape &p : build_param_shapes(config)) {
    Entry e;
    e.name = p.name;
    e.value = Tensor::zeros(p.shape);
    e.m = Tensor::zeros(p.shape);
    e.v = Tensor::zeros(p.shape);
    if (is_table(p.name)) {
      // wide enough that pre-LN rows have healthy variance
      for (double &v : e.value.data) v = 0.2 * rng.normal();
    } else if (is_weight_matrix(p)) {
      const double std_dev =
          std::sqrt(2.0 / static_cast<double>(p.shape[0] + p.shape[1]));
      for (double &v : e.value.data) v = std_dev * rng.normal();
    } else if (is_ln_gain(p.name)) {
      for (double &v : e.value.data) v = 1.0;
    }
    round_tensor_f32(e.value);
    params.entries.push_back(std::move(e));
  }
  return params;
}

int ModelParams::find(const std::string &name) const {
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].name == name) return static_cast<int>(i);
  return -1;
}

Tensor &ModelParams::value_of(const std::string &name) {
  const int i = find(name);
  if (i < 0) throw Error("no parameter named " + name);
  return entries[static_cast<size_t>(i)].value;
}

Tensor positional_encoding(int max_len, int d_model) {
  Tensor pe = Tensor::zeros({max_len, d_model});
  for (int pos = 0; pos < max_len; ++pos) {
    for (int i = 0; i < d_model / 2; ++i) {
      const double freq =
          std::pow(10000.0, -2.0 * static_cast<double>(i) / d_model);
      pe.data[static_cast<size_t>(pos * d_model + 2 * i)] = std::sin(pos * freq);
      pe.data[static_cast<size_t>(pos * d_model + 2 * i + 1)] = std::cos(pos * freq);
    }
  }
  return pe;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

struct ParamLeaves {
  std::vector<Var> leaves;
  const ModelParams *params = nullptr;

  Var operator[](const std::string &name) const {
    const int i = params->find(name);
    if (i < 0) throw Error("no parameter named " + name);
    return leaves[static_cast<size_t>(i)];
  }
};

Var linear(const Var &x, const Var &w, const Var &b) {
  return nn::add_bias(nn::matmul(x, w), b);
}

Var mlp2(const ParamLeaves &p, const std::string &prefix, const Var &x) {
  return linear(nn::relu(linear(x, p[prefix + ".w1"], p[prefix + ".b1"])),
                p[prefix + ".w2"], p[prefix + ".b2"]);
}

Var attention_block(const ParamLeaves &p, const std::string &prefix, const Var &x_q,
                    const Var &x_kv, const Var &bias, const Tensor &mask, int batch,
                    int heads) {
  const Var q = linear(x_q, p[prefix + ".wq"], p[prefix + ".bq"]);
  const Var k = linear(x_kv, p[prefix + ".wk"], p[prefix + ".bk"]);
  const Var v = linear(x_kv, p[prefix + ".wv"], p[prefix + ".bv"]);
  const Var att = nn::multihead_attention(q, k, v, bias, mask, batch, heads);
  return linear(att, p[prefix + ".wo"], p[prefix + ".bo"]);
}

Var encoder_stack(const ParamLeaves &p, const ModelConfig &config,
                  const GraphBatch &graph) {
  const int B = graph.batch, A = graph.max_atoms;
  Var x = nn::gather_rows(p["atom_embed"], graph.invariants);
  const Var bias = nn::gather_bias(p["bond_bias"], graph.bond_codes, B, A);
  // Keys on padding atoms are masked out; every query keeps itself so that
  // padded rows stay finite.
  Tensor mask = Tensor::zeros({B, A, A});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < A; ++i)
      for (int j = 0; j < A; ++j)
        mask.data[static_cast<size_t>((b * A + i) * A + j)] =
            (graph.atom_mask[static_cast<size_t>(b * A + j)] > 0.5 || i == j)
                ? 0.0
                : -1e30;
  for (int layer = 0; layer < config.n_encoder_layers; ++layer) {
    const std::string lp = "enc." + std::to_string(layer);
    const Var h1 = nn::layer_norm(x, p[lp + ".ln1.g"], p[lp + ".ln1.b"]);
    x = nn::add(x, attention_block(p, lp + ".attn", h1, h1, bias, mask, B,
                                   config.n_heads));
    const Var h2 = nn::layer_norm(x, p[lp + ".ln2.g"], p[lp + ".ln2.b"]);
    x = nn::add(x, mlp2(p, lp + ".ffn", h2));
  }
  return nn::layer_norm(x, p["enc.ln.g"], p["enc.ln.b"]);
}

Var token_embeddings(const ParamLeaves &p, const ModelConfig &config,
                     const SeqBatch &seq) {
  const int B = seq.batch, L = seq.max_len;
  const std::vector<int> zeros(static_cast<size_t>(B) * L, 0);
  const Var start_rows = nn::gather_rows(p["e_start"], zeros);
  const Var fp_in = nn::make_leaf(seq.fp, false);
  const Var fp_rows = mlp2(p, "mlp_fp", fp_in);
  const Var rxn_rows = nn::gather_rows(p["embed_rxn"], seq.rxn_id);
  const Var mixed = nn::select_rows_3way(seq.kind, start_rows, fp_rows, rxn_rows);
  const Tensor pe = positional_encoding(config.max_seq_len, config.d_model);
  Tensor pe_batch = Tensor::zeros({static_cast<long long>(B) * L, config.d_model});
  for (int b = 0; b < B; ++b)
    for (int pos = 0; pos < L; ++pos)
      for (int j = 0; j < config.d_model; ++j)
        pe_batch.data[static_cast<size_t>((b * L + pos) * config.d_model + j)] =
            pe.data[static_cast<size_t>(pos * config.d_model + j)];
  return nn::add_const(mixed, pe_batch);
}

}  // namespace

ForwardResult forward(const ModelParams &params, const Batch &batch,
                      bool requires_grad) {
  params.config.validate();
  const ModelConfig &config = params.config;
  const int B = batch.seq.batch, L = batch.seq.max_len, A = batch.graph.max_atoms;
  if (batch.graph.batch != B) throw ShapeMismatch("graph/sequence batch mismatch");
  if (L > config.max_seq_len) throw SequenceTooLong("sequence exceeds max_seq_len");

  ForwardResult out;
  ParamLeaves p;
  p.params = &params;
  out.params.reserve(params.entries.size());
  for (const auto &entry : params.entries)
    out.params.push_back(nn::make_leaf(entry.value, requires_grad));
  p.leaves = out.params;

  out.atom_embeddings = encoder_stack(p, config, batch.graph);

  Var x = token_embeddings(p, config, batch.seq);
  // Causal mask over token positions; cross mask hides padding atoms.
  Tensor causal = Tensor::zeros({B, L, L});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j)
        causal.data[static_cast<size_t>((b * L + i) * L + j)] = j <= i ? 0.0 : -1e30;
  Tensor cross = Tensor::zeros({B, L, A});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < A; ++j)
        cross.data[static_cast<size_t>((b * L + i) * A + j)] =
            batch.graph.atom_mask[static_cast<size_t>(b * A + j)] > 0.5 ? 0.0 : -1e30;

  for (int layer = 0; layer < config.n_decoder_layers; ++layer) {
    const std::string lp = "dec." + std::to_string(layer);
    const Var h1 = nn::layer_norm(x, p[lp + ".ln1.g"], p[lp + ".ln1.b"]);
    x = nn::add(x, attention_block(p, lp + ".self", h1, h1, nullptr, causal, B,
                                   config.n_heads));
    const Var h2 = nn::layer_norm(x, p[lp + ".ln2.g"], p[lp + ".ln2.b"]);
    x = nn::add(x, attention_block(p, lp + ".cross", h2, out.atom_embeddings,
                                   nullptr, cross, B, config.n_heads));
    const Var h3 = nn::layer_norm(x, p[lp + ".ln3.g"], p[lp + ".ln3.b"]);
    x = nn::add(x, mlp2(p, lp + ".ffn", h3));
  }
  x = nn::layer_norm(x, p["dec.ln.g"], p["dec.ln.b"]);

  out.type_logits = mlp2(p, "head.type", x);
  out.fp_probs = nn::sigmoid(mlp2(p, "head.fp", x));
  out.rxn_logits = mlp2(p, "head.rxn", x);
  return out;
}

Tensor encode_graph(const ModelParams &params, const GraphBatch &graph) {
  ParamLeaves p;
  p.params = &params;
  for (const auto &entry : params.entries)
    p.leaves.push_back(nn::make_leaf(entry.value, false));
  return encoder_stack(p, params.config, graph)->value;
}

Tensor embed_tokens(const ModelParams &params, const SeqBatch &seq) {
  ParamLeaves p;
  p.params = &params;
  for (const auto &entry : params.entries)
    p.leaves.push_back(nn::make_leaf(entry.value, false));
  return token_embeddings(p, params.config, seq)->value;
}

nn::Var compute_loss(const ForwardResult &out, const SeqBatch &seq,
                     LossBreakdown *breakdown) {
  const size_t rows = seq.valid.size();
  double n_valid = 0, n_bb = 0, n_rxn = 0;
  std::vector<double> w_bb(rows, 0.0), w_rxn(rows, 0.0);
  for (size_t i = 0; i < rows; ++i) {
    if (seq.valid[i] == 0.0) continue;
    n_valid += 1;
    if (seq.target_kind[i] == kTargetBB) {
      w_bb[i] = 1.0;
      n_bb += 1;
    } else if (seq.target_kind[i] == kTargetRXN) {
      w_rxn[i] = 1.0;
      n_rxn += 1;
    }
  }
  if (n_valid == 0) throw Error("loss over an empty batch");

  const Var l_type =
      nn::scale(nn::softmax_xent_sum(out.type_logits, seq.target_kind, seq.valid),
                1.0 / n_valid);
  Var loss = l_type;
  Var l_bb, l_rxn;
  if (n_bb > 0) {
    l_bb = nn::scale(nn::bce_sum(out.fp_probs, seq.target_fp, w_bb), 1.0 / n_bb);
    loss = nn::add(loss, l_bb);
  }
  if (n_rxn > 0) {
    l_rxn = nn::scale(nn::softmax_xent_sum(out.rxn_logits, seq.target_rxn, w_rxn),
                      1.0 / n_rxn);
    loss = nn::add(loss, l_rxn);
  }
  if (breakdown) {
    breakdown->type = l_type->value.data[0];
    breakdown->bb = l_bb ? l_bb->value.data[0] : 0.0;
    breakdown->rxn = l_rxn ? l_rxn->value.data[0] : 0.0;
    breakdown->total = loss->value.data[0];
  }
  return loss;
}

LossBreakdown train_step(ModelParams &params, const Batch &batch,
                         const AdamWConfig &opt) {
  ForwardResult out = forward(params, batch, true);
  LossBreakdown breakdown;
  Var loss = compute_loss(out, batch.seq, &breakdown);
  nn::backward(loss);

  for (size_t i = 0; i < params.entries.size(); ++i) {
    const Tensor &g = out.params[i]->grad;
    if (!g.data.empty() && !g.all_finite())
      throw NonFiniteGradient("non-finite gradient in " + params.entries[i].name);
  }

  params.step += 1;
  const double t = static_cast<double>(params.step);
  const double bc1 = 1.0 - std::pow(opt.beta1, t);
  const double bc2 = 1.0 - std::pow(opt.beta2, t);
  for (size_t i = 0; i < params.entries.size(); ++i) {
    ModelParams::Entry &e = params.entries[i];
    const Tensor &grad = out.params[i]->grad;
    const bool has_grad = !grad.data.empty();
    for (size_t j = 0; j < e.value.data.size(); ++j) {
      const double g = has_grad ? grad.data[j] : 0.0;
      double m = opt.beta1 * e.m.data[j] + (1.0 - opt.beta1) * g;
      double v = opt.beta2 * e.v.data[j] + (1.0 - opt.beta2) * g * g;
      const double update = (m / bc1) / (std::sqrt(v / bc2) + opt.eps);
      double value = e.value.data[j] -
                     opt.lr * (update + opt.weight_decay * e.value.data[j]);
      e.value.data[j] = round_f32(value);
      e.m.data[j] = round_f32(m);
      e.v.data[j] = round_f32(v);
    }
  }
  return breakdown;
}

double type_accuracy(const ModelParams &params, const Batch &batch) {
  const ForwardResult out = forward(params, batch, false);
  const std::vector<int> pred = nn::argmax_rows(out.type_logits->value);
  double correct = 0, total = 0;
  for (size_t i = 0; i < batch.seq.valid.size(); ++i) {
    if (batch.seq.valid[i] == 0.0) continue;
    total += 1;
    if (pred[i] == batch.seq.target_kind[i]) correct += 1;
  }
  return total > 0 ? correct / total : 0.0;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[4] = {'S', 'V', 'C', 'K'};
constexpr uint32_t kVersion = 1;

uint32_t crc32_update(uint32_t crc, const uint8_t *data, size_t len) {
  static uint32_t table[256];
  static bool built = false;
  if (!built) {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    built = true;
  }
  crc ^= 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void put_u32(std::string &buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string &buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::string &buf, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

struct Reader {
  const std::string &buf;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint truncated");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + static_cast<size_t>(i)]))
           << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos + static_cast<size_t>(i)]))
           << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    const uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void put_tensor(std::string &buf, const Tensor &t) {
  for (double v : t.data) put_f32(buf, static_cast<float>(v));
}

}  // namespace

void ModelParams::save(const std::string &path) const {
  std::string payload;
  put_u32(payload, kVersion);
  put_u32(payload, static_cast<uint32_t>(config.d_model));
  put_u32(payload, static_cast<uint32_t>(config.n_heads));
  put_u32(payload, static_cast<uint32_t>(config.n_encoder_layers));
  put_u32(payload, static_cast<uint32_t>(config.n_decoder_layers));
  put_u32(payload, static_cast<uint32_t>(config.n_reaction_types));
  put_u32(payload, static_cast<uint32_t>(config.max_seq_len));
  put_u32(payload, static_cast<uint32_t>(config.fingerprint_dim));
  put_u32(payload, static_cast<uint32_t>(config.ffn_mult));
  put_u64(payload, config.seed);
  put_u64(payload, static_cast<uint64_t>(step));
  put_u32(payload, static_cast<uint32_t>(entries.size()));
  for (const Entry &e : entries) {
    put_u32(payload, static_cast<uint32_t>(e.name.size()));
    payload += e.name;
    put_u32(payload, static_cast<uint32_t>(e.value.shape.size()));
    for (long long d : e.value.shape) put_u64(payload, static_cast<uint64_t>(d));
    put_tensor(payload, e.value);
    put_tensor(payload, e.m);
    put_tensor(payload, e.v);
  }
  const uint32_t crc = crc32_update(
      0, reinterpret_cast<const uint8_t *>(payload.data()), payload.size());

  std::string full(kMagic, 4);
  full += payload;
  put_u32(full, crc);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint: " + tmp);
    out.write(full.data(), static_cast<std::streamsize>(full.size()));
    if (!out) throw DataError("short write on checkpoint: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot rename checkpoint into place: " + path);
}

ModelParams ModelParams::load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw DataError("not a checkpoint file (bad magic)");
  const std::string payload = buf.substr(4, buf.size() - 8);
  Reader tail{buf, buf.size() - 4};
  const uint32_t stored_crc = tail.u32();
  const uint32_t crc = crc32_update(
      0, reinterpret_cast<const uint8_t *>(payload.data()), payload.size());
  if (crc != stored_crc) throw DataError("checkpoint checksum mismatch");

  Reader r{payload, 0};
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  ModelParams params;
  params.config.d_model = static_cast<int>(r.u32());
  params.config.n_heads = static_cast<int>(r.u32());
  params.config.n_encoder_layers = static_cast<int>(r.u32());
  params.config.n_decoder_layers = static_cast<int>(r.u32());
  params.config.n_reaction_types = static_cast<int>(r.u32());
  params.config.max_seq_len = static_cast<int>(r.u32());
  params.config.fingerprint_dim = static_cast<int>(r.u32());
  params.config.ffn_mult = static_cast<int>(r.u32());
  params.config.seed = r.u64();
  params.step = static_cast<long long>(r.u64());
  params.config.validate();

  const uint32_t n_entries = r.u32();
  const std::vector<ParamShape> expected = build_param_shapes(params.config);
  if (n_entries != expected.size())
    throw DataError("checkpoint entry count mismatch");
  for (uint32_t i = 0; i < n_entries; ++i) {
    Entry e;
    const uint32_t name_len = r.u32();
    e.name = r.bytes(name_len);
    const uint32_t ndim = r.u32();
    std::vector<long long> shape;
    for (uint32_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<long long>(r.u64()));
    if (e.name != expected[i].name || shape != expected[i].shape)
      throw DataError("checkpoint entry " + e.name +
                      " does not match the declared architecture");
    const long long numel = Tensor::numel_of(shape);
    e.value = Tensor::zeros(shape);
    e.m = Tensor::zeros(shape);
    e.v = Tensor::zeros(shape);
    for (long long j = 0; j < numel; ++j)
      e.value.data[static_cast<size_t>(j)] = static_cast<double>(r.f32());
    for (long long j = 0; j < numel; ++j)
      e.m.data[static_cast<size_t>(j)] = static_cast<double>(r.f32());
    for (long long j = 0; j < numel; ++j)
      e.v.data[static_cast<size_t>(j)] = static_cast<double>(r.f32());
    params.entries.push_back(std::move(e));
  }
  if (r.pos != payload.size()) throw DataError("trailing bytes in checkpoint");
  return params;
}

}  // namespace synvia
