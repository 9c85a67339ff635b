//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#include "synvia/fingerprint.hpp"

#include <algorithm>
#include <bit>

namespace synvia {

namespace {

constexpr uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

uint64_t fnv1a_u64(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

uint64_t atom_invariant(const Molecule &mol, int i) {
  const Atom &a = mol.atom(i);
  uint64_t h = kFnvOffset;
  h = fnv1a_u64(h, static_cast<uint64_t>(atomic_number(a.element)));
  h = fnv1a_u64(h, static_cast<uint64_t>(a.charge + 16));
  h = fnv1a_u64(h, static_cast<uint64_t>(mol.degree(i)));
  h = fnv1a_u64(h, static_cast<uint64_t>(a.hydrogens));
  h = fnv1a_u64(h, a.aromatic ? 1 : 0);
  return h;
}

}  // namespace

FingerprintBits FingerprintBits::zeros(int nbits, int radius) {
  FingerprintBits fp;
  fp.nbits = nbits;
  fp.radius = radius;
  fp.words.assign(static_cast<size_t>((nbits + 63) / 64), 0);
  return fp;
}

int FingerprintBits::popcount() const {
  int c = 0;
  for (uint64_t w : words) c += std::popcount(w);
  return c;
}

std::string FingerprintBits::to_hex() const {
  static const char *digits = "0123456789abcdef";
  std::string out(static_cast<size_t>(nbits / 4), '0');
  for (int nib = 0; nib < nbits / 4; ++nib) {
    int v = 0;
    for (int k = 0; k < 4; ++k)
      if (test(nib * 4 + k)) v |= 1 << k;
    out[static_cast<size_t>(nbits / 4 - 1 - nib)] = digits[v];
  }
  return out;
}

std::vector<uint8_t> FingerprintBits::to_bytes() const {
  std::vector<uint8_t> out(static_cast<size_t>(nbits / 8), 0);
  for (int i = 0; i < nbits; ++i)
    if (test(i)) out[static_cast<size_t>(i / 8)] |= static_cast<uint8_t>(1u << (i % 8));
  return out;
}

FingerprintBits FingerprintBits::from_bytes(const std::vector<uint8_t> &bytes,
                                            int radius) {
  FingerprintBits fp = zeros(static_cast<int>(bytes.size()) * 8, radius);
  for (int i = 0; i < fp.nbits; ++i)
    if ((bytes[static_cast<size_t>(i / 8)] >> (i % 8)) & 1u) fp.set(i);
  return fp;
}

std::vector<double> FingerprintBits::to_real() const {
  std::vector<double> out(static_cast<size_t>(nbits));
  for (int i = 0; i < nbits; ++i) out[static_cast<size_t>(i)] = test(i) ? 1.0 : 0.0;
  return out;
}

FingerprintBits morgan_fingerprint(const Molecule &mol, int radius, int nbits) {
  if (!mol.sanitized()) throw Error("morgan_fingerprint requires a sanitized molecule");
  FingerprintBits fp = FingerprintBits::zeros(nbits, radius);
  const int n = mol.atom_count();
  if (n == 0) return fp;

  std::vector<uint64_t> cur(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) cur[static_cast<size_t>(i)] = atom_invariant(mol, i);

  for (int iter = 0; iter <= radius; ++iter) {
    if (iter > 0) {
      std::vector<uint64_t> next(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) {
        std::vector<uint64_t> nbr;
        nbr.reserve(mol.neighbors(i).size());
        for (const auto &[v, order] : mol.neighbors(i))
          nbr.push_back(fnv1a_u64(fnv1a_u64(kFnvOffset, static_cast<uint64_t>(order)),
                                  cur[static_cast<size_t>(v)]));
        std::sort(nbr.begin(), nbr.end());
        uint64_t h = kFnvOffset;
        h = fnv1a_u64(h, static_cast<uint64_t>(iter));
        h = fnv1a_u64(h, cur[static_cast<size_t>(i)]);
        for (uint64_t x : nbr) h = fnv1a_u64(h, x);
        next[static_cast<size_t>(i)] = h;
      }
      cur = std::move(next);
    }
    for (int i = 0; i < n; ++i)
      fp.set(static_cast<int>(cur[static_cast<size_t>(i)] % static_cast<uint64_t>(nbits)));
  }
  return fp;
}

double tanimoto(const FingerprintBits &a, const FingerprintBits &b) {
  if (a.nbits != b.nbits) throw LengthMismatch("fingerprint lengths differ");
  int inter = 0, uni = 0;
  for (size_t w = 0; w < a.words.size(); ++w) {
    inter += std::popcount(a.words[w] & b.words[w]);
    uni += std::popcount(a.words[w] | b.words[w]);
  }
  if (uni == 0) return 1.0;  // both all-zero
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Molecule murcko_scaffold(const Molecule &mol) {
  if (!mol.sanitized()) throw Error("murcko_scaffold requires a sanitized molecule");
  const int n = mol.atom_count();
  std::vector<char> removed(static_cast<size_t>(n), 0);
  std::vector<int> deg(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) deg[static_cast<size_t>(i)] = mol.degree(i);

  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (removed[static_cast<size_t>(i)] || deg[static_cast<size_t>(i)] > 1) continue;
      removed[static_cast<size_t>(i)] = 1;
      changed = true;
      for (const auto &[v, order] : mol.neighbors(i)) {
        (void)order;
        if (!removed[static_cast<size_t>(v)]) --deg[static_cast<size_t>(v)];
      }
    }
  }

  std::vector<int> remap(static_cast<size_t>(n), -1);
  std::vector<Atom> atoms;
  for (int i = 0; i < n; ++i) {
    if (removed[static_cast<size_t>(i)]) continue;
    remap[static_cast<size_t>(i)] = static_cast<int>(atoms.size());
    Atom a = mol.atom(i);
    if (deg[static_cast<size_t>(i)] != mol.degree(i)) a.h_specified = false;  // refill
    atoms.push_back(a);
  }
  std::vector<Bond> bonds;
  for (const Bond &b : mol.bonds()) {
    const int ra = remap[static_cast<size_t>(b.a)];
    const int rb = remap[static_cast<size_t>(b.b)];
    if (ra >= 0 && rb >= 0) bonds.push_back({ra, rb, b.order});
  }
  return sanitize(Molecule(std::move(atoms), std::move(bonds)));
}

double scaffold_similarity(const Molecule &a, const Molecule &b, int nbits) {
  const Molecule sa = murcko_scaffold(a);
  const Molecule sb = murcko_scaffold(b);
  if (sa.empty() && sb.empty()) return 1.0;
  if (sa.empty() || sb.empty()) return 0.0;
  return tanimoto(morgan_fingerprint(sa, 2, nbits), morgan_fingerprint(sb, 2, nbits));
}

}  // namespace synvia
