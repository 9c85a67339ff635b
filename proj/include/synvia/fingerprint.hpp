//
// Project synvia - Copyright 2026 synvia developers.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SYNVIA_FINGERPRINT_HPP
#define SYNVIA_FINGERPRINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "synvia/molgraph.hpp"

namespace synvia {

/// Fixed-length circular fingerprint bit vector.
struct FingerprintBits {
  int nbits = 0;
  int radius = 0;
  std::vector<uint64_t> words;

  static FingerprintBits zeros(int nbits, int radius);

  bool test(int i) const {
    return (words[static_cast<size_t>(i) / 64] >> (static_cast<size_t>(i) % 64)) & 1u;
  }
  void set(int i) {
    words[static_cast<size_t>(i) / 64] |= uint64_t{1} << (static_cast<size_t>(i) % 64);
  }
  int popcount() const;

  bool operator==(const FingerprintBits &o) const {
    return nbits == o.nbits && words == o.words;
  }
  bool operator!=(const FingerprintBits &o) const { return !(*this == o); }

  /// Lowercase hex, nbits/4 chars, most significant nibble first.
  std::string to_hex() const;

  /// nbits/8 bytes; byte i holds bits 8i..8i+7, bit k at position k%8.
  std::vector<uint8_t> to_bytes() const;
  static FingerprintBits from_bytes(const std::vector<uint8_t> &bytes, int radius);

  /// Bits as 0.0/1.0 doubles (model targets and NN queries).
  std::vector<double> to_real() const;
};

/// Morgan-style circular fingerprint: FNV-1a hashes of iterated atom
/// neighborhoods folded into nbits by modulo. Permutation-invariant.
FingerprintBits morgan_fingerprint(const Molecule &mol, int radius, int nbits);

/// |a AND b| / |a OR b|; 1.0 when both vectors are all-zero.
double tanimoto(const FingerprintBits &a, const FingerprintBits &b);

/// Ring systems plus inter-ring linkers; acyclic terminal substituents are
/// pruned iteratively. Acyclic molecules give the empty molecule.
Molecule murcko_scaffold(const Molecule &mol);

/// Tanimoto of 4096-bit Morgan fingerprints of the two Murcko scaffolds.
/// Two empty scaffolds score 1, empty vs nonempty scores 0.
double scaffold_similarity(const Molecule &a, const Molecule &b, int nbits = 4096);

}  // namespace synvia

#endif  // SYNVIA_FINGERPRINT_HPP
