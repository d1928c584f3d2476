#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quiverforge/quiver.hpp"
#include "quiverforge/scalar.hpp"

namespace qf {

// Block coordinates of each vertex inside the ambient matrix space.  A vertex
// occupies matrix_degree times the product of its compression fibers.
struct BlockLayout {
  uint32_t total = 0;
  std::vector<std::string> order;                              // topological, id tiebreak
  std::map<std::string, std::pair<uint32_t, uint32_t>> block;  // id -> (offset, size)

  std::pair<uint32_t, uint32_t> at(const std::string& id) const;
};

BlockLayout layout(const FullQuiver& q);

// Independent generic elements over one shared symbol registry.  Members of a
// glue class reuse the class parameters, twisted and scaled per member, so the
// gluing holds identically in every copy and in all their products.
struct GenericSet {
  FullQuiver quiver;
  BlockLayout lay;
  Ring ring;
  std::vector<Mat> elements;

  // copy -> parameter key (glue class, or vertex/arrow id when unglued) ->
  // entry expressions of that parameter block, row major
  std::vector<std::map<std::string, std::vector<Scalar>>> parameters;

  // ring-extension basis monomials, empty monomial first
  std::vector<Monomial> ring_basis;
};

GenericSet generic_elements(const FullQuiver& q, uint32_t copies = 1);

// Matrix over a concrete finite field, entries encoded as Fq values.
struct ConcreteMat {
  uint32_t rows = 0, cols = 0;
  std::vector<uint32_t> a;

  ConcreteMat() = default;
  ConcreteMat(uint32_t r, uint32_t c) : rows(r), cols(c), a(size_t(r) * c, 0) {}

  uint32_t& at(uint32_t i, uint32_t j) { return a[size_t(i) * cols + j]; }
  uint32_t at(uint32_t i, uint32_t j) const { return a[size_t(i) * cols + j]; }
  bool operator==(const ConcreteMat&) const = default;
};

ConcreteMat mat_mul(const ConcreteMat& x, const ConcreteMat& y, const Fq& f);
ConcreteMat mat_add(const ConcreteMat& x, const ConcreteMat& y, const Fq& f);

// Evaluates every entry at the given symbol values.  Symbols subject to a
// finiteness law must receive values in their subfield of the target.
ConcreteMat specialize(const Mat& m, const Ring& ring,
                       const std::map<uint32_t, uint32_t>& values, const Fq& target);

// Product-closed linear span.  Basis entries contain structure constants
// only; flattening key is (row, col, monomial) and elimination runs over the
// coefficient field.
struct AlgebraBasis {
  Ring ring;
  uint32_t rows = 0;
  bool unital = false;
  std::vector<Mat> basis;

  // expansion of basis[i] * basis[j] in the basis, Fq-encoded coefficients
  std::vector<std::vector<uint32_t>> structure;

  uint32_t dim() const { return uint32_t(basis.size()); }
  const std::vector<uint32_t>& product(uint32_t i, uint32_t j) const {
    return structure[size_t(i) * basis.size() + j];
  }
};

// Splits each generator into its coordinate directions and closes the span
// under matrix products.  Throws when the dimension bound is exceeded.
AlgebraBasis span_closure(const std::vector<Mat>& gens, bool unital, uint32_t max_dim = 4096);

// Closure of the generic materialization.  Unital unless the quiver has a
// zero diagonal block, with an explicit override.
AlgebraBasis materialize_algebra(const FullQuiver& q,
                                 std::optional<bool> unital = std::nullopt);

struct RadicalFiltration {
  std::vector<std::vector<Mat>> powers;  // bases of J^1, J^2, ... last nonzero
  uint32_t nilpotence = 1;               // least m with J^m = 0

  uint32_t radical_dim(uint32_t power) const {
    return power <= powers.size() ? uint32_t(powers[power - 1].size()) : 0;
  }
};

// The radical is the kernel of the blockwise semisimple projection; powers
// are spans of products.
RadicalFiltration radical_powers(const AlgebraBasis& alg, const BlockLayout& lay,
                                 const FullQuiver& q);

// Expands the outermost compression level of every compressed vertex: a full
// glued triangle inside each fiber, offset-0 ladders between fibers expanded
// in the same pass, and identically glued fans toward untouched vertices.
FullQuiver decompress_one(const FullQuiver& q);

// All levels, outermost first.
FullQuiver decompress(const FullQuiver& q);

}  // namespace qf
