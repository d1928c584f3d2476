#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "quiverforge/materialize.hpp"
#include "quiverforge/quiver.hpp"
#include "quiverforge/scalar.hpp"

namespace qf {

// Detection runs on symbolic generator matrices in block upper triangular
// form.  Identities are checked as polynomial identities over a spanning set
// of products, so callers presenting a generic algebra should pass at least
// two independent generic copies (one copy can lose support to small
// characteristic, e.g. x*x has a vanishing corner over GF(2)).
// Ring-extension constants in the entries are out of scope here.

// One diagonal class: blocks whose entries agree up to an entrywise q-power.
// twists are exponents relative to members[0], reduced mod field_degree when
// that is positive; field_degree 0 means the block is over the full ground
// field and twists are shifted so the least one is 0.
struct DiagonalGluing {
  std::vector<std::string> members;
  std::vector<uint32_t> twists;
  uint32_t field_degree = 0;
};

// One off-diagonal class: rectangles (src block, dst block) whose entries
// satisfy entry_k = nu_k * entry_0^(q^exp_k) in matching relative positions.
// nus are elements of the coefficient field, nus[0] = 1 and exps[0] = 0.
struct OffdiagonalGluing {
  std::vector<std::pair<std::string, std::string>> members;
  std::vector<uint32_t> nus;
  std::vector<uint32_t> exps;
};

struct GluingDetection {
  std::vector<DiagonalGluing> diagonal;       // every nonzero block, once
  std::vector<OffdiagonalGluing> offdiagonal; // every nonzero rectangle, once
  std::vector<QRelation> relations;           // residual, gluing filtered out
};

// Every nonzero diagonal block appears in exactly one class; unglued blocks
// are singleton classes.  Zero blocks are omitted.
std::vector<DiagonalGluing> detect_diagonal_gluing(const std::vector<Mat>& gens,
                                                   const BlockLayout& lay);

// Every rectangle with support in the span closure appears in exactly one
// class; rectangles glued to nothing are singletons.
std::vector<OffdiagonalGluing> detect_offdiagonal_gluing(const std::vector<Mat>& gens,
                                                         const BlockLayout& lay);

// Basis of the q-semilinear relations sum c_k * x_k^(q^e_k) = 0, e_k up to
// degree_bound, satisfied by the off-diagonal coordinates.  Each coordinate
// power is one unknown of a linear system whose rows are the monomial
// coefficients across the spanning set.  Unknowns are named "r>s" for a
// one-entry rectangle from block r to block s, "r>s[i,j]" otherwise.
// Relations implied by `known` classes (and their Frobenius shifts) are
// removed.
std::vector<QRelation> detect_extra_relations(const std::vector<Mat>& gens,
                                              const BlockLayout& lay, uint32_t degree_bound,
                                              const std::vector<OffdiagonalGluing>& known = {});

// All three detections with the default relation degree bound
// t_max * (nilpotence - 1), or 0 over an infinite base.
GluingDetection detect_gluing(const std::vector<Mat>& gens, const BlockLayout& lay,
                              const BaseField& base);

// Assembles the full quiver: one vertex per block with detected subfield and
// diagonal gluing, one arrow per supported rectangle with detected class
// data, residual relations renamed onto arrow ids and class labels.
// Non-primitive arrows in singleton classes are erased.
FullQuiver build_full_quiver(const std::vector<Mat>& gens, const BlockLayout& lay,
                             const BaseField& base);

}  // namespace qf
