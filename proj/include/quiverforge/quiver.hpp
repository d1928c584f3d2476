#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "quiverforge/fq.hpp"

namespace qf {

// Coefficient field of a quiver: GF(p^t), or an infinite field of the stated
// characteristic realized through a proxy at materialization time.
struct BaseField {
  bool infinite = false;
  uint32_t p = 2;
  uint32_t t = 1;

  uint64_t q() const;
  bool operator==(const BaseField&) const = default;
};

struct Vertex {
  std::string id;
  std::string glue_class;        // "" means unglued
  uint32_t matrix_degree = 1;    // diagonal block size
  uint32_t field_degree = 1;     // degree of the diagonal field over the base; 0 = infinite
  uint32_t twist = 0;            // Frobenius exponent relative to the class representative
  bool zero = false;             // diagonal block identically zero
  std::vector<uint32_t> levels;  // chain-compression fiber sizes, outermost first

  bool finite() const { return field_degree != 0; }
  bool operator==(const Vertex&) const = default;
};

// Members of an arrow glue class share one free parameter theta; the member's
// value satisfies value^{q^src_exp} = nu * theta^{q^exp}.
struct Arrow {
  std::string id;
  std::string src;
  std::string dst;
  std::string glue_class;  // "" means unglued
  int64_t nu = 1;
  uint32_t exp = 0;
  uint32_t src_exp = 0;

  // Monomial of ring-extension generators scaling the value, one exponent
  // per generator; empty means 1.
  std::vector<uint32_t> ring_factor;

  bool operator==(const Arrow&) const = default;
};

// One additive term c * sym^{q^exp} of a q-polynomial relation.
struct QTerm {
  std::string symbol;
  uint32_t exp = 0;
  int64_t coeff = 1;

  bool operator==(const QTerm&) const = default;
};

struct QRelation {
  std::vector<QTerm> terms;

  std::string to_string() const;
  bool operator==(const QRelation&) const = default;
};

// Optional pairwise diagonal-gluing table: value(b) = value(a)^{q^exp}.
struct DeclaredGluing {
  std::string glue_class;
  std::string a;
  std::string b;
  uint32_t exp = 0;

  bool operator==(const DeclaredGluing&) const = default;
};

// Commutative coefficient ring on top of the base field.  Coordinates then
// range over the extension, one free component per ring basis monomial.
struct RingExtension {
  enum class Kind {
    None,
    Eps,    // F[e]/(e^bound)
    Trunc,  // vars variables, all monomials of total degree < bound
    Xi      // F[x1,x2]/(x1*x2)
  };
  Kind kind = Kind::None;
  uint32_t vars = 0;
  uint32_t bound = 0;

  bool operator==(const RingExtension&) const = default;
};

struct FullQuiver {
  BaseField base;
  RingExtension ring_extension;
  std::vector<Vertex> vertices;
  std::vector<Arrow> arrows;
  std::vector<QRelation> relations;
  std::vector<DeclaredGluing> declared_gluing;

  int vertex_index(const std::string& id) const;
  int arrow_index(const std::string& id) const;
  const Vertex& vertex(const std::string& id) const;
  const Arrow& arrow(const std::string& id) const;
  int arrow_between(const std::string& src, const std::string& dst) const;

  // Labeled classes only; unglued members are singletons handled per arrow.
  std::map<std::string, std::vector<uint32_t>> arrow_classes() const;
  std::map<std::string, std::vector<uint32_t>> vertex_classes() const;

  bool operator==(const FullQuiver&) const = default;
};

struct Violation {
  std::string rule;    // stable machine name
  std::string detail;  // offending ids and values
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate(const FullQuiver& q);

// Empty when the arrow graph has a directed cycle.
std::optional<std::vector<uint32_t>> topo_order(const FullQuiver& q);

struct PrimitiveResult {
  std::vector<uint32_t> primitive;  // arrow indices in the input quiver
  FullQuiver erased;
};

PrimitiveResult primitive_arrows(const FullQuiver& q);

struct Branch {
  std::vector<std::string> vertices;
  std::vector<uint32_t> arrows;

  uint32_t length() const { return uint32_t(arrows.size()); }
};

std::vector<Branch> branches(const FullQuiver& q);

FullQuiver reverse(const FullQuiver& q);

struct ClassicalQuiver {
  std::vector<std::string> vertices;  // one per diagonal glue unit
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> multiplicities;
  bool best_effort = false;  // finite bases only approximate the projection

  uint32_t multiplicity(uint32_t from, uint32_t to) const;
};

// Defined with the materialization code: multiplicities are block dimensions
// of the closed algebra's radical.
ClassicalQuiver classical_quiver(const FullQuiver& q);

std::vector<std::vector<std::string>> glue_connected_components(const FullQuiver& q);

struct Morphism {
  std::map<std::string, std::string> vertex_map;
  bool used_composites = false;
};

// Injective sub-quiver embedding; arrows may land on directed composites of
// the host, reported through used_composites.
std::optional<Morphism> find_morphism(const FullQuiver& sub, const FullQuiver& host,
                                      bool unital = false);

FullQuiver morita_shrink(const FullQuiver& q);

enum class PowerKind { Algebra, Radical };

FullQuiver radical_power_quiver(const FullQuiver& q, uint32_t power,
                                PowerKind kind = PowerKind::Algebra);

FullQuiver induced_subquiver(const FullQuiver& q, const std::set<std::string>& keep);

// Canonical member order; no data is rescaled.
FullQuiver normalized(const FullQuiver& q);

// Structure equality up to renaming of ids and class labels and up to the
// choice of class representatives.
bool isomorphic(const FullQuiver& a, const FullQuiver& b);

}  // namespace qf
