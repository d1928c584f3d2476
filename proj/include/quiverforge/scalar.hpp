#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quiverforge/fq.hpp"

namespace qf {

// Symbols are adjoined to a coefficient field and obey one of three laws:
//   Free          no relation
//   Fin(M)        x^M = x, so exponents live in [1, M-1]
//   Nil(group)    the total degree of the group is bounded; crossing the
//                 bound kills the monomial
enum class SymbolKind { Free, Fin, Nil };

struct SymbolInfo {
  std::string name;
  SymbolKind kind = SymbolKind::Free;
  uint64_t fin_modulus = 0;  // Fin only
  uint32_t nil_group = 0;    // Nil only
  bool coordinate = false;   // true: radical coordinate, false: structure constant
};

// Append-only registry shared by every Scalar built over it.  Copies are
// cheap handles onto the same registry, so symbols added later are visible
// through older handles.
class Ring {
 public:
  Ring() : Ring(Fq(2, 1)) {}
  explicit Ring(Fq field);

  const Fq& field() const { return data_->field; }

  uint32_t add_free(const std::string& name, bool coordinate);
  uint32_t add_fin(const std::string& name, uint64_t modulus, bool coordinate);
  uint32_t add_nil(const std::string& name, uint32_t group, bool coordinate);

  // A nil group of bound b kills every monomial of group degree >= b.
  uint32_t add_nil_group(uint32_t bound);

  // Any monomial containing two distinct symbols of one annihilator set is 0.
  void add_ann_set(std::vector<uint32_t> symbols);

  uint32_t symbol_count() const { return uint32_t(data_->symbols.size()); }
  const SymbolInfo& symbol(uint32_t id) const { return data_->symbols[id]; }
  uint32_t group_bound(uint32_t g) const { return data_->group_bounds[g]; }
  uint32_t group_count() const { return uint32_t(data_->group_bounds.size()); }
  const std::vector<std::vector<uint32_t>>& ann_sets() const { return data_->ann_sets; }

  bool same(const Ring& o) const { return data_ == o.data_; }

 private:
  struct Data {
    Fq field;
    std::vector<SymbolInfo> symbols;
    std::vector<uint32_t> group_bounds;
    std::vector<std::vector<uint32_t>> ann_sets;
    explicit Data(Fq f) : field(std::move(f)) {}
  };
  std::shared_ptr<Data> data_;
};

// Sorted (symbol, exponent) pairs with exponent > 0.
using Monomial = std::vector<std::pair<uint32_t, uint64_t>>;

// Multivariate polynomial over Ring::field in the ring's symbols, kept
// normalized under the symbol laws above.
class Scalar {
 public:
  Scalar() = default;
  explicit Scalar(Ring ring) : ring_(std::move(ring)) {}

  static Scalar constant(const Ring& ring, uint32_t c);
  static Scalar from_int(const Ring& ring, int64_t n);
  static Scalar symbol(const Ring& ring, uint32_t id, uint64_t exp = 1);
  static Scalar monomial(const Ring& ring, const Monomial& m, uint32_t c);

  const Ring& ring() const { return ring_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  uint32_t constant_value() const;  // valid when is_constant()

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator-() const;
  Scalar operator*(const Scalar& o) const;
  Scalar& operator+=(const Scalar& o) { return *this = *this + o; }
  Scalar& operator-=(const Scalar& o) { return *this = *this - o; }
  Scalar& operator*=(const Scalar& o) { return *this = *this * o; }
  bool operator==(const Scalar& o) const { return terms_ == o.terms_; }
  bool operator!=(const Scalar& o) const { return !(*this == o); }

  Scalar scaled(uint32_t c) const;

  // x -> x^(q^e) applied as a ring map: coefficients are fixed, symbol
  // exponents multiply by q^e.  Valid because q is a power of char.
  Scalar frobenius(uint32_t e) const;

  Scalar substituted(const std::map<uint32_t, Scalar>& repl) const;

  // Specialization into an extension of a prime coefficient field.
  uint32_t evaluate(const std::map<uint32_t, uint32_t>& values, const Fq& target) const;

  const std::map<Monomial, uint32_t>& terms() const { return terms_; }
  uint32_t coefficient(const Monomial& m) const;
  bool contains_symbol(uint32_t id) const;
  uint64_t total_degree() const;

  // Terms whose monomial has no nil symbol; these are the semisimple part
  // of a diagonal entry.
  Scalar nil_free_part() const;

  std::string to_string() const;

 private:
  void insert_term(Monomial m, uint32_t c);
  static bool normalize(const Ring& ring, Monomial& m);

  Ring ring_;
  std::map<Monomial, uint32_t> terms_;
};

// b == c * a for a field constant c?
std::optional<uint32_t> proportional_to(const Scalar& a, const Scalar& b);

// Dense matrix over Scalar.  Shapes are small (block layouts of quivers).
struct Mat {
  uint32_t rows = 0, cols = 0;
  std::vector<Scalar> a;

  Mat() = default;
  Mat(uint32_t r, uint32_t c, const Ring& ring)
      : rows(r), cols(c), a(size_t(r) * c, Scalar(ring)) {}

  Scalar& at(uint32_t i, uint32_t j) { return a[size_t(i) * cols + j]; }
  const Scalar& at(uint32_t i, uint32_t j) const { return a[size_t(i) * cols + j]; }

  bool is_zero() const;
  bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }

  Mat operator+(const Mat& o) const;
  Mat operator*(const Mat& o) const;
};

// Monomials of total degree < bound in `vars` symbols, graded lex order,
// starting from the empty monomial.  Their count is C(vars + bound - 1, vars).
std::vector<Monomial> truncation_basis(const std::vector<uint32_t>& symbols, uint32_t bound);

}  // namespace qf
