#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qf {

// GF(p^t) with the lex-least monic irreducible modulus for the given (p, t).
// Elements are integers in [0, p^t); base-p digit i is the coefficient of x^i.
// Cheap to copy (shared immutable tables). Size cap: p^t <= 2^20.
class Fq {
public:
  Fq() : Fq(2, 1) {}
  Fq(uint32_t p, uint32_t t);

  uint32_t p() const { return impl_->p; }
  uint32_t t() const { return impl_->t; }
  uint32_t q() const { return impl_->q; }

  uint32_t add(uint32_t a, uint32_t b) const;
  uint32_t sub(uint32_t a, uint32_t b) const;
  uint32_t neg(uint32_t a) const;
  uint32_t mul(uint32_t a, uint32_t b) const;
  uint32_t inv(uint32_t a) const;          // a != 0
  uint32_t pow(uint32_t a, uint64_t e) const;
  uint32_t frobenius(uint32_t a, uint32_t e = 1) const;  // a^(p^e)

  uint32_t from_int(int64_t n) const;      // constant polynomial n mod p
  bool in_subfield(uint32_t a, uint32_t s) const;  // a^(p^s) == a

  // modulus digits, little-endian, length t+1, leading digit 1
  std::vector<uint32_t> modulus() const { return impl_->mod; }
  std::vector<uint32_t> digits(uint32_t a) const;           // length t
  uint32_t from_digits(const std::vector<uint32_t>& d) const;

  bool operator==(const Fq& o) const { return impl_->p == o.impl_->p && impl_->t == o.impl_->t; }

private:
  struct Impl {
    uint32_t p, t, q;
    std::vector<uint32_t> mod;       // degree t, monic
    std::vector<uint32_t> log, exp;  // discrete log tables, empty if q > kTableMax
  };
  std::shared_ptr<const Impl> impl_;

  static constexpr uint32_t kTableMax = 1u << 14;
  uint32_t mul_slow(uint32_t a, uint32_t b) const;
};

// true iff the monic polynomial given by little-endian digits is irreducible over GF(p)
bool poly_irreducible(const std::vector<uint32_t>& f, uint32_t p);

}  // namespace qf
