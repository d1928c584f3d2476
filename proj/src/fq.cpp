#include "quiverforge/fq.hpp"

#include <stdexcept>

namespace qf {

namespace {

bool is_prime(uint32_t n) {
  if (n < 2) return false;
  for (uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

// little-endian digit vectors over GF(p); trailing zeros trimmed
using Poly = std::vector<uint32_t>;

void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

Poly poly_mul(const Poly& a, const Poly& b, uint32_t p) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j)
      c[i + j] = (c[i + j] + a[i] * b[j]) % p;
  trim(c);
  return c;
}

// a mod m, m monic
Poly poly_mod(Poly a, const Poly& m, uint32_t p) {
  trim(a);
  while (a.size() >= m.size()) {
    uint32_t lead = a.back();
    size_t shift = a.size() - m.size();
    for (size_t i = 0; i < m.size(); ++i)
      a[shift + i] = (a[shift + i] + (p - lead % p) * m[i]) % p;
    trim(a);
  }
  return a;
}

uint32_t encode(const Poly& a, uint32_t p) {
  uint32_t v = 0;
  for (size_t i = a.size(); i-- > 0;) v = v * p + a[i];
  return v;
}

Poly decode(uint32_t v, uint32_t p, uint32_t len) {
  Poly a(len);
  for (uint32_t i = 0; i < len; ++i) {
    a[i] = v % p;
    v /= p;
  }
  trim(a);
  return a;
}

uint64_t ipow(uint64_t b, uint32_t e) {
  uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

}  // namespace

bool poly_irreducible(const Poly& f0, uint32_t p) {
  Poly f = f0;
  trim(f);
  uint32_t deg = f.empty() ? 0 : uint32_t(f.size() - 1);
  if (deg == 0) return false;
  if (deg == 1) return true;
  if (f[0] == 0) return false;  // divisible by x
  // trial division by every monic polynomial of degree <= deg/2
  for (uint32_t d = 1; 2 * d <= deg; ++d) {
    uint64_t count = ipow(p, d);
    for (uint64_t k = 0; k < count; ++k) {
      Poly g = decode(uint32_t(k), p, d);
      g.resize(d + 1, 0);
      g[d] = 1;
      if (poly_mod(f, g, p).empty()) return false;
    }
  }
  return true;
}

Fq::Fq(uint32_t p, uint32_t t) {
  if (!is_prime(p)) throw std::invalid_argument("Fq: p must be prime");
  if (t < 1) throw std::invalid_argument("Fq: t must be >= 1");
  uint64_t q = ipow(p, t);
  if (q > (1u << 20)) throw std::invalid_argument("Fq: p^t too large");

  auto impl = std::make_shared<Impl>();
  impl->p = p;
  impl->t = t;
  impl->q = uint32_t(q);

  // lex-least monic irreducible: smallest integer encoding p^t + k
  impl->mod = {1};
  if (t > 1) {
    for (uint32_t k = 0;; ++k) {
      Poly f = decode(k, p, t);
      f.resize(t + 1, 0);
      f[t] = 1;
      if (poly_irreducible(f, p)) {
        impl->mod = f;
        break;
      }
    }
  } else {
    impl->mod = {0, 1};  // degree 1: plain GF(p), modulus x
  }

  impl_ = impl;

  // discrete log tables off a generator, small fields only
  if (q <= kTableMax && q > 2) {
    for (uint32_t g = 1; g < q; ++g) {
      std::vector<uint32_t> lg(uint32_t(q), 0), ex;
      ex.reserve(uint32_t(q) - 1);
      uint32_t x = 1;
      bool ok = true;
      for (uint32_t i = 0; i + 1 < q; ++i) {
        if (x == 1 && i > 0) { ok = false; break; }
        lg[x] = i;
        ex.push_back(x);
        x = mul_slow(x, g);
      }
      if (ok && x == 1) {
        auto full = std::make_shared<Impl>(*impl);
        full->log = std::move(lg);
        full->exp = std::move(ex);
        impl_ = full;
        return;
      }
    }
  }
}

uint32_t Fq::add(uint32_t a, uint32_t b) const {
  uint32_t p = impl_->p;
  if (p == 2) return a ^ b;
  uint32_t r = 0, m = 1;
  for (uint32_t i = 0; i < impl_->t; ++i) {
    r += ((a + b) % p) * m;
    a /= p;
    b /= p;
    m *= p;
  }
  return r;
}

uint32_t Fq::neg(uint32_t a) const {
  uint32_t p = impl_->p;
  if (p == 2) return a;
  uint32_t r = 0, m = 1;
  for (uint32_t i = 0; i < impl_->t; ++i) {
    r += ((p - a % p) % p) * m;
    a /= p;
    m *= p;
  }
  return r;
}

uint32_t Fq::sub(uint32_t a, uint32_t b) const { return add(a, neg(b)); }

uint32_t Fq::mul_slow(uint32_t a, uint32_t b) const {
  Poly pa = decode(a, impl_->p, impl_->t);
  Poly pb = decode(b, impl_->p, impl_->t);
  return encode(poly_mod(poly_mul(pa, pb, impl_->p), impl_->mod, impl_->p), impl_->p);
}

uint32_t Fq::mul(uint32_t a, uint32_t b) const {
  if (a == 0 || b == 0) return 0;
  if (!impl_->exp.empty()) {
    uint64_t s = uint64_t(impl_->log[a]) + impl_->log[b];
    return impl_->exp[s % (impl_->q - 1)];
  }
  return mul_slow(a, b);
}

uint32_t Fq::inv(uint32_t a) const {
  if (a == 0) throw std::domain_error("Fq: division by zero");
  if (!impl_->exp.empty()) {
    uint32_t l = impl_->log[a];
    return impl_->exp[l == 0 ? 0 : impl_->q - 1 - l];
  }
  return pow(a, impl_->q - 2);
}

uint32_t Fq::pow(uint32_t a, uint64_t e) const {
  if (a == 0) return e == 0 ? 1 : 0;
  if (impl_->q > 2) e %= impl_->q - 1;
  uint32_t r = 1;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

uint32_t Fq::frobenius(uint32_t a, uint32_t e) const {
  // x -> x^(p^t) is the identity, so e only matters mod t
  uint32_t r = a;
  for (uint32_t i = 0, n = e % impl_->t; i < n; ++i) r = pow(r, impl_->p);
  return r;
}

uint32_t Fq::from_int(int64_t n) const {
  int64_t p = impl_->p;
  return uint32_t(((n % p) + p) % p);
}

bool Fq::in_subfield(uint32_t a, uint32_t s) const { return frobenius(a, s) == a; }

std::vector<uint32_t> Fq::digits(uint32_t a) const {
  Poly d = decode(a, impl_->p, impl_->t);
  d.resize(impl_->t, 0);
  return d;
}

uint32_t Fq::from_digits(const std::vector<uint32_t>& d) const {
  uint32_t v = 0;
  for (size_t i = d.size(); i-- > 0;) v = v * impl_->p + d[i] % impl_->p;
  return v;
}

}  // namespace qf
