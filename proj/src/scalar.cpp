#include "quiverforge/scalar.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace qf {

Ring::Ring(Fq field) : data_(std::make_shared<Data>(std::move(field))) {}

uint32_t Ring::add_free(const std::string& name, bool coordinate) {
  data_->symbols.push_back({name, SymbolKind::Free, 0, 0, coordinate});
  return uint32_t(data_->symbols.size() - 1);
}

uint32_t Ring::add_fin(const std::string& name, uint64_t modulus, bool coordinate) {
  if (modulus < 2) throw std::invalid_argument("fin modulus must be >= 2");
  data_->symbols.push_back({name, SymbolKind::Fin, modulus, 0, coordinate});
  return uint32_t(data_->symbols.size() - 1);
}

uint32_t Ring::add_nil(const std::string& name, uint32_t group, bool coordinate) {
  if (group >= data_->group_bounds.size()) throw std::invalid_argument("unknown nil group");
  data_->symbols.push_back({name, SymbolKind::Nil, 0, group, coordinate});
  return uint32_t(data_->symbols.size() - 1);
}

uint32_t Ring::add_nil_group(uint32_t bound) {
  if (bound < 1) throw std::invalid_argument("nil bound must be >= 1");
  data_->group_bounds.push_back(bound);
  return uint32_t(data_->group_bounds.size() - 1);
}

void Ring::add_ann_set(std::vector<uint32_t> symbols) {
  std::sort(symbols.begin(), symbols.end());
  data_->ann_sets.push_back(std::move(symbols));
}

Scalar Scalar::constant(const Ring& ring, uint32_t c) {
  Scalar s(ring);
  if (c != 0) s.terms_[Monomial{}] = c;
  return s;
}

Scalar Scalar::from_int(const Ring& ring, int64_t n) {
  return constant(ring, ring.field().from_int(n));
}

Scalar Scalar::symbol(const Ring& ring, uint32_t id, uint64_t exp) {
  Monomial m;
  if (exp > 0) m.push_back({id, exp});
  return monomial(ring, m, 1);
}

Scalar Scalar::monomial(const Ring& ring, const Monomial& m, uint32_t c) {
  Scalar s(ring);
  if (c == 0) return s;
  Monomial mm = m;
  std::sort(mm.begin(), mm.end());
  if (normalize(ring, mm)) s.terms_[std::move(mm)] = c;
  return s;
}

bool Scalar::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
}

uint32_t Scalar::constant_value() const {
  if (terms_.empty()) return 0;
  return terms_.begin()->second;
}

// Applies the symbol laws; returns false when the monomial is annihilated.
bool Scalar::normalize(const Ring& ring, Monomial& m) {
  std::map<uint32_t, uint64_t> group_degree;
  for (auto& [id, exp] : m) {
    const SymbolInfo& info = ring.symbol(id);
    switch (info.kind) {
      case SymbolKind::Free:
        break;
      case SymbolKind::Fin:
        if (exp >= info.fin_modulus) exp = (exp - 1) % (info.fin_modulus - 1) + 1;
        break;
      case SymbolKind::Nil:
        group_degree[info.nil_group] += exp;
        break;
    }
  }
  for (auto [g, deg] : group_degree)
    if (deg >= ring.group_bound(g)) return false;
  for (const auto& ann : ring.ann_sets()) {
    uint32_t seen = 0;
    for (const auto& [id, exp] : m)
      if (std::binary_search(ann.begin(), ann.end(), id) && ++seen >= 2) return false;
  }
  return true;
}

void Scalar::insert_term(Monomial m, uint32_t c) {
  if (c == 0) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(std::move(m), c);
    return;
  }
  it->second = ring_.field().add(it->second, c);
  if (it->second == 0) terms_.erase(it);
}

Scalar Scalar::operator+(const Scalar& o) const {
  Scalar r = *this;
  for (const auto& [m, c] : o.terms_) r.insert_term(m, c);
  return r;
}

Scalar Scalar::operator-(const Scalar& o) const { return *this + (-o); }

Scalar Scalar::operator-() const {
  Scalar r = *this;
  for (auto& [m, c] : r.terms_) c = ring_.field().neg(c);
  return r;
}

Scalar Scalar::scaled(uint32_t c) const {
  Scalar r(ring_);
  if (c == 0) return r;
  for (const auto& [m, v] : terms_) r.terms_[m] = ring_.field().mul(v, c);
  return r;
}

Scalar Scalar::operator*(const Scalar& o) const {
  Scalar r(ring_);
  const Fq& f = ring_.field();
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m;
      m.reserve(ma.size() + mb.size());
      size_t i = 0, j = 0;
      while (i < ma.size() && j < mb.size()) {
        if (ma[i].first == mb[j].first) {
          m.push_back({ma[i].first, ma[i].second + mb[j].second});
          i++, j++;
        } else if (ma[i].first < mb[j].first) {
          m.push_back(ma[i++]);
        } else {
          m.push_back(mb[j++]);
        }
      }
      for (; i < ma.size(); i++) m.push_back(ma[i]);
      for (; j < mb.size(); j++) m.push_back(mb[j]);
      if (normalize(ring_, m)) r.insert_term(std::move(m), f.mul(ca, cb));
    }
  }
  return r;
}

Scalar Scalar::frobenius(uint32_t e) const {
  if (e == 0) return *this;
  uint64_t qe = 1;
  for (uint32_t i = 0; i < e; i++) qe *= ring_.field().q();
  Scalar r(ring_);
  for (const auto& [m, c] : terms_) {
    Monomial mm = m;
    for (auto& [id, exp] : mm) exp *= qe;
    if (normalize(ring_, mm)) r.insert_term(std::move(mm), c);
  }
  return r;
}

Scalar Scalar::substituted(const std::map<uint32_t, Scalar>& repl) const {
  Scalar r(ring_);
  for (const auto& [m, c] : terms_) {
    Scalar term = Scalar::constant(ring_, c);
    for (const auto& [id, exp] : m) {
      auto it = repl.find(id);
      if (it == repl.end()) {
        term *= Scalar::symbol(ring_, id, exp);
      } else {
        for (uint64_t k = 0; k < exp; k++) term *= it->second;
      }
    }
    r += term;
  }
  return r;
}

uint32_t Scalar::evaluate(const std::map<uint32_t, uint32_t>& values, const Fq& target) const {
  if (ring_.field().t() != 1) throw std::logic_error("evaluate needs a prime coefficient field");
  if (target.p() != ring_.field().p()) throw std::logic_error("characteristic mismatch");
  uint32_t acc = 0;
  for (const auto& [m, c] : terms_) {
    uint32_t prod = target.from_int(int64_t(c));
    for (const auto& [id, exp] : m) {
      auto it = values.find(id);
      if (it == values.end()) throw std::logic_error("missing value for symbol " + ring_.symbol(id).name);
      prod = target.mul(prod, target.pow(it->second, exp));
    }
    acc = target.add(acc, prod);
  }
  return acc;
}

uint32_t Scalar::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0 : it->second;
}

bool Scalar::contains_symbol(uint32_t id) const {
  for (const auto& [m, c] : terms_)
    for (const auto& [s, e] : m)
      if (s == id) return true;
  return false;
}

uint64_t Scalar::total_degree() const {
  uint64_t d = 0;
  for (const auto& [m, c] : terms_) {
    uint64_t t = 0;
    for (const auto& [s, e] : m) t += e;
    d = std::max(d, t);
  }
  return d;
}

Scalar Scalar::nil_free_part() const {
  Scalar r(ring_);
  for (const auto& [m, c] : terms_) {
    bool has_nil = false;
    for (const auto& [id, exp] : m)
      if (ring_.symbol(id).kind == SymbolKind::Nil) {
        has_nil = true;
        break;
      }
    if (!has_nil) r.terms_[m] = c;
  }
  return r;
}

std::string Scalar::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) out << " + ";
    first = false;
    bool need_coeff = (c != 1) || m.empty();
    if (need_coeff) out << c;
    for (size_t i = 0; i < m.size(); i++) {
      if (need_coeff || i > 0) out << "*";
      out << ring_.symbol(m[i].first).name;
      if (m[i].second != 1) out << "^" << m[i].second;
    }
  }
  return out.str();
}

std::optional<uint32_t> proportional_to(const Scalar& a, const Scalar& b) {
  if (a.is_zero()) return b.is_zero() ? std::optional<uint32_t>(0) : std::nullopt;
  const Fq& f = a.ring().field();
  const auto& [lead, ca] = *a.terms().begin();
  uint32_t cb = b.coefficient(lead);
  if (cb == 0) return b.is_zero() ? std::optional<uint32_t>(0) : std::nullopt;
  uint32_t c = f.mul(cb, f.inv(ca));
  return a.scaled(c) == b ? std::optional<uint32_t>(c) : std::nullopt;
}

bool Mat::is_zero() const {
  for (const auto& s : a)
    if (!s.is_zero()) return false;
  return true;
}

Mat Mat::operator+(const Mat& o) const {
  Mat r = *this;
  for (size_t i = 0; i < a.size(); i++) r.a[i] += o.a[i];
  return r;
}

Mat Mat::operator*(const Mat& o) const {
  if (cols != o.rows) throw std::logic_error("matrix shape mismatch");
  Ring ring = a.empty() ? (o.a.empty() ? Ring() : o.a[0].ring()) : a[0].ring();
  Mat r(rows, o.cols, ring);
  for (uint32_t i = 0; i < rows; i++)
    for (uint32_t k = 0; k < cols; k++) {
      const Scalar& x = at(i, k);
      if (x.is_zero()) continue;
      for (uint32_t j = 0; j < o.cols; j++) {
        const Scalar& y = o.at(k, j);
        if (!y.is_zero()) r.at(i, j) += x * y;
      }
    }
  return r;
}

std::vector<Monomial> truncation_basis(const std::vector<uint32_t>& symbols_in, uint32_t bound) {
  std::vector<uint32_t> symbols = symbols_in;
  std::sort(symbols.begin(), symbols.end());
  std::vector<Monomial> out{Monomial{}};
  std::vector<Monomial> layer{Monomial{}};
  for (uint32_t d = 1; d < bound; d++) {
    std::vector<Monomial> next;
    for (const Monomial& m : layer) {
      // Extend only by symbols >= the last one to enumerate each monomial once.
      uint32_t lo = m.empty() ? 0 : m.back().first;
      for (uint32_t s : symbols) {
        if (s < lo) continue;
        Monomial mm = m;
        if (!mm.empty() && mm.back().first == s)
          mm.back().second++;
        else
          mm.push_back({s, 1});
        next.push_back(std::move(mm));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

}  // namespace qf
