#include "quiverforge/extract.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace qf {
namespace {

struct Rect {
  uint32_t r0 = 0, c0 = 0, rows = 0, cols = 0;
};

std::string roman_label(uint32_t n) {
  static const std::pair<uint32_t, const char*> steps[] = {
      {10, "X"}, {9, "IX"}, {5, "V"}, {4, "IV"}, {1, "I"}};
  std::string out;
  for (auto [v, s] : steps)
    while (n >= v) {
      out += s;
      n -= v;
    }
  return out;
}

std::string greek_label(uint32_t n) {
  static const char* names[] = {"alpha", "beta",    "gamma", "delta", "epsilon", "zeta",
                                "eta",   "theta",   "iota",  "kappa", "lambda",  "mu",
                                "nu",    "xi",      "rho",   "sigma", "tau",     "upsilon",
                                "phi",   "chi",     "psi",   "omega"};
  if (n < 22) return names[n];
  return "w" + std::to_string(n - 21);
}

uint32_t fin_degree(uint64_t modulus, uint64_t q) {
  uint64_t m = q;
  for (uint32_t d = 1; d <= 64; ++d) {
    if (m == modulus) return d;
    if (m > modulus / q) break;
    m *= q;
  }
  throw std::logic_error("finite symbol modulus is not a power of the field size");
}

int64_t lift_signed(uint32_t c, const Fq& f) {
  if (c >= f.p()) throw std::invalid_argument("coefficient is outside the prime subfield");
  return c <= f.p() / 2 ? int64_t(c) : int64_t(c) - int64_t(f.p());
}

// Words in the generators.  Identities must hold on every algebra element,
// and products of honest generators are the spanning set the detectors can
// check them on.
std::vector<Mat> spanning_products(const std::vector<Mat>& gens, uint32_t max_len) {
  std::vector<Mat> out = gens;
  size_t k = gens.size();
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < k; ++j) out.push_back(gens[i] * gens[j]);
  std::mt19937 rng(0x51ab5eedu);
  std::uniform_int_distribution<size_t> pick(0, k - 1);
  if (k * k * k <= 512) {
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < k; ++j)
        for (size_t l = 0; l < k; ++l) out.push_back(gens[i] * gens[j] * gens[l]);
  } else {
    for (int w = 0; w < 512; ++w)
      out.push_back(gens[pick(rng)] * gens[pick(rng)] * gens[pick(rng)]);
  }
  for (uint32_t len = 4; len <= max_len; ++len)
    for (int w = 0; w < 24; ++w) {
      Mat m = gens[pick(rng)];
      for (uint32_t s = 1; s < len; ++s) m = m * gens[pick(rng)];
      out.push_back(std::move(m));
    }
  return out;
}

// t == nu * s^(q^delta); negative delta means the identity is stated for the
// q^(-delta) power of t instead.
struct Offset {
  int64_t delta = 0;
  uint32_t nu = 1;
};

void forward_candidates(const Scalar& s, const Scalar& t, int sign, std::vector<Offset>& out) {
  const Ring& ring = s.ring();
  const Fq& f = ring.field();
  if (s.terms().size() != t.terms().size()) return;
  bool sc = !s.terms().empty() && s.terms().begin()->first.empty();
  bool tc = !t.terms().empty() && t.terms().begin()->first.empty();
  if (sc != tc) return;
  std::vector<uint32_t> deltas;
  auto it = s.terms().begin();
  auto jt = t.terms().begin();
  if (sc) {
    ++it;
    ++jt;
  }
  if (it == s.terms().end()) {
    deltas.push_back(0);
  } else {
    auto [sym, es] = it->first[0];
    uint64_t et = 0;
    bool found = false;
    for (const auto& [s2, e2] : jt->first)
      if (s2 == sym) {
        et = e2;
        found = true;
        break;
      }
    if (!found) return;
    const SymbolInfo& info = ring.symbol(sym);
    if (info.kind == SymbolKind::Fin) {
      for (uint32_t d = 0, dd = fin_degree(info.fin_modulus, f.q()); d < dd; ++d)
        deltas.push_back(d);
    } else if (et % es == 0) {
      uint64_t ratio = et / es;
      uint32_t d = 0;
      while (ratio > 1 && ratio % f.q() == 0) {
        ratio /= f.q();
        ++d;
      }
      if (ratio == 1) deltas.push_back(d);
    }
  }
  for (uint32_t d : deltas) {
    Scalar u = s.frobenius(d);
    if (u.terms().size() != t.terms().size()) continue;
    auto ut = u.terms().begin();
    auto tt = t.terms().begin();
    if (ut->first != tt->first) continue;
    uint32_t nu = f.mul(tt->second, f.inv(ut->second));
    if (t == u.scaled(nu)) {
      if (sign < 0)
        out.push_back({-int64_t(d), f.inv(nu)});
      else
        out.push_back({int64_t(d), nu});
    }
  }
}

std::vector<Offset> offset_candidates(const Scalar& s, const Scalar& t) {
  std::vector<Offset> out;
  forward_candidates(s, t, +1, out);
  forward_candidates(t, s, -1, out);
  std::sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) { return a.delta < b.delta; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Offset& a, const Offset& b) { return a.delta == b.delta; }),
            out.end());
  return out;
}

bool offset_holds(const Scalar& s, const Scalar& t, const Offset& o) {
  if (s.is_zero() || t.is_zero()) return s.is_zero() && t.is_zero();
  if (o.delta >= 0) return t == s.frobenius(uint32_t(o.delta)).scaled(o.nu);
  // coefficients are Frobenius fixed, so the scaled form commutes
  return t.frobenius(uint32_t(-o.delta)) == s.scaled(o.nu);
}

// Candidates come from the first jointly nonzero position, then each one is
// verified entrywise across the whole spanning set.
std::optional<Offset> rect_offset(const std::vector<Mat>& span, const Rect& a, const Rect& b,
                                  bool unit_nu) {
  if (a.rows != b.rows || a.cols != b.cols) return std::nullopt;
  std::vector<Offset> cand;
  bool have = false;
  for (const Mat& m : span) {
    for (uint32_t i = 0; i < a.rows && !have; ++i)
      for (uint32_t j = 0; j < a.cols && !have; ++j) {
        const Scalar& s = m.at(a.r0 + i, a.c0 + j);
        const Scalar& t = m.at(b.r0 + i, b.c0 + j);
        if (s.is_zero() != t.is_zero()) return std::nullopt;
        if (s.is_zero()) continue;
        cand = offset_candidates(s, t);
        have = true;
      }
    if (have) break;
  }
  if (!have) return std::nullopt;
  for (const Offset& o : cand) {
    if (unit_nu && o.nu != 1) continue;
    bool ok = true;
    for (const Mat& m : span) {
      for (uint32_t i = 0; i < a.rows && ok; ++i)
        for (uint32_t j = 0; j < a.cols && ok; ++j)
          ok = offset_holds(m.at(a.r0 + i, a.c0 + j), m.at(b.r0 + i, b.c0 + j), o);
      if (!ok) break;
    }
    if (ok) return o;
  }
  return std::nullopt;
}

struct Pipeline {
  Ring ring;
  std::vector<std::string> ids;
  std::vector<Rect> diag;
  std::vector<Mat> span;
  AlgebraBasis closure;
  std::vector<std::vector<char>> sup;
  std::vector<char> zero_block;

  uint32_t nblocks() const { return uint32_t(ids.size()); }

  Rect rect(uint32_t i, uint32_t j) const {
    return {diag[i].r0, diag[j].c0, diag[i].rows, diag[j].cols};
  }

  bool rect_supported(const Rect& r) const {
    for (uint32_t i = 0; i < r.rows; ++i)
      for (uint32_t j = 0; j < r.cols; ++j)
        if (sup[r.r0 + i][r.c0 + j]) return true;
    return false;
  }
};

Pipeline make_pipeline(const std::vector<Mat>& gens, const BlockLayout& lay) {
  if (gens.empty()) throw std::invalid_argument("extraction needs at least one generator");
  Pipeline p;
  p.ring = gens[0].a.at(0).ring();
  p.ids = lay.order;
  std::vector<uint32_t> ord(lay.total, 0);
  for (uint32_t k = 0; k < p.nblocks(); ++k) {
    auto [off, size] = lay.at(p.ids[k]);
    p.diag.push_back({off, off, size, size});
    for (uint32_t i = 0; i < size; ++i) ord[off + i] = k;
  }
  for (const Mat& g : gens) {
    if (g.rows != lay.total || g.cols != lay.total)
      throw std::invalid_argument("generator shape does not match the layout");
    for (uint32_t r = 0; r < g.rows; ++r)
      for (uint32_t c = 0; c < g.cols; ++c)
        if (ord[r] > ord[c] && !g.at(r, c).is_zero())
          throw std::invalid_argument("generators not in block form");
  }
  p.span = spanning_products(gens, uint32_t(std::min<size_t>(p.ids.size(), 8)));
  p.closure = span_closure(gens, false);
  p.sup.assign(lay.total, std::vector<char>(lay.total, 0));
  for (const Mat& b : p.closure.basis)
    for (uint32_t r = 0; r < b.rows; ++r)
      for (uint32_t c = 0; c < b.cols; ++c)
        if (!b.at(r, c).is_zero()) p.sup[r][c] = 1;
  p.zero_block.assign(p.nblocks(), 1);
  for (uint32_t k = 0; k < p.nblocks(); ++k)
    if (p.rect_supported(p.diag[k])) p.zero_block[k] = 0;
  return p;
}

// 0 when a free symbol appears, else the lcm of the finite symbol degrees.
uint32_t block_subfield(const Pipeline& p, const Rect& r) {
  uint64_t l = 1;
  bool free_sym = false;
  for (const Mat& m : p.span)
    for (uint32_t i = 0; i < r.rows; ++i)
      for (uint32_t j = 0; j < r.cols; ++j)
        for (const auto& [mono, c] : m.at(r.r0 + i, r.c0 + j).terms())
          for (const auto& [sym, e] : mono) {
            const SymbolInfo& info = p.ring.symbol(sym);
            if (info.kind == SymbolKind::Free)
              free_sym = true;
            else if (info.kind == SymbolKind::Fin)
              l = std::lcm(l, uint64_t(fin_degree(info.fin_modulus, p.ring.field().q())));
          }
  return free_sym ? 0 : uint32_t(l);
}

struct DiagCls {
  std::vector<uint32_t> blocks;
  std::vector<int64_t> deltas;
  uint32_t subfield = 1;
};

// Frobenius by the subfield degree fixes every entry of the class, so finite
// offsets are only defined mod that degree; free classes shift to least 0.
std::vector<uint32_t> canonical_twists(const DiagCls& c) {
  std::vector<uint32_t> out;
  out.reserve(c.deltas.size());
  if (c.subfield > 0) {
    int64_t t = c.subfield;
    for (int64_t d : c.deltas) out.push_back(uint32_t(((d % t) + t) % t));
  } else {
    int64_t mn = *std::min_element(c.deltas.begin(), c.deltas.end());
    for (int64_t d : c.deltas) out.push_back(uint32_t(d - mn));
  }
  return out;
}

std::vector<DiagCls> diag_classes(const Pipeline& p) {
  std::vector<DiagCls> out;
  for (uint32_t k = 0; k < p.nblocks(); ++k) {
    if (p.zero_block[k]) continue;
    uint32_t sub = block_subfield(p, p.diag[k]);
    bool placed = false;
    for (DiagCls& c : out) {
      if (c.subfield != sub || p.diag[c.blocks[0]].rows != p.diag[k].rows) continue;
      auto o = rect_offset(p.span, p.diag[c.blocks[0]], p.diag[k], true);
      if (o) {
        c.blocks.push_back(k);
        c.deltas.push_back(o->delta);
        placed = true;
        break;
      }
    }
    if (!placed) out.push_back({{k}, {0}, sub});
  }
  return out;
}

struct ArrCls {
  std::vector<std::pair<uint32_t, uint32_t>> rects;  // representative first
  std::vector<uint32_t> exps;
  std::vector<uint32_t> nus;  // field elements, representative 1
};

std::vector<ArrCls> arrow_classes_core(const Pipeline& p) {
  struct Raw {
    std::vector<std::pair<uint32_t, uint32_t>> rects;
    std::vector<int64_t> deltas;
    std::vector<uint32_t> nus;
  };
  std::vector<Raw> raw;
  for (uint32_t i = 0; i < p.nblocks(); ++i)
    for (uint32_t j = i + 1; j < p.nblocks(); ++j) {
      Rect r = p.rect(i, j);
      if (!p.rect_supported(r)) continue;
      bool placed = false;
      for (Raw& c : raw) {
        auto o = rect_offset(p.span, p.rect(c.rects[0].first, c.rects[0].second), r, false);
        if (o) {
          c.rects.push_back({i, j});
          c.deltas.push_back(o->delta);
          c.nus.push_back(o->nu);
          placed = true;
          break;
        }
      }
      if (!placed) raw.push_back({{{i, j}}, {0}, {1}});
    }
  // re-anchor at a least twisted member so exponents are nonnegative
  const Fq& f = p.ring.field();
  std::vector<ArrCls> out;
  for (const Raw& c : raw) {
    size_t rep = size_t(std::min_element(c.deltas.begin(), c.deltas.end()) - c.deltas.begin());
    ArrCls n;
    auto push = [&](size_t k) {
      n.rects.push_back(c.rects[k]);
      n.exps.push_back(uint32_t(c.deltas[k] - c.deltas[rep]));
      n.nus.push_back(f.mul(c.nus[k], f.inv(c.nus[rep])));
    };
    push(rep);
    for (size_t k = 0; k < c.rects.size(); ++k)
      if (k != rep) push(k);
    out.push_back(std::move(n));
  }
  return out;
}

// Mutually reduced rows with unit leading coefficients, kept sorted by lead.
struct Echelon {
  const Fq* f = nullptr;
  std::vector<std::vector<uint32_t>> rows;
  std::vector<int> leads;

  std::vector<uint32_t> reduce(std::vector<uint32_t> v) const {
    for (size_t r = 0; r < rows.size(); ++r) {
      uint32_t c = v[size_t(leads[r])];
      if (!c) continue;
      for (size_t k = size_t(leads[r]); k < v.size(); ++k)
        v[k] = f->sub(v[k], f->mul(c, rows[r][k]));
    }
    return v;
  }

  bool add(std::vector<uint32_t> v) {
    v = reduce(std::move(v));
    int lead = -1;
    for (size_t k = 0; k < v.size(); ++k)
      if (v[k]) {
        lead = int(k);
        break;
      }
    if (lead < 0) return false;
    uint32_t inv = f->inv(v[size_t(lead)]);
    for (auto& x : v) x = f->mul(x, inv);
    for (size_t r = 0; r < rows.size(); ++r) {
      uint32_t c = rows[r][size_t(lead)];
      if (!c) continue;
      for (size_t k = 0; k < v.size(); ++k) rows[r][k] = f->sub(rows[r][k], f->mul(c, v[k]));
    }
    size_t pos = 0;
    while (pos < rows.size() && leads[pos] < lead) ++pos;
    rows.insert(rows.begin() + pos, std::move(v));
    leads.insert(leads.begin() + pos, lead);
    return true;
  }
};

struct RelSystem {
  struct Col {
    uint32_t rect = 0, i = 0, j = 0, e = 0;
  };
  std::vector<std::pair<uint32_t, uint32_t>> rects;  // supported, source major
  std::vector<Col> cols;                             // shift major, then rect and position
  std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t>, uint32_t> index;
  std::vector<std::vector<uint32_t>> residual;
};

// Linear system over the coefficient field: one unknown per coordinate power,
// one row per (spanning element, monomial).  Residual rows are the nullspace
// reduced modulo the combinations implied by `known`.
RelSystem relation_system(const Pipeline& p, uint32_t bound, const std::vector<ArrCls>& known) {
  const Fq& f = p.ring.field();
  {
    uint64_t m = 1;
    for (uint32_t e = 0; e < bound; ++e) {
      m *= f.q();
      if (m > (uint64_t(1) << 32)) throw std::invalid_argument("relation degree bound too large");
    }
  }
  RelSystem sys;
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> rect_idx;
  for (uint32_t i = 0; i < p.nblocks(); ++i)
    for (uint32_t j = i + 1; j < p.nblocks(); ++j)
      if (p.rect_supported(p.rect(i, j))) {
        rect_idx[{i, j}] = uint32_t(sys.rects.size());
        sys.rects.push_back({i, j});
      }
  // shift-major column order makes an unshifted lead term whenever one exists
  for (uint32_t e = 0; e <= bound; ++e)
    for (uint32_t ri = 0; ri < sys.rects.size(); ++ri) {
      Rect r = p.rect(sys.rects[ri].first, sys.rects[ri].second);
      for (uint32_t i = 0; i < r.rows; ++i)
        for (uint32_t j = 0; j < r.cols; ++j)
          if (p.sup[r.r0 + i][r.c0 + j]) {
            sys.index[{ri, i, j, e}] = uint32_t(sys.cols.size());
            sys.cols.push_back({ri, i, j, e});
          }
    }
  size_t n = sys.cols.size();
  if (n == 0) return sys;
  Echelon rowech{&f, {}, {}};
  for (const Mat& m : p.span) {
    std::map<Monomial, std::vector<uint32_t>> rows;
    for (size_t ci = 0; ci < n; ++ci) {
      const auto& col = sys.cols[ci];
      Rect r = p.rect(sys.rects[col.rect].first, sys.rects[col.rect].second);
      Scalar v = m.at(r.r0 + col.i, r.c0 + col.j).frobenius(col.e);
      for (const auto& [mono, c] : v.terms()) {
        auto& row = rows[mono];
        if (row.empty()) row.assign(n, 0);
        row[ci] = f.add(row[ci], c);
      }
    }
    for (auto& [mono, row] : rows) rowech.add(std::move(row));
  }
  std::vector<char> is_pivot(n, 0);
  for (int l : rowech.leads) is_pivot[size_t(l)] = 1;
  std::vector<std::vector<uint32_t>> null;
  for (size_t cf = 0; cf < n; ++cf) {
    if (is_pivot[cf]) continue;
    std::vector<uint32_t> v(n, 0);
    v[cf] = 1;
    for (size_t r = 0; r < rowech.rows.size(); ++r)
      v[size_t(rowech.leads[r])] = f.neg(rowech.rows[r][cf]);
    null.push_back(std::move(v));
  }
  Echelon implied{&f, {}, {}};
  for (const ArrCls& c : known) {
    auto it0 = rect_idx.find(c.rects[0]);
    if (it0 == rect_idx.end()) continue;
    for (size_t k = 1; k < c.rects.size(); ++k) {
      auto itk = rect_idx.find(c.rects[k]);
      if (itk == rect_idx.end()) continue;
      Rect r = p.rect(c.rects[k].first, c.rects[k].second);
      for (uint32_t u = 0; u <= bound && c.exps[k] + u <= bound; ++u)
        for (uint32_t i = 0; i < r.rows; ++i)
          for (uint32_t j = 0; j < r.cols; ++j) {
            auto a = sys.index.find({itk->second, i, j, u});
            auto b = sys.index.find({it0->second, i, j, c.exps[k] + u});
            if (a == sys.index.end() || b == sys.index.end()) continue;
            std::vector<uint32_t> v(n, 0);
            v[a->second] = 1;
            v[b->second] = f.neg(c.nus[k]);
            implied.add(std::move(v));
          }
    }
  }
  Echelon res{&f, {}, {}};
  for (auto& v : null) res.add(implied.reduce(std::move(v)));
  sys.residual = res.rows;
  return sys;
}

std::string position_name(const Pipeline& p, const RelSystem& sys, uint32_t rect, uint32_t i,
                          uint32_t j) {
  auto [a, b] = sys.rects[rect];
  std::string base = p.ids[a] + ">" + p.ids[b];
  Rect r = p.rect(a, b);
  if (r.rows == 1 && r.cols == 1) return base;
  return base + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

std::vector<ArrCls> to_core(const Pipeline& p, const std::vector<OffdiagonalGluing>& known) {
  std::map<std::string, uint32_t> ord;
  for (uint32_t k = 0; k < p.nblocks(); ++k) ord[p.ids[k]] = k;
  std::vector<ArrCls> out;
  for (const OffdiagonalGluing& g : known) {
    ArrCls c;
    for (const auto& [s, d] : g.members) {
      auto is = ord.find(s), id = ord.find(d);
      if (is == ord.end() || id == ord.end())
        throw std::invalid_argument("known gluing names a block outside the layout");
      c.rects.push_back({is->second, id->second});
    }
    c.exps = g.exps;
    c.nus = g.nus;
    out.push_back(std::move(c));
  }
  return out;
}

// Vertices and arrows from the detected data; relations are attached later.
struct Assembled {
  FullQuiver q;
  std::map<std::pair<uint32_t, uint32_t>, std::tuple<std::string, uint32_t, uint32_t>> arrow_data;
};

Assembled assemble_quiver(const Pipeline& p, const std::vector<DiagCls>& dcls,
                          const std::vector<ArrCls>& acls, const BaseField& base) {
  const Fq& f = p.ring.field();
  Assembled out;
  out.q.base = base;
  struct VD {
    std::string cls;
    uint32_t twist = 0;
    uint32_t fdeg = 1;
  };
  std::vector<VD> vd(p.nblocks());
  for (uint32_t k = 0; k < p.nblocks(); ++k) vd[k].fdeg = base.infinite ? 0 : 1;
  uint32_t roman = 0;
  for (const DiagCls& c : dcls) {
    std::string label = c.blocks.size() >= 2 ? roman_label(++roman) : "";
    std::vector<uint32_t> tw = canonical_twists(c);
    for (size_t i = 0; i < c.blocks.size(); ++i) {
      VD& v = vd[c.blocks[i]];
      v.cls = label;
      v.twist = tw[i];
      v.fdeg = base.infinite ? 0 : c.subfield;
    }
  }
  for (uint32_t k = 0; k < p.nblocks(); ++k)
    out.q.vertices.push_back({p.ids[k], vd[k].cls, p.diag[k].rows, vd[k].fdeg, vd[k].twist,
                              p.zero_block[k] != 0, {}});
  uint32_t greek = 0;
  for (const ArrCls& c : acls) {
    std::string label = c.rects.size() >= 2 ? greek_label(greek++) : "";
    for (size_t k = 0; k < c.rects.size(); ++k)
      out.arrow_data[c.rects[k]] = {label, c.nus[k], c.exps[k]};
  }
  for (const auto& [rc, data] : out.arrow_data) {
    const auto& [label, nu, exp] = data;
    out.q.arrows.push_back({p.ids[rc.first] + ">" + p.ids[rc.second], p.ids[rc.first],
                            p.ids[rc.second], label, lift_signed(nu, f), exp, 0, {}});
  }
  return out;
}

uint32_t default_bound(const Pipeline& p, const BlockLayout& lay, const FullQuiver& interim) {
  if (interim.base.infinite) return 0;
  RadicalFiltration rad = radical_powers(p.closure, lay, interim);
  uint32_t tmax = 1;
  for (const Vertex& v : interim.vertices) tmax = std::max(tmax, v.field_degree);
  return tmax * (rad.nilpotence - 1);
}

}  // namespace

std::vector<DiagonalGluing> detect_diagonal_gluing(const std::vector<Mat>& gens,
                                                   const BlockLayout& lay) {
  Pipeline p = make_pipeline(gens, lay);
  std::vector<DiagonalGluing> out;
  for (const DiagCls& c : diag_classes(p)) {
    DiagonalGluing g;
    g.field_degree = c.subfield;
    g.twists = canonical_twists(c);
    for (uint32_t b : c.blocks) g.members.push_back(p.ids[b]);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<OffdiagonalGluing> detect_offdiagonal_gluing(const std::vector<Mat>& gens,
                                                         const BlockLayout& lay) {
  Pipeline p = make_pipeline(gens, lay);
  std::vector<OffdiagonalGluing> out;
  for (const ArrCls& c : arrow_classes_core(p)) {
    OffdiagonalGluing g;
    for (const auto& [i, j] : c.rects) g.members.push_back({p.ids[i], p.ids[j]});
    g.nus = c.nus;
    g.exps = c.exps;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<QRelation> detect_extra_relations(const std::vector<Mat>& gens, const BlockLayout& lay,
                                              uint32_t degree_bound,
                                              const std::vector<OffdiagonalGluing>& known) {
  Pipeline p = make_pipeline(gens, lay);
  RelSystem sys = relation_system(p, degree_bound, to_core(p, known));
  const Fq& f = p.ring.field();
  std::vector<QRelation> out;
  for (const auto& row : sys.residual) {
    QRelation rel;
    for (size_t ci = 0; ci < row.size(); ++ci) {
      if (!row[ci]) continue;
      const auto& col = sys.cols[ci];
      rel.terms.push_back(
          {position_name(p, sys, col.rect, col.i, col.j), col.e, lift_signed(row[ci], f)});
    }
    out.push_back(std::move(rel));
  }
  return out;
}

GluingDetection detect_gluing(const std::vector<Mat>& gens, const BlockLayout& lay,
                              const BaseField& base) {
  Pipeline p = make_pipeline(gens, lay);
  auto dcls = diag_classes(p);
  auto acls = arrow_classes_core(p);
  Assembled a = assemble_quiver(p, dcls, acls, base);
  RelSystem sys = relation_system(p, default_bound(p, lay, a.q), acls);
  GluingDetection out;
  for (const DiagCls& c : dcls) {
    DiagonalGluing g;
    g.field_degree = c.subfield;
    g.twists = canonical_twists(c);
    for (uint32_t b : c.blocks) g.members.push_back(p.ids[b]);
    out.diagonal.push_back(std::move(g));
  }
  for (const ArrCls& c : acls) {
    OffdiagonalGluing g;
    for (const auto& [i, j] : c.rects) g.members.push_back({p.ids[i], p.ids[j]});
    g.nus = c.nus;
    g.exps = c.exps;
    out.offdiagonal.push_back(std::move(g));
  }
  const Fq& f = p.ring.field();
  for (const auto& row : sys.residual) {
    QRelation rel;
    for (size_t ci = 0; ci < row.size(); ++ci) {
      if (!row[ci]) continue;
      const auto& col = sys.cols[ci];
      rel.terms.push_back(
          {position_name(p, sys, col.rect, col.i, col.j), col.e, lift_signed(row[ci], f)});
    }
    out.relations.push_back(std::move(rel));
  }
  return out;
}

FullQuiver build_full_quiver(const std::vector<Mat>& gens, const BlockLayout& lay,
                             const BaseField& base) {
  Pipeline p = make_pipeline(gens, lay);
  const Fq& f = p.ring.field();
  auto dcls = diag_classes(p);
  auto acls = arrow_classes_core(p);
  Assembled a = assemble_quiver(p, dcls, acls, base);
  uint32_t bound = default_bound(p, lay, a.q);
  RelSystem sys = relation_system(p, bound, acls);

  // keep one generator per Frobenius shift orbit of the residual
  auto shifted = [&](const std::vector<uint32_t>& v,
                     uint32_t u) -> std::optional<std::vector<uint32_t>> {
    std::vector<uint32_t> w(v.size(), 0);
    for (size_t ci = 0; ci < v.size(); ++ci) {
      if (!v[ci]) continue;
      const auto& col = sys.cols[ci];
      auto it = sys.index.find({col.rect, col.i, col.j, col.e + u});
      if (it == sys.index.end()) return std::nullopt;
      // coefficients over GF(q) are fixed by the shift
      w[it->second] = v[ci];
    }
    return w;
  };
  Echelon conseq{&f, {}, {}};
  std::vector<std::vector<uint32_t>> kept;
  for (const auto& row : sys.residual) {
    auto w = conseq.reduce(row);
    int lead = -1;
    for (size_t k = 0; k < w.size(); ++k)
      if (w[k]) {
        lead = int(k);
        break;
      }
    if (lead < 0) continue;
    uint32_t inv = f.inv(w[size_t(lead)]);
    for (auto& x : w) x = f.mul(x, inv);
    kept.push_back(w);
    for (uint32_t u = 0;; ++u) {
      auto sh = shifted(w, u);
      if (!sh) break;
      conseq.add(std::move(*sh));
    }
  }

  for (const auto& row : kept) {
    std::vector<std::pair<std::pair<std::string, uint32_t>, uint32_t>> acc;
    for (size_t ci = 0; ci < row.size(); ++ci) {
      if (!row[ci]) continue;
      const auto& col = sys.cols[ci];
      const auto& [label, anu, aexp] = a.arrow_data.at(sys.rects[col.rect]);
      std::string sym = label.empty()
                            ? p.ids[sys.rects[col.rect].first] + ">" + p.ids[sys.rects[col.rect].second]
                            : label;
      Rect r = p.rect(sys.rects[col.rect].first, sys.rects[col.rect].second);
      if (r.rows != 1 || r.cols != 1)
        sym += "[" + std::to_string(col.i) + "," + std::to_string(col.j) + "]";
      // member value is nu * theta^(q^exp), so powers rewrite onto the class
      uint32_t coeff = f.mul(row[ci], anu);
      uint32_t ex = aexp + col.e;
      bool merged = false;
      for (auto& [key, c0] : acc)
        if (key.first == sym && key.second == ex) {
          c0 = f.add(c0, coeff);
          merged = true;
          break;
        }
      if (!merged) acc.push_back({{sym, ex}, coeff});
    }
    QRelation rel;
    for (const auto& [key, c] : acc)
      if (c) rel.terms.push_back({key.first, key.second, lift_signed(c, f)});
    if (!rel.terms.empty()) a.q.relations.push_back(std::move(rel));
  }

  FullQuiver out = primitive_arrows(a.q).erased;
  std::set<std::string> symbase;
  for (const Arrow& ar : out.arrows) symbase.insert(ar.glue_class.empty() ? ar.id : ar.glue_class);
  std::vector<QRelation> rels;
  for (const QRelation& rel : out.relations) {
    bool ok = true;
    for (const QTerm& t : rel.terms) {
      std::string b = t.symbol.substr(0, t.symbol.find('['));
      if (!symbase.count(b)) {
        ok = false;
        break;
      }
    }
    if (ok) rels.push_back(rel);
  }
  out.relations = std::move(rels);
  return out;
}

}  // namespace qf
