#include "quiverforge/materialize.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace qf {

namespace {

uint32_t fiber(const Vertex& v) {
  uint32_t f = 1;
  for (uint32_t l : v.levels) f *= std::max<uint32_t>(l, 1);
  return f;
}

std::vector<uint32_t> level_digits(const std::vector<uint32_t>& levels, uint32_t idx) {
  std::vector<uint32_t> d(levels.size(), 0);
  for (size_t i = levels.size(); i-- > 0;) {
    d[i] = idx % levels[i];
    idx /= levels[i];
  }
  return d;
}

// Slots reached by the shift monomial with exponent index cidx: digitwise
// addition without carry, so the target slot is s + cidx.
std::vector<uint32_t> shift_sources(const std::vector<uint32_t>& levels, uint32_t cidx) {
  uint32_t total = 1;
  for (uint32_t l : levels) total *= l;
  std::vector<uint32_t> c = level_digits(levels, cidx), out;
  for (uint32_t s = 0; s < total; s++) {
    std::vector<uint32_t> d = level_digits(levels, s);
    bool ok = true;
    for (size_t i = 0; i < levels.size(); i++) ok = ok && d[i] + c[i] < levels[i];
    if (ok) out.push_back(s);
  }
  return out;
}

std::string digit_tag(const std::vector<uint32_t>& levels, uint32_t cidx) {
  std::string s;
  for (uint32_t d : level_digits(levels, cidx)) s += std::to_string(d);
  return s;
}

// Fiber levels an arrow's rectangles climb in lockstep: the longest common
// inner run of its endpoints. An unglued arrow carries independent rectangles
// in every cell instead, so its ladder is empty.
std::vector<uint32_t> arrow_ladder(const Arrow& rep, const Vertex& vs, const Vertex& vd) {
  if (rep.glue_class.empty()) return {};
  size_t k = 0;
  while (k < vs.levels.size() && k < vd.levels.size() &&
         vs.levels[vs.levels.size() - 1 - k] == vd.levels[vd.levels.size() - 1 - k])
    k++;
  return std::vector<uint32_t>(vs.levels.end() - k, vs.levels.end());
}

uint64_t pow_u64(uint64_t b, uint32_t e) {
  uint64_t r = 1;
  while (e--) {
    if (b != 0 && r > UINT64_MAX / b) throw std::overflow_error("field degree too large");
    r *= b;
  }
  return r;
}

// ---- flattened linear algebra over the coefficient field ----

using FlatKey = std::tuple<uint32_t, uint32_t, Monomial>;
using FlatVec = std::map<FlatKey, uint32_t>;

FlatVec flatten(const Mat& m) {
  FlatVec v;
  for (uint32_t i = 0; i < m.rows; i++)
    for (uint32_t j = 0; j < m.cols; j++)
      for (const auto& [mono, c] : m.at(i, j).terms()) v[{i, j, mono}] = c;
  return v;
}

void vec_axpy(FlatVec& x, uint32_t c, const FlatVec& y, const Fq& f) {
  for (const auto& [k, v] : y) {
    auto it = x.try_emplace(k, 0u).first;
    it->second = f.sub(it->second, f.mul(c, v));
    if (it->second == 0) x.erase(it);
  }
}

void mat_axpy(Mat& x, uint32_t c, const Mat& y) {
  for (size_t k = 0; k < x.a.size(); k++) x.a[k] -= y.a[k].scaled(c);
}

// Fully reduced echelon of flattened matrices; every pivot is 1 and occurs in
// exactly one row.  Insertion keeps rows sorted by pivot key.
struct Echelon {
  Fq f;
  std::vector<FlatKey> pivots;
  std::vector<FlatVec> vecs;
  std::vector<Mat> mats;

  explicit Echelon(Fq field) : f(std::move(field)) {}

  size_t size() const { return mats.size(); }

  void reduce(FlatVec& v, Mat& m) const {
    for (size_t r = 0; r < pivots.size() && !v.empty(); r++) {
      auto it = v.find(pivots[r]);
      if (it == v.end()) continue;
      uint32_t c = it->second;
      vec_axpy(v, c, vecs[r], f);
      mat_axpy(m, c, mats[r]);
    }
  }

  bool add(Mat m) {
    FlatVec v = flatten(m);
    reduce(v, m);
    if (v.empty()) return false;
    uint32_t inv = f.inv(v.begin()->second);
    for (auto& [k, c] : v) c = f.mul(c, inv);
    for (auto& s : m.a) s = s.scaled(inv);
    FlatKey piv = v.begin()->first;
    for (size_t r = 0; r < vecs.size(); r++) {
      auto it = vecs[r].find(piv);
      if (it == vecs[r].end()) continue;
      uint32_t c = it->second;
      vec_axpy(vecs[r], c, v, f);
      mat_axpy(mats[r], c, m);
    }
    size_t pos = std::lower_bound(pivots.begin(), pivots.end(), piv) - pivots.begin();
    pivots.insert(pivots.begin() + pos, piv);
    vecs.insert(vecs.begin() + pos, std::move(v));
    mats.insert(mats.begin() + pos, std::move(m));
    return true;
  }

  // Expansion coefficients in the stored basis; empty optional when m is
  // outside the span.
  std::optional<std::vector<uint32_t>> expand(Mat m) const {
    FlatVec v = flatten(m);
    std::vector<uint32_t> coeff(size(), 0);
    for (size_t r = 0; r < pivots.size() && !v.empty(); r++) {
      auto it = v.find(pivots[r]);
      if (it == v.end()) continue;
      coeff[r] = it->second;
      vec_axpy(v, coeff[r], vecs[r], f);
    }
    if (!v.empty()) return std::nullopt;
    return coeff;
  }
};

// Coordinate directions of a generator: coefficient matrices of its
// coordinate monomials, constant factors kept in the entries.  The pure
// constant part, when present, is a direction of its own.
std::vector<Mat> directions_of(const Mat& g, const Ring& ring) {
  std::map<Monomial, Mat> dirs;
  for (uint32_t i = 0; i < g.rows; i++)
    for (uint32_t j = 0; j < g.cols; j++)
      for (const auto& [mono, c] : g.at(i, j).terms()) {
        Monomial coord, cons;
        for (const auto& [sym, e] : mono)
          (ring.symbol(sym).coordinate ? coord : cons).push_back({sym, e});
        auto it = dirs.try_emplace(coord, Mat(g.rows, g.cols, ring)).first;
        it->second.at(i, j) += Scalar::monomial(ring, cons, c);
      }
  std::vector<Mat> out;
  out.reserve(dirs.size());
  for (auto& [k, m] : dirs) out.push_back(std::move(m));
  return out;
}

std::vector<uint32_t> extension_symbols(RingExtension ext, Ring& ring) {
  std::vector<uint32_t> syms;
  switch (ext.kind) {
    case RingExtension::Kind::None:
      break;
    case RingExtension::Kind::Eps: {
      uint32_t g = ring.add_nil_group(ext.bound);
      syms.push_back(ring.add_nil("e", g, false));
      break;
    }
    case RingExtension::Kind::Trunc: {
      uint32_t g = ring.add_nil_group(ext.bound);
      for (uint32_t i = 0; i < ext.vars; i++)
        syms.push_back(ring.add_nil("t" + std::to_string(i + 1), g, false));
      break;
    }
    case RingExtension::Kind::Xi: {
      // truncated at degree 2 so closures stay finite; the path constructions
      // touch each generator at most once along any product
      syms.push_back(ring.add_nil("x1", ring.add_nil_group(2), false));
      syms.push_back(ring.add_nil("x2", ring.add_nil_group(2), false));
      ring.add_ann_set(syms);
      break;
    }
  }
  return syms;
}

std::vector<Monomial> extension_basis(RingExtension ext, const std::vector<uint32_t>& syms) {
  switch (ext.kind) {
    case RingExtension::Kind::None:
      return {Monomial{}};
    case RingExtension::Kind::Eps: {
      std::vector<Monomial> b{Monomial{}};
      for (uint32_t k = 1; k < ext.bound; k++) b.push_back({{syms[0], k}});
      return b;
    }
    case RingExtension::Kind::Trunc:
      return truncation_basis(syms, ext.bound);
    case RingExtension::Kind::Xi:
      // degree-one components; higher powers never enter the constructions
      return {Monomial{}, {{syms[0], 1}}, {{syms[1], 1}}};
  }
  return {Monomial{}};
}

}  // namespace

std::pair<uint32_t, uint32_t> BlockLayout::at(const std::string& id) const {
  auto it = block.find(id);
  if (it == block.end()) throw std::out_of_range("layout: unknown vertex " + id);
  return it->second;
}

BlockLayout layout(const FullQuiver& q) {
  auto order = topo_order(q);
  if (!order) throw std::invalid_argument("layout: quiver has a directed cycle");
  BlockLayout l;
  for (uint32_t vi : *order) {
    const Vertex& v = q.vertices[vi];
    uint32_t size = v.matrix_degree * fiber(v);
    l.block[v.id] = {l.total, size};
    l.order.push_back(v.id);
    l.total += size;
  }
  return l;
}

GenericSet generic_elements(const FullQuiver& q, uint32_t copies) {
  GenericSet gs;
  gs.quiver = q;
  gs.lay = layout(q);
  Fq coeff(q.base.p, q.base.infinite ? 1 : q.base.t);
  gs.ring = Ring(coeff);
  std::vector<uint32_t> ext = extension_symbols(q.ring_extension, gs.ring);
  gs.ring_basis = extension_basis(q.ring_extension, ext);
  const uint64_t qsize = coeff.q();

  // diagonal units (glue class or unglued vertex) and arrow units
  std::map<std::string, std::vector<uint32_t>> diag_units, arrow_units;
  for (uint32_t i = 0; i < q.vertices.size(); i++) {
    const Vertex& v = q.vertices[i];
    diag_units[v.glue_class.empty() ? v.id : v.glue_class].push_back(i);
  }
  for (uint32_t i = 0; i < q.arrows.size(); i++) {
    const Arrow& a = q.arrows[i];
    arrow_units[a.glue_class.empty() ? a.id : a.glue_class].push_back(i);
  }

  // value of one generic coordinate: one fresh symbol per ring basis monomial
  auto coordinate = [&](const std::string& name, bool fin, uint64_t modulus) {
    Scalar val(gs.ring);
    for (size_t m = 0; m < gs.ring_basis.size(); m++) {
      std::string nm = m == 0 ? name : name + ".m" + std::to_string(m);
      uint32_t id = fin ? gs.ring.add_fin(nm, modulus, true) : gs.ring.add_free(nm, true);
      val += Scalar::symbol(gs.ring, id) * Scalar::monomial(gs.ring, gs.ring_basis[m], 1);
    }
    return val;
  };

  for (uint32_t copy = 0; copy < copies; copy++) {
    std::string tag(copy, '\'');
    std::map<std::string, std::vector<Scalar>> params;

    for (const auto& [key, members] : diag_units) {
      // Shared grid sized by the deepest member; shallower members read the
      // innermost cells, so their levels must be an inner slice of the rep's.
      const Vertex* deep = &q.vertices[members[0]];
      for (uint32_t vi : members)
        if (q.vertices[vi].levels.size() > deep->levels.size()) deep = &q.vertices[vi];
      for (uint32_t vi : members)
        if (!std::equal(q.vertices[vi].levels.rbegin(), q.vertices[vi].levels.rend(),
                        deep->levels.rbegin()))
          throw std::invalid_argument("glued vertices " + deep->id + ", " + q.vertices[vi].id +
                                      " have incompatible levels");
      const Vertex& rep = *deep;
      uint32_t n = rep.matrix_degree, L = fiber(rep);
      bool all_zero = true;
      for (uint32_t vi : members) all_zero = all_zero && q.vertices[vi].zero;
      bool fin = !q.base.infinite && rep.finite();
      uint64_t modulus = fin ? pow_u64(qsize, rep.field_degree) : 0;
      std::vector<Scalar> grid(size_t(L) * n * n, Scalar(gs.ring));
      for (uint32_t c = 0; c < L; c++) {
        if (c == 0 && all_zero) continue;
        for (uint32_t i = 0; i < n; i++)
          for (uint32_t j = 0; j < n; j++) {
            std::string nm = key;
            if (c > 0) nm += ".L" + digit_tag(rep.levels, c);
            if (n > 1) nm += "_" + std::to_string(i) + std::to_string(j);
            grid[(size_t(c) * n + i) * n + j] = coordinate(nm + tag, fin, modulus);
          }
      }
      params[key] = grid;
    }

    for (const auto& [key, members] : arrow_units) {
      const Arrow& rep = q.arrows[members[0]];
      const Vertex &vs = q.vertex(rep.src), &vd = q.vertex(rep.dst);
      for (uint32_t ai : members) {
        const Arrow& a = q.arrows[ai];
        if (q.vertex(a.src).levels != vs.levels || q.vertex(a.dst).levels != vd.levels)
          throw std::invalid_argument("glued arrows " + rep.id + ", " + a.id +
                                      " join blocks of different depth");
      }
      std::vector<uint32_t> suffix = arrow_ladder(rep, vs, vd);
      uint32_t ls = 1;
      for (uint32_t l : suffix) ls *= l;
      uint32_t os = fiber(vs) / ls, od = fiber(vd) / ls;
      uint32_t nr = vs.matrix_degree, ns = vd.matrix_degree;
      std::vector<Scalar> grid;
      grid.reserve(size_t(os) * od * ls * nr * ns);
      for (uint32_t a = 0; a < os; a++)
        for (uint32_t b = 0; b < od; b++)
          for (uint32_t c = 0; c < ls; c++)
            for (uint32_t i = 0; i < nr; i++)
              for (uint32_t j = 0; j < ns; j++) {
                std::string nm = key;
                if (os > 1 || od > 1) nm += ".o" + std::to_string(a) + std::to_string(b);
                if (c > 0) nm += ".L" + digit_tag(suffix, c);
                if (nr > 1 || ns > 1) nm += "_" + std::to_string(i) + std::to_string(j);
                grid.push_back(coordinate(nm + tag, false, 0));
              }
      params[key] = grid;
    }

    // attached relations rewrite the leading class in terms of the others
    for (const auto& rel : q.relations) {
      if (rel.terms.empty()) continue;
      const QTerm& head = rel.terms[0];
      if (head.exp != 0)
        throw std::invalid_argument("relation not in solved form: " + rel.to_string());
      auto hit = params.find(head.symbol);
      if (hit == params.end())
        throw std::invalid_argument("relation names unknown parameter " + head.symbol);
      uint32_t c0 = coeff.from_int(head.coeff);
      if (c0 == 0) throw std::invalid_argument("relation head coefficient is 0 in the base");
      uint32_t scale = coeff.neg(coeff.inv(c0));
      std::vector<Scalar> out(hit->second.size(), Scalar(gs.ring));
      for (size_t t = 1; t < rel.terms.size(); t++) {
        const QTerm& term = rel.terms[t];
        if (term.symbol == head.symbol)
          throw std::invalid_argument("self-relation cannot be materialized: " + rel.to_string());
        auto it = params.find(term.symbol);
        if (it == params.end())
          throw std::invalid_argument("relation names unknown parameter " + term.symbol);
        if (it->second.size() != out.size())
          throw std::invalid_argument("relation mixes parameter shapes: " + rel.to_string());
        uint32_t c = coeff.mul(coeff.from_int(term.coeff), scale);
        for (size_t p = 0; p < out.size(); p++)
          out[p] += it->second[p].frobenius(term.exp).scaled(c);
      }
      hit->second = out;
    }

    Mat M(gs.lay.total, gs.lay.total, gs.ring);

    for (const auto& [key, members] : diag_units) {
      const std::vector<Scalar>& grid = params[key];
      for (uint32_t vi : members) {
        const Vertex& v = q.vertices[vi];
        uint32_t n = v.matrix_degree;
        uint32_t off = gs.lay.at(v.id).first;
        // A shallower member occupies the inner cells: grid index c < fiber(v)
        // names the same inner-digit pattern for it as for the deepest member.
        for (uint32_t c = 0; c < fiber(v); c++) {
          if (c == 0 && v.zero) continue;
          for (uint32_t s : shift_sources(v.levels, c))
            for (uint32_t i = 0; i < n; i++)
              for (uint32_t j = 0; j < n; j++)
                M.at(off + s * n + i, off + (s + c) * n + j) +=
                    grid[(size_t(c) * n + i) * n + j].frobenius(v.twist);
        }
      }
    }

    for (const auto& [key, members] : arrow_units) {
      const Arrow& rep = q.arrows[members[0]];
      const Vertex &rvs = q.vertex(rep.src), &rvd = q.vertex(rep.dst);
      std::vector<uint32_t> suffix = arrow_ladder(rep, rvs, rvd);
      uint32_t ls = 1;
      for (uint32_t l : suffix) ls *= l;
      uint32_t od = fiber(rvd) / ls;
      uint32_t nr = rvs.matrix_degree, ns = rvd.matrix_degree;
      const std::vector<Scalar>& grid = params[key];
      for (uint32_t ai : members) {
        const Arrow& ar = q.arrows[ai];
        if (ar.exp < ar.src_exp)
          throw std::invalid_argument("arrow " + ar.id +
                                      ": source exponent exceeds the class exponent");
        uint32_t eff = ar.exp - ar.src_exp;
        uint32_t offr = gs.lay.at(ar.src).first, offd = gs.lay.at(ar.dst).first;
        Scalar nu = Scalar::from_int(gs.ring, ar.nu);
        Monomial fac;
        for (size_t g = 0; g < ar.ring_factor.size(); g++)
          if (ar.ring_factor[g] > 0) {
            if (g >= ext.size())
              throw std::invalid_argument("arrow " + ar.id + ": ring factor outside extension");
            fac.push_back({ext[g], ar.ring_factor[g]});
          }
        Scalar fscale = nu * Scalar::monomial(gs.ring, fac, 1);
        for (uint32_t a = 0; a < fiber(rvs) / ls; a++)
          for (uint32_t b = 0; b < od; b++)
            for (uint32_t c = 0; c < ls; c++)
              for (uint32_t s : shift_sources(suffix, c))
                for (uint32_t i = 0; i < nr; i++)
                  for (uint32_t j = 0; j < ns; j++) {
                    const Scalar& e =
                        grid[(((size_t(a) * od + b) * ls + c) * nr + i) * ns + j];
                    M.at(offr + (a * ls + s) * nr + i, offd + (b * ls + s + c) * ns + j) +=
                        fscale * e.frobenius(eff);
                  }
      }
    }

    gs.parameters.push_back(std::move(params));
    gs.elements.push_back(std::move(M));
  }
  return gs;
}

ConcreteMat mat_mul(const ConcreteMat& x, const ConcreteMat& y, const Fq& f) {
  if (x.cols != y.rows) throw std::invalid_argument("mat_mul: shape mismatch");
  ConcreteMat r(x.rows, y.cols);
  for (uint32_t i = 0; i < x.rows; i++)
    for (uint32_t k = 0; k < x.cols; k++) {
      uint32_t v = x.at(i, k);
      if (v == 0) continue;
      for (uint32_t j = 0; j < y.cols; j++)
        r.at(i, j) = f.add(r.at(i, j), f.mul(v, y.at(k, j)));
    }
  return r;
}

ConcreteMat mat_add(const ConcreteMat& x, const ConcreteMat& y, const Fq& f) {
  if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("mat_add: shape mismatch");
  ConcreteMat r(x.rows, x.cols);
  for (size_t k = 0; k < r.a.size(); k++) r.a[k] = f.add(x.a[k], y.a[k]);
  return r;
}

ConcreteMat specialize(const Mat& m, const Ring& ring,
                       const std::map<uint32_t, uint32_t>& values, const Fq& target) {
  for (const auto& [id, val] : values) {
    const SymbolInfo& si = ring.symbol(id);
    if (si.kind == SymbolKind::Fin && target.pow(val, si.fin_modulus) != val)
      throw std::invalid_argument("value for " + si.name + " is outside its subfield");
    if (si.kind == SymbolKind::Nil && val != 0)
      throw std::invalid_argument("nilpotent symbol " + si.name + " must specialize to 0");
  }
  for (const auto& ann : ring.ann_sets()) {
    uint32_t nonzero = 0;
    for (uint32_t id : ann) {
      auto it = values.find(id);
      if (it != values.end() && it->second != 0) nonzero++;
    }
    if (nonzero > 1)
      throw std::invalid_argument("annihilator set needs all but one member at 0");
  }
  ConcreteMat r(m.rows, m.cols);
  for (uint32_t i = 0; i < m.rows; i++)
    for (uint32_t j = 0; j < m.cols; j++) r.at(i, j) = m.at(i, j).evaluate(values, target);
  return r;
}

AlgebraBasis span_closure(const std::vector<Mat>& gens, bool unital, uint32_t max_dim) {
  if (gens.empty()) throw std::invalid_argument("span_closure: no generators");
  const Ring& ring = gens[0].a[0].ring();
  for (const Mat& g : gens)
    if (g.rows != gens[0].rows || g.cols != g.rows || !g.a[0].ring().same(ring))
      throw std::invalid_argument("span_closure: generators disagree in shape or ring");

  Echelon ech(ring.field());
  if (unital) {
    Mat id(gens[0].rows, gens[0].cols, ring);
    for (uint32_t i = 0; i < id.rows; i++) id.at(i, i) = Scalar::constant(ring, 1);
    ech.add(std::move(id));
  }
  for (const Mat& g : gens)
    for (Mat& d : directions_of(g, ring)) ech.add(std::move(d));

  bool grew = true;
  while (grew) {
    grew = false;
    if (ech.size() > max_dim) throw std::runtime_error("span closure basis bound exceeded");
    std::vector<Mat> snap = ech.mats;
    for (const Mat& x : snap)
      for (const Mat& y : snap) {
        if (ech.add(x * y)) grew = true;
        if (ech.size() > max_dim) throw std::runtime_error("span closure basis bound exceeded");
      }
  }

  AlgebraBasis out{ring, gens[0].rows, unital, ech.mats, {}};
  uint32_t d = out.dim();
  out.structure.resize(size_t(d) * d);
  for (uint32_t i = 0; i < d; i++)
    for (uint32_t j = 0; j < d; j++) {
      auto c = ech.expand(out.basis[i] * out.basis[j]);
      if (!c) throw std::logic_error("span closure basis is not product closed");
      out.structure[size_t(i) * d + j] = std::move(*c);
    }
  return out;
}

AlgebraBasis materialize_algebra(const FullQuiver& q, std::optional<bool> unital) {
  GenericSet gs = generic_elements(q, 1);
  bool u;
  if (unital) {
    u = *unital;
  } else {
    u = true;
    for (const auto& v : q.vertices) u = u && !v.zero;
  }
  return span_closure(gs.elements, u);
}

RadicalFiltration radical_powers(const AlgebraBasis& alg, const BlockLayout& lay,
                                 const FullQuiver& q) {
  RadicalFiltration fil;
  if (alg.dim() == 0) return fil;
  const Fq& f = alg.ring.field();

  // flatten of the blockwise semisimple part: slot-diagonal positions of each
  // vertex block, nilpotent factors dropped
  auto pi_flat = [&](const Mat& b) {
    FlatVec v;
    for (const auto& vert : q.vertices) {
      uint32_t off = lay.at(vert.id).first;
      uint32_t n = vert.matrix_degree, L = fiber(vert);
      for (uint32_t s = 0; s < L; s++)
        for (uint32_t i = 0; i < n; i++)
          for (uint32_t j = 0; j < n; j++) {
            uint32_t r = off + s * n + i, c = off + s * n + j;
            Scalar ss = b.at(r, c).nil_free_part();
            for (const auto& [mono, co] : ss.terms()) v[{r, c, mono}] = co;
          }
    }
    return v;
  };

  // kernel of the projection on the span, tracked over the basis
  std::vector<FlatVec> rows;
  std::vector<std::vector<uint32_t>> combos;
  Echelon jech(f);
  for (uint32_t k = 0; k < alg.dim(); k++) {
    FlatVec v = pi_flat(alg.basis[k]);
    std::vector<uint32_t> combo(alg.dim(), 0);
    combo[k] = 1;
    for (size_t r = 0; r < rows.size() && !v.empty(); r++) {
      auto it = v.find(rows[r].begin()->first);
      if (it == v.end()) continue;
      uint32_t c = it->second;
      vec_axpy(v, c, rows[r], f);
      for (uint32_t u = 0; u < alg.dim(); u++)
        combo[u] = f.sub(combo[u], f.mul(c, combos[r][u]));
    }
    if (!v.empty()) {
      uint32_t inv = f.inv(v.begin()->second);
      for (auto& [kk, c] : v) c = f.mul(c, inv);
      for (auto& c : combo) c = f.mul(c, inv);
      rows.push_back(std::move(v));
      combos.push_back(std::move(combo));
      continue;
    }
    Mat j(alg.rows, alg.rows, alg.ring);
    for (uint32_t u = 0; u < alg.dim(); u++)
      if (combo[u] != 0) mat_axpy(j, f.neg(combo[u]), alg.basis[u]);
    jech.add(std::move(j));
  }

  if (jech.size() == 0) {
    fil.nilpotence = 1;
    return fil;
  }
  fil.powers.push_back(jech.mats);

  uint32_t bound = 1;
  for (uint32_t g = 0; g < alg.ring.group_count(); g++)
    bound = std::max(bound, alg.ring.group_bound(g));
  uint32_t cap = lay.total * bound + 2;

  while (true) {
    Echelon next(f);
    for (const Mat& x : fil.powers.front())
      for (const Mat& y : fil.powers.back()) next.add(x * y);
    if (next.size() == 0) {
      fil.nilpotence = uint32_t(fil.powers.size()) + 1;
      return fil;
    }
    fil.powers.push_back(next.mats);
    if (fil.powers.size() > cap) throw std::logic_error("radical filtration does not terminate");
  }
}

ClassicalQuiver classical_quiver(const FullQuiver& q) {
  ClassicalQuiver cq;
  cq.best_effort = !q.base.infinite;
  std::map<std::string, std::vector<std::string>> units;
  for (const auto& v : q.vertices)
    units[v.glue_class.empty() ? v.id : v.glue_class].push_back(v.id);
  for (const auto& [name, members] : units) cq.vertices.push_back(name);

  AlgebraBasis alg = materialize_algebra(q);
  BlockLayout lay = layout(q);
  RadicalFiltration rad = radical_powers(alg, lay, q);
  if (rad.powers.empty()) return cq;

  for (uint32_t i = 0; i < cq.vertices.size(); i++) {
    const auto& mi = units.at(cq.vertices[i]);
    uint32_t ni = q.vertex(mi[0]).matrix_degree;
    for (uint32_t j = 0; j < cq.vertices.size(); j++) {
      const auto& mj = units.at(cq.vertices[j]);
      uint32_t nj = q.vertex(mj[0]).matrix_degree;
      Echelon ech(alg.ring.field());
      for (const Mat& b : rad.powers[0]) {
        Mat p(b.rows, b.cols, alg.ring);
        for (const std::string& vr : mi)
          for (const std::string& vc : mj) {
            auto [ro, rs] = lay.at(vr);
            auto [co, cs] = lay.at(vc);
            for (uint32_t r = ro; r < ro + rs; r++)
              for (uint32_t c = co; c < co + cs; c++) p.at(r, c) = b.at(r, c);
          }
        ech.add(std::move(p));
      }
      uint32_t nn = ni * nj;
      uint32_t mult = (uint32_t(ech.size()) + nn - 1) / nn;
      if (mult > 0) cq.multiplicities[{i, j}] = mult;
    }
  }
  return cq;
}

FullQuiver decompress_one(const FullQuiver& q) {
  size_t dmax = 0;
  for (const auto& v : q.vertices) dmax = std::max(dmax, v.levels.size());
  if (dmax == 0) return q;

  FullQuiver r;
  r.base = q.base;
  r.ring_extension = q.ring_extension;
  std::map<std::string, std::vector<std::string>> copies;
  std::set<std::string> expanded;

  // Only the deepest blocks unfold this round; shallower ones wait so that
  // glued classes keep their shared inner fibers aligned.
  for (const auto& v : q.vertices) {
    if (v.levels.size() < dmax) {
      r.vertices.push_back(v);
      copies[v.id] = {v.id};
      continue;
    }
    uint32_t l = v.levels[0];
    std::vector<uint32_t> rest(v.levels.begin() + 1, v.levels.end());
    if (l <= 1) {
      Vertex w = v;
      w.levels = rest;
      r.vertices.push_back(w);
      copies[v.id] = {v.id};
      continue;
    }
    expanded.insert(v.id);
    std::string cls = v.glue_class.empty() ? v.id + "~" : v.glue_class;
    for (uint32_t k = 0; k < l; k++) {
      Vertex w = v;
      w.id = v.id + "#" + std::to_string(k);
      w.glue_class = cls;
      w.levels = rest;
      r.vertices.push_back(w);
      copies[v.id].push_back(w.id);
    }
    // depth enters the label so triangles of different passes stay distinct
    for (uint32_t k = 1; k < l; k++)
      for (uint32_t i = 0; i + k < l; i++) {
        Arrow t;
        t.id = v.id + "~" + std::to_string(k) + "@" + std::to_string(i);
        t.src = copies[v.id][i];
        t.dst = copies[v.id][i + k];
        t.glue_class = cls + "~" + std::to_string(v.levels.size()) + "." + std::to_string(k);
        r.arrows.push_back(t);
      }
  }

  for (const auto& a : q.arrows) {
    const auto &cs = copies.at(a.src), &cd = copies.at(a.dst);
    if (cs.size() == 1 && cd.size() == 1) {
      Arrow t = a;
      t.src = cs[0];
      t.dst = cd[0];
      r.arrows.push_back(t);
      continue;
    }
    Arrow base = a;
    base.glue_class = a.glue_class.empty() ? a.id + "~" : a.glue_class;
    if (cs.size() == cd.size() && cs.size() > 1) {
      for (size_t k = 0; k < cs.size(); k++) {
        Arrow t = base;
        t.id = a.id + "@" + std::to_string(k);
        t.src = cs[k];
        t.dst = cd[k];
        r.arrows.push_back(t);
      }
    } else if (cs.size() > 1 && cd.size() > 1) {
      for (size_t i = 0; i < cs.size(); i++)
        for (size_t j = 0; j < cd.size(); j++) {
          Arrow t = base;
          t.id = a.id + "@" + std::to_string(i) + "_" + std::to_string(j);
          t.src = cs[i];
          t.dst = cd[j];
          r.arrows.push_back(t);
        }
    } else {
      const auto& many = cs.size() > 1 ? cs : cd;
      for (size_t k = 0; k < many.size(); k++) {
        Arrow t = base;
        t.id = a.id + "@" + std::to_string(k);
        t.src = cs.size() > 1 ? cs[k] : a.src;
        t.dst = cd.size() > 1 ? cd[k] : a.dst;
        r.arrows.push_back(t);
      }
    }
  }

  for (const auto& dg : q.declared_gluing)
    if (!expanded.count(dg.a) && !expanded.count(dg.b)) r.declared_gluing.push_back(dg);

  std::set<std::string> symbols;
  for (const auto& v : r.vertices) {
    symbols.insert(v.id);
    if (!v.glue_class.empty()) symbols.insert(v.glue_class);
  }
  for (const auto& a : r.arrows) {
    symbols.insert(a.id);
    if (!a.glue_class.empty()) symbols.insert(a.glue_class);
  }
  for (const auto& rel : q.relations) {
    bool ok = true;
    for (const auto& t : rel.terms) ok = ok && symbols.count(t.symbol);
    if (ok) r.relations.push_back(rel);
  }
  return r;
}

FullQuiver decompress(const FullQuiver& q) {
  FullQuiver r = q;
  while (true) {
    bool any = false;
    for (const auto& v : r.vertices) any = any || !v.levels.empty();
    if (!any) return r;
    r = decompress_one(r);
  }
}

}  // namespace qf
