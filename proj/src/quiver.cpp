#include "quiverforge/quiver.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace qf {

namespace {

int64_t mod_pos(int64_t v, uint32_t m) {
  int64_t r = v % int64_t(m);
  return r < 0 ? r + int64_t(m) : r;
}

// a == b modulo m; m == 0 compares exactly.
bool congruent(int64_t a, int64_t b, uint32_t m) {
  return m == 0 ? a == b : mod_pos(a - b, m) == 0;
}

// gcd with 0 acting as "no constraint from this side".
uint32_t gcd0(uint32_t a, uint32_t b) {
  if (a == 0) return b;
  if (b == 0) return a;
  return std::gcd(a, b);
}

int64_t eff_exp(const Arrow& a) { return int64_t(a.exp) - int64_t(a.src_exp); }

}  // namespace

uint64_t BaseField::q() const {
  if (infinite) return 0;
  uint64_t r = 1;
  for (uint32_t i = 0; i < t; i++) r *= p;
  return r;
}

int FullQuiver::vertex_index(const std::string& id) const {
  for (size_t i = 0; i < vertices.size(); i++)
    if (vertices[i].id == id) return int(i);
  return -1;
}

int FullQuiver::arrow_index(const std::string& id) const {
  for (size_t i = 0; i < arrows.size(); i++)
    if (arrows[i].id == id) return int(i);
  return -1;
}

const Vertex& FullQuiver::vertex(const std::string& id) const {
  int i = vertex_index(id);
  if (i < 0) throw std::out_of_range("no vertex " + id);
  return vertices[i];
}

const Arrow& FullQuiver::arrow(const std::string& id) const {
  int i = arrow_index(id);
  if (i < 0) throw std::out_of_range("no arrow " + id);
  return arrows[i];
}

int FullQuiver::arrow_between(const std::string& src, const std::string& dst) const {
  for (size_t i = 0; i < arrows.size(); i++)
    if (arrows[i].src == src && arrows[i].dst == dst) return int(i);
  return -1;
}

std::map<std::string, std::vector<uint32_t>> FullQuiver::arrow_classes() const {
  std::map<std::string, std::vector<uint32_t>> m;
  for (size_t i = 0; i < arrows.size(); i++)
    if (!arrows[i].glue_class.empty()) m[arrows[i].glue_class].push_back(uint32_t(i));
  return m;
}

std::map<std::string, std::vector<uint32_t>> FullQuiver::vertex_classes() const {
  std::map<std::string, std::vector<uint32_t>> m;
  for (size_t i = 0; i < vertices.size(); i++)
    if (!vertices[i].glue_class.empty()) m[vertices[i].glue_class].push_back(uint32_t(i));
  return m;
}

std::string QRelation::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms) {
    if (!first) os << " + ";
    first = false;
    if (t.coeff != 1) os << t.coeff << "*";
    os << t.symbol;
    if (t.exp > 0) os << "^q" << (t.exp > 1 ? "^" + std::to_string(t.exp) : "");
  }
  if (first) os << "0";
  os << " = 0";
  return os.str();
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.rule << ": " << v.detail << "\n";
  return os.str();
}

std::optional<std::vector<uint32_t>> topo_order(const FullQuiver& q) {
  size_t n = q.vertices.size();
  std::vector<uint32_t> indeg(n, 0);
  std::vector<std::vector<uint32_t>> out(n);
  for (const auto& a : q.arrows) {
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s < 0 || d < 0 || s == d) continue;
    out[s].push_back(uint32_t(d));
    indeg[d]++;
  }
  std::vector<uint32_t> order;
  std::set<std::pair<std::string, uint32_t>> ready;
  for (size_t i = 0; i < n; i++)
    if (indeg[i] == 0) ready.insert({q.vertices[i].id, uint32_t(i)});
  while (!ready.empty()) {
    uint32_t v = ready.begin()->second;
    ready.erase(ready.begin());
    order.push_back(v);
    for (uint32_t w : out[v])
      if (--indeg[w] == 0) ready.insert({q.vertices[w].id, w});
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

ValidationReport validate(const FullQuiver& q) {
  ValidationReport rep;
  auto flag = [&](const std::string& rule, const std::string& detail) {
    rep.violations.push_back({rule, detail});
  };

  std::set<std::string> vids, aids;
  for (const auto& v : q.vertices)
    if (!vids.insert(v.id).second) flag("duplicate-id", "vertex " + v.id);
  for (const auto& a : q.arrows)
    if (!aids.insert(a.id).second) flag("duplicate-id", "arrow " + a.id);

  std::optional<Fq> field;
  if (!q.base.infinite) field.emplace(q.base.p, q.base.t);

  switch (q.ring_extension.kind) {
    case RingExtension::Kind::Eps:
      if (q.ring_extension.bound < 2) flag("ring-extension", "eps order must be at least 2");
      break;
    case RingExtension::Kind::Trunc:
      if (q.ring_extension.vars == 0 || q.ring_extension.bound < 2)
        flag("ring-extension", "trunc needs variables and a degree bound of at least 2");
      break;
    default:
      break;
  }

  for (const auto& v : q.vertices) {
    if (v.matrix_degree == 0 && !v.zero)
      flag("degree", "vertex " + v.id + " has matrix degree 0 but a nonzero diagonal");
    if (v.finite() && v.glue_class.empty() && v.twist != 0)
      flag("twist-unglued", "vertex " + v.id + " carries a twist but no glue class");
    if (v.finite() && !v.glue_class.empty() && v.twist >= v.field_degree)
      flag("twist-range", "vertex " + v.id + " twist " + std::to_string(v.twist) +
                              " not reduced mod " + std::to_string(v.field_degree));
    if (!v.finite() && q.base.infinite && v.twist != 0)
      flag("twist-infinite", "vertex " + v.id + " twisted over an infinite base");
    if (v.zero && !v.glue_class.empty())
      flag("zero-glued", "vertex " + v.id + " has a zero diagonal and a glue class");
    if (v.zero && !v.levels.empty())
      flag("level-zero", "vertex " + v.id + " is zero but carries levels");
    for (uint32_t l : v.levels)
      if (l < 2) flag("level-range", "vertex " + v.id + " has level " + std::to_string(l));
    if (q.base.infinite && v.twist != 0)
      flag("infinite-base-twist", "vertex " + v.id + " twisted while the base is infinite");
  }

  for (const auto& [cls, idx] : q.vertex_classes()) {
    const Vertex& rep0 = q.vertices[idx[0]];
    // Glued blocks agree on the shared inner fibers; a member may omit outer
    // levels (it sits in the innermost cells of the deepest member's grid).
    const Vertex* deep = &rep0;
    for (uint32_t i : idx)
      if (q.vertices[i].levels.size() > deep->levels.size()) deep = &q.vertices[i];
    for (size_t k = 1; k < idx.size(); k++) {
      const Vertex& v = q.vertices[idx[k]];
      if (v.matrix_degree != rep0.matrix_degree || v.field_degree != rep0.field_degree)
        flag("class-shape", "class " + cls + ": " + rep0.id + " is (" +
                                std::to_string(rep0.matrix_degree) + "," +
                                std::to_string(rep0.field_degree) + ") but " + v.id + " is (" +
                                std::to_string(v.matrix_degree) + "," +
                                std::to_string(v.field_degree) + ")");
    }
    for (uint32_t i : idx) {
      const Vertex& v = q.vertices[i];
      if (!std::equal(v.levels.rbegin(), v.levels.rend(), deep->levels.rbegin()))
        flag("class-levels", "class " + cls + ": levels of " + v.id +
                                 " are not an inner slice of " + deep->id + "'s");
    }
  }

  for (const auto& a : q.arrows) {
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s < 0) flag("endpoint", "arrow " + a.id + " has unknown source " + a.src);
    if (d < 0) flag("endpoint", "arrow " + a.id + " has unknown target " + a.dst);
    if (s >= 0 && s == d) flag("loop", "arrow " + a.id + " is a loop at " + a.src);
    bool nu_zero = q.base.infinite ? a.nu == 0 : field->from_int(a.nu) == 0;
    if (nu_zero)
      flag("nu-zero", "arrow " + a.id + " has proportionality constant 0 in the base");
    if (q.base.infinite && (a.exp != 0 || a.src_exp != 0))
      flag("infinite-exp", "arrow " + a.id + " carries Frobenius exponents over an infinite base");
    uint32_t ext_gens = 0;
    switch (q.ring_extension.kind) {
      case RingExtension::Kind::Eps: ext_gens = 1; break;
      case RingExtension::Kind::Trunc: ext_gens = q.ring_extension.vars; break;
      case RingExtension::Kind::Xi: ext_gens = 2; break;
      case RingExtension::Kind::None: break;
    }
    if (a.ring_factor.size() > ext_gens)
      flag("ring-factor", "arrow " + a.id + " scales by more ring generators than the extension has");
  }

  std::map<std::pair<std::string, std::string>, std::vector<std::string>> parallel;
  for (const auto& a : q.arrows) parallel[{a.src, a.dst}].push_back(a.id);
  for (const auto& [key, ids] : parallel)
    if (ids.size() > 1 && key.first != key.second)
      flag("parallel", "arrows " + ids[0] + " and " + ids[1] + " share endpoints " + key.first +
                           " -> " + key.second);

  if (!topo_order(q)) flag("cycle", "the arrow graph has a directed cycle");

  // Glued arrows: endpoints glued pairwise with matching twists, and arrow
  // exponents within the lattice allowed by the endpoint field degrees.
  for (auto& [cls, idx0] : q.arrow_classes()) {
    std::vector<uint32_t> idx = idx0;
    std::sort(idx.begin(), idx.end(),
              [&](uint32_t x, uint32_t y) { return q.arrows[x].id < q.arrows[y].id; });
    const Arrow& rep0 = q.arrows[idx[0]];
    int rs = q.vertex_index(rep0.src), rd = q.vertex_index(rep0.dst);
    if (rs < 0 || rd < 0) continue;
    for (size_t k = 1; k < idx.size(); k++) {
      const Arrow& a = q.arrows[idx[k]];
      int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
      if (s < 0 || d < 0) continue;
      const Vertex &vs = q.vertices[s], &vd = q.vertices[d];
      const Vertex &ws = q.vertices[rs], &wd = q.vertices[rd];
      // Zero vertices form one implicit glue kind: there is no diagonal
      // component that could separate arrows between them.
      bool src_glued = (s == rs) || (vs.zero && ws.zero) ||
                       (!vs.glue_class.empty() && vs.glue_class == ws.glue_class);
      bool dst_glued = (d == rd) || (vd.zero && wd.zero) ||
                       (!vd.glue_class.empty() && vd.glue_class == wd.glue_class);
      if (!src_glued) {
        flag("p2p-src", "class " + cls + ": arrows " + rep0.id + " and " + a.id +
                            " have unglued sources " + rep0.src + ", " + a.src);
        continue;
      }
      if (!dst_glued) {
        flag("p2p-dst", "class " + cls + ": arrows " + rep0.id + " and " + a.id +
                            " have unglued targets " + rep0.dst + ", " + a.dst);
        continue;
      }
      int64_t dsrc = int64_t(vs.twist) - int64_t(ws.twist);
      int64_t ddst = int64_t(vd.twist) - int64_t(wd.twist);
      uint32_t g = gcd0(ws.field_degree, wd.field_degree);
      if (!congruent(dsrc, ddst, g))
        flag("p2p-twist", "class " + cls + ": arrows " + rep0.id + " and " + a.id +
                              " join endpoints of unequal relative twist");
      int64_t de = eff_exp(a) - eff_exp(rep0);
      if (!congruent(de, dsrc, g))
        flag("arrow-twist", "class " + cls + ": arrow " + a.id + " exponent offset " +
                                std::to_string(de) + " incompatible with vertex twist offset " +
                                std::to_string(dsrc) + " mod " + std::to_string(g));
    }
  }

  // Declared pairwise diagonal table: membership, agreement with the twist
  // representation, and the cocycle condition on declared triangles.
  auto vcls = q.vertex_classes();
  std::map<std::string, std::map<std::pair<std::string, std::string>, int64_t>> tables;
  for (const auto& dg : q.declared_gluing) {
    auto it = vcls.find(dg.glue_class);
    if (it == vcls.end()) {
      flag("declared-class", "declared gluing names unknown class " + dg.glue_class);
      continue;
    }
    const Vertex& rep0 = q.vertices[it->second[0]];
    uint32_t t = rep0.field_degree;
    int ia = q.vertex_index(dg.a), ib = q.vertex_index(dg.b);
    bool ina = ia >= 0 && q.vertices[ia].glue_class == dg.glue_class;
    bool inb = ib >= 0 && q.vertices[ib].glue_class == dg.glue_class;
    if (!ina || !inb) {
      flag("declared-member",
           "declared gluing pair " + dg.a + ", " + dg.b + " not inside class " + dg.glue_class);
      continue;
    }
    int64_t want = int64_t(q.vertices[ib].twist) - int64_t(q.vertices[ia].twist);
    if (!congruent(int64_t(dg.exp), want, t))
      flag("declared-vs-twist", "class " + dg.glue_class + ": declared exponent " +
                                    std::to_string(dg.exp) + " for " + dg.a + " -> " + dg.b +
                                    " disagrees with vertex twists");
    auto& tab = tables[dg.glue_class];
    tab[{dg.a, dg.b}] = int64_t(dg.exp);
    if (!tab.count({dg.b, dg.a}))
      tab[{dg.b, dg.a}] = t == 0 ? -int64_t(dg.exp) : mod_pos(-int64_t(dg.exp), t);
  }
  for (const auto& [cls, tab] : tables) {
    uint32_t t = q.vertices[vcls[cls][0]].field_degree;
    for (const auto& [ab, eab] : tab)
      for (const auto& [bc, ebc] : tab) {
        if (ab.second != bc.first) continue;
        auto ac = tab.find({ab.first, bc.second});
        if (ac == tab.end()) continue;
        if (!congruent(eab + ebc, ac->second, t))
          flag("cocycle", "class " + cls + ": exponents " + ab.first + "->" + ab.second + "->" +
                              bc.second + " sum to " + std::to_string(eab + ebc) +
                              " but the declared direct exponent is " +
                              std::to_string(ac->second) + " (mod " + std::to_string(t) + ")");
      }
  }

  std::set<std::string> symbols;
  for (const auto& v : q.vertices) {
    symbols.insert(v.id);
    if (!v.glue_class.empty()) symbols.insert(v.glue_class);
  }
  for (const auto& a : q.arrows) {
    symbols.insert(a.id);
    if (!a.glue_class.empty()) symbols.insert(a.glue_class);
  }
  for (const auto& r : q.relations)
    for (const auto& t : r.terms) {
      if (!symbols.count(t.symbol))
        flag("relation-symbol", "relation term references unknown symbol " + t.symbol);
      if (q.base.infinite && t.exp != 0)
        flag("relation-linear", "relation term " + t.symbol + " twisted over an infinite base");
    }

  return rep;
}

PrimitiveResult primitive_arrows(const FullQuiver& q) {
  PrimitiveResult res;
  std::set<std::pair<std::string, std::string>> edge;
  for (const auto& a : q.arrows) edge.insert({a.src, a.dst});
  std::vector<bool> prim(q.arrows.size(), true);
  for (size_t i = 0; i < q.arrows.size(); i++) {
    const Arrow& a = q.arrows[i];
    for (const auto& v : q.vertices) {
      if (v.id == a.src || v.id == a.dst) continue;
      if (edge.count({a.src, v.id}) && edge.count({v.id, a.dst})) {
        prim[i] = false;
        break;
      }
    }
    if (prim[i]) res.primitive.push_back(uint32_t(i));
  }

  std::map<std::string, uint32_t> class_size;
  for (const auto& a : q.arrows)
    if (!a.glue_class.empty()) class_size[a.glue_class]++;

  res.erased = q;
  res.erased.arrows.clear();
  for (size_t i = 0; i < q.arrows.size(); i++) {
    const Arrow& a = q.arrows[i];
    bool singleton = a.glue_class.empty() || class_size[a.glue_class] == 1;
    if (prim[i] || !singleton) res.erased.arrows.push_back(a);
  }

  std::set<std::string> symbols;
  for (const auto& v : res.erased.vertices) {
    symbols.insert(v.id);
    if (!v.glue_class.empty()) symbols.insert(v.glue_class);
  }
  for (const auto& a : res.erased.arrows) {
    symbols.insert(a.id);
    if (!a.glue_class.empty()) symbols.insert(a.glue_class);
  }
  std::vector<QRelation> kept;
  for (const auto& r : res.erased.relations) {
    bool ok = true;
    for (const auto& t : r.terms) ok = ok && symbols.count(t.symbol);
    if (ok) kept.push_back(r);
  }
  res.erased.relations = kept;
  return res;
}

std::vector<Branch> branches(const FullQuiver& q) {
  PrimitiveResult pr = primitive_arrows(q);
  size_t n = q.vertices.size();
  std::vector<std::vector<std::pair<std::string, uint32_t>>> out(n);  // (dst id, arrow idx)
  std::vector<bool> has_in(n, false);
  for (uint32_t ai : pr.primitive) {
    const Arrow& a = q.arrows[ai];
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s < 0 || d < 0) continue;
    out[s].push_back({a.dst, ai});
    has_in[d] = true;
  }
  for (auto& o : out) std::sort(o.begin(), o.end());

  std::vector<Branch> result;
  Branch cur;
  std::function<void(uint32_t)> walk = [&](uint32_t v) {
    cur.vertices.push_back(q.vertices[v].id);
    if (out[v].empty()) {
      result.push_back(cur);
    } else {
      for (const auto& [dst, ai] : out[v]) {
        cur.arrows.push_back(ai);
        walk(uint32_t(q.vertex_index(dst)));
        cur.arrows.pop_back();
      }
    }
    cur.vertices.pop_back();
  };

  std::vector<std::pair<std::string, uint32_t>> roots;
  for (size_t i = 0; i < n; i++)
    if (!has_in[i]) roots.push_back({q.vertices[i].id, uint32_t(i)});
  std::sort(roots.begin(), roots.end());
  for (const auto& [id, i] : roots) walk(i);
  return result;
}

FullQuiver reverse(const FullQuiver& q) {
  FullQuiver r = q;
  for (auto& a : r.arrows) std::swap(a.src, a.dst);
  return r;
}

uint32_t ClassicalQuiver::multiplicity(uint32_t from, uint32_t to) const {
  auto it = multiplicities.find({from, to});
  return it == multiplicities.end() ? 0 : it->second;
}

std::vector<std::vector<std::string>> glue_connected_components(const FullQuiver& q) {
  size_t n = q.vertices.size();
  std::vector<uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<uint32_t(uint32_t)> find = [&](uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](uint32_t a, uint32_t b) { parent[find(a)] = find(b); };
  for (const auto& a : q.arrows) {
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s >= 0 && d >= 0) unite(uint32_t(s), uint32_t(d));
  }
  for (const auto& [cls, idx] : q.vertex_classes())
    for (size_t k = 1; k < idx.size(); k++) unite(idx[0], idx[k]);

  std::map<uint32_t, std::vector<std::string>> groups;
  for (size_t i = 0; i < n; i++) groups[find(uint32_t(i))].push_back(q.vertices[i].id);
  std::vector<std::vector<std::string>> result;
  for (auto& [root, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    result.push_back(ids);
  }
  std::sort(result.begin(), result.end());
  return result;
}

namespace {

// Directed reachability by paths of length >= 1.
std::vector<std::vector<bool>> reach_matrix(const FullQuiver& q) {
  size_t n = q.vertices.size();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (const auto& a : q.arrows) {
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s >= 0 && d >= 0) r[s][d] = true;
  }
  for (size_t k = 0; k < n; k++)
    for (size_t i = 0; i < n; i++)
      if (r[i][k])
        for (size_t j = 0; j < n; j++)
          if (r[k][j]) r[i][j] = true;
  return r;
}

bool vertex_embeddable(const Vertex& s, const Vertex& h, bool unital) {
  if (s.levels != h.levels) return false;
  if (!s.zero && h.zero) return false;
  if (h.field_degree == 0) return s.matrix_degree <= h.matrix_degree;
  if (s.field_degree == 0) return false;  // infinite never fits in finite
  uint64_t cap = uint64_t(s.matrix_degree) * std::lcm(s.field_degree, h.field_degree) /
                 h.field_degree;
  if (cap > h.matrix_degree) return false;
  if (unital && cap > 0 && h.matrix_degree % cap != 0) return false;
  return true;
}

struct MorphismSearch {
  const FullQuiver& sub;
  const FullQuiver& host;
  std::vector<std::vector<bool>> hreach;
  std::vector<int> assign;      // sub vertex index -> host vertex index
  std::vector<bool> used;       // host vertex taken
  std::vector<uint32_t> order;  // sub vertices, most constrained first
  std::vector<std::vector<uint32_t>> candidates;

  bool compatible(uint32_t sv, uint32_t hv) const {
    // arrows incident to already-assigned vertices must land on arrows or
    // directed composites of the host
    for (const auto& a : sub.arrows) {
      int s = sub.vertex_index(a.src), d = sub.vertex_index(a.dst);
      if (s < 0 || d < 0) continue;
      int hs = s == int(sv) ? int(hv) : assign[s];
      int hd = d == int(sv) ? int(hv) : assign[d];
      if (s != int(sv) && d != int(sv)) continue;
      if (hs < 0 || hd < 0) continue;
      const std::string &hsid = host.vertices[hs].id, &hdid = host.vertices[hd].id;
      if (host.arrow_between(hsid, hdid) < 0 && !hreach[hs][hd]) return false;
    }
    // sub-side vertex gluing must be reflected with the same relative twist
    const Vertex& v = sub.vertices[sv];
    if (!v.glue_class.empty()) {
      for (size_t u = 0; u < sub.vertices.size(); u++) {
        if (u == sv || assign[u] < 0) continue;
        const Vertex& w = sub.vertices[u];
        if (w.glue_class != v.glue_class) continue;
        const Vertex& hv_ = host.vertices[hv];
        const Vertex& hw = host.vertices[assign[u]];
        if (hv_.glue_class.empty() || hv_.glue_class != hw.glue_class) return false;
        int64_t dsub = int64_t(v.twist) - int64_t(w.twist);
        int64_t dhost = int64_t(hv_.twist) - int64_t(hw.twist);
        if (!congruent(dhost, dsub, v.field_degree)) return false;
      }
    }
    return true;
  }

  bool arrow_gluing_ok() const {
    for (const auto& [cls, idx] : sub.arrow_classes()) {
      for (size_t i = 0; i < idx.size(); i++)
        for (size_t j = i + 1; j < idx.size(); j++) {
          const Arrow &a1 = sub.arrows[idx[i]], &a2 = sub.arrows[idx[j]];
          int h1 = host.arrow_between(image(a1.src), image(a1.dst));
          int h2 = host.arrow_between(image(a2.src), image(a2.dst));
          if (h1 < 0 || h2 < 0) continue;  // composite image: gluing not checked
          const Arrow &b1 = host.arrows[h1], &b2 = host.arrows[h2];
          if (b1.glue_class.empty() || b1.glue_class != b2.glue_class) return false;
          if (!nu_ratio_equal(a1, a2, b1, b2)) return false;
          uint32_t m = gcd0(sub.vertex(a1.src).field_degree, sub.vertex(a1.dst).field_degree);
          if (!congruent(eff_exp(b2) - eff_exp(b1), eff_exp(a2) - eff_exp(a1), m)) return false;
        }
    }
    return true;
  }

  std::string image(const std::string& sid) const {
    return host.vertices[assign[sub.vertex_index(sid)]].id;
  }

  bool nu_ratio_equal(const Arrow& a1, const Arrow& a2, const Arrow& b1, const Arrow& b2) const {
    if (sub.base.infinite || host.base.infinite) return a2.nu * b1.nu == b2.nu * a1.nu;
    Fq f(sub.base.p, sub.base.t);
    uint32_t ra = f.mul(f.from_int(a2.nu), f.inv(f.from_int(a1.nu)));
    uint32_t rb = f.mul(f.from_int(b2.nu), f.inv(f.from_int(b1.nu)));
    return ra == rb;
  }

  bool search(size_t k) {
    if (k == order.size()) return arrow_gluing_ok();
    uint32_t sv = order[k];
    for (uint32_t hv : candidates[sv]) {
      if (used[hv] || !compatible(sv, hv)) continue;
      assign[sv] = int(hv);
      used[hv] = true;
      if (search(k + 1)) return true;
      assign[sv] = -1;
      used[hv] = false;
    }
    return false;
  }
};

}  // namespace

std::optional<Morphism> find_morphism(const FullQuiver& sub, const FullQuiver& host, bool unital) {
  MorphismSearch ms{sub, host, reach_matrix(host), {}, {}, {}, {}};
  size_t ns = sub.vertices.size(), nh = host.vertices.size();
  ms.assign.assign(ns, -1);
  ms.used.assign(nh, false);
  ms.candidates.resize(ns);
  for (size_t i = 0; i < ns; i++) {
    std::vector<std::pair<std::pair<bool, std::string>, uint32_t>> ranked;
    for (size_t j = 0; j < nh; j++)
      if (vertex_embeddable(sub.vertices[i], host.vertices[j], unital))
        ranked.push_back({{host.vertices[j].id != sub.vertices[i].id, host.vertices[j].id},
                          uint32_t(j)});
    std::sort(ranked.begin(), ranked.end());
    for (const auto& [key, j] : ranked) ms.candidates[i].push_back(j);
  }
  for (size_t i = 0; i < ns; i++) ms.order.push_back(uint32_t(i));
  std::sort(ms.order.begin(), ms.order.end(), [&](uint32_t a, uint32_t b) {
    if (ms.candidates[a].size() != ms.candidates[b].size())
      return ms.candidates[a].size() < ms.candidates[b].size();
    return sub.vertices[a].id < sub.vertices[b].id;
  });
  if (!ms.search(0)) return std::nullopt;

  Morphism m;
  for (size_t i = 0; i < ns; i++) m.vertex_map[sub.vertices[i].id] = host.vertices[ms.assign[i]].id;
  for (const auto& a : sub.arrows) {
    int s = sub.vertex_index(a.src), d = sub.vertex_index(a.dst);
    if (s < 0 || d < 0) continue;
    if (host.arrow_between(m.vertex_map[a.src], m.vertex_map[a.dst]) < 0)
      m.used_composites = true;
  }
  return m;
}

FullQuiver morita_shrink(const FullQuiver& q) {
  FullQuiver r = q;
  for (auto& v : r.vertices) v.matrix_degree = 1;
  return r;
}

FullQuiver radical_power_quiver(const FullQuiver& q, uint32_t power, PowerKind kind) {
  size_t n = q.vertices.size();
  auto reach = reach_matrix(q);

  // Longest path lengths, optionally restricted to arrows between zero blocks.
  auto longest = [&](bool zero_only) {
    std::vector<std::vector<int32_t>> d(n, std::vector<int32_t>(n, -1));
    auto order = topo_order(q);
    std::vector<uint32_t> rev(order ? *order : std::vector<uint32_t>{});
    std::reverse(rev.begin(), rev.end());
    for (uint32_t u : rev) {
      for (const auto& a : q.arrows) {
        int s = q.vertex_index(a.src), t = q.vertex_index(a.dst);
        if (s != int(u) || t < 0) continue;
        if (zero_only && (!q.vertices[s].zero || !q.vertices[t].zero)) continue;
        d[u][t] = std::max(d[u][t], 1);
        for (size_t v = 0; v < n; v++)
          if (d[t][v] >= 0) d[u][v] = std::max(d[u][v], 1 + d[t][v]);
      }
    }
    return d;
  };

  std::vector<std::vector<int32_t>> pared = longest(true);
  std::vector<std::vector<int32_t>> any = longest(false);

  auto keeps = [&](size_t u, size_t v) {
    if (kind == PowerKind::Radical) return any[u][v] >= int32_t(power);
    if (pared[u][v] >= int32_t(power)) return true;
    if (!reach[u][v]) return false;
    if (!q.vertices[u].zero || !q.vertices[v].zero) return true;
    for (size_t m = 0; m < n; m++)
      if (!q.vertices[m].zero && reach[u][m] && reach[m][v]) return true;
    return false;
  };

  FullQuiver r;
  r.base = q.base;
  r.vertices = q.vertices;
  if (kind == PowerKind::Radical)
    for (auto& v : r.vertices) {
      v.zero = true;
      v.glue_class.clear();
      v.twist = 0;
      v.levels.clear();
    }

  std::set<std::pair<size_t, size_t>> covered;
  for (const auto& a : q.arrows) {
    int s = q.vertex_index(a.src), d = q.vertex_index(a.dst);
    if (s < 0 || d < 0 || !keeps(s, d)) continue;
    r.arrows.push_back(a);
    covered.insert({size_t(s), size_t(d)});
  }
  for (size_t u = 0; u < n; u++)
    for (size_t v = 0; v < n; v++) {
      if (u == v || covered.count({u, v}) || !keeps(u, v)) continue;
      Arrow a;
      a.id = q.vertices[u].id + ">" + q.vertices[v].id;
      a.src = q.vertices[u].id;
      a.dst = q.vertices[v].id;
      r.arrows.push_back(a);
    }

  if (kind == PowerKind::Radical) r.declared_gluing.clear();
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

FullQuiver induced_subquiver(const FullQuiver& q, const std::set<std::string>& keep) {
  FullQuiver r;
  r.base = q.base;
  for (const auto& v : q.vertices)
    if (keep.count(v.id)) r.vertices.push_back(v);
  for (const auto& a : q.arrows)
    if (keep.count(a.src) && keep.count(a.dst)) r.arrows.push_back(a);
  for (const auto& dg : q.declared_gluing)
    if (keep.count(dg.a) && keep.count(dg.b)) r.declared_gluing.push_back(dg);
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

FullQuiver normalized(const FullQuiver& q) {
  FullQuiver r = q;
  std::sort(r.vertices.begin(), r.vertices.end(),
            [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
  std::sort(r.arrows.begin(), r.arrows.end(),
            [](const Arrow& a, const Arrow& b) { return a.id < b.id; });
  std::sort(r.declared_gluing.begin(), r.declared_gluing.end(),
            [](const DeclaredGluing& a, const DeclaredGluing& b) {
              return std::tie(a.glue_class, a.a, a.b) < std::tie(b.glue_class, b.a, b.b);
            });
  std::sort(r.relations.begin(), r.relations.end(),
            [](const QRelation& a, const QRelation& b) { return a.to_string() < b.to_string(); });
  return r;
}

namespace {

struct IsoSearch {
  const FullQuiver& a;
  const FullQuiver& b;
  std::vector<int> assign;
  std::vector<bool> used;

  bool vertex_same_shape(const Vertex& x, const Vertex& y) const {
    return x.matrix_degree == y.matrix_degree && x.field_degree == y.field_degree &&
           x.zero == y.zero && x.levels == y.levels;
  }

  bool compatible(uint32_t av, uint32_t bv) const {
    if (!vertex_same_shape(a.vertices[av], b.vertices[bv])) return false;
    for (size_t u = 0; u < a.vertices.size(); u++) {
      if (assign[u] < 0 || u == av) continue;
      const std::string &au = a.vertices[u].id, &bu = b.vertices[assign[u]].id;
      const std::string &avid = a.vertices[av].id, &bvid = b.vertices[bv].id;
      bool ea1 = a.arrow_between(au, avid) >= 0, eb1 = b.arrow_between(bu, bvid) >= 0;
      bool ea2 = a.arrow_between(avid, au) >= 0, eb2 = b.arrow_between(bvid, bu) >= 0;
      if (ea1 != eb1 || ea2 != eb2) return false;
      const Vertex &vu = a.vertices[u], &vv = a.vertices[av];
      const Vertex &wu = b.vertices[assign[u]], &wv = b.vertices[bv];
      bool ga = !vu.glue_class.empty() && vu.glue_class == vv.glue_class;
      bool gb = !wu.glue_class.empty() && wu.glue_class == wv.glue_class;
      if (ga != gb) return false;
      if (ga) {
        int64_t da = int64_t(vv.twist) - int64_t(vu.twist);
        int64_t db = int64_t(wv.twist) - int64_t(wu.twist);
        if (!congruent(da, db, vu.field_degree)) return false;
      }
    }
    return true;
  }

  static std::vector<uint32_t> factor_of(const Arrow& ar) {
    std::vector<uint32_t> f = ar.ring_factor;
    while (!f.empty() && f.back() == 0) f.pop_back();
    return f;
  }

  bool arrows_match() const {
    // arrow class partition and relative gluing data must correspond
    std::map<std::string, std::vector<uint32_t>> acls = a.arrow_classes();
    for (const auto& [cls, idx] : acls) {
      std::vector<int> img;
      for (uint32_t ai : idx) {
        const Arrow& ar = a.arrows[ai];
        int s = a.vertex_index(ar.src), d = a.vertex_index(ar.dst);
        int bi = b.arrow_between(b.vertices[assign[s]].id, b.vertices[assign[d]].id);
        if (bi < 0) return false;
        if (factor_of(ar) != factor_of(b.arrows[bi])) return false;
        img.push_back(bi);
      }
      for (size_t k = 1; k < img.size(); k++) {
        const Arrow &b0 = b.arrows[img[0]], &bk = b.arrows[img[k]];
        if (b0.glue_class.empty() || b0.glue_class != bk.glue_class) return false;
        const Arrow &a0 = a.arrows[idx[0]], &ak = a.arrows[idx[k]];
        if (!nu_ratio_equal(a0, ak, b0, bk)) return false;
        uint32_t m = gcd0(a.vertex(a0.src).field_degree, a.vertex(a0.dst).field_degree);
        if (!congruent(eff_exp(bk) - eff_exp(b0), eff_exp(ak) - eff_exp(a0), m)) return false;
      }
    }
    // unglued arrows must map to arrows whose class is a singleton
    std::map<std::string, uint32_t> bsize;
    for (const auto& ar : b.arrows)
      if (!ar.glue_class.empty()) bsize[ar.glue_class]++;
    for (const auto& ar : a.arrows) {
      if (!ar.glue_class.empty() && acls[ar.glue_class].size() > 1) continue;
      int s = a.vertex_index(ar.src), d = a.vertex_index(ar.dst);
      int bi = b.arrow_between(b.vertices[assign[s]].id, b.vertices[assign[d]].id);
      if (bi < 0) return false;
      const Arrow& br = b.arrows[bi];
      if (factor_of(ar) != factor_of(br)) return false;
      if (!br.glue_class.empty() && bsize[br.glue_class] > 1) return false;
    }
    return true;
  }

  bool nu_ratio_equal(const Arrow& a1, const Arrow& a2, const Arrow& b1, const Arrow& b2) const {
    if (a.base.infinite) return a2.nu * b1.nu == b2.nu * a1.nu;
    Fq f(a.base.p, a.base.t);
    return f.mul(f.from_int(a2.nu), f.inv(f.from_int(a1.nu))) ==
           f.mul(f.from_int(b2.nu), f.inv(f.from_int(b1.nu)));
  }

  bool search(size_t k) {
    if (k == a.vertices.size()) return arrows_match();
    for (size_t j = 0; j < b.vertices.size(); j++) {
      if (used[j] || !compatible(uint32_t(k), uint32_t(j))) continue;
      assign[k] = int(j);
      used[j] = true;
      if (search(k + 1)) return true;
      assign[k] = -1;
      used[j] = false;
    }
    return false;
  }
};

}  // namespace

bool isomorphic(const FullQuiver& a, const FullQuiver& b) {
  if (a.base != b.base || a.ring_extension != b.ring_extension) return false;
  if (a.vertices.size() != b.vertices.size() || a.arrows.size() != b.arrows.size()) return false;
  IsoSearch is{a, b, std::vector<int>(a.vertices.size(), -1),
               std::vector<bool>(b.vertices.size(), false)};
  return is.search(0);
}

}  // namespace qf
