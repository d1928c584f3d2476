#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "builders.hpp"
#include "quiverforge/materialize.hpp"
#include "quiverforge/quiver.hpp"

using namespace qf;
using namespace qf::testing;

namespace {

// One glued diagonal class repeated with a Frobenius twist, single free arrow.
FullQuiver twisted_pair(uint32_t u = 1) {
  return quiv(gf(2), {vx("r", "I", 1, 2), vx("s", "I", 1, 2, u)}, {ar("b", "r", "s")});
}

// Three glued scalar vertices, arrow pair glued with constant nu, free corner.
FullQuiver weighted_chain(BaseField base, int64_t nu) {
  return quiv(base, {vx("x", "I", 1, base.infinite ? 0 : 1), vx("y", "I", 1, base.infinite ? 0 : 1),
                     vx("z", "I", 1, base.infinite ? 0 : 1)},
              {ar("b1", "x", "y", "B"), ar("b2", "y", "z", "B", nu), ar("c", "x", "z")});
}

// Glued 3-vertex triangle whose algebra is scalars plus one nilpotent of
// order 3.
FullQuiver shift_triangle() {
  return quiv(gf(2), {vx("u0", "I", 1, 1), vx("u1", "I", 1, 1), vx("u2", "I", 1, 1)},
              {ar("s1a", "u0", "u1", "S1"), ar("s1b", "u1", "u2", "S1"), ar("s2", "u0", "u2")});
}

FullQuiver compressed_point(std::vector<uint32_t> levels, BaseField base, uint32_t t) {
  Vertex v = vx("I", "", 1, t);
  v.levels = std::move(levels);
  return quiv(base, {v}, {});
}

// Square with all four arrows in one class, bottom edge weighted -1: the two
// path composites carry the same monomial and cancel.
FullQuiver cancelling_square() {
  return quiv(inf_base(),
              {vx("v1", "D", 1, 0), vx("v2", "D", 1, 0), vx("v3", "D", 1, 0), vx("v4", "D", 1, 0)},
              {ar("b1", "v1", "v2", "B"), ar("b2", "v3", "v4", "B", -1), ar("c1", "v1", "v3", "B"),
               ar("c2", "v2", "v4", "B")});
}

// Square with constants lam, lamp on the second members; the composite
// carries 1 + lam*lamp.
FullQuiver weighted_square(int64_t lam, int64_t lamp) {
  return quiv(inf_base(),
              {vx("w1", "D", 1, 0), vx("w2", "D", 1, 0), vx("w3", "D", 1, 0), vx("w4", "D", 1, 0)},
              {ar("a1", "w1", "w2", "A"), ar("a2", "w1", "w3", "A", lam), ar("b1", "w2", "w4", "B"),
               ar("b2", "w3", "w4", "B", lamp)});
}

FullQuiver zero_chain4() {
  return quiv(gf(2), {zv("z1"), zv("z2"), zv("z3"), zv("z4")},
              {ar("a", "z1", "z2"), ar("b", "z2", "z3"), ar("c", "z3", "z4")});
}

uint32_t sym_of(const Scalar& s) {
  REQUIRE(s.terms().size() == 1);
  const Monomial& m = s.terms().begin()->first;
  REQUIRE(m.size() == 1);
  REQUIRE(m[0].second == 1);
  return m[0].first;
}

uint32_t max_branch(const FullQuiver& q) {
  uint32_t m = 0;
  for (const auto& b : branches(q)) m = std::max(m, b.length());
  return m;
}

}  // namespace

TEST_CASE("layout sums block sizes in topological order") {
  FullQuiver q = quiv(inf_base(), {vx("t2", "", 1, 0), vx("t1", "", 2, 0), vx("t4", "", 1, 0),
                                   vx("t3", "", 2, 0)},
                      {ar("a", "t1", "t2"), ar("b", "t2", "t3"), ar("c", "t3", "t4")});
  BlockLayout l = layout(q);
  CHECK(l.total == 6);
  CHECK(l.order == std::vector<std::string>{"t1", "t2", "t3", "t4"});
  CHECK(l.at("t1") == std::pair<uint32_t, uint32_t>{0, 2});
  CHECK(l.at("t3") == std::pair<uint32_t, uint32_t>{3, 2});
  CHECK_THROWS_AS(l.at("t9"), std::out_of_range);

  CHECK(layout(quiv(inf_base(), {vx("s", "", 3, 0)}, {})).total == 3);
  CHECK(layout(compressed_point({2, 2}, gf(2), 1)).total == 4);
  CHECK(layout(compressed_point({3}, gf(2), 1)).total == 3);
}

TEST_CASE("generic element of a twisted diagonal pair") {
  GenericSet gs = generic_elements(twisted_pair(1));
  const Mat& m = gs.elements[0];
  CHECK(m.rows == 2);
  CHECK(m.at(1, 0).is_zero());
  CHECK(m.at(1, 1) == m.at(0, 0).frobenius(1));
  CHECK_FALSE(m.at(0, 1).is_zero());
  CHECK(m.at(0, 1) != m.at(0, 0));

  uint32_t alpha = sym_of(gs.parameters[0].at("I")[0]);
  CHECK(gs.ring.symbol(alpha).kind == SymbolKind::Fin);
  CHECK(gs.ring.symbol(alpha).fin_modulus == 4);
  uint32_t beta = sym_of(gs.parameters[0].at("b")[0]);
  CHECK(gs.ring.symbol(beta).kind == SymbolKind::Free);

  // the twist survives multiplication of independent copies
  GenericSet two = generic_elements(twisted_pair(1), 2);
  Mat p = two.elements[0] * two.elements[1];
  CHECK(p.at(1, 1) == p.at(0, 0).frobenius(1));
}

TEST_CASE("generic element of a weighted chain") {
  GenericSet gs = generic_elements(weighted_chain(gf(3), 2), 2);
  const Mat& m = gs.elements[0];
  CHECK(m.at(0, 0) == m.at(1, 1));
  CHECK(m.at(0, 0) == m.at(2, 2));
  CHECK(m.at(1, 2) == m.at(0, 1).scaled(2));
  CHECK_FALSE(m.at(0, 2).is_zero());
  CHECK(m.at(0, 2) != m.at(0, 1));

  Mat p = gs.elements[0] * gs.elements[1];
  CHECK(p.at(1, 2) == p.at(0, 1).scaled(2));
  CHECK(p.at(0, 0) == p.at(1, 1));
}

TEST_CASE("generic element of compressed vertices") {
  GenericSet gs = generic_elements(compressed_point({2, 2}, gf(2), 1));
  const Mat& m = gs.elements[0];
  REQUIRE(m.rows == 4);
  for (uint32_t k = 1; k < 4; k++) CHECK(m.at(k, k) == m.at(0, 0));
  CHECK(m.at(2, 3) == m.at(0, 1));
  CHECK(m.at(1, 3) == m.at(0, 2));
  CHECK(m.at(1, 2).is_zero());
  CHECK_FALSE(m.at(0, 3).is_zero());
  CHECK(m.at(0, 3) != m.at(0, 1));
  for (uint32_t i = 1; i < 4; i++)
    for (uint32_t j = 0; j < i; j++) CHECK(m.at(i, j).is_zero());

  // zero diagonal keeps the shift part only
  Vertex z = zv("z");
  z.levels = {2};
  GenericSet zc = generic_elements(quiv(gf(2), {z}, {}));
  CHECK(zc.elements[0].at(0, 0).is_zero());
  CHECK(zc.elements[0].at(1, 1).is_zero());
  CHECK_FALSE(zc.elements[0].at(0, 1).is_zero());
}

TEST_CASE("specialization lands in the declared pattern and checks subfields") {
  GenericSet gs = generic_elements(twisted_pair(1));
  uint32_t alpha = sym_of(gs.parameters[0].at("I")[0]);
  uint32_t beta = sym_of(gs.parameters[0].at("b")[0]);
  Fq f4(2, 2);

  ConcreteMat sp = specialize(gs.elements[0], gs.ring, {{alpha, 2}, {beta, 3}}, f4);
  CHECK(sp.at(0, 0) == 2);
  CHECK(sp.at(0, 1) == 3);
  CHECK(sp.at(1, 0) == 0);
  CHECK(sp.at(1, 1) == f4.mul(2, 2));

  ConcreteMat zero = specialize(gs.elements[0], gs.ring, {{alpha, 0}, {beta, 0}}, f4);
  CHECK(zero == ConcreteMat(2, 2));

  // a modulus-2 symbol cannot take a value outside GF(2)
  GenericSet w = generic_elements(weighted_chain(gf(2), 1));
  uint32_t a = sym_of(w.parameters[0].at("I")[0]);
  CHECK_THROWS_AS(specialize(w.elements[0], w.ring, {{a, 2}}, f4), std::invalid_argument);
}

TEST_CASE("products of specializations keep the gluing") {
  Fq f3(3, 1);
  GenericSet gs = generic_elements(weighted_chain(gf(3), 2), 2);
  std::map<uint32_t, uint32_t> v0, v1;
  uint32_t vals0[] = {1, 2, 1}, vals1[] = {2, 1, 2};
  const char* keys[] = {"I", "B", "c"};
  for (int k = 0; k < 3; k++) {
    v0[sym_of(gs.parameters[0].at(keys[k])[0])] = vals0[k];
    v1[sym_of(gs.parameters[1].at(keys[k])[0])] = vals1[k];
  }
  ConcreteMat x = specialize(gs.elements[0], gs.ring, v0, f3);
  ConcreteMat y = specialize(gs.elements[1], gs.ring, v1, f3);
  CHECK(x.at(1, 2) == f3.mul(2, x.at(0, 1)));
  ConcreteMat p = mat_mul(x, y, f3);
  CHECK(p.at(1, 2) == f3.mul(2, p.at(0, 1)));
  CHECK(p.at(0, 0) == p.at(1, 1));
}

TEST_CASE("span closure of the shift triangle is three dimensional") {
  AlgebraBasis alg = materialize_algebra(shift_triangle());
  CHECK(alg.dim() == 3);
  CHECK(alg.unital);

  BlockLayout lay = layout(shift_triangle());
  RadicalFiltration rad = radical_powers(alg, lay, shift_triangle());
  CHECK(rad.nilpotence == 3);
  CHECK(rad.radical_dim(1) == 2);
  CHECK(rad.radical_dim(2) == 1);

  // the compressed single vertex materializes to the same algebra
  FullQuiver c = compressed_point({3}, gf(2), 1);
  AlgebraBasis calg = materialize_algebra(c);
  CHECK(calg.dim() == 3);
  CHECK(radical_powers(calg, layout(c), c).nilpotence == 3);
}

TEST_CASE("span closure of explicit matrices") {
  Ring ring{Fq(2, 1)};
  Mat e12(2, 2, ring);
  e12.at(0, 1) = Scalar::constant(ring, 1);
  AlgebraBasis alg = span_closure({e12}, false);
  CHECK(alg.dim() == 1);
  CHECK(alg.product(0, 0) == std::vector<uint32_t>{0});

  // two anticommuting generators close on their product
  Ring r3{Fq(3, 1)};
  Mat g1(4, 4, r3), g2(4, 4, r3);
  g1.at(0, 1) = Scalar::constant(r3, 1);
  g1.at(2, 3) = Scalar::constant(r3, 1);
  g2.at(0, 2) = Scalar::constant(r3, 1);
  g2.at(1, 3) = Scalar::constant(r3, 2);
  AlgebraBasis gr = span_closure({g1, g2}, false);
  CHECK(gr.dim() == 3);
}

TEST_CASE("cancelling square has square-zero radical, its corners do not") {
  FullQuiver q = cancelling_square();
  AlgebraBasis alg = materialize_algebra(q);
  CHECK(alg.dim() == 2);
  RadicalFiltration rad = radical_powers(alg, layout(q), q);
  CHECK(rad.nilpotence == 2);
  CHECK(rad.radical_dim(1) == 1);

  FullQuiver side = induced_subquiver(q, {"v1", "v2", "v4"});
  AlgebraBasis salg = materialize_algebra(side);
  CHECK(radical_powers(salg, layout(side), side).nilpotence == 3);
}

TEST_CASE("weighted square composite carries 1 + lam*lamp") {
  FullQuiver q = weighted_square(3, 5);
  AlgebraBasis alg = materialize_algebra(q);
  RadicalFiltration rad = radical_powers(alg, layout(q), q);
  CHECK(rad.nilpotence == 3);
  REQUIRE(rad.radical_dim(2) == 1);
  const Mat& j2 = rad.powers[1][0];
  for (uint32_t i = 0; i < 4; i++)
    for (uint32_t j = 0; j < 4; j++)
      if (i != 0 || j != 3) CHECK(j2.at(i, j).is_zero());
  CHECK_FALSE(j2.at(0, 3).is_zero());

  // lam*lamp = -1 kills the composite
  FullQuiver k = weighted_square(10, 10);
  AlgebraBasis kalg = materialize_algebra(k);
  CHECK(radical_powers(kalg, layout(k), k).nilpotence == 2);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 3; trial++) {
    int64_t lam = int64_t(rng() % 100) + 1, lamp = int64_t(rng() % 100) + 1;
    if ((lam * lamp) % 101 == 100) continue;
    FullQuiver t = weighted_square(lam, lamp);
    CHECK(radical_powers(materialize_algebra(t), layout(t), t).nilpotence == 3);
  }
}

TEST_CASE("zero-diagonal chain is its own radical") {
  FullQuiver q = zero_chain4();
  AlgebraBasis alg = materialize_algebra(q);
  CHECK_FALSE(alg.unital);
  CHECK(alg.dim() == 6);
  RadicalFiltration rad = radical_powers(alg, layout(q), q);
  CHECK(rad.nilpotence == 4);
  CHECK(rad.radical_dim(1) == 6);
  CHECK(rad.radical_dim(2) == 3);
  CHECK(rad.radical_dim(3) == 1);

  // products of J with J^2 stay inside J^3 = span{top corner}
  for (const Mat& x : rad.powers[0])
    for (const Mat& y : rad.powers[1]) {
      Mat p = x * y;
      for (uint32_t i = 0; i < 4; i++)
        for (uint32_t j = 0; j < 4; j++)
          if (i != 0 || j != 3) CHECK(p.at(i, j).is_zero());
    }
}

TEST_CASE("nilpotence is bounded by branch length plus one") {
  for (const FullQuiver& q : {zero_chain4(), cancelling_square(), weighted_square(3, 5),
                              shift_triangle(), weighted_chain(gf(3), 2)}) {
    AlgebraBasis alg = materialize_algebra(q);
    RadicalFiltration rad = radical_powers(alg, layout(q), q);
    CHECK(rad.nilpotence <= max_branch(q) + 1);
  }
}

TEST_CASE("decompression expands levels into glued ladders") {
  FullQuiver one = decompress(compressed_point({2}, inf_base(), 0));
  CHECK(one.vertices.size() == 2);
  REQUIRE(one.arrows.size() == 1);
  CHECK(one.vertices[0].glue_class == one.vertices[1].glue_class);
  CHECK(one.vertices[0].twist == one.vertices[1].twist);
  CHECK(one.vertices[0].levels.empty());
  CHECK(validate(one).ok());

  // plain quivers pass through, a fiber of one is dropped silently
  FullQuiver w = weighted_chain(gf(3), 2);
  CHECK(decompress(w) == w);
  FullQuiver triv = compressed_point({1}, gf(2), 1);
  FullQuiver out = decompress(triv);
  CHECK(out.vertices[0].id == "I");
  CHECK(out.vertices[0].levels.empty());
  CHECK(out.arrows.empty());

  CHECK(isomorphic(decompress(compressed_point({3}, gf(2), 1)), shift_triangle()));
}

TEST_CASE("iterated decompression splits one level per pass") {
  FullQuiver q = compressed_point({2, 2}, gf(2), 1);
  FullQuiver once = decompress_one(q);
  CHECK(once.vertices.size() == 2);
  CHECK(once.vertices[0].levels == std::vector<uint32_t>{2});
  CHECK(once.arrows.size() == 1);

  FullQuiver full = decompress(q);
  CHECK(full.vertices.size() == 4);
  CHECK(full.arrows.size() == 4);
  CHECK(validate(full).ok());
  std::map<std::string, int> class_sizes;
  for (const auto& a : full.arrows) class_sizes[a.glue_class]++;
  REQUIRE(class_sizes.size() == 2);
  for (const auto& [cls, n] : class_sizes) CHECK(n == 2);

  // same dimension and nilpotence on both sides
  AlgebraBasis ca = materialize_algebra(q), fa = materialize_algebra(full);
  CHECK(ca.dim() == 4);
  CHECK(fa.dim() == 4);
  CHECK(radical_powers(ca, layout(q), q).nilpotence == 3);
  CHECK(radical_powers(fa, layout(full), full).nilpotence == 3);
}

TEST_CASE("a block glued to a deeper one sits in its inner cells") {
  // V is a two-fiber block, v3 a plain one, both in class I; the fan arrow
  // fills one free cell per outer slot of V
  Vertex V = vx("V", "I", 1, 1);
  V.levels = {2};
  FullQuiver point = quiv(gf(2), {V, vx("v3", "I", 1, 1)}, {ar("d", "V", "v3", "D")});
  REQUIRE(validate(point).ok());

  GenericSet gs = generic_elements(point);
  const Mat& m = gs.elements[0];
  REQUIRE(m.rows == 3);
  CHECK(m.at(0, 0) == m.at(1, 1));
  CHECK(m.at(2, 2) == m.at(0, 0));
  CHECK_FALSE(m.at(0, 1).is_zero());
  CHECK(m.at(0, 2) != m.at(1, 2));

  FullQuiver fan = quiv(gf(2), {vx("v1", "I", 1, 1), vx("v2", "I", 1, 1), vx("v3", "I", 1, 1)},
                        {ar("u", "v1", "v2"), ar("d1", "v1", "v3", "D"), ar("d2", "v2", "v3", "D")});
  for (const FullQuiver& q : {point, fan}) {
    AlgebraBasis alg = materialize_algebra(q);
    CHECK(alg.dim() == 4);
    CHECK(radical_powers(alg, layout(q), q).nilpotence == 3);
  }
  CHECK(isomorphic(decompress(point), fan));
}

TEST_CASE("unglued arrows between compressed blocks are fully free") {
  auto rect = [](bool glued) {
    Vertex a = vx("A", "I", 1, 1), b = vx("B", "II", 1, 1);
    a.levels = {2};
    b.levels = {2};
    return quiv(gf(2), {a, b}, {ar("e", "A", "B", glued ? "E" : "")});
  };

  // glued: the two diagonal cells move in lockstep, one ladder of rank 2
  FullQuiver lock = rect(true);
  AlgebraBasis la = materialize_algebra(lock);
  CHECK(la.dim() == 6);
  CHECK(radical_powers(la, layout(lock), lock).nilpotence == 3);

  // unglued: all four cells independent, and the longer path survives
  FullQuiver loose = rect(false);
  AlgebraBasis fa = materialize_algebra(loose);
  CHECK(fa.dim() == 8);
  CHECK(radical_powers(fa, layout(loose), loose).nilpotence == 4);

  FullQuiver flat = quiv(gf(2),
                         {vx("x1", "I", 1, 1), vx("x2", "I", 1, 1), vx("y1", "II", 1, 1),
                          vx("y2", "II", 1, 1)},
                         {ar("u", "x1", "x2"), ar("w", "y1", "y2"), ar("e11", "x1", "y1"),
                          ar("e12", "x1", "y2"), ar("e21", "x2", "y1"), ar("e22", "x2", "y2")});
  AlgebraBasis fl = materialize_algebra(flat);
  CHECK(fl.dim() == 8);
  CHECK(radical_powers(fl, layout(flat), flat).nilpotence == 4);
}

TEST_CASE("glued arrows must join blocks of equal depth") {
  Vertex p = vx("p", "I", 1, 1);
  p.levels = {2};
  FullQuiver q = quiv(gf(2),
                      {p, vx("pp", "I", 1, 1), vx("t1", "II", 1, 1), vx("t2", "II", 1, 1)},
                      {ar("a", "p", "t1", "g"), ar("b", "pp", "t2", "g")});
  REQUIRE(validate(q).ok());
  CHECK_THROWS_AS(generic_elements(q), std::invalid_argument);
}

TEST_CASE("ring extensions scale coordinates") {
  // annihilating generators cut the chain's composite
  FullQuiver q = quiv(inf_base(), {vx("p1", "D", 1, 0), vx("p2", "D", 1, 0), vx("p3", "D", 1, 0)},
                      {ar("u1", "p1", "p2"), ar("u2", "p2", "p3")});
  q.ring_extension = {RingExtension::Kind::Xi, 0, 0};
  q.arrows[0].ring_factor = {1};
  q.arrows[1].ring_factor = {0, 1};
  CHECK(validate(q).ok());
  AlgebraBasis alg = materialize_algebra(q);
  CHECK(alg.dim() == 5);
  CHECK(radical_powers(alg, layout(q), q).nilpotence == 2);

  FullQuiver plain = quiv(inf_base(), q.vertices, {ar("u1", "p1", "p2"), ar("u2", "p2", "p3")});
  AlgebraBasis palg = materialize_algebra(plain);
  CHECK(radical_powers(palg, layout(plain), plain).nilpotence == 3);

  // F[e]/(e^3) on a point matches the compressed triangle
  FullQuiver eps = quiv(gf(2), {vx("I", "", 1, 1)}, {});
  eps.ring_extension = {RingExtension::Kind::Eps, 0, 3};
  AlgebraBasis ealg = materialize_algebra(eps);
  CHECK(ealg.dim() == 3);
  CHECK(radical_powers(ealg, layout(eps), eps).nilpotence == 3);
}

TEST_CASE("classical quiver counts radical blocks") {
  FullQuiver w = weighted_chain(gf(3), 2);
  ClassicalQuiver cw = classical_quiver(w);
  REQUIRE(cw.vertices.size() == 1);
  CHECK(cw.multiplicity(0, 0) == 2);
  CHECK(cw.best_effort);

  ClassicalQuiver cz = classical_quiver(zero_chain4());
  REQUIRE(cz.vertices.size() == 4);
  CHECK(cz.multiplicity(0, 1) == 1);
  CHECK(cz.multiplicity(0, 3) == 1);
  CHECK(cz.multiplicity(1, 0) == 0);

  ClassicalQuiver cs = classical_quiver(weighted_square(3, 5));
  REQUIRE(cs.vertices.size() == 1);
  CHECK_FALSE(cs.best_effort);
  CHECK(cs.multiplicity(0, 0) == 3);
}

TEST_CASE("relations rewrite class parameters before filling") {
  // alpha = beta + gamma attached to a two-path with a corner
  FullQuiver q = quiv(inf_base(), {vx("x", "D", 1, 0), vx("y", "D", 1, 0), vx("z", "D", 1, 0)},
                      {ar("al", "x", "y"), ar("be", "y", "z"), ar("ga", "x", "z")});
  q.relations.push_back({{{"ga", 0, 1}, {"al", 0, -1}, {"be", 0, -1}}});
  GenericSet gs = generic_elements(q);
  const Mat& m = gs.elements[0];
  CHECK(m.at(0, 2) == m.at(0, 1) + m.at(1, 2));

  // the head must be solvable
  FullQuiver bad = q;
  bad.relations[0].terms[0].exp = 1;
  CHECK_THROWS_AS(generic_elements(bad), std::invalid_argument);
}
