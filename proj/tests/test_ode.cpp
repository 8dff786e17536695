#include "cyclomzv/ode.hpp"

#include <doctest.h>

using namespace cmzv;

namespace {

MzvEngine& engine23() {
  static MzvEngine eng = [] {
    EngineConfig cfg;
    cfg.p = 2;
    cfg.M = 3;
    cfg.digits = 24;
    cfg.term_budget = 1 << 15;
    cfg.word_cap = 4;
    cfg.threshold = 4;
    return MzvEngine(cfg);
  }();
  return eng;
}

}  // namespace

TEST_CASE("solver reproduces the polylog coefficients") {
  auto& eng = engine23();
  auto R = eng.ring_ptr();
  const long n_max = 48;
  Word w0 = Word::of({0});
  Word w1 = Word::of({1});
  Word w01 = Word::of({0, 1});
  GfSolver solver(eng, {w01});
  std::vector<long> ns;
  for (long n = 1; n <= n_max; ++n) ns.push_back(n);
  for (auto& w : {w0, w1, w01}) solver.request_samples(w, ns);
  solver.solve_to(n_max);
  SStream s1(R, SumSpec::F1(1, 1), &eng);
  SStream s2(R, SumSpec::F1(2, 1), &eng);
  for (long n = 1; n <= n_max; ++n) {
    CHECK(solver.sample(w0, n).is_zero());
    Kq expect = s1.coeff(n);
    CHECK(indistinguishable(solver.sample(w1, n), expect));
    CHECK(indistinguishable(solver.sample(w01, n), s2.coeff(n)));
  }
}

TEST_CASE("solver coefficients are independent of the target list") {
  auto& eng = engine23();
  Word w = Word::parse("e1 e2");
  GfSolver a(eng, {w});
  GfSolver b(eng, {Word::parse("e2 e1 e0"), w, Word::parse("e3")});
  a.request_samples(w, {5, 12, 17});
  b.request_samples(w, {5, 12, 17});
  a.solve_to(17);
  b.solve_to(17);
  for (long n : {5L, 12L, 17L})
    CHECK(indistinguishable(a.sample(w, n), b.sample(w, n)));
}

TEST_CASE("solved streams satisfy the shuffle convolution identity") {
  auto& eng = engine23();
  Word u = Word::of({1}), v = Word::of({2});
  std::vector<Word> targets;
  for (auto& [w, c] : shuffle_product(u, v)) targets.push_back(w);
  targets.push_back(u);
  targets.push_back(v);
  GfSolver solver(eng, targets);
  const long n_max = 24;
  std::vector<long> ns;
  for (long n = 1; n <= n_max; ++n) ns.push_back(n);
  for (auto& w : targets) solver.request_samples(w, ns);
  solver.solve_to(n_max);
  for (long n = 2; n <= n_max; ++n) {
    Kq lhs;
    for (long n1 = 1; n1 + 1 <= n; ++n1)
      lhs += solver.sample(u, n1) * solver.sample(v, n - n1);
    Kq rhs;
    for (auto& [w, c] : shuffle_product(u, v)) {
      Kq t = solver.sample(w, n);
      t.mul_int(Int(c));
      rhs += t;
    }
    CAPTURE(n);
    CHECK(indistinguishable(lhs, rhs));
  }
}

TEST_CASE("closed-form match: depth 1") {
  OdeAuditor aud(engine23());
  for (int s = 1; s <= 3; ++s)
    for (long i = 1; i <= 3; ++i) {
      OdeAudit a = aud.match_depth1(s, i, 64);
      CAPTURE(s);
      CAPTURE(i);
      CHECK(a.pass);
    }
}

TEST_CASE("closed-form match: two tails, parenthesized form") {
  OdeAuditor aud(engine23());
  for (int t = 1; t <= 2; ++t)
    for (int s = 1; s <= 2; ++s) {
      OdeAudit a = aud.match_two_tails(1, t, 2, s, 48);
      CAPTURE(t);
      CAPTURE(s);
      CAPTURE(a.worst_sig_digits);
      CHECK(a.pass);
    }
}

TEST_CASE("closed-form match: letter triple") {
  OdeAuditor aud(engine23());
  OdeAudit a = aud.match_triple(1, 2, 3, 48);
  CAPTURE(a.worst_sig_digits);
  CHECK(a.pass);
}

TEST_CASE("closed-form match: full family") {
  OdeAuditor aud(engine23());
  OdeAudit a = aud.match_full(1, 2, 2, 3, 2, 40);
  CAPTURE(a.worst_sig_digits);
  CHECK(a.pass);
}

TEST_CASE("residue identity at short words") {
  OdeAuditor aud(engine23());
  auto audits = aud.residue_identity(2, 9);
  for (auto& a : audits) {
    CAPTURE(a.word);
    CAPTURE(a.worst_sig_digits);
    CHECK(a.pass);
  }
}

TEST_CASE("limit check on a depth-2 word") {
  OdeAuditor aud(engine23());
  auto audits = aud.funprop(Word::parse("e1 e0 e2"), 5);
  for (auto& a : audits) {
    CAPTURE(a.l);
    CAPTURE(a.limit_valuation);
    CAPTURE(a.certificate);
    CHECK(a.pass);
  }
}
