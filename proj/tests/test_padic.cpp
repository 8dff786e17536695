#include "cyclomzv/padic.hpp"

#include "cyclomzv/bernoulli.hpp"

#include <doctest.h>

#include <random>

using namespace cmzv;

namespace {

std::shared_ptr<const ZqRing> ring(long p, long M, int digits = 24, int extra = 24) {
  return ZqRing::make(PadicParams::make(p, M, digits), extra);
}

}  // namespace

TEST_CASE("order_mod basics") {
  CHECK(order_mod(2, 3) == 2);
  CHECK(order_mod(7, 3) == 1);
  CHECK(order_mod(3, 4) == 2);
  CHECK(order_mod(5, 1) == 1);
  CHECK_THROWS(order_mod(3, 6));
}

TEST_CASE("index maps") {
  auto P = PadicParams::make(2, 3, 10);
  CHECK(P.bar(1) == 2);
  CHECK(P.underbar(1) == 2);
  CHECK(P.bar(3) == 3);
  CHECK(P.underbar(3) == 3);
  CHECK(P.bar(0) == 0);
  // frobenius compatibility on 1..M for several configs
  for (auto [p, M] : {std::pair<long, long>{2, 3}, {3, 4}, {7, 3}, {2, 5}, {3, 7}}) {
    auto Q = PadicParams::make(p, M, 10);
    for (long i = 1; i <= M; ++i) {
      CHECK(Q.underbar(Q.bar(i)) == i);
      CHECK(Q.bar(Q.underbar(i)) == i);
      CHECK((Q.bar(i) - p * i) % M == 0);
      CHECK((i - p * Q.underbar(i)) % M == 0);
    }
  }
}

TEST_CASE("index_diff") {
  CHECK(index_diff(2, 2, 5) == 5);
  CHECK(index_diff(1, 2, 3) == 2);
  CHECK(index_diff(1, 3, 4) == 2);
}

TEST_CASE("ring construction and zeta") {
  SUBCASE("p=7 M=3: Teichmueller cube root") {
    auto R = ring(7, 3);
    const Zq& z = R->zeta_pow(1);
    // zeta^2 + zeta + 1 = 0
    Zq val = R->mul(z, z) + z + R->one();
    CHECK(val.is_zero());
    // residue is 2 or 4 mod 7
    Int c0 = z.coeffs()[0] % 7;
    CHECK((c0 == 2 || c0 == 4));
  }
  SUBCASE("p=2 M=3: degree-2 extension") {
    auto R = ring(2, 3);
    CHECK(R->f() == 2);
    const Zq& z = R->zeta_pow(1);
    Zq val = R->mul(z, z) + z + R->one();
    CHECK(val.is_zero());
  }
  SUBCASE("p=3 M=4") {
    auto R = ring(3, 4);
    CHECK(R->f() == 2);
    const Zq& z = R->zeta_pow(1);
    Zq val = R->mul(z, z) + R->one();  // Phi_4 = x^2 + 1
    CHECK(val.is_zero());
  }
  SUBCASE("M=1 gives zeta = 1") {
    auto R = ring(5, 1);
    CHECK((R->zeta_pow(1) - R->one()).is_zero());
  }
}

TEST_CASE("zeta is primitive") {
  for (auto [p, M] : {std::pair<long, long>{2, 3}, {3, 4}, {7, 3}, {2, 15}}) {
    auto R = ring(p, M);
    // zeta^M = 1 exactly
    Zq zM = R->pow(R->zeta_pow(1), Int(M));
    CHECK((zM - R->one()).is_zero());
    for (long l = 2; l <= M; ++l) {
      if (M % l != 0) continue;
      bool isprime = true;
      for (long d = 2; d * d <= l; ++d)
        if (l % d == 0) isprime = false;
      if (!isprime) continue;
      Zq t = R->zeta_pow(M / l) - R->one();
      CHECK(t.valuation() == 0);  // not 1 mod p
    }
  }
}

TEST_CASE("ring axioms on random elements") {
  auto R = ring(3, 4);
  std::mt19937_64 rng(12345);
  auto rand_elem = [&]() {
    Zq x = R->zero(R->work_prec());
    Zq acc = R->zero(R->work_prec());
    for (long i = 0; i < R->f(); ++i) {
      Zq t = R->from_int(Int(rng() % 1000000), R->work_prec());
      t *= R->pow(R->zeta_pow(1), Int(i));
      acc += t;
    }
    (void)x;
    return acc;
  };
  for (int it = 0; it < 25; ++it) {
    Zq a = rand_elem(), b = rand_elem(), c = rand_elem();
    CHECK(((a + b) + c - (a + (b + c))).is_zero());
    CHECK((a * b - b * a).is_zero());
    CHECK(((a + b) * c - (a * c + b * c)).is_zero());
    CHECK((a + R->zero(R->work_prec()) - a).is_zero());
  }
}

TEST_CASE("inversion and precision") {
  auto R = ring(2, 3);
  const Zq& z = R->zeta_pow(1);
  // mul(zeta, zeta^{M-1}) = 1
  CHECK((R->mul(z, R->zeta_pow(2)) - R->one()).is_zero());
  Zq u = z + R->from_int(4, R->work_prec());  // unit (valuation 0)
  REQUIRE(u.valuation() == 0);
  Zq v = R->invert(u);
  CHECK((R->mul(u, v) - R->one()).is_zero());
  CHECK_THROWS_AS(R->invert(R->from_int(2, R->work_prec())), std::domain_error);
}

TEST_CASE("Kq valuation shifts") {
  auto R = ring(2, 3);
  const int W = R->work_prec();
  Kq x{R->from_int(12, W)};  // 12 = 4 * 3
  CHECK(x.valuation() == 2);
  x.div_by_int(Int(8));
  CHECK(x.valuation() == -1);
  CHECK(x.abs_prec() == W - 3);  // div_by_int costs val_p(n) digits
  Kq y{R->from_int(3, W)};
  y.div_by_int(Int(2));  // 3/2
  Kq s = x + y;           // 3/2 + 3/2 = 3
  CHECK(s.valuation() == 0);
  Kq three{R->from_int(3, W)};
  CHECK(agree_sig(s, three, W - 8));
  // multiplication by integers via rationals
  Kq r = R->from_rat(Rat(-7, 6), W);
  r *= Kq(R->from_int(-6, W));
  CHECK(agree_sig(r, Kq(R->from_int(7, W)), W - 3));
}

TEST_CASE("bernoulli numbers") {
  CHECK(bernoulli(0) == Rat(1));
  CHECK(bernoulli(1) == Rat(-1, 2));
  CHECK(bernoulli(2) == Rat(1, 6));
  CHECK(bernoulli(3) == Rat(0));
  CHECK(bernoulli(4) == Rat(-1, 30));
  CHECK(bernoulli(12) == Rat(-691, 2730));
  // Von Staudt-Clausen bound: val_p(B_k) >= -1
  for (long p : {2L, 3L, 7L})
    for (unsigned k = 2; k <= 30; k += 2) CHECK(val_p(bernoulli(k), p) >= -1);
}

TEST_CASE("faulhaber sums") {
  CHECK(faulhaber_sum(2, Int(4)) == Rat(30));
  CHECK(faulhaber_sum(0, Int(7)) == Rat(7));
  std::mt19937_64 rng(99);
  for (int it = 0; it < 40; ++it) {
    unsigned j = unsigned(rng() % 9);
    long n = 1 + long(rng() % 1000);
    Rat brute(0);
    for (long m = 1; m <= n; ++m) {
      Int t;
      mpz_ui_pow_ui(t.get_mpz_t(), m, j);
      brute += Rat(t);
    }
    CHECK(faulhaber_sum(j, Int(n)) == brute);
  }
}

TEST_CASE("iwasawa log") {
  auto R = ring(7, 3, 24, 12);
  const int W = R->work_prec();
  SUBCASE("log(1) = 0 and log(teichmueller) = 0") {
    CHECK(R->iwasawa_log(R->one()).is_zero());
    CHECK(R->iwasawa_log(R->zeta_pow(1)).is_zero());
    CHECK(R->iwasawa_log(R->zeta_pow(2)).is_zero());
  }
  SUBCASE("log(1+p) matches the direct series") {
    Zq u = R->from_int(8, W);  // 1 + 7
    Zq lg = R->iwasawa_log(u);
    // direct series sum_{n>=1} (-1)^{n+1} 7^n / n
    Kq acc;
    for (long n = 1; n < W; ++n) {
      Kq term{R->from_int(1, W), n};  // 7^n as shift
      term.div_by_int(Int(n));
      if (n % 2 == 0) term = -term;
      acc += term;
    }
    CHECK(agree_sig(Kq(lg), acc, 20));
  }
  SUBCASE("multiplicativity") {
    std::mt19937_64 rng(4);
    for (int it = 0; it < 10; ++it) {
      Zq u = R->from_int(Int(1 + 7 * long(rng() % 100000)), W);
      Zq v = R->from_int(Int(3 + 7 * long(rng() % 100000)), W);
      u *= R->pow(R->zeta_pow(1), Int(rng() % 3));
      if (u.valuation() != 0 || v.valuation() != 0) continue;
      Zq luv = R->iwasawa_log(R->mul(u, v));
      Zq sum = R->iwasawa_log(u) + R->iwasawa_log(v);
      CHECK(agree_sig(Kq(luv), Kq(sum), 18));
    }
  }
}

TEST_CASE("digits output") {
  auto R = ring(2, 3, 12, 4);
  Zq x = R->from_int(13, 12);  // 1 + 4 + 8 = 1101_2
  auto d = R->digits(x, 4);
  REQUIRE(d.size() == 4);
  CHECK(d[0][0] == 1);
  CHECK(d[1][0] == 0);
  CHECK(d[2][0] == 1);
  CHECK(d[3][0] == 1);
  CHECK(d[0][1] == 0);
}
