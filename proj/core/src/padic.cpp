#include "cyclomzv/padic.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <sstream>

namespace cmzv {

namespace {

constexpr long kZeroVal = 1L << 40;  // valuation stand-in for exact zero

// ---- integer polynomial helpers (little-endian coefficient vectors) ----

using Poly = std::vector<Int>;

void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

Poly poly_mul(const Poly& a, const Poly& b, const Int& mod) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, Int(0));
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (size_t j = 0; j < b.size(); ++j) {
      r[i + j] += a[i] * b[j];
    }
  }
  for (auto& c : r) c = ((c % mod) + mod) % mod;
  trim(r);
  return r;
}

Poly poly_sub(Poly a, const Poly& b, const Int& mod) {
  if (a.size() < b.size()) a.resize(b.size(), Int(0));
  for (size_t i = 0; i < b.size(); ++i) a[i] = ((a[i] - b[i]) % mod + mod) % mod;
  trim(a);
  return a;
}

Poly poly_add(Poly a, const Poly& b, const Int& mod) {
  if (a.size() < b.size()) a.resize(b.size(), Int(0));
  for (size_t i = 0; i < b.size(); ++i) a[i] = ((a[i] + b[i]) % mod) % mod;
  trim(a);
  return a;
}

// division with remainder by a monic divisor, coefficients mod `mod`
void poly_divmod_monic(const Poly& a, const Poly& d, const Int& mod, Poly& q, Poly& r) {
  assert(!d.empty() && d.back() == 1);
  r = a;
  trim(r);
  q.assign(r.size() > d.size() - 1 ? r.size() - d.size() + 1 : 0, Int(0));
  while (r.size() >= d.size()) {
    Int c = r.back();
    size_t shift = r.size() - d.size();
    q[shift] = c;
    for (size_t i = 0; i < d.size(); ++i) {
      r[shift + i] = ((r[shift + i] - c * d[i]) % mod + mod) % mod;
    }
    trim(r);
  }
  trim(q);
}

// ---- mod-p polynomial helpers for the residue field construction ----

using FpPoly = std::vector<long>;

void ftrim(FpPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

FpPoly fp_mulmod(const FpPoly& a, const FpPoly& b, const FpPoly& g, long p) {
  if (a.empty() || b.empty()) return {};
  std::vector<long> r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = (r[i + j] + a[i] * b[j]) % p;
  ftrim(r);
  while (r.size() >= g.size()) {  // g monic
    long c = r.back();
    size_t shift = r.size() - g.size();
    for (size_t i = 0; i < g.size(); ++i)
      r[shift + i] = ((r[shift + i] - c * g[i]) % p + p) % p;
    ftrim(r);
  }
  return r;
}

FpPoly fp_powmod(FpPoly base, Int e, const FpPoly& g, long p) {
  FpPoly r{1};
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) r = fp_mulmod(r, base, g, p);
    base = fp_mulmod(base, base, g, p);
    e >>= 1;
  }
  return r;
}

FpPoly fp_gcd(FpPoly a, FpPoly b, long p) {
  auto inv_mod_p = [p](long x) {
    long r = 1, e = p - 2, base = ((x % p) + p) % p;
    while (e) {
      if (e & 1) r = r * base % p;
      base = base * base % p;
      e >>= 1;
    }
    return r;
  };
  ftrim(a);
  ftrim(b);
  while (!b.empty()) {
    // a mod b
    long lc = inv_mod_p(b.back());
    FpPoly r = a;
    while (r.size() >= b.size()) {
      long c = r.back() * lc % p;
      size_t shift = r.size() - b.size();
      for (size_t i = 0; i < b.size(); ++i)
        r[shift + i] = ((r[shift + i] - c * b[i]) % p + p) % p;
      ftrim(r);
    }
    a = b;
    b = r;
  }
  return a;
}

bool fp_irreducible(const FpPoly& g, long p) {
  long f = long(g.size()) - 1;
  if (f == 1) return true;
  FpPoly x{0, 1};
  auto sub_x = [&](FpPoly a) {  // a - x, both already reduced mod g (deg g >= 2)
    a.resize(std::max<size_t>(a.size(), 2), 0);
    a[1] = ((a[1] - 1) % p + p) % p;
    ftrim(a);
    return a;
  };
  // x^(p^f) == x mod g
  FpPoly xq = x;
  for (long k = 0; k < f; ++k) xq = fp_powmod(xq, Int(p), g, p);
  if (!sub_x(xq).empty()) return false;
  // gcd(x^(p^(f/l)) - x, g) == 1 for prime l | f
  for (long l = 2; l <= f; ++l) {
    if (f % l != 0) continue;
    bool lp = true;
    for (long d = 2; d * d <= l; ++d)
      if (l % d == 0) lp = false;
    if (!lp) continue;
    FpPoly xe = x;
    for (long k = 0; k < f / l; ++k) xe = fp_powmod(xe, Int(p), g, p);
    FpPoly gg = fp_gcd(g, sub_x(xe), p);
    if (gg.size() != 1) return false;
  }
  return true;
}

FpPoly fp_add(FpPoly a, const FpPoly& b, long p) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i) a[i] = (a[i] + b[i]) % p;
  ftrim(a);
  return a;
}

// extended gcd over F_p[x]: returns (s, t) with s*a + t*b = 1; requires gcd 1
std::pair<FpPoly, FpPoly> fp_bezout(const FpPoly& a, const FpPoly& b, long p) {
  auto inv_mod_p = [p](long x) {
    long r = 1, e = p - 2, base = ((x % p) + p) % p;
    while (e) {
      if (e & 1) r = r * base % p;
      base = base * base % p;
      e >>= 1;
    }
    return r;
  };
  FpPoly r0 = a, r1 = b, s0{1}, s1{}, t0{}, t1{1};
  ftrim(r0);
  ftrim(r1);
  auto mul = [p](const FpPoly& u, const FpPoly& v) {
    if (u.empty() || v.empty()) return FpPoly{};
    FpPoly w(u.size() + v.size() - 1, 0);
    for (size_t i = 0; i < u.size(); ++i)
      for (size_t j = 0; j < v.size(); ++j) w[i + j] = (w[i + j] + u[i] * v[j]) % p;
    ftrim(w);
    return w;
  };
  auto sub = [p](FpPoly u, const FpPoly& v) {
    if (u.size() < v.size()) u.resize(v.size(), 0);
    for (size_t i = 0; i < v.size(); ++i) u[i] = ((u[i] - v[i]) % p + p) % p;
    ftrim(u);
    return u;
  };
  while (!r1.empty()) {
    // quotient of r0 by r1
    FpPoly q{};
    FpPoly r = r0;
    long lc = inv_mod_p(r1.back());
    while (r.size() >= r1.size()) {
      long c = r.back() * lc % p;
      size_t shift = r.size() - r1.size();
      if (q.size() < shift + 1) q.resize(shift + 1, 0);
      q[shift] = c;
      for (size_t i = 0; i < r1.size(); ++i)
        r[shift + i] = ((r[shift + i] - c * r1[i]) % p + p) % p;
      ftrim(r);
    }
    FpPoly s2 = sub(s0, mul(q, s1)), t2 = sub(t0, mul(q, t1));
    r0 = r1; r1 = r;
    s0 = s1; s1 = s2;
    t0 = t1; t1 = t2;
  }
  if (r0.size() != 1) throw std::runtime_error("fp_bezout: inputs not coprime");
  long inv = inv_mod_p(r0[0]);
  for (auto& c : s0) c = c * inv % p;
  for (auto& c : t0) c = c * inv % p;
  return {s0, t0};
}

// M-th cyclotomic polynomial over Z (exact)
Poly cyclotomic(long M) {
  static std::map<long, Poly> cache;
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;
  // x^M - 1 divided by prod of Phi_d, d | M, d < M
  Poly num(M + 1, Int(0));
  num[0] = -1;
  num[M] = 1;
  for (long d = 1; d < M; ++d) {
    if (M % d != 0) continue;
    Poly phi = cyclotomic(d);
    // exact division num / phi over Z
    Poly q(num.size() - phi.size() + 1, Int(0));
    Poly r = num;
    while (r.size() >= phi.size()) {
      Int c = r.back();  // phi monic
      size_t shift = r.size() - phi.size();
      q[shift] = c;
      for (size_t i = 0; i < phi.size(); ++i) r[shift + i] -= c * phi[i];
      trim(r);
    }
    assert(r.empty());
    num = q;
  }
  cache[M] = num;
  return num;
}

std::vector<long> prime_divisors(long n) {
  std::vector<long> out;
  for (long d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

}  // namespace

bool is_prime(long n) {
  if (n < 2) return false;
  for (long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

long order_mod(long p, long M) {
  if (M < 1) throw std::invalid_argument("order_mod: M must be >= 1");
  if (std::gcd(p, M) != 1) throw std::invalid_argument("order_mod: gcd(p, M) != 1");
  if (M == 1) return 1;
  long f = 1, r = p % M;
  while (r != 1) {
    r = r * p % M;
    if (++f > M) throw std::logic_error("order_mod: no order found");
  }
  return f;
}

long index_diff(long a, long b, long M) {
  long r = ((a - b) % M + M) % M;
  return r == 0 ? M : r;
}

PadicParams PadicParams::make(long p, long M, int precision_cap) {
  if (!is_prime(p)) throw std::invalid_argument("PadicParams: p must be prime");
  if (M < 1) throw std::invalid_argument("PadicParams: M must be >= 1");
  if (std::gcd(p, M) != 1) throw std::invalid_argument("PadicParams: gcd(p, M) != 1");
  if (precision_cap < 1) throw std::invalid_argument("PadicParams: precision_cap < 1");
  PadicParams P;
  P.p = p;
  P.M = M;
  P.f = order_mod(p, M);
  mpz_ui_pow_ui(P.q.get_mpz_t(), p, P.f);
  P.precision_cap = precision_cap;
  return P;
}

long PadicParams::bar(long i) const {
  if (i == 0) return 0;
  long r = (p % M) * (i % M) % M;
  return r == 0 ? M : r;
}

long PadicParams::underbar(long i) const {
  if (i == 0) return 0;
  // p^(f-1) is the inverse of p mod M
  long pinv = 1;
  for (long k = 0; k + 1 < f; ++k) pinv = pinv * (p % M) % M;
  long r = pinv * (i % M) % M;
  return r == 0 ? M : r;
}

// ---------------------------------------------------------------- Zq ----

int Zq::valuation() const {
  assert(attached());
  int v = prec_;
  for (const auto& c : c_) {
    if (c == 0) continue;
    int w = int(mpz_scan1(c.get_mpz_t(), 0));  // exact for p = 2
    if (R_->p() != 2) {
      Int t = c;
      w = 0;
      while (w < v && mpz_divisible_ui_p(t.get_mpz_t(), R_->p())) {
        t /= R_->p();
        ++w;
      }
    }
    v = std::min(v, w);
    if (v == 0) break;
  }
  return v;
}

bool Zq::is_zero() const {
  for (const auto& c : c_)
    if (c != 0) return false;
  return true;
}

Zq& Zq::operator+=(const Zq& o) {
  assert(attached() && o.attached());
  prec_ = std::min(prec_, o.prec_);
  for (long i = 0; i < R_->f(); ++i) c_[i] += o.c_[i];
  R_->reduce(*this);
  return *this;
}

Zq& Zq::operator-=(const Zq& o) {
  assert(attached() && o.attached());
  prec_ = std::min(prec_, o.prec_);
  for (long i = 0; i < R_->f(); ++i) c_[i] -= o.c_[i];
  R_->reduce(*this);
  return *this;
}

Zq& Zq::operator*=(const Zq& o) {
  *this = R_->mul(*this, o);
  return *this;
}

Zq Zq::operator-() const {
  Zq r = *this;
  for (auto& c : r.c_) c = -c;
  R_->reduce(r);
  return r;
}

Zq& Zq::mul_int(const Int& n) {
  for (auto& c : c_) c *= n;
  R_->reduce(*this);
  return *this;
}

Zq& Zq::mul_pk(int k) {
  assert(k >= 0);
  if (k >= R_->work_prec()) {  // the whole residue leaves the working window
    prec_ = R_->work_prec();
    for (auto& c : c_) c = 0;
    return *this;
  }
  prec_ = std::min(prec_ + k, R_->work_prec());
  const Int& pk = R_->pk(k);
  for (auto& c : c_) c *= pk;
  R_->reduce(*this);
  return *this;
}

Zq& Zq::divexact_pk(int k) {
  assert(k >= 0);
  if (k == 0) return *this;
  if (valuation() < k) throw std::domain_error("Zq::divexact_pk: valuation too small");
  const Int& pk = R_->pk(k);
  for (auto& c : c_) mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), pk.get_mpz_t());
  prec_ -= k;
  if (prec_ < 0) prec_ = 0;
  return *this;
}

Zq& Zq::reduce_to(int prec) {
  if (prec < prec_) {
    prec_ = std::max(prec, 0);
    R_->reduce(*this);
  }
  return *this;
}

Zq& Zq::assume_exact() {
  prec_ = R_->work_prec();
  return *this;
}

std::string Zq::str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < c_.size(); ++i) os << (i ? "," : "") << c_[i].get_str();
  os << "]@" << prec_;
  return os.str();
}

// ---------------------------------------------------------------- Kq ----

void Kq::normalize() {
  if (!attached()) return;
  if (u_.is_zero()) return;
  int s = u_.valuation();
  if (s > 0) {
    u_.divexact_pk(s);
    v_ += s;
  }
}

Kq& Kq::operator+=(const Kq& o) {
  if (!o.attached()) return *this;
  if (!attached()) {
    *this = o;
    return *this;
  }
  long vmin = std::min(v_, o.v_);
  if (v_ > vmin) u_.mul_pk(int(v_ - vmin));
  Zq ou = o.u_;
  if (o.v_ > vmin) ou.mul_pk(int(o.v_ - vmin));
  u_ += ou;
  v_ = vmin;
  normalize();
  return *this;
}

Kq& Kq::operator-=(const Kq& o) {
  Kq t = o;
  if (t.attached()) {
    t.u_ = -t.u_;
    *this += t;
  }
  return *this;
}

Kq& Kq::operator*=(const Kq& o) {
  if (!attached()) return *this;
  if (!o.attached()) {
    *this = Kq();
    return *this;
  }
  u_ *= o.u_;
  v_ += o.v_;
  normalize();
  return *this;
}

Kq Kq::operator-() const {
  Kq r = *this;
  if (r.attached()) r.u_ = -r.u_;
  return r;
}

Kq& Kq::mul_int(const Int& n) {
  if (!attached()) return *this;
  if (n == 0) {
    *this = Kq();
    return *this;
  }
  const ZqRing& R = u_.ring();
  Int u = n < 0 ? Int(-n) : n;
  long k = 0;
  while (mpz_divisible_ui_p(u.get_mpz_t(), R.p())) {
    u /= R.p();
    ++k;
  }
  v_ += k;
  if (n < 0) u = -u;
  u_.mul_int(u);
  return *this;
}

Kq& Kq::div_by_int(const Int& n) {
  if (n == 0) throw std::invalid_argument("Kq::div_by_int: zero divisor");
  if (!attached()) return *this;
  const ZqRing& R = u_.ring();
  Int u = n < 0 ? Int(-n) : n;
  long k = 0;
  while (mpz_divisible_ui_p(u.get_mpz_t(), R.p())) {
    u /= R.p();
    ++k;
  }
  v_ -= k;
  Int inv = R.inv_int_unit(u, u_.prec());
  if (n < 0) inv = -inv;
  u_.mul_int(inv);
  return *this;
}

Kq& Kq::div(const Kq& o) {
  if (!o.attached() || o.is_zero())
    throw std::domain_error("Kq::div: divisor is zero (to working precision)");
  if (!attached()) return *this;
  Kq d = o;
  d.normalize();
  u_ *= u_.ring().invert(d.u_);
  v_ -= d.v_;
  normalize();
  return *this;
}

Kq& Kq::reduce_abs_prec(long ap) {
  if (attached()) u_.reduce_to(int(std::max<long>(0, ap - v_)));
  return *this;
}

std::string Kq::str() const {
  if (!attached()) return "0(exact)";
  std::ostringstream os;
  os << "p^" << v_ << "*" << u_.str();
  return os.str();
}

// ------------------------------------------------------------- ZqRing ----

std::shared_ptr<const ZqRing> ZqRing::make(const PadicParams& params, int extra_digits) {
  auto R = std::shared_ptr<ZqRing>(new ZqRing());
  R->build(params, extra_digits);
  return R;
}

void ZqRing::reduce(Zq& a) const {
  const Int& m = pk(a.prec_);
  for (auto& c : a.c_) {
    c %= m;
    if (c < 0) c += m;
  }
}

const Int& ZqRing::pk(int k) const {
  if (k < 0 || k > W_) throw std::logic_error("ZqRing::pk: exponent outside the working window");
  return pk_[k];
}

Zq ZqRing::zero(int prec) const {
  Zq z;
  z.R_ = this;
  z.prec_ = std::min(prec, W_);
  z.c_.assign(P_.f, Int(0));
  return z;
}

Zq ZqRing::from_int(const Int& n, int prec) const {
  Zq z = zero(prec);
  z.c_[0] = n;
  reduce(z);
  return z;
}

Kq ZqRing::from_rat(const Rat& r, int prec) const {
  Kq x{from_int(Int(r.get_num()), prec)};
  x.div_by_int(Int(r.get_den()));
  return x;
}

const Zq& ZqRing::zeta_pow(long e) const {
  long m = ((e % P_.M) + P_.M) % P_.M;
  return zeta_[m];
}

Zq ZqRing::add(const Zq& a, const Zq& b) const {
  Zq r = a;
  r += b;
  return r;
}

Zq ZqRing::mul(const Zq& a, const Zq& b) const {
  assert(a.attached() && b.attached());
  Zq r = zero(std::min(a.prec_, b.prec_));
  const long f = P_.f;
  if (f == 1) {
    r.c_[0] = a.c_[0] * b.c_[0];
  } else {
    std::vector<Int> full(2 * f - 1, Int(0));
    for (long i = 0; i < f; ++i) {
      if (a.c_[i] == 0) continue;
      for (long j = 0; j < f; ++j) full[i + j] += a.c_[i] * b.c_[j];
    }
    // reduce by the monic modulus h
    for (long k = 2 * f - 2; k >= f; --k) {
      if (full[k] == 0) continue;
      for (long i = 0; i < f; ++i) full[k - f + i] -= full[k] * h_[i];
      full[k] = 0;
    }
    for (long i = 0; i < f; ++i) r.c_[i] = full[i];
  }
  reduce(r);
  return r;
}

Zq ZqRing::pow(const Zq& a, const Int& e) const {
  assert(e >= 0);
  Zq r = from_int(1, a.prec());
  Zq base = a;
  Int k = e;
  while (k > 0) {
    if (mpz_odd_p(k.get_mpz_t())) r = mul(r, base);
    base = mul(base, base);
    k >>= 1;
  }
  return r;
}

Zq ZqRing::invert(const Zq& a) const {
  if (a.valuation() != 0) throw std::domain_error("ZqRing::invert: not a unit");
  // inverse mod p by Fermat in F_q, then Newton x <- x(2 - ax)
  Zq x = a;
  x.reduce_to(1);
  Int e = P_.q - 2;
  x = pow(x, e);
  int t = 1;
  while (t < a.prec()) {
    t = std::min(2 * t, a.prec());
    Zq xt = x;
    xt.prec_ = t;  // lift: Newton corrects the extra digits
    reduce(xt);
    Zq two = from_int(2, t);
    Zq corr = two - mul(a, xt);
    x = mul(xt, corr);
  }
  x.reduce_to(a.prec());
  return x;
}

Int ZqRing::inv_int_unit(const Int& u, int prec) const {
  Int r;
  if (mpz_invert(r.get_mpz_t(), u.get_mpz_t(), pk(prec).get_mpz_t()) == 0)
    throw std::domain_error("inv_int_unit: not a unit");
  return r;
}

void ZqRing::batch_inv_units(std::vector<Int>& units) const {
  if (units.empty()) return;
  const Int& m = pk(W_);
  std::vector<Int> pref(units.size());
  pref[0] = units[0] % m;
  for (size_t i = 1; i < units.size(); ++i) pref[i] = pref[i - 1] * units[i] % m;
  Int inv;
  if (mpz_invert(inv.get_mpz_t(), pref.back().get_mpz_t(), m.get_mpz_t()) == 0)
    throw std::domain_error("batch_inv_units: non-unit entry");
  for (size_t i = units.size(); i-- > 1;) {
    Int cur = inv * pref[i - 1] % m;
    inv = inv * units[i] % m;
    units[i] = cur;
  }
  units[0] = inv;
}

Zq ZqRing::iwasawa_log(const Zq& u) const {
  if (u.valuation() != 0) throw std::domain_error("iwasawa_log: not a unit");
  const int prec = u.prec();
  Zq w = pow(u, P_.q - 1);  // 1-unit; Teichmueller part dies here
  Kq x{w - from_int(1, prec)};
  if (x.attached() && !x.is_zero() && x.valuation() < 1)
    throw std::logic_error("iwasawa_log: u^(q-1) is not a 1-unit");
  Kq acc;
  Kq term{from_int(1, prec)};
  for (long n = 1;; ++n) {
    term *= x;
    if (!term.attached() || term.is_zero() || term.valuation() >= prec) break;
    Kq t = term;
    t.div_by_int(Int(n));
    if (n % 2 == 0) t = -t;
    acc += t;
  }
  acc.div_by_int(P_.q - 1);
  if (!acc.attached()) return zero(prec);
  if (acc.shift() < 0) throw std::logic_error("iwasawa_log: non-integral result");
  Zq r = acc.unit();
  r.mul_pk(int(acc.shift()));
  return r;
}

const Zq& ZqRing::inv_one_minus_zeta(long e) const {
  long m = ((e % P_.M) + P_.M) % P_.M;
  if (m == 0) throw std::domain_error("inv_one_minus_zeta: exponent divisible by M");
  std::lock_guard<std::mutex> lock(cache_mtx_);
  if (!inv_omz_[m].attached()) {
    Zq d = one_ - zeta_pow(m);
    if (d.valuation() != 0)
      throw std::logic_error("inv_one_minus_zeta: 1 - zeta^e is not a unit");
    inv_omz_[m] = invert(d);
  }
  return inv_omz_[m];
}

std::vector<std::vector<long>> ZqRing::digits(const Zq& a, int count) const {
  std::vector<std::vector<long>> out;
  std::vector<Int> c = a.c_;
  for (int j = 0; j < count && j < a.prec(); ++j) {
    std::vector<long> digit(P_.f);
    for (long i = 0; i < P_.f; ++i) {
      Int d = c[i] % P_.p;
      digit[i] = long(d.get_si());
      c[i] /= P_.p;
    }
    out.push_back(std::move(digit));
  }
  return out;
}

void ZqRing::build(const PadicParams& params, int extra) {
  P_ = params;
  W_ = params.precision_cap + std::max(extra, 0);
  pk_.resize(W_ + 1);
  pk_[0] = 1;
  for (int k = 1; k <= W_; ++k) pk_[k] = pk_[k - 1] * params.p;

  const long p = params.p, M = params.M, f = params.f;
  const Int& mod = pk_[W_];

  Poly phi = cyclotomic(M);
  Poly phi_modW(phi.size());
  for (size_t i = 0; i < phi.size(); ++i) phi_modW[i] = ((phi[i] % mod) + mod) % mod;

  if (long(phi.size()) - 1 == f) {
    h_ = phi_modW;  // Phi_M is already irreducible mod p of the right degree
  } else {
    // Build F_{p^f}, find an element of multiplicative order M, and take its
    // minimal polynomial as the degree-f factor of Phi_M mod p.
    FpPoly g0;
    {
      bool found = false;
      std::vector<long> digs(f, 0);
      while (!found) {
        long carry = 1;
        for (long i = 0; i < f && carry; ++i) {
          digs[i] += carry;
          carry = digs[i] / p;
          digs[i] %= p;
        }
        if (carry) throw std::logic_error("build: no irreducible polynomial found");
        g0.assign(digs.begin(), digs.end());
        g0.push_back(1);
        found = fp_irreducible(g0, p);
      }
    }
    Int qm1 = P_.q - 1;
    Int co = qm1 / M;
    FpPoly omega;
    {
      bool found = false;
      for (Int idx = 2; !found; ++idx) {
        // element of F_q from the base-p digits of idx
        FpPoly a;
        Int t = idx;
        while (t > 0) {
          a.push_back(long(Int(t % p).get_si()));
          t /= p;
        }
        if (long(a.size()) > f) throw std::logic_error("build: no order-M element found");
        FpPoly u = fp_powmod(a, co, g0, p);
        if (u.size() == 1 && u[0] == 1) continue;
        bool ok = true;
        for (long l : prime_divisors(M)) {
          FpPoly t2 = fp_powmod(u, Int(M / l), g0, p);
          if (t2.size() == 1 && t2[0] == 1) {
            ok = false;
            break;
          }
        }
        if (ok) {
          omega = u;
          found = true;
        }
      }
    }
    // minimal polynomial: prod over frobenius conjugates
    std::vector<FpPoly> conj(f);
    conj[0] = omega;
    for (long k = 1; k < f; ++k) conj[k] = fp_powmod(conj[k - 1], Int(p), g0, p);
    // polynomial in y with F_q coefficients, little-endian; coeff = FpPoly
    std::vector<FpPoly> mp{FpPoly{1}};
    for (long k = 0; k < f; ++k) {
      std::vector<FpPoly> next(mp.size() + 1, FpPoly{});
      for (size_t i = 0; i < mp.size(); ++i) {
        next[i + 1] = fp_add(next[i + 1], mp[i], p);  // y * mp
        FpPoly prod = fp_mulmod(mp[i], conj[k], g0, p);
        for (auto& c : prod) c = (p - c) % p;         // -omega_k * mp
        next[i] = fp_add(next[i], prod, p);
      }
      mp = std::move(next);
    }
    FpPoly h0(mp.size());
    for (size_t i = 0; i < mp.size(); ++i) {
      if (mp[i].size() > 1) throw std::logic_error("build: minimal polynomial not over F_p");
      h0[i] = mp[i].empty() ? 0 : mp[i][0];
    }
    // Hensel-lift the coprime factorization Phi_M = h0 * g (mod p) to mod p^W
    Poly H(h0.begin(), h0.end());
    Poly phi_p(phi.size());
    for (size_t i = 0; i < phi.size(); ++i) phi_p[i] = ((phi[i] % p) + p) % p;
    Poly G, rem;
    poly_divmod_monic(phi_p, H, Int(p), G, rem);
    if (!rem.empty()) throw std::logic_error("build: h0 does not divide Phi_M mod p");
    FpPoly Gf(G.size());
    for (size_t i = 0; i < G.size(); ++i) Gf[i] = long(G[i].get_si());
    auto [sf, tf] = fp_bezout(Gf, h0, p);  // s*G + t*H = 1 mod p
    Poly S(sf.begin(), sf.end()), T(tf.begin(), tf.end());

    Int m(p);
    while (m < mod) {
      Int m2 = m * m;
      if (m2 > mod) m2 = mod;
      // one quadratic Hensel step for the pair (G, H), H monic
      Poly phi_m2(phi.size());
      for (size_t i = 0; i < phi.size(); ++i) phi_m2[i] = ((phi[i] % m2) + m2) % m2;
      Poly e = poly_sub(phi_m2, poly_mul(G, H, m2), m2);
      Poly q, r;
      poly_divmod_monic(poly_mul(S, e, m2), H, m2, q, r);
      Poly Gn = poly_add(poly_add(G, poly_mul(T, e, m2), m2), poly_mul(q, G, m2), m2);
      Poly Hn = poly_add(H, r, m2);
      // lift the Bezout pair
      Poly b = poly_sub(poly_add(poly_mul(S, Gn, m2), poly_mul(T, Hn, m2), m2), Poly{1}, m2);
      Poly c, d;
      poly_divmod_monic(poly_mul(S, b, m2), Hn, m2, c, d);
      Poly Sn = poly_sub(S, d, m2);
      Poly Tn = poly_sub(poly_sub(T, poly_mul(T, b, m2), m2), poly_mul(c, Gn, m2), m2);
      G = Gn;
      H = Hn;
      S = Sn;
      T = Tn;
      m = m2;
    }
    Poly check = poly_sub(phi_modW, poly_mul(G, H, mod), mod);
    if (!check.empty()) throw std::logic_error("build: Hensel lift failed");
    if (H.size() != size_t(f + 1) || H.back() != 1)
      throw std::logic_error("build: lifted factor not monic of degree f");
    h_ = H;
  }
  h_.resize(f + 1, Int(0));

  one_ = from_int(1, W_);
  inv_omz_.assign(M, Zq());

  // zeta powers: classes of x^k mod h
  zeta_.resize(M);
  Zq z = zero(W_);
  if (f == 1) {
    // h = x - c: zeta is the constant c
    Int c = ((-h_[0]) % mod + mod) % mod;
    z.c_[0] = c;
  } else {
    z.c_[1] = 1;
  }
  reduce(z);
  zeta_[0] = one_;
  if (M > 1) {
    zeta_[1] = z;
    for (long k = 2; k < M; ++k) zeta_[k] = mul(zeta_[k - 1], z);
  }

  // sanity: zeta is a primitive M-th root of unity to full working precision
  Zq zM = mul(zeta_[M - 1], z);
  if (!(zM - one_).is_zero()) throw std::logic_error("build: zeta^M != 1");
  for (long l : prime_divisors(M)) {
    Zq t = zeta_pow(M / l) - one_;
    if (t.valuation() >= 1) throw std::logic_error("build: zeta^(M/l) = 1 mod p");
  }
}

// --------------------------------------------------------------- misc ----

long agreement_sig_digits(const Kq& a, const Kq& b) {
  Kq diff = a - b;
  long va = (!a.attached() || a.is_zero()) ? kZeroVal : a.valuation();
  long vb = (!b.attached() || b.is_zero()) ? kZeroVal : b.valuation();
  long base = std::min(va, vb);
  if (base >= kZeroVal) return kZeroVal;  // both indistinguishable from zero
  long vd = !diff.attached() ? kZeroVal
            : diff.is_zero() ? diff.abs_prec()
                             : diff.valuation();
  return vd - base;
}

bool agree_sig(const Kq& a, const Kq& b, int d) { return agreement_sig_digits(a, b) >= d; }

bool indistinguishable(const Kq& a, const Kq& b) {
  Kq diff = a - b;
  return !diff.attached() || diff.is_zero();
}

}  // namespace cmzv
