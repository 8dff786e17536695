#pragma once
// Exact arithmetic in the unramified ring Z_q = Z_p[zeta_M], q = p^f, with
// per-element absolute precision.
//
// The ring is realized as Z_p[x]/(h) where h is a Hensel-lifted irreducible
// degree-f factor of the M-th cyclotomic polynomial mod p; the class of x is
// the distinguished primitive M-th root of unity zeta.  Elements are coeff
// vectors mod p^prec.  Values of negative valuation are carried by Kq as a
// (unit, valuation-offset) pair.

#include <gmpxx.h>

#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmzv {

using Int = mpz_class;
using Rat = mpq_class;

bool is_prime(long n);

// raised when a limit cannot be certified to the configured digits
struct PrecisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// least f >= 1 with p^f = 1 (mod M); rejects gcd(p, M) != 1
long order_mod(long p, long M);

// the representative of a - b mod M inside {1..M} (M plays the role of 0)
long index_diff(long a, long b, long M);

struct PadicParams {
  long p = 2;
  long M = 1;
  long f = 1;  // residue degree = multiplicative order of p mod M
  Int q;       // p^f
  int precision_cap = 40;

  static PadicParams make(long p, long M, int precision_cap = 40);

  // bar(i): unique 1..M with M | (bar - p*i); underbar(i): M | (i - p*underbar).
  // Both fix 0.
  long bar(long i) const;
  long underbar(long i) const;
};

class ZqRing;

// Element of Z_q known modulo p^prec (absolute precision).
class Zq {
 public:
  Zq() = default;

  const ZqRing& ring() const { return *R_; }
  bool attached() const { return R_ != nullptr; }
  int prec() const { return prec_; }
  const std::vector<Int>& coeffs() const { return c_; }

  // min_i val_p(c_i); returns prec when indistinguishable from 0
  int valuation() const;
  bool is_zero() const;  // zero at the stored precision

  Zq& operator+=(const Zq& o);
  Zq& operator-=(const Zq& o);
  Zq& operator*=(const Zq& o);
  friend Zq operator+(Zq a, const Zq& b) { return a += b; }
  friend Zq operator-(Zq a, const Zq& b) { return a -= b; }
  friend Zq operator*(Zq a, const Zq& b) { return a *= b; }
  Zq operator-() const;

  Zq& mul_int(const Int& n);
  Zq& mul_pk(int k);              // multiply by p^k, k >= 0 (gains k digits, capped at W)
  Zq& divexact_pk(int k);         // divide by p^k; requires val >= k; prec -= k
  Zq& reduce_to(int prec);        // cap the stored precision

  // lift to the ring's working precision, padding with the current residue
  // (treats the element as exact; only for use by exact-modular pipelines)
  Zq& assume_exact();

  std::string str() const;  // debug: "[c0,c1,...]@prec"

  friend class ZqRing;

 private:
  const ZqRing* R_ = nullptr;
  std::vector<Int> c_;
  int prec_ = 0;
};

// p^v * unit with unit an (integral) Zq; absolute precision = unit.prec + v.
class Kq {
 public:
  Kq() = default;
  explicit Kq(Zq u, long v = 0) : u_(std::move(u)), v_(v) { normalize(); }

  const Zq& unit() const { return u_; }
  long shift() const { return v_; }
  bool attached() const { return u_.attached(); }
  long abs_prec() const { return u_.prec() + v_; }
  bool is_zero() const { return u_.is_zero(); }
  long valuation() const { return v_ + u_.valuation(); }  // lower bound when ~0

  Kq& operator+=(const Kq& o);
  Kq& operator-=(const Kq& o);
  Kq& operator*=(const Kq& o);
  friend Kq operator+(Kq a, const Kq& b) { return a += b; }
  friend Kq operator-(Kq a, const Kq& b) { return a -= b; }
  friend Kq operator*(Kq a, const Kq& b) { return a *= b; }
  Kq operator-() const;

  Kq& mul_pk(long k) { v_ += k; return *this; }
  Kq& mul_int(const Int& n);      // exact integer multiplication (0 allowed)
  Kq& div_by_int(const Int& n);   // n != 0; costs val_p(n) of absolute precision
  Kq& div(const Kq& o);           // divide by a nonzero Kq
  Kq& reduce_abs_prec(long ap);   // cap absolute precision

  // strip p-powers out of the unit into the shift
  void normalize();

  std::string str() const;

 private:
  Zq u_;
  long v_ = 0;
};

// Ring context.  Working precision W >= precision_cap is the modulus p^W all
// unit arithmetic is carried at; per-element prec <= W tracks what is known.
class ZqRing {
 public:
  // extra_digits: headroom above precision_cap for exact-modular pipelines
  static std::shared_ptr<const ZqRing> make(const PadicParams& params, int extra_digits = 0);

  const PadicParams& params() const { return P_; }
  long p() const { return P_.p; }
  long M() const { return P_.M; }
  long f() const { return P_.f; }
  int work_prec() const { return W_; }
  int cap() const { return P_.precision_cap; }

  const Int& pk(int k) const;            // p^k, 0 <= k <= W
  const Zq& zeta_pow(long e) const;      // zeta^(e mod M)
  const Zq& one() const { return one_; }
  Zq zero(int prec) const;
  Zq from_int(const Int& n, int prec) const;
  Zq from_int(long n, int prec) const { return from_int(Int(n), prec); }
  Kq from_rat(const Rat& r, int prec) const;

  Zq add(const Zq& a, const Zq& b) const;
  Zq mul(const Zq& a, const Zq& b) const;
  Zq pow(const Zq& a, const Int& e) const;

  // inverse of a unit (valuation 0); throws on non-units
  Zq invert(const Zq& a) const;

  // inverse of an integer unit u (p does not divide u) modulo p^prec
  Int inv_int_unit(const Int& u, int prec) const;
  // batch variant: inverts every entry mod p^W in place (Montgomery trick)
  void batch_inv_units(std::vector<Int>& units) const;

  // Iwasawa branch: log(u) = log(u^(q-1))/(q-1); kills Teichmueller parts
  Zq iwasawa_log(const Zq& u) const;

  // 1/(1 - zeta^e) for e not divisible by M (cached); verifies unit-ness
  const Zq& inv_one_minus_zeta(long e) const;

  // digits of the unit part, little-endian: each digit is f residues in [0,p)
  std::vector<std::vector<long>> digits(const Zq& a, int count) const;

 private:
  ZqRing() = default;
  void build(const PadicParams& params, int extra);
  void reduce(Zq& a) const;
  friend class Zq;
  friend class Kq;

  PadicParams P_;
  int W_ = 0;
  std::vector<Int> pk_;       // p^0..p^W
  std::vector<Int> h_;        // monic modulus, degree f, coeffs mod p^W
  std::vector<Zq> zeta_;      // zeta^0..zeta^(M-1)
  Zq one_;
  mutable std::mutex cache_mtx_;
  mutable std::vector<Zq> inv_omz_;  // cache for inv_one_minus_zeta, index 1..M-1
};

// equality to d significant digits: val(a-b) >= min(val a, val b) + d,
// with "indistinguishable from zero" treated as passing
bool agree_sig(const Kq& a, const Kq& b, int d);
// number of significant digits of agreement (capped by joint precision)
long agreement_sig_digits(const Kq& a, const Kq& b);
// equal at the joint stored precision (exact agreement for exact pipelines)
bool indistinguishable(const Kq& a, const Kq& b);

}  // namespace cmzv
