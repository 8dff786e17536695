#pragma once
// Numeric evaluation of the iterated-sum families S, T, F, G (and underlined
// variants), the superscript operators, and certified limits along the q^N,
// l*q^N, M*p^N and p^N truncation ladders.
//
// All evaluation is exact-modular: terms are exact values carried at the
// ring's working precision with valuation shifts; certified digits of limits
// come from the valuations of consecutive-truncation differences.

#include "cyclomzv/padic.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cmzv {

// Description of one iterated sum.
//   F(s; i; alpha)(n) = p^{sum s} * sum over 0 < n_1 < ... < n_k < n of
//       zeta^{u(i_1) n_1 + ... + u(i_k) n_k} / (n_1^{s_1} ... n_k^{s_k})
// subject to (i) p not dividing n_1 when restrict_first, and (ii) p | a for
// every a in alpha (alpha_n bit j-1 names n_j, alpha_d bit j-1 names d_j,
// d_j = n_j - n_{j-1}, n_0 = 0).  A parenthesized position P >= 2 replaces
// the 1/n_P^{s_P} weight by the superscript operator of order s_P applied to
// the inner partial function.  `underlined` drops the p-power prefactor,
// `super` is the outer superscript order (the X^{(.)} order).
struct SumSpec {
  std::vector<int> s;
  std::vector<long> idx;
  std::vector<bool> paren;  // may be empty = all plain
  unsigned alpha_n = 0;
  unsigned alpha_d = 0;
  bool restrict_first = true;
  bool underlined = false;
  int super = 0;

  int depth() const { return int(s.size()); }
  int weight() const;
  bool has_paren() const;
  std::string str() const;  // canonical form; used as cache key

  // checks structural invariants against the ring; throws on violation
  void validate(long M) const;

  static SumSpec F1(int s, long i);                       // F(s; i)
  static SumSpec F2(int s1, int s2, long i1, long i2);    // F(s1,s2; i1,i2)
  static SumSpec F2p(int s1, int s2, long i1, long i2);   // F(s1,(s2); i1,i2)
  SumSpec with_cond_n(int j) const;   // require p | n_j
  SumSpec with_cond_d(int j) const;   // require p | d_j
  SumSpec with_super(int r) const;
  SumSpec as_T() const;               // drop condition (i)
};

// Limits of superscripted functions on residue classes mod pM:
//   class_limit(base, r, l) = lim_{n -> 0, pM | (n - l)} base^{(r)}(n),
// for p | l.  Implementations: closed forms (depth-1 bases, via the depth-1
// coefficient values) and numeric extrapolation along l*q^N.
class ClassLimitProvider {
 public:
  virtual ~ClassLimitProvider() = default;
  virtual Kq class_limit(const SumSpec& base, int order, long l) const = 0;
};

// the family whose class limits have closed forms (routing predicate shared
// by the providers so delegation cannot cycle)
bool depth1_closed_form_applicable(const SumSpec& base);

// Incremental prefix-sum evaluator of F(spec)(n) (no outer superscript).
// O(depth) ring operations per integer step; inner parenthesized positions
// consume class limits from the provider.
class FStream {
 public:
  FStream(std::shared_ptr<const ZqRing> R, SumSpec spec,
          const ClassLimitProvider* inner = nullptr);

  // advance the internal counter so that all terms with n_k < n are folded
  void advance_to(long n);
  long position() const { return next_m_; }  // terms < position are folded

  Kq total() const;          // F(spec)(position)
  Kq class_part(long c) const;  // accumulation restricted to n_k = c (mod p)

  const SumSpec& spec() const { return spec_; }

 private:
  void step(long m, const Int& inv_unit, int val);
  Kq level_weight(long m, const Int& inv_unit, int val, int pos) const;
  const Kq& cached_limit(int level, int order, long l);

  std::shared_ptr<const ZqRing> R_;
  SumSpec spec_;
  const ClassLimitProvider* inner_;
  long next_m_ = 1;
  // acc_[lvl][class mod p]; lvl in 0..k-1
  std::vector<std::vector<Kq>> acc_;
  std::vector<long> zexp_;  // running exponents of zeta per level
  std::vector<SumSpec> inner_base_;                        // per level, when paren
  std::vector<std::map<std::pair<int, long>, Kq>> limtab_;  // per level memo
};

// pointwise superscript operator: value = base^{(order)}(m) given base(m)
Kq superscript_point(const ZqRing& R, const SumSpec& base, const ClassLimitProvider& lim,
                     const Kq& value_at_m, int order, long m);

// one-shot evaluations
Kq eval_F(std::shared_ptr<const ZqRing> R, const SumSpec& spec, long n,
          const ClassLimitProvider* inner = nullptr);

// Coefficient stream of the z-power series S(spec)(z) (or T when
// restrict_first is off), via the reduction to a shifted F-spec.
class SStream {
 public:
  SStream(std::shared_ptr<const ZqRing> R, SumSpec sspec,
          const ClassLimitProvider* lim = nullptr);
  Kq coeff(long n);  // coefficient of z^n; n strictly increasing across calls
  const SumSpec& reduced_spec() const { return inner_spec_; }

 private:
  std::shared_ptr<const ZqRing> R_;
  SumSpec sspec_;
  SumSpec inner_spec_;        // depth k-1 F-spec (valid when depth >= 2)
  bool outer_d_cond_ = false; // alpha named d_k: inner readout filtered by n mod p
  bool outer_n_cond_ = false; // alpha named n_k: gate p | n
  const ClassLimitProvider* lim_;
  std::unique_ptr<FStream> inner_stream_;
  std::map<std::pair<int, long>, Kq> outer_limtab_;
};

Kq coeff_S(std::shared_ptr<const ZqRing> R, const SumSpec& spec, long n,
           const ClassLimitProvider* lim = nullptr);

// certified limit of a truncation stream
struct LimitResult {
  Kq value;                         // reduced to the certified absolute precision
  long certified_digits = 0;        // min of the last two difference valuations
  int N_used = 0;
  std::vector<long> diff_valuations;
  std::vector<long> running_certificates;  // certificate after each ladder rung
  std::string key;

  long significant_digits() const;  // certified digits above the value's valuation
};

// min valuation of the last two consecutive differences; needs >= 3 entries
long cauchy_certificate(const std::vector<Kq>& stream);

// Evaluates X^{(r)}(spec) = lim_N F^{(r)}(spec)(l q^N) with a divided-
// difference ladder for r >= 1, plus the other ladders the depth-1 values
// need.  Also the generic numeric ClassLimitProvider (extrapolation along
// l q^N); a closed-form provider for depth-1 bases may be plugged in and is
// preferred when present.
class XEngine : public ClassLimitProvider {
 public:
  XEngine(std::shared_ptr<const ZqRing> R, long term_budget);

  const ZqRing& ring() const { return *R_; }
  std::shared_ptr<const ZqRing> ring_ptr() const { return R_; }
  long term_budget() const { return budget_; }

  // prefer `p` for depth-1 inner superscript constants (closed forms)
  void set_depth1_provider(const ClassLimitProvider* p) { depth1_ = p; }

  LimitResult x_limit(const SumSpec& spec, long l = 1) const;

  // lim_N (1/(M p^N)) sum_{0<n<M p^N, p not| n} zeta^{a n} / n^s
  LimitResult mpn_average_limit(long a, int s) const;

  // lim_N p/(1 - zeta^{a p^N}) * sum_{0<n<p^N, p not| n} zeta^{a n} / n
  LimitResult pn_twisted_limit(long a) const;

  // numeric fallback for any base spec (ladder along l q^N)
  Kq class_limit(const SumSpec& base, int order, long l) const override;

  // every limit handed out so far (for certificate audits); key -> result
  std::map<std::string, LimitResult> snapshot_cache() const;

 private:
  // The lock guards only cache lookups and inserts; computation happens
  // unlocked (results are deterministic, so a racing duplicate computation
  // is harmless), keeping the provider recursion deadlock-free under the
  // table worker pool.
  std::shared_ptr<const ZqRing> R_;
  long budget_;
  const ClassLimitProvider* depth1_ = nullptr;
  mutable std::mutex mtx_;
  mutable std::map<std::string, LimitResult> cache_;
  mutable std::map<std::string, std::vector<Kq>> chi_cache_;
};

}  // namespace cmzv
