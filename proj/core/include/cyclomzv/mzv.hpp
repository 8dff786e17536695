#pragma once
// Closed-form depth <= 2 coefficient values with certified precision, their
// assembly into full truncated group-like series, and the class-limit tables
// the superscript operators consume.

#include "cyclomzv/ncseries.hpp"
#include "cyclomzv/sums.hpp"

#include <optional>

namespace cmzv {

// Two readings of the d_2-conditioned ingredient whose third index the source
// displays inconsistently; the differential-equation audit picks the survivor.
enum class IndexVariant { KMinusI, KMinusJ };

const char* to_string(IndexVariant v);

struct MzvValue {
  Kq value;
  long certified_digits = 0;  // absolute precision of value
  std::string provenance;
  std::vector<std::string> ingredients;

  long significant_digits() const;
};

struct EngineConfig {
  long p = 2;
  long M = 3;
  int digits = 40;              // certification target
  long term_budget = 1000000;   // q^N and M p^N ladders stay below this
  int word_cap = 5;
  int threshold = 4;            // certified-digit floor for audits
  IndexVariant variant = IndexVariant::KMinusI;
  int max_weight = 12;          // provisioning for working-precision headroom
  int max_super = 6;
  int extra_digits = -1;        // -1: derive from the fields above
};

class MzvEngine : public ClassLimitProvider {
 public:
  explicit MzvEngine(EngineConfig cfg);

  const EngineConfig& config() const { return cfg_; }
  std::shared_ptr<const ZqRing> ring_ptr() const { return R_; }
  const ZqRing& ring() const { return *R_; }
  const XEngine& xengine() const { return *X_; }

  // ---- depth 1 ----
  // g_j[e_0^s e_i], s >= 1, any i, j  (M p^N average ladder)
  MzvValue depth1_usual(long j, long i, int s) const;
  // g_i[e_0^{s-1} e_j], s >= 1, i != j  (q^N ladder)
  MzvValue depth1_alt(long i, long j, int s) const;
  // g_j[e_i]: 0 when i = j, else the Iwasawa-log closed form
  MzvValue g_single(long j, long i) const;
  // the truncation-ladder expression of the same value (dual path)
  MzvValue g_single_limit(long j, long i) const;
  // router: g_i[e_0^{s-1} e_j] for any i, j, s >= 1
  MzvValue depth1(long i, long j, int s) const;

  // ---- depth 2, covered strata ----
  MzvValue g_pair_same(long i, long j) const;                   // g_i[e_j e_i], i != j
  MzvValue g_pair_distinct(long i, long j, long k) const;       // pairwise distinct
  MzvValue g_pair_tail(long i, long j, long k, int s) const;    // g_i[e_j e_k e_0^s], s >= 0
  MzvValue g_mid(long i, long j, long k, int s) const;          // g_i[e_j e_0^{s-1} e_k], s >= 1
  MzvValue g_main(long i, long j, long k, int s, int t) const;  // s, t >= 2
  // router: g_i[e_j e_0^{s-1} e_k e_0^{t-1}] where a covered stratum exists
  std::optional<MzvValue> canonical2(long i, long j, int s, long k, int t) const;

  // ---- values of the solved series at infinity, in closed form ----
  MzvValue gF_inf_pair(long i, long j) const;              // word e_i e_j, i != j
  MzvValue gF_inf_depth1(long i, int s, long j) const;     // word e_i e_0^{s-1} e_j
  MzvValue gF_inf_pair_tail(long i, long j, int s) const;  // word e_i e_j e_0^{s-1}

  // the M-power-series closed form for F(t;i)(n) at p | n (tested vs eval_F);
  // rejects M | i
  Kq F_closed_form(int t, long i, long n) const;

  // depth-1 coefficient of the base series g = g_M: g[e_0^a e_m]
  Kq g_e0s_e(long a, long m) const;

  // closed-form class limits for plain depth-1 bases; everything else
  // delegates to the numeric ladder
  Kq class_limit(const SumSpec& base, int order, long l) const override;

  // ---- series assembly ----
  const NCSeries& build_g(long i, int cap = -1) const;  // cached per (i, cap)
  const ShuffleFill& build_report(long i, int cap = -1) const;
  std::vector<Word> injected_words(long i, int cap = -1) const;
  NCSeries conj_constant(long m, int cap = -1) const;  // g_m^{-1} e_m g_m (cached)

  // coefficient query for arbitrary words (via the group-like completion)
  MzvValue coefficient(long base_i, const Word& w) const;

  // certified X-limit (cached); spec.super selects the outer order
  Kq x_value(const SumSpec& spec) const;
  LimitResult x_result(const SumSpec& spec) const;

  // helpers shared with the audits
  long D(long a, long b) const { return index_diff(a, b, cfg_.M); }
  Kq zeta_ud(long a, long b) const;     // zeta^{u(a) - u(b)}
  Kq inv1m_ud(long a, long b) const;    // 1/(1 - zeta^{u(a)-u(b)})

 private:
  Kq half(Kq x) const;
  MzvValue wrap(Kq v, std::string prov, std::vector<std::string> ing) const;

  EngineConfig cfg_;
  std::shared_ptr<const ZqRing> R_;
  std::shared_ptr<XEngine> X_;
  mutable std::mutex mtx_;
  mutable std::map<std::pair<long, long>, Kq> g_e0s_memo_;
  mutable std::map<std::pair<long, int>, ShuffleFill> g_cache_;
  mutable std::map<std::pair<long, int>, NCSeries> conj_cache_;
};

}  // namespace cmzv
