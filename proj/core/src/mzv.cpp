#include "cyclomzv/mzv.hpp"

#include "cyclomzv/bernoulli.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

namespace cmzv {

namespace {

Int poch(long x, int k) {  // (x)_k = x (x+1) ... (x+k-1)
  Int r(1);
  for (int t = 0; t < k; ++t) r *= (x + t);
  return r;
}

Int factorial(int n) {
  Int r;
  mpz_fac_ui(r.get_mpz_t(), n);
  return r;
}

}  // namespace

const char* to_string(IndexVariant v) {
  return v == IndexVariant::KMinusI ? "k-i" : "k-j";
}

long MzvValue::significant_digits() const {
  if (!value.attached() || value.is_zero()) return certified_digits;
  return certified_digits - std::min<long>(value.valuation(), certified_digits);
}

MzvEngine::MzvEngine(EngineConfig cfg) : cfg_(cfg) {
  PadicParams P = PadicParams::make(cfg.p, cfg.M, cfg.digits);
  int extra = cfg.extra_digits;
  if (extra < 0) {
    double lp = std::log(double(std::max<long>(cfg.term_budget, 4))) / std::log(double(cfg.p));
    extra = int((cfg.max_weight + cfg.max_super + 2) * (lp + 2)) + 16;
  }
  R_ = ZqRing::make(P, extra);
  X_ = std::make_shared<XEngine>(R_, cfg.term_budget);
  X_->set_depth1_provider(this);
}

Kq MzvEngine::zeta_ud(long a, long b) const {
  long e = R_->params().underbar(a) - R_->params().underbar(b);
  return Kq(R_->zeta_pow(e));
}

Kq MzvEngine::inv1m_ud(long a, long b) const {
  long e = R_->params().underbar(a) - R_->params().underbar(b);
  return Kq(R_->inv_one_minus_zeta(e));
}

Kq MzvEngine::half(Kq x) const {
  x.div_by_int(Int(2));
  return x;
}

MzvValue MzvEngine::wrap(Kq v, std::string prov, std::vector<std::string> ing) const {
  MzvValue out;
  out.certified_digits = v.attached() ? v.abs_prec() : R_->work_prec();
  out.value = std::move(v);
  out.provenance = std::move(prov);
  out.ingredients = std::move(ing);
  return out;
}

Kq MzvEngine::x_value(const SumSpec& spec) const {
  // Ingredient values for the assembled coefficient formulas.  Those formulas
  // are stated in the normalization where the superscripted limit keeps the
  // p-power of each division step, i.e. p^super times the plain class limit
  // (adjudicated against the solved series; see the class_limit comment).
  Kq v;
  if (spec.super >= 1 && (spec.alpha_n | spec.alpha_d) == 0 &&
      depth1_closed_form_applicable(spec.with_super(0))) {
    // closed form through the depth-1 values of weight super+s: cheaper and
    // better conditioned than the ladder (which stays on for cross-checks)
    long lq = 0;  // the residue class of q^N mod pM: p | l, l = 1 mod M
    for (long l = cfg_.p; l <= cfg_.p * cfg_.M; l += cfg_.p)
      if (l % cfg_.M == 1 % cfg_.M) {
        lq = l;
        break;
      }
    v = class_limit(spec.with_super(0), spec.super, lq);
  } else {
    v = X_->x_limit(spec).value;
  }
  v.mul_pk(spec.super);
  return v;
}

LimitResult MzvEngine::x_result(const SumSpec& spec) const { return X_->x_limit(spec); }

// ------------------------------------------------------------- depth 1 ----

MzvValue MzvEngine::depth1_usual(long j, long i, int s) const {
  if (s < 1) throw std::invalid_argument("depth1_usual: s >= 1 required");
  long a = R_->params().underbar(j) - R_->params().underbar(i);
  LimitResult L = X_->mpn_average_limit(a, s);
  Kq v = L.value;
  v.mul_pk(s + 1);
  v.div_by_int(Int(s));
  return wrap(std::move(v), "depth1-usual", {L.key});
}

MzvValue MzvEngine::depth1_alt(long i, long j, int s) const {
  if (i == j) throw std::invalid_argument("depth1_alt: requires i != j");
  if (s < 1) throw std::invalid_argument("depth1_alt: s >= 1 required");
  SumSpec sp = SumSpec::F1(s, D(j, i));
  Kq v = x_value(sp);
  v *= inv1m_ud(j, i);
  if (s % 2 == 0) v = -v;
  return wrap(std::move(v), "depth1-alt", {"X:" + sp.str()});
}

MzvValue MzvEngine::g_single(long j, long i) const {
  if (i == j) return wrap(Kq(R_->zero(R_->work_prec())), "single:zero", {});
  // log( (1 - zeta^{j-i}) / (1 - zeta^{u(j)-u(i)})^p )
  Zq num = R_->one() - R_->zeta_pow(j - i);
  long e = R_->params().underbar(j) - R_->params().underbar(i);
  Zq den = R_->pow(R_->one() - R_->zeta_pow(e), Int(cfg_.p));
  Zq u = R_->mul(num, R_->invert(den));
  return wrap(Kq(R_->iwasawa_log(u)), "single:log", {});
}

MzvValue MzvEngine::g_single_limit(long j, long i) const {
  if (i == j) throw std::invalid_argument("g_single_limit: i = j has no ladder form");
  long a = R_->params().underbar(j) - R_->params().underbar(i);
  LimitResult L = X_->pn_twisted_limit(a);
  return wrap(L.value, "single:ladder", {L.key});
}

MzvValue MzvEngine::depth1(long i, long j, int s) const {
  if (s < 1) throw std::invalid_argument("depth1: s >= 1 required");
  if (s == 1) return g_single(i, j);
  if (i != j) return depth1_alt(i, j, s);
  return depth1_usual(i, i, s - 1);
}

// ------------------------------------------------------------- depth 2 ----

MzvValue MzvEngine::gF_inf_pair(long i, long j) const {
  if (i == j) throw std::invalid_argument("gF_inf_pair: i != j required");
  SumSpec sp = SumSpec::F1(2, D(i, j));
  Kq v = x_value(sp);
  v *= inv1m_ud(i, j);
  return wrap(std::move(v), "gFinf-pair", {"X:" + sp.str()});
}

MzvValue MzvEngine::gF_inf_depth1(long i, int s, long j) const {
  MzvValue u = depth1_usual(j, i, s);
  Kq v = u.value;
  v *= Kq(R_->from_int(s, R_->work_prec()));
  if (s % 2 == 1) v = -v;
  return wrap(std::move(v), "gFinf-depth1", u.ingredients);
}

MzvValue MzvEngine::gF_inf_pair_tail(long i, long j, int s) const {
  MzvValue u = depth1(i, j, s + 1);  // g_i[e_0^s e_j]
  Kq v = u.value;
  if (s % 2 == 0) v = -v;
  return wrap(std::move(v), "gFinf-pair-tail", u.ingredients);
}

MzvValue MzvEngine::g_pair_same(long i, long j) const {
  if (i == j) throw std::invalid_argument("g_pair_same: requires i != j");
  // (1/2) g_j[e_i]^2 - g_F(inf)[e_i e_j]
  MzvValue s = g_single(j, i);
  MzvValue w = gF_inf_pair(i, j);
  Kq v = half(s.value * s.value) - w.value;
  std::vector<std::string> ing = s.ingredients;
  ing.insert(ing.end(), w.ingredients.begin(), w.ingredients.end());
  return wrap(std::move(v), "pair-same", std::move(ing));
}

MzvValue MzvEngine::g_pair_distinct(long i, long j, long k) const {
  if (i == j || j == k || i == k)
    throw std::invalid_argument("g_pair_distinct: requires pairwise distinct letters");
  std::vector<std::string> ing;
  auto X = [&](const SumSpec& sp) {
    ing.push_back("X:" + sp.str());
    return x_value(sp);
  };
  Kq zik = zeta_ud(i, k), zij = zeta_ud(i, j);
  Kq t = X(SumSpec::F2p(1, 1, D(k, j), D(i, k)).with_cond_n(2));
  t -= zik * X(SumSpec::F2p(1, 1, D(j, i), D(k, j)));
  t += zik * X(SumSpec::F2(1, 1, D(i, j), D(k, i)).with_cond_d(2));
  t -= zik * X(SumSpec::F1(2, D(j, k))) * inv1m_ud(j, k);
  t += zik * X(SumSpec::F1(2, D(i, j))) * inv1m_ud(i, j);
  t -= zij * X(SumSpec::F1(1, D(j, i))) * X(SumSpec::F1(1, D(k, j))) * inv1m_ud(k, j);
  t += zik * X(SumSpec::F1(1, D(j, k))) * X(SumSpec::F1(1, D(k, i))) * inv1m_ud(j, k);
  t += (zij - zik) * X(SumSpec::F1(1, D(i, j))) * X(SumSpec::F1(1, D(k, j))) *
       inv1m_ud(i, j) * inv1m_ud(k, j);
  t *= inv1m_ud(i, k);
  return wrap(std::move(t), "pair-distinct", std::move(ing));
}

MzvValue MzvEngine::g_pair_tail(long i, long j, long k, int s) const {
  if (s == 0) return g_pair_distinct(i, j, k);
  if (i == j || j == k || i == k)
    throw std::invalid_argument("g_pair_tail: requires pairwise distinct letters");
  if (s < 0) throw std::invalid_argument("g_pair_tail: s >= 0 required");
  std::vector<std::string> ing;
  auto X = [&](const SumSpec& sp) {
    ing.push_back("X:" + sp.str());
    return x_value(sp);
  };
  const bool odd = (s % 2 == 1);
  auto sgn_s = [&](Kq v) { return odd ? -v : v; };  // (-1)^s
  Kq zik = zeta_ud(i, k), zij = zeta_ud(i, j);
  const long dvar = cfg_.variant == IndexVariant::KMinusI ? D(k, i) : D(k, j);

  Kq t = sgn_s(zik * X(SumSpec::F1(1, D(j, k))) * inv1m_ud(j, k) *
               X(SumSpec::F1(1, D(k, i)).with_super(s)));
  t += sgn_s(zik * X(SumSpec::F2(1, 1, D(i, j), dvar).with_cond_d(2).with_super(s)));
  {
    Kq acc;
    for (int r = 0; r <= s; ++r)
      acc += X(SumSpec::F2p(1, s + 1 - r, D(k, j), D(i, k)).with_cond_n(2).with_super(r));
    t += sgn_s(acc);
  }
  {
    Kq acc;
    for (int r = 0; r <= s; ++r) {
      Kq u = X(SumSpec::F1(s - r + 1, D(k, j))) * X(SumSpec::F1(1, D(j, i)).with_super(r));
      if (r % 2 == 1) u = -u;
      acc += u;
    }
    t -= zij * inv1m_ud(k, j) * acc;
  }
  t -= sgn_s(zik * X(SumSpec::F2p(1, 1, D(j, i), D(k, j)).with_super(s)));
  t += zij * inv1m_ud(i, j) * X(SumSpec::F1(1, D(i, j))) * X(SumSpec::F1(s + 1, D(k, j))) *
       inv1m_ud(k, j);
  return wrap(std::move(t), std::string("pair-tail(variant=") + to_string(cfg_.variant) + ")",
              std::move(ing));
}

MzvValue MzvEngine::g_mid(long i, long j, long k, int s) const {
  if (s == 1) return g_pair_distinct(i, j, k);
  if (i == j || j == k || i == k)
    throw std::invalid_argument("g_mid: requires pairwise distinct letters");
  if (s < 1) throw std::invalid_argument("g_mid: s >= 1 required");
  MzvValue tail = g_pair_tail(k, i, j, s - 1);
  std::vector<std::string> ing = tail.ingredients;
  auto X = [&](const SumSpec& sp) {
    ing.push_back("X:" + sp.str());
    return x_value(sp);
  };
  Kq t = tail.value;
  t += Kq(R_->from_int(s, R_->work_prec())) * X(SumSpec::F1(s + 1, D(j, k))) * inv1m_ud(j, k);
  t += X(SumSpec::F1(s + 1, D(j, i))) * inv1m_ud(j, i);
  t -= X(SumSpec::F1(1, D(i, k))) * inv1m_ud(i, k) * X(SumSpec::F1(s, D(j, k))) * inv1m_ud(j, k);
  {
    Kq u = X(SumSpec::F1(1, D(i, j))) * X(SumSpec::F1(s, D(k, j))) * inv1m_ud(i, j) *
           inv1m_ud(k, j);
    if (s % 2 == 0) u = -u;  // (-1)^{s-1}
    t += u;
  }
  return wrap(std::move(t), "mid", std::move(ing));
}

MzvValue MzvEngine::g_main(long i, long j, long k, int s, int t) const {
  if (i == j || j == k || i == k)
    throw std::invalid_argument("g_main: requires pairwise distinct letters");
  if (s < 2 || t < 2) throw std::invalid_argument("g_main: s, t >= 2 required");
  std::vector<std::string> ing;
  auto X = [&](const SumSpec& sp) {
    ing.push_back("X:" + sp.str());
    return x_value(sp);
  };
  auto C = [&](long n, long r2) { return Kq(R_->from_int(binomial(n, r2), R_->work_prec())); };
  Kq zij = zeta_ud(i, j), zik = zeta_ud(i, k);
  const long dvar = cfg_.variant == IndexVariant::KMinusI ? D(k, i) : D(k, j);
  auto sgn = [&](int e, Kq v) { return (e % 2 != 0) ? -v : v; };

  // block 1
  Kq acc = sgn(s - 1, zij * C(s + t - 2, s - 1) * X(SumSpec::F1(1, D(i, j))) * inv1m_ud(i, j) *
                          X(SumSpec::F1(s + t - 1, D(k, j))) * inv1m_ud(k, j));
  // block 2
  for (int r = 0; r <= t - 2; ++r) {
    Kq u = C(s + t - r - 3, s - 1) * X(SumSpec::F1(s + t - r - 2, D(k, j))) * inv1m_ud(k, j) *
           X(SumSpec::F1(1, D(j, i)).with_super(1 + r));
    acc -= sgn(r + s, zij * u);
  }
  // block 3
  {
    Kq inner = sgn(t, X(SumSpec::F1(s, D(j, k))) * inv1m_ud(j, k) *
                          X(SumSpec::F1(1, D(k, i)).with_super(t - 1)));
    inner += sgn(s + t, X(SumSpec::F2p(1, s, D(j, i), D(k, j)).with_super(t - 1)));
    {
      Kq sum;
      for (int r = 0; r <= s - 1; ++r)
        sum += X(SumSpec::F2(1 + r, s - r, D(i, j), dvar).with_cond_d(2).with_super(t - 1));
      inner += sgn(s + t + 1, sum);
    }
    acc -= zik * inner;
  }
  // block 4
  {
    Kq sum;
    for (int r = 1; r <= t - 1; ++r)
      sum += X(SumSpec::F2p(s, t - r, D(k, j), D(i, k)).with_cond_n(2).with_super(r));
    sum += X(SumSpec::F2p(s, t, D(k, j), D(i, k)).with_cond_n(2));
    acc += sgn(s + t, sum);
  }
  // block 5
  acc += sgn(s, C(s + t - 2, s - 1) * zij * X(SumSpec::F1(s + t - 1, D(k, j))) * inv1m_ud(k, j) *
                    X(SumSpec::F1(1, D(j, i))));
  return wrap(std::move(acc), std::string("main(variant=") + to_string(cfg_.variant) + ")",
              std::move(ing));
}

std::optional<MzvValue> MzvEngine::canonical2(long i, long j, int s, long k, int t) const {
  if (s < 1 || t < 1) throw std::invalid_argument("canonical2: s, t >= 1 required");
  if (j == k) {
    if (s == 1 && t == 1) {
      // shuffle square: g_i[e_j e_j] = (1/2) g_i[e_j]^2
      MzvValue u = g_single(i, j);
      return wrap(half(u.value * u.value), "pair-square", u.ingredients);
    }
    return std::nullopt;
  }
  if (j == i || k == i) {
    if (s == 1 && t == 1) {
      if (k == i) return g_pair_same(i, j);
      // j == i: g_i[e_i e_k] = -g_i[e_k e_i]
      MzvValue u = g_pair_same(i, k);
      return wrap(-u.value, "pair-same(mirror)", u.ingredients);
    }
    return std::nullopt;
  }
  // i, j, k pairwise distinct
  if (s == 1 && t == 1) return g_pair_distinct(i, j, k);
  if (s == 1) return g_pair_tail(i, j, k, t - 1);
  if (t == 1) return g_mid(i, j, k, s);
  return g_main(i, j, k, s, t);
}

// ----------------------------------------------------- F closed form ----

Kq MzvEngine::F_closed_form(int t, long i, long n) const {
  if (t < 1) throw std::invalid_argument("F_closed_form: t >= 1 required");
  if (((i % cfg_.M) + cfg_.M) % cfg_.M == 0)
    throw std::invalid_argument("F_closed_form: stated for M not dividing i");
  if (n % cfg_.p != 0) throw std::invalid_argument("F_closed_form: requires p | n");
  long vn = 0;
  {
    long u = n;
    while (u % cfg_.p == 0) {
      u /= cfg_.p;
      ++vn;
    }
  }
  long ui = R_->params().underbar(i);
  long zin = (ui % cfg_.M) * (n % cfg_.M) % cfg_.M;
  Kq zeta_in{R_->zeta_pow(zin)};
  Kq acc = Kq(g_e0s_e(t - 1, i)) * (Kq(R_->one()) - zeta_in);
  Int fact = factorial(t - 1);
  Kq sum;
  Int npow(1);
  // truncate once the tail valuation r*val_p(n) clears the certification
  // target (the dropped tail has valuation >= r*val_p(n))
  const long rmax = (cfg_.digits + cfg_.threshold + 8) / vn + 1;
  for (long r = 1; r <= rmax; ++r) {
    npow *= n;
    Kq term = Kq(g_e0s_e(r + t - 1, i));
    term *= Kq(R_->from_int(poch(r + 1, t - 1) * npow, R_->work_prec()));
    term.mul_pk(-r);  // the series variable is n/p in the unnormalized picture
    sum += term;
  }
  sum.reduce_abs_prec(rmax * vn);  // the truncation bound is part of the certificate
  sum *= zeta_in;
  sum.div_by_int(fact);
  acc -= sum;
  if (t % 2 == 0) acc = -acc;
  return acc;
}

Kq MzvEngine::g_e0s_e(long a, long m) const {
  long mm = ((m % cfg_.M) + cfg_.M) % cfg_.M;
  if (mm == 0) mm = cfg_.M;
  auto key = std::make_pair(a, mm);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = g_e0s_memo_.find(key);
    if (it != g_e0s_memo_.end()) return it->second;
  }
  Kq v;
  if (mm == cfg_.M) {
    if (a == 0) v = Kq(R_->zero(R_->work_prec()));  // g[e_M] = 0
    else v = depth1_usual(cfg_.M, cfg_.M, int(a)).value;
  } else {
    v = depth1(cfg_.M, mm, int(a) + 1).value;
  }
  std::lock_guard<std::mutex> lock(mtx_);
  return g_e0s_memo_.emplace(key, std::move(v)).first->second;
}

Kq MzvEngine::class_limit(const SumSpec& base, int order, long l) const {
  // closed forms exist for the plain depth-1 family; anything else goes to
  // the numeric ladder
  if (!depth1_closed_form_applicable(base)) return X_->class_limit(base, order, l);
  if (base.alpha_n | base.alpha_d) {
    // p | n_1 together with condition (i) empties the sum
    return Kq(R_->zero(R_->work_prec()));
  }
  const int s = base.s[0];
  const long m = base.idx[0];
  const long ui = R_->params().underbar(m);
  long e = (ui % cfg_.M) * (l % cfg_.M) % cfg_.M;
  Kq zl{R_->zeta_pow(e)};
  if (order == 0) {
    Kq v = Kq(g_e0s_e(s - 1, m)) * (Kq(R_->one()) - zl);
    if (s % 2 == 0) v = -v;
    return v;
  }
  // the derivation of these limits runs in the normalization e_i -> p^{-1} e_i;
  // translating back leaves a p^{-order} the source display drops (adjudicated
  // against the definitional iterate and the solved series)
  Kq v = Kq(g_e0s_e(order + s - 1, m)) * zl;
  v *= Kq(R_->from_int(binomial(order + s - 1, s - 1), R_->work_prec()));
  v.mul_pk(-order);
  if (s % 2 == 1) v = -v;
  return v;
}

// ------------------------------------------------------ series assembly ----

const NCSeries& MzvEngine::build_g(long i, int cap) const {
  if (cap < 0) cap = cfg_.word_cap;
  auto key = std::make_pair(i, cap);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = g_cache_.find(key);
    if (it != g_cache_.end()) return it->second.series;
  }

  auto canonical = [this, i](const Word& w) -> std::optional<Kq> {
    if (w.empty()) return Kq(R_->one());
    if (w.size() == 1 && w.a[0] == 0) return Kq();  // g_i[e_0] = 0
    if (w.a.front() == 0) return std::nullopt;      // only canonical strata here
    const int d = w.depth();
    if (d == 1) {
      // e_j e_0^b  ->  (-1)^b g_i[e_0^b e_j]
      long j = w.a.front();
      int b = int(w.size()) - 1;
      Kq v = depth1(i, j, b + 1).value;
      if (b % 2 == 1) v = -v;
      return v;
    }
    if (d == 2) {
      long j = w.a.front();
      size_t pos = 1;
      while (pos < w.size() && w.a[pos] == 0) ++pos;
      int s = int(pos);  // e_j followed by s-1 zeros
      long k = w.a[pos];
      int t = int(w.size() - pos);
      auto v = canonical2(i, j, s, k, t);
      if (!v.has_value()) return std::nullopt;
      return v->value;
    }
    return std::nullopt;  // depth >= 3: not determined here
  };
  ShuffleFill fill = shuffle_complete(R_, cap, canonical, cfg_.threshold);
  std::lock_guard<std::mutex> lock(mtx_);
  auto [ins, ok] = g_cache_.emplace(key, std::move(fill));
  (void)ok;
  return ins->second.series;
}

const ShuffleFill& MzvEngine::build_report(long i, int cap) const {
  if (cap < 0) cap = cfg_.word_cap;
  build_g(i, cap);
  std::lock_guard<std::mutex> lock(mtx_);
  return g_cache_.at(std::make_pair(i, cap));
}

std::vector<Word> MzvEngine::injected_words(long i, int cap) const {
  return build_report(i, cap).injected_zero;
}

NCSeries MzvEngine::conj_constant(long m, int cap) const {
  if (cap < 0) cap = cfg_.word_cap;
  auto key = std::make_pair(m, cap);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = conj_cache_.find(key);
    if (it != conj_cache_.end()) return it->second;
  }
  NCSeries c = conjugate(build_g(m, cap), m);
  std::lock_guard<std::mutex> lock(mtx_);
  return conj_cache_.emplace(key, std::move(c)).first->second;
}

MzvValue MzvEngine::coefficient(long base_i, const Word& w) const {
  int cap = std::max<int>(cfg_.word_cap, int(w.size()));
  const NCSeries& g = build_g(base_i, cap);
  Kq v = g.get(w);
  if (!v.attached()) v = Kq(R_->zero(R_->work_prec()));
  MzvValue out = wrap(std::move(v), "series", {});
  auto content = [this](const Word& x) {
    std::vector<int> c(cfg_.M + 1, 0);
    for (uint8_t l : x.a) ++c[l];
    return c;
  };
  std::vector<int> cw = content(w);
  for (const auto& lw : injected_words(base_i, cap)) {
    // flag values that rest on an undetermined free coordinate of w's content
    if (lw.size() > w.size()) continue;
    std::vector<int> cl = content(lw);
    bool sub = true;
    for (size_t t = 0; t < cl.size(); ++t)
      if (cl[t] > cw[t]) {
        sub = false;
        break;
      }
    if (sub) {
      out.provenance = "series(diagnostic: undetermined coordinate " + lw.str() + ")";
      break;
    }
  }
  return out;
}

}  // namespace cmzv
