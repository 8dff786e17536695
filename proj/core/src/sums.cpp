#include "cyclomzv/sums.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace cmzv {

namespace {

constexpr long kHugeVal = 1L << 40;

long kq_val(const Kq& x) {
  if (!x.attached()) return kHugeVal;
  if (x.is_zero()) return x.abs_prec();
  return x.valuation();
}

// residue class of m in 1..pM (the paper's l)
long class_of(long m, long p, long M) { return (m - 1) % (p * M) + 1; }

// Evaluate the parenthesized-position operator at point m given the plain
// inner value: (inner(m) - sum_{r<order} c_r(l_m) m^r) / m^order, with the
// class data c_r defined on every residue class mod pM.  Two routes: subtract
// and divide (cheap; at divisible points each division amplifies the
// constants' finite precision by p^val), or sum the class power series
// base^{(order)}(m) = sum_j c_{order+j}(l) m^j whose terms only gain
// precision.  The series route needs closed-form constants (plain depth-1
// bases) and is used at highly divisible points, where the subtract route
// would be ill-conditioned.
template <typename Fetch>
Kq paren_op_value(const ZqRing& R, const Fetch& class_data, const Kq& value_at_m, int order,
                  long m, int val, bool series_ok) {
  const long l = class_of(m, R.p(), R.M());
  const int v0 = R.p() == 2 ? 3 : 2;
  if (val < v0 || !series_ok) {
    Kq y = value_at_m;
    for (int r = 0; r < order; ++r) {
      y -= class_data(r, l);
      y.div_by_int(Int(m));
    }
    return y;
  }
  const long digits_goal = R.cap() + 16;
  Kq acc;
  Int mpow(1);
  for (long j = 0; j * val < digits_goal; ++j) {
    Kq term = class_data(order + int(j), l);
    term.mul_int(mpow);
    acc += term;
    mpow *= m;
  }
  return acc;
}

}  // namespace

// ------------------------------------------------------------ SumSpec ----

int SumSpec::weight() const {
  int w = 0;
  for (int e : s) w += e;
  return w;
}

bool SumSpec::has_paren() const {
  for (bool b : paren)
    if (b) return true;
  return false;
}

std::string SumSpec::str() const {
  std::ostringstream os;
  os << (restrict_first ? "F" : "G") << (underlined ? "u" : "") << "[";
  for (size_t j = 0; j < s.size(); ++j) {
    if (j) os << ",";
    if (!paren.empty() && paren[j]) os << "(" << s[j] << ")";
    else os << s[j];
  }
  os << ";";
  for (size_t j = 0; j < idx.size(); ++j) os << (j ? "," : "") << idx[j];
  if (alpha_n || alpha_d) {
    os << ";";
    for (int j = 0; j < depth(); ++j)
      if (alpha_n & (1u << j)) os << "n" << (j + 1);
    for (int j = 0; j < depth(); ++j)
      if (alpha_d & (1u << j)) os << "d" << (j + 1);
  }
  os << "]";
  if (super) os << "^(" << super << ")";
  return os.str();
}

void SumSpec::validate(long M) const {
  const int k = depth();
  if (k < 1 || k > 3) throw std::invalid_argument("SumSpec: depth must be 1..3");
  if (int(idx.size()) != k) throw std::invalid_argument("SumSpec: index tuple size mismatch");
  if (!paren.empty() && int(paren.size()) != k)
    throw std::invalid_argument("SumSpec: paren flag size mismatch");
  for (int e : s)
    if (e < 1) throw std::invalid_argument("SumSpec: exponents must be positive");
  for (long i : idx)
    if (i < 1 || i > M) throw std::invalid_argument("SumSpec: indices must lie in 1..M");
  if (super < 0) throw std::invalid_argument("SumSpec: negative superscript");
  if ((alpha_n | alpha_d) >> k)
    throw std::invalid_argument("SumSpec: alpha references out-of-range symbols");
  if (!paren.empty()) {
    if (paren[0]) throw std::invalid_argument("SumSpec: position 1 cannot be parenthesized");
    for (int j = 1; j < k; ++j) {
      // a d-condition on an interior parenthesized position couples to a
      // variable the operator absorbed; on the last position the coefficient
      // reduction turns it into a congruence on the position below
      if (paren[j] && (alpha_d & (1u << j)) && (j != k - 1 || k < 3))
        throw std::invalid_argument("SumSpec: d-condition across a parenthesized position");
    }
  }
}

SumSpec SumSpec::F1(int s, long i) {
  SumSpec x;
  x.s = {s};
  x.idx = {i};
  return x;
}

SumSpec SumSpec::F2(int s1, int s2, long i1, long i2) {
  SumSpec x;
  x.s = {s1, s2};
  x.idx = {i1, i2};
  return x;
}

SumSpec SumSpec::F2p(int s1, int s2, long i1, long i2) {
  SumSpec x = F2(s1, s2, i1, i2);
  x.paren = {false, true};
  return x;
}

SumSpec SumSpec::with_cond_n(int j) const {
  SumSpec x = *this;
  x.alpha_n |= 1u << (j - 1);
  return x;
}

SumSpec SumSpec::with_cond_d(int j) const {
  SumSpec x = *this;
  x.alpha_d |= 1u << (j - 1);
  return x;
}

SumSpec SumSpec::with_super(int r) const {
  SumSpec x = *this;
  x.super = r;
  return x;
}

SumSpec SumSpec::as_T() const {
  SumSpec x = *this;
  x.restrict_first = false;
  return x;
}

// ------------------------------------------------------------ FStream ----

FStream::FStream(std::shared_ptr<const ZqRing> R, SumSpec spec, const ClassLimitProvider* inner)
    : R_(std::move(R)), spec_(std::move(spec)), inner_(inner) {
  spec_.validate(R_->M());
  assert(spec_.super == 0 && "FStream evaluates the base function; apply super outside");
  if (spec_.has_paren() && inner_ == nullptr)
    throw std::invalid_argument("FStream: parenthesized spec needs a class-limit provider");
  if (!spec_.paren.empty() && spec_.paren.back() && (spec_.alpha_d >> (spec_.depth() - 1)) & 1u)
    throw std::invalid_argument("FStream: d-condition on the outer position needs the "
                                "coefficient reduction");
  const int k = spec_.depth();
  acc_.assign(k, std::vector<Kq>(R_->p()));
  zexp_.assign(k, 0);
  inner_base_.resize(k);
  limtab_.resize(k);
  for (int j = 1; j < k; ++j) {
    if (spec_.paren.empty() || !spec_.paren[j]) continue;
    SumSpec& b = inner_base_[j];
    b.s.assign(spec_.s.begin(), spec_.s.begin() + j);
    b.idx.assign(spec_.idx.begin(), spec_.idx.begin() + j);
    b.paren.assign(spec_.paren.begin(), spec_.paren.begin() + j);
    unsigned mask = (1u << j) - 1;
    b.alpha_n = spec_.alpha_n & mask;
    b.alpha_d = spec_.alpha_d & mask;
    b.restrict_first = spec_.restrict_first;
  }
}

const Kq& FStream::cached_limit(int level, int order, long l) {
  auto key = std::make_pair(order, l);
  auto it = limtab_[level].find(key);
  if (it == limtab_[level].end())
    it = limtab_[level].emplace(key, inner_->class_limit(inner_base_[level], order, l)).first;
  return it->second;
}

Kq FStream::total() const {
  Kq t;
  for (const auto& c : acc_.back()) t += c;
  if (spec_.underlined) t.mul_pk(-spec_.weight());
  return t;
}

Kq FStream::class_part(long c) const {
  Kq t = acc_.back()[c % R_->p()];
  if (spec_.underlined) t.mul_pk(-spec_.weight());
  return t;
}

void FStream::advance_to(long n) {
  const long B = 512;
  std::vector<long> ms, vals;
  std::vector<Int> units;
  while (next_m_ < n) {
    long hi = std::min(n, next_m_ + B);
    ms.clear();
    vals.clear();
    units.clear();
    for (long m = next_m_; m < hi; ++m) {
      long v = 0, u = m;
      while (u % R_->p() == 0) {
        u /= R_->p();
        ++v;
      }
      ms.push_back(m);
      vals.push_back(v);
      units.push_back(Int(u));
    }
    R_->batch_inv_units(units);
    for (size_t t = 0; t < ms.size(); ++t) step(ms[t], units[t], int(vals[t]));
    next_m_ = hi;
  }
}

// weight p^{s_j} zeta^{u(i_j) m} / m^{s_j} at level index pos (0-based)
Kq FStream::level_weight(long, const Int& inv_unit, int val, int pos) const {
  const int e = spec_.s[pos];
  Zq u = R_->zeta_pow(zexp_[pos]);
  Int iu = inv_unit;
  for (int t = 0; t < e; ++t) u.mul_int(iu);
  return Kq(std::move(u), e - long(e) * val);
}

void FStream::step(long m, const Int& inv_unit, int val) {
  const int k = spec_.depth();
  const long p = R_->p();
  // update the running zeta exponents (they describe the CURRENT m)
  for (int j = 0; j < k; ++j) zexp_[j] = (zexp_[j] + R_->params().underbar(spec_.idx[j])) % R_->M();

  std::vector<Kq> contrib(k);
  for (int j = k - 1; j >= 0; --j) {
    // gates on n_{j+1} = m
    if (j == 0 && spec_.restrict_first && val > 0) continue;
    if ((spec_.alpha_n & (1u << j)) && val == 0) continue;
    if (j == 0 && (spec_.alpha_d & 1u) && val == 0) continue;  // d_1 = n_1
    bool is_paren = !spec_.paren.empty() && spec_.paren[j];
    if (j == 0) {
      contrib[0] = level_weight(m, inv_unit, val, 0);
    } else {
      Kq base;
      if (is_paren) {
        // inner partial function of levels 0..j-1, in prefactored normalization
        Kq y;
        for (const auto& c : acc_[j - 1]) y += c;
        auto fetch = [this, j](int r, long l) { return cached_limit(j, r, l); };
        y = paren_op_value(*R_, fetch, y, spec_.s[j], m, val,
                           depth1_closed_form_applicable(inner_base_[j]));
        Zq u = R_->zeta_pow(zexp_[j]);
        Kq w(std::move(u), spec_.s[j]);  // p^{s_j} zeta^{...}, no 1/m^{s_j}
        contrib[j] = y * w;
        continue;
      }
      if (spec_.alpha_d & (1u << j)) {
        base = acc_[j - 1][m % p];  // p | d_{j+1}  <=>  n_j = m (mod p)
      } else {
        for (const auto& c : acc_[j - 1]) base += c;
      }
      contrib[j] = base * level_weight(m, inv_unit, val, j);
    }
  }
  for (int j = 0; j < k; ++j)
    if (contrib[j].attached()) acc_[j][m % p] += contrib[j];
}

Kq superscript_point(const ZqRing& R, const SumSpec& base, const ClassLimitProvider& lim,
                     const Kq& value_at_m, int order, long m) {
  Kq y = value_at_m;
  if (order == 0) return y;
  if (m % R.p() != 0) {
    for (int t = 0; t < order; ++t) y.div_by_int(Int(m));
    return y;
  }
  long l = class_of(m, R.p(), R.M());
  for (int r = 0; r < order; ++r) {
    y -= lim.class_limit(base, r, l);
    y.div_by_int(Int(m));
  }
  return y;
}

Kq eval_F(std::shared_ptr<const ZqRing> R, const SumSpec& spec, long n,
          const ClassLimitProvider* inner) {
  if (spec.super != 0) {
    SumSpec base = spec.with_super(0);
    FStream fs(R, base, inner);
    fs.advance_to(n);
    if (inner == nullptr) throw std::invalid_argument("eval_F: superscript needs a provider");
    return superscript_point(*R, base, *inner, fs.total(), spec.super, n);
  }
  FStream fs(R, spec, inner);
  fs.advance_to(n);
  return fs.total();
}

// ------------------------------------------------------------ SStream ----

SStream::SStream(std::shared_ptr<const ZqRing> R, SumSpec sspec, const ClassLimitProvider* lim)
    : R_(std::move(R)), sspec_(std::move(sspec)), lim_(lim) {
  sspec_.validate(R_->M());
  if (sspec_.super != 0) throw std::invalid_argument("SStream: outer superscript not meaningful");
  const int k = sspec_.depth();
  if (!sspec_.paren.empty() && sspec_.paren[0])
    throw std::invalid_argument("SStream: position 1 cannot be parenthesized");
  if (k >= 2) {
    inner_spec_.s.assign(sspec_.s.begin(), sspec_.s.end() - 1);
    inner_spec_.idx.clear();
    for (int j = 0; j + 1 < k; ++j)
      inner_spec_.idx.push_back(index_diff(sspec_.idx[j + 1], sspec_.idx[j], R_->M()));
    if (!sspec_.paren.empty())
      inner_spec_.paren.assign(sspec_.paren.begin(), sspec_.paren.end() - 1);
    unsigned mask = (1u << (k - 1)) - 1;
    inner_spec_.alpha_n = sspec_.alpha_n & mask;
    inner_spec_.alpha_d = sspec_.alpha_d & mask;
    inner_spec_.restrict_first = sspec_.restrict_first;
    outer_n_cond_ = (sspec_.alpha_n >> (k - 1)) & 1u;
    outer_d_cond_ = (sspec_.alpha_d >> (k - 1)) & 1u;
    bool outer_paren = !sspec_.paren.empty() && sspec_.paren[k - 1];
    if (outer_paren && lim_ == nullptr)
      throw std::invalid_argument("SStream: parenthesized outer position needs a provider");
    inner_stream_ = std::make_unique<FStream>(R_, inner_spec_, lim_);
  } else {
    if (sspec_.alpha_n & 1u) outer_n_cond_ = true;
    if (sspec_.alpha_d & 1u) outer_n_cond_ = true;  // d_1 = n_1
  }
}

Kq SStream::coeff(long n) {
  const long p = R_->p();
  const int k = sspec_.depth();
  const long ubark = R_->params().underbar(sspec_.idx[k - 1]);
  long zp = ((-(ubark % R_->M()) * (n % R_->M())) % R_->M() + R_->M()) % R_->M();
  const int sk = sspec_.s[k - 1];
  bool pdiv = (n % p == 0);

  if (k == 1) {
    if (sspec_.restrict_first && pdiv) return Kq();
    if (outer_n_cond_ && !pdiv) return Kq();
    long v = 0, u = n;
    while (u % p == 0) {
      u /= p;
      ++v;
    }
    Zq z = R_->zeta_pow(zp);
    Int iu = R_->inv_int_unit(Int(u), R_->work_prec());
    for (int t = 0; t < sk; ++t) z.mul_int(iu);
    Kq val(std::move(z), sk - long(sk) * v);
    if (sspec_.underlined) val.mul_pk(-sspec_.weight());
    return val;
  }

  inner_stream_->advance_to(n);
  if (outer_n_cond_ && !pdiv) return Kq();
  bool outer_paren = !sspec_.paren.empty() && sspec_.paren[k - 1];
  Kq base = outer_d_cond_ ? inner_stream_->class_part(n % p) : inner_stream_->total();
  Kq val;
  if (!outer_paren) {
    base.mul_pk(sk);
    for (int t = 0; t < sk; ++t) base.div_by_int(Int(n));
    val = base;
  } else {
    SumSpec limit_base = inner_spec_;
    if (outer_d_cond_) {
      // p | d_k collapses to p | n_{k-1} on the classes where limits are taken
      limit_base.alpha_n |= 1u << (k - 2);
    }
    int v = 0;
    {
      long u = n;
      while (u % p == 0) {
        u /= p;
        ++v;
      }
    }
    auto fetch = [&](int r, long l) -> const Kq& {
      auto key = std::make_pair(r, l);
      auto it = outer_limtab_.find(key);
      if (it == outer_limtab_.end())
        it = outer_limtab_.emplace(key, lim_->class_limit(limit_base, r, l)).first;
      return it->second;
    };
    Kq y = paren_op_value(*R_, fetch, base, sk, n, v,
                          depth1_closed_form_applicable(limit_base));
    y.mul_pk(sk);
    val = y;
  }
  val *= Kq(R_->zeta_pow(zp));
  if (sspec_.underlined) val.mul_pk(-sspec_.weight());
  return val;
}

Kq coeff_S(std::shared_ptr<const ZqRing> R, const SumSpec& spec, long n,
           const ClassLimitProvider* lim) {
  SStream st(R, spec, lim);
  return st.coeff(n);
}

// ------------------------------------------------------------- limits ----

long LimitResult::significant_digits() const {
  long v = kq_val(value);
  if (v >= kHugeVal) return certified_digits;
  return certified_digits - std::min<long>(v, certified_digits);
}

long cauchy_certificate(const std::vector<Kq>& stream) {
  if (stream.size() < 3) throw std::invalid_argument("cauchy_certificate: need >= 3 entries");
  long d1 = kq_val(stream[stream.size() - 2] - stream[stream.size() - 3]);
  long d2 = kq_val(stream[stream.size() - 1] - stream[stream.size() - 2]);
  return std::min(d1, d2);
}

XEngine::XEngine(std::shared_ptr<const ZqRing> R, long term_budget)
    : R_(std::move(R)), budget_(term_budget) {}

namespace {

// The ladder samples lie on one convergent power series through 0 (they all
// sit in a single residue class mod pM).  Estimate the x^r coefficient from
// sliding Newton-interpolation windows; consecutive-window differences feed
// the Cauchy certificate.
std::vector<Kq> window_coeff_estimates(const std::vector<Int>& nodes,
                                       const std::vector<Kq>& values, int r,
                                       const std::string& key) {
  const int K = int(nodes.size());
  int wsize = std::max(r + 1, std::min(r + 3, K - 2));
  if (K - wsize + 1 < 3)
    throw PrecisionError("ladder '" + key + "' has too few rungs for order " +
                         std::to_string(r));
  std::vector<Kq> est;
  for (int e = wsize - 1; e < K; ++e) {
    const int a = e - wsize + 1;
    // divided differences over the window; levels[t][0] = dd of order t at a
    std::vector<std::vector<Kq>> levels;
    levels.emplace_back(values.begin() + a, values.begin() + e + 1);
    for (int t = 1; t < wsize; ++t) {
      std::vector<Kq> next(wsize - t);
      for (int j = 0; j + t < wsize; ++j) {
        Kq num = levels[t - 1][j + 1] - levels[t - 1][j];
        num.div_by_int(nodes[a + j + t] - nodes[a + j]);
        next[j] = std::move(num);
      }
      levels.push_back(std::move(next));
    }
    // coeff_r = sum_t dd_t * [x^r] prod_{i<t} (x - x_{a+i})
    Kq coeff_r;
    std::vector<Int> prod{Int(1)};  // prod_{i<t} (x - x_{a+i}), exact
    for (int t = 0; t < wsize; ++t) {
      if (t > 0) {
        std::vector<Int> grown(prod.size() + 1);
        for (size_t d = 0; d < prod.size(); ++d) {
          grown[d + 1] += prod[d];
          grown[d] -= prod[d] * nodes[a + t - 1];
        }
        prod = std::move(grown);
      }
      if (t < r || prod[r] == 0) continue;
      Kq term = levels[t][0];
      term.mul_int(prod[r]);
      coeff_r += term;
    }
    est.push_back(std::move(coeff_r));
  }
  return est;
}

// Finalize a ladder of estimates into a LimitResult.  Estimates can both
// converge (later rungs closer to the limit) and lose precision (later rungs
// amplify the finite precision of injected constants), so the certificate is
// the best stabilization window: max over i of min(diff_{i-1}, diff_i,
// precision of E_i).  running_certificates is the prefix maximum, hence
// nondecreasing in the rung count.
LimitResult finish_ladder(std::vector<Kq> estimates, int N_last, const std::string& key) {
  if (estimates.size() < 3)
    throw PrecisionError("limit ladder '" + key + "' has fewer than 3 rungs");
  LimitResult r;
  r.key = key;
  r.N_used = N_last;
  for (size_t i = 0; i + 1 < estimates.size(); ++i)
    r.diff_valuations.push_back(kq_val(estimates[i + 1] - estimates[i]));
  long best = -(1L << 40);
  size_t best_i = estimates.size() - 1;
  for (size_t i = 1; i + 1 < estimates.size(); ++i) {
    long c = std::min(r.diff_valuations[i - 1], r.diff_valuations[i]);
    if (estimates[i].attached()) c = std::min(c, estimates[i].abs_prec());
    if (c >= best) {  // prefer later windows at equal certificates
      best = c;
      best_i = i;
    }
    r.running_certificates.push_back(best);
  }
  r.certified_digits = best;
  r.value = estimates[best_i];
  if (r.value.attached()) {
    r.certified_digits = std::min(r.certified_digits, r.value.abs_prec());
    r.value.reduce_abs_prec(r.certified_digits);
  }
  return r;
}

}  // namespace

LimitResult XEngine::x_limit(const SumSpec& spec, long l) const {
  std::string key = "X:" + spec.str() + "|l=" + std::to_string(l);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  SumSpec base = spec.with_super(0);
  const int r = spec.super;
  std::vector<Int> nodes;
  {
    Int n = l * R_->params().q;
    while (n <= budget_) {
      nodes.push_back(n);
      n *= R_->params().q;
    }
  }
  if (long(nodes.size()) < r + 3)
    throw PrecisionError("x_limit: budget leaves too few rungs for " + key);

  FStream fs(R_, base, this);
  std::vector<Kq> samples;
  samples.reserve(nodes.size());
  for (const Int& n : nodes) {
    fs.advance_to(n.get_si());
    samples.push_back(fs.total());
  }

  // the order-r coefficient of the power series through the ladder nodes is
  // the iterated-superscript limit
  std::vector<Kq> est = window_coeff_estimates(nodes, samples, r, key);
  LimitResult res = finish_ladder(std::move(est), int(nodes.size()), key);
  std::lock_guard<std::mutex> lock(mtx_);
  return cache_.emplace(key, std::move(res)).first->second;
}

LimitResult XEngine::mpn_average_limit(long a, int s) const {
  std::string key = "MPN:a=" + std::to_string(((a % R_->M()) + R_->M()) % R_->M()) +
                    ",s=" + std::to_string(s);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }

  const long p = R_->p(), M = R_->M();
  std::vector<Int> nodes;
  {
    Int n = Int(M) * p;
    while (n <= budget_) {
      nodes.push_back(n);
      n *= p;
    }
  }
  if (nodes.size() < 3) throw PrecisionError("mpn_average_limit: too few rungs");

  Kq acc;
  std::vector<Kq> sums;
  long m = 1;
  long zexp = 0;
  const long step_e = ((a % M) + M) % M;
  const long B = 512;
  size_t node_i = 0;
  long n_top = nodes.back().get_si();
  std::vector<long> ms, vals;
  std::vector<Int> units;
  while (m < n_top && node_i < nodes.size()) {
    long hi = std::min(n_top, m + B);
    ms.clear();
    vals.clear();
    units.clear();
    for (long t = m; t < hi; ++t) {
      long v = 0, u = t;
      while (u % p == 0) {
        u /= p;
        ++v;
      }
      ms.push_back(t);
      vals.push_back(v);
      units.push_back(Int(u));
    }
    R_->batch_inv_units(units);
    for (size_t t = 0; t < ms.size(); ++t) {
      long mm = ms[t];
      // sample BEFORE folding mm (sum is over 0 < n < node)
      while (node_i < nodes.size() && Int(mm) == nodes[node_i]) {
        sums.push_back(acc);
        ++node_i;
      }
      zexp = (zexp + step_e) % M;
      if (vals[t] > 0) continue;
      Zq z = R_->zeta_pow(zexp);
      for (int e = 0; e < s; ++e) z.mul_int(units[t]);
      acc += Kq(std::move(z));
    }
    m = hi;
  }
  while (node_i < nodes.size()) {  // final node equals n_top
    sums.push_back(acc);
    ++node_i;
  }
  // the average (1/x) * sum(x) tends to the first series coefficient of the
  // partial-sum function (its value at 0 vanishes since the limit exists)
  std::vector<Kq> est = window_coeff_estimates(nodes, sums, 1, key);
  LimitResult res = finish_ladder(std::move(est), int(nodes.size()), key);
  std::lock_guard<std::mutex> lock(mtx_);
  return cache_.emplace(key, std::move(res)).first->second;
}

LimitResult XEngine::pn_twisted_limit(long a) const {
  const long M = R_->M();
  long am = ((a % M) + M) % M;
  std::string key = "PNT:a=" + std::to_string(am);
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  if (am == 0) throw std::invalid_argument("pn_twisted_limit: index divisible by M");

  const long p = R_->p();
  std::vector<Int> nodes;
  {
    Int n(p);
    while (n <= budget_) {
      nodes.push_back(n);
      n *= p;
    }
  }
  if (nodes.size() < 3) throw PrecisionError("pn_twisted_limit: too few rungs");

  Kq acc;
  std::vector<Kq> est;
  long zexp = 0;
  size_t node_i = 0;
  long n_top = nodes.back().get_si();
  const long B = 512;
  long m = 1;
  std::vector<long> ms, vals;
  std::vector<Int> units;
  auto sample = [&](const Int& node) {
    // p/(1 - zeta^{a p^N}) * acc
    Int e = a * node;
    long em = long(mpz_fdiv_ui(e.get_mpz_t(), M));
    Kq w = acc;
    w *= Kq(R_->inv_one_minus_zeta(em));
    w.mul_pk(1);
    est.push_back(w);
  };
  while (m < n_top) {
    long hi = std::min(n_top, m + B);
    ms.clear();
    vals.clear();
    units.clear();
    for (long t = m; t < hi; ++t) {
      long v = 0, u = t;
      while (u % p == 0) {
        u /= p;
        ++v;
      }
      ms.push_back(t);
      vals.push_back(v);
      units.push_back(Int(u));
    }
    R_->batch_inv_units(units);
    for (size_t t = 0; t < ms.size(); ++t) {
      long mm = ms[t];
      while (node_i < nodes.size() && Int(mm) == nodes[node_i]) {
        sample(nodes[node_i]);
        ++node_i;
      }
      zexp = (zexp + am) % M;
      if (vals[t] > 0) continue;
      Zq z = R_->zeta_pow(zexp);
      z.mul_int(units[t]);
      acc += Kq(std::move(z));
    }
    m = hi;
  }
  while (node_i < nodes.size()) {
    sample(nodes[node_i]);
    ++node_i;
  }
  LimitResult res = finish_ladder(std::move(est), int(nodes.size()), key);
  std::lock_guard<std::mutex> lock(mtx_);
  return cache_.emplace(key, std::move(res)).first->second;
}

bool depth1_closed_form_applicable(const SumSpec& base) {
  return base.depth() == 1 && !base.has_paren() && !base.underlined && base.restrict_first &&
         base.super == 0;
}

Kq XEngine::class_limit(const SumSpec& base, int order, long l) const {
  if (depth1_ && depth1_closed_form_applicable(base))
    return depth1_->class_limit(base, order, l);
  const long p = R_->p(), M = R_->M();
  if (l % p == 0) return x_limit(base.with_super(order), l).value;
  // Class data away from the divisible classes is not a limit of integer
  // samples.  Every such constant is a finite character combination
  // sum_phi gamma_phi zeta^{phi l}; the gammas are pinned by the M divisible
  // classes (their residues hit every class mod M once) and extend the data
  // to all l.
  std::string key = "CHI:" + base.str() + "^(" + std::to_string(order) + ")";
  {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it0 = chi_cache_.find(key);
    if (it0 != chi_cache_.end()) {
      Kq out;
      for (long phi = 0; phi < M; ++phi) {
        Kq t = it0->second[phi];
        t *= Kq(R_->zeta_pow(phi * l));
        out += t;
      }
      return out;
    }
  }
  std::vector<Kq> gamma_store;
  {
    std::vector<long> ls;  // divisible representatives
    for (long t = 1; t <= M; ++t) ls.push_back(t * p);
    const int W = R_->work_prec();
    // Gaussian elimination on the zeta-Vandermonde system
    std::vector<std::vector<Kq>> A(M, std::vector<Kq>(M + 1));
    for (long r = 0; r < M; ++r) {
      for (long c = 0; c < M; ++c) A[r][c] = Kq(R_->zeta_pow(c * ls[r]));
      A[r][M] = x_limit(base.with_super(order), ls[r]).value;
    }
    for (long col = 0; col < M; ++col) {
      long piv = -1;
      long best = 1L << 40;
      for (long r = col; r < M; ++r) {
        if (!A[r][col].attached() || A[r][col].is_zero()) continue;
        if (A[r][col].valuation() < best) {
          best = A[r][col].valuation();
          piv = r;
        }
      }
      if (piv < 0) throw std::logic_error("class_limit: singular character system");
      std::swap(A[col], A[piv]);
      Kq inv{R_->one()};
      inv.div(A[col][col]);
      for (long c = col; c <= M; ++c) A[col][c] *= inv;
      for (long r = 0; r < M; ++r) {
        if (r == col) continue;
        Kq f = A[r][col];
        if (!f.attached() || f.is_zero()) continue;
        for (long c = col; c <= M; ++c) A[r][c] -= f * A[col][c];
      }
    }
    std::vector<Kq> gamma(M);
    for (long r = 0; r < M; ++r) gamma[r] = A[r][M];
    (void)W;
    gamma_store = std::move(gamma);
  }
  Kq out;
  for (long phi = 0; phi < M; ++phi) {
    Kq t = gamma_store[phi];
    t *= Kq(R_->zeta_pow(phi * l));
    out += t;
  }
  std::lock_guard<std::mutex> lock(mtx_);
  chi_cache_.emplace(key, std::move(gamma_store));
  return out;
}

std::map<std::string, LimitResult> XEngine::snapshot_cache() const {
  std::lock_guard<std::mutex> lock(mtx_);
  return cache_;
}

}  // namespace cmzv
