#include "cyclomzv/ode.hpp"

#include "cyclomzv/bernoulli.hpp"

#include <json.hpp>

#include <algorithm>
#include <cassert>
#include <set>
#include <sstream>

namespace cmzv {

namespace {

constexpr long kHugeVal = 1L << 40;

long kq_val(const Kq& x) {
  if (!x.attached()) return kHugeVal;
  if (x.is_zero()) return x.abs_prec();
  return x.valuation();
}

bool len_lex_less(const Word& u, const Word& v) {
  if (u.size() != v.size()) return u.size() < v.size();
  return u.a < v.a;
}

}  // namespace

// -------------------------------------------------------- SymbolTable ----

SymbolTable::SymbolTable() {
  monos_.push_back({});  // the empty monomial

  mono_ids_[{}] = 0;
  mono_value_cache_.push_back(Kq());
  mono_value_ready_.push_back(true);  // unused; index 0 is special-cased
}

uint32_t SymbolTable::add_symbol(Kq value, std::string name) {
  sym_values_.push_back(std::move(value));
  sym_names_.push_back(std::move(name));
  return uint32_t(sym_values_.size() - 1);
}

uint32_t SymbolTable::mono_mul_symbol(uint32_t mono, uint32_t sym) {
  std::vector<uint32_t> key = monos_[mono];
  key.insert(std::upper_bound(key.begin(), key.end(), sym), sym);
  auto it = mono_ids_.find(key);
  if (it != mono_ids_.end()) return it->second;
  uint32_t id = uint32_t(monos_.size());
  monos_.push_back(key);
  mono_ids_[key] = id;
  mono_value_cache_.push_back(Kq());
  mono_value_ready_.push_back(false);
  return id;
}

const Kq& SymbolTable::mono_value(uint32_t mono) const {
  if (!mono_value_ready_[mono]) {
    Kq v = sym_values_[monos_[mono][0]];
    for (size_t i = 1; i < monos_[mono].size(); ++i) v *= sym_values_[monos_[mono][i]];
    mono_value_cache_[mono] = std::move(v);
    mono_value_ready_[mono] = true;
  }
  return mono_value_cache_[mono];
}

// -------------------------------------------------------------- SymKq ----

SymKq::SymKq(Kq scalar) {
  if (scalar.attached()) terms_.emplace_back(0, std::move(scalar));
}

SymKq& SymKq::operator+=(const SymKq& o) {
  if (o.terms_.empty()) return *this;
  std::vector<std::pair<uint32_t, Kq>> merged;
  merged.reserve(terms_.size() + o.terms_.size());
  size_t i = 0, j = 0;
  while (i < terms_.size() || j < o.terms_.size()) {
    if (j >= o.terms_.size() || (i < terms_.size() && terms_[i].first < o.terms_[j].first)) {
      merged.push_back(std::move(terms_[i++]));
    } else if (i >= terms_.size() || o.terms_[j].first < terms_[i].first) {
      merged.push_back(o.terms_[j++]);
    } else {
      Kq s = std::move(terms_[i].second);
      s += o.terms_[j].second;
      merged.emplace_back(terms_[i].first, std::move(s));
      ++i;
      ++j;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

SymKq& SymKq::operator-=(const SymKq& o) {
  SymKq neg = o;
  for (auto& [m, c] : neg.terms_) c = -c;
  return *this += neg;
}

SymKq& SymKq::scale(const Kq& c) {
  if (!c.attached()) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, x] : terms_) x *= c;
  return *this;
}

SymKq& SymKq::scale_symbol(SymbolTable& tab, uint32_t sym) {
  for (auto& [m, x] : terms_) m = tab.mono_mul_symbol(m, sym);
  std::sort(terms_.begin(), terms_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return *this;
}

SymKq& SymKq::mul_pk(long k) {
  for (auto& [m, x] : terms_) x.mul_pk(k);
  return *this;
}

SymKq& SymKq::div_by_int(const Int& n) {
  for (auto& [m, x] : terms_) x.div_by_int(n);
  return *this;
}

Kq SymKq::assemble(const SymbolTable& tab) const {
  Kq out;
  for (const auto& [m, c] : terms_) {
    if (m == 0) out += c;
    else out += c * tab.mono_value(m);
  }
  return out;
}

// ------------------------------------------------------------ GfSolver ----

GfSolver::GfSolver(const MzvEngine& eng, const std::vector<Word>& targets)
    : eng_(eng), R_(eng.ring_ptr()) {
  // dependency cone: all contiguous subwords (plus the empty word)
  std::set<Word> cone;
  cone.insert(Word{});
  int maxlen = 1;
  for (const Word& t : targets) {
    maxlen = std::max<int>(maxlen, int(t.size()));
    for (size_t i = 0; i < t.size(); ++i)
      for (size_t j = i + 1; j <= t.size(); ++j)
        cone.insert(Word({t.a.begin() + i, t.a.begin() + j}));
  }
  words_.assign(cone.begin(), cone.end());
  std::sort(words_.begin(), words_.end(), len_lex_less);
  for (size_t i = 0; i < words_.size(); ++i) ids_[words_[i]] = int(i);

  const long p = R_->p(), M = R_->M();
  const int W = R_->work_prec();
  st_.resize(words_.size());
  std::map<std::pair<long, Word>, uint32_t> sym_ids;
  std::vector<NCSeries> conj;
  conj.reserve(M + 1);
  conj.emplace_back();  // index 0 unused
  for (long m = 1; m <= M; ++m) conj.push_back(eng_.conj_constant(m, maxlen));

  for (size_t id = 1; id < words_.size(); ++id) {
    const Word& w = words_[id];
    WordState& S = st_[id];
    S.hist.assign(p + 1, SymKq());
    S.dbuf.assign(p, SymKq());
    S.starts_e0 = (w.a.front() == 0);
    S.first_letter = w.a.front();
    S.strip_first = ids_.at(w.suffix_from(1));
    if (w.a.back() == 0) S.strip_last_e0 = ids_.at(w.prefix(w.size() - 1));
    for (size_t cut = 0; cut < w.size(); ++cut) {
      Word u = w.prefix(cut), v = w.suffix_from(cut);
      for (long m = 1; m <= M; ++m) {
        Kq C = conj[m].get(v);
        if (!C.attached() || C.is_zero()) continue;
        Split sp;
        sp.u_id = cut == 0 ? -1 : ids_.at(u);
        sp.m = m;
        if (C.abs_prec() >= W) {
          sp.symbolic = false;
          sp.exact = std::move(C);
        } else {
          sp.symbolic = true;
          auto key = std::make_pair(m, v);
          auto it = sym_ids.find(key);
          if (it == sym_ids.end()) {
            uint32_t s = tab_.add_symbol(std::move(C), "C[" + std::to_string(m) + "][" + v.str() + "]");
            it = sym_ids.emplace(key, s).first;
          }
          sp.sym = it->second;
        }
        if (sp.u_id >= 0) acc_.emplace(std::make_pair(sp.u_id, m), SymKq());
        S.splits.push_back(std::move(sp));
      }
    }
  }
  // empty word: a_0 = 1
  st_[0].hist.assign(p + 1, SymKq());
  st_[0].hist[0] = SymKq(Kq(R_->one()));
  st_[0].dbuf.assign(p, SymKq());
  zexp_.assign(M + 1, 0);
}

int GfSolver::id_of(const Word& w) const {
  auto it = ids_.find(w);
  if (it == ids_.end()) throw std::invalid_argument("GfSolver: word outside the cone: " + w.str());
  return it->second;
}

void GfSolver::request_samples(const Word& w, const std::vector<long>& ns) {
  WordState& S = st_[id_of(w)];
  for (long n : ns) {
    if (n <= degree_ && !S.samples.count(n))
      throw std::logic_error("GfSolver: sample requested behind the solve front");
    S.wanted.push_back(n);
  }
}

void GfSolver::solve_to(long n_end) {
  while (degree_ < n_end) step();
}

void GfSolver::step() {
  const long n = degree_ + 1;
  const long p = R_->p(), M = R_->M();
  const PadicParams& P = R_->params();
  for (long m = 1; m <= M; ++m) zexp_[m] = ((zexp_[m] - P.underbar(m)) % M + M) % M;

  std::vector<SymKq> cur(words_.size());
  for (size_t id = 1; id < words_.size(); ++id) {
    WordState& S = st_[id];
    SymKq rhs;
    if (S.starts_e0) {
      SymKq t = cur[S.strip_first];
      t.mul_pk(1);
      rhs += t;
    } else {
      // left kernel of the e_i direction: geometric accumulator stepping by p
      SymKq dcur;
      if (n >= p) {
        dcur = st_[S.strip_first].hist[(n - p) % (p + 1)];
        dcur += S.dbuf[n % p];
        dcur.scale(Kq(R_->zeta_pow(-S.first_letter)));
      }
      SymKq t = dcur;
      t.mul_pk(1);
      rhs -= t;
      S.dbuf[n % p] = std::move(dcur);
    }
    if (S.strip_last_e0 >= 0) {
      SymKq t = cur[S.strip_last_e0];
      t.mul_pk(1);
      rhs -= t;
    }
    for (const Split& sp : S.splits) {
      SymKq t;
      if (sp.u_id < 0) {
        t = SymKq(Kq(R_->zeta_pow(zexp_[sp.m])));
      } else {
        t = acc_.at(std::make_pair(sp.u_id, sp.m));
      }
      if (sp.symbolic) t.scale_symbol(tab_, sp.sym);
      else t.scale(sp.exact);
      t.mul_pk(1);
      rhs += t;
    }
    rhs.div_by_int(Int(n));
    cur[id] = std::move(rhs);
  }
  // samples
  for (size_t id = 1; id < words_.size(); ++id) {
    WordState& S = st_[id];
    if (!S.wanted.empty() && std::find(S.wanted.begin(), S.wanted.end(), n) != S.wanted.end())
      S.samples[n] = cur[id].assemble(tab_);
  }
  // accumulators move to n+1
  for (auto& [key, A] : acc_) {
    A += cur[key.first];
    A.scale(Kq(R_->zeta_pow(-P.underbar(key.second))));
  }
  for (size_t id = 0; id < words_.size(); ++id)
    st_[id].hist[n % (p + 1)] = std::move(cur[id]);
  degree_ = n;
}

Kq GfSolver::sample(const Word& w, long n) const {
  const WordState& S = st_[id_of(w)];
  auto it = S.samples.find(n);
  if (it == S.samples.end())
    throw std::logic_error("GfSolver: sample not recorded for " + w.str() + " at n=" +
                           std::to_string(n));
  return it->second;
}

// ------------------------------------------------------------- audits ----

std::string OdeAudit::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["word"] = word;
  if (l) j["l"] = l;
  j["pass"] = pass;
  j["inconclusive"] = inconclusive;
  j["diagnostic"] = diagnostic;
  j["worst_sig_digits"] = worst_sig_digits;
  j["certificate"] = certificate;
  j["limit_valuation"] = limit_valuation;
  j["threshold"] = threshold;
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

namespace {

// closed-form series: sum of scalar * S-coefficient streams
struct Combo {
  std::vector<std::pair<Kq, std::unique_ptr<SStream>>> parts;
  void add(Kq c, std::shared_ptr<const ZqRing> R, SumSpec sp, const ClassLimitProvider* lim) {
    parts.emplace_back(std::move(c), std::make_unique<SStream>(R, std::move(sp), lim));
  }
  Kq coeff(long n) {
    Kq out;
    for (auto& [c, st] : parts) {
      Kq t = st->coeff(n);
      if (!t.attached()) continue;
      t *= c;
      out += t;
    }
    return out;
  }
};

SumSpec make_S(std::vector<int> s, std::vector<long> idx, std::vector<bool> paren = {},
               unsigned alpha_n = 0, unsigned alpha_d = 0) {
  SumSpec sp;
  sp.s = std::move(s);
  sp.idx = std::move(idx);
  sp.paren = std::move(paren);
  sp.alpha_n = alpha_n;
  sp.alpha_d = alpha_d;
  sp.restrict_first = true;
  return sp;
}

OdeAudit run_match(const MzvEngine& eng, const Word& w, Combo& combo, long n_max,
                   const std::string& kind) {
  OdeAudit a;
  a.kind = kind;
  a.word = w.str();
  a.threshold = eng.config().threshold;
  GfSolver solver(eng, {w});
  std::vector<long> ns;
  for (long n = 1; n <= n_max; ++n) ns.push_back(n);
  solver.request_samples(w, ns);
  solver.solve_to(n_max);
  long worst = kHugeVal;
  long worst_n = 0;
  for (long n = 1; n <= n_max; ++n) {
    Kq lhs = solver.sample(w, n);
    Kq rhs = combo.coeff(n);
    long sig = agreement_sig_digits(lhs, rhs);
    if (sig < worst) {
      worst = sig;
      worst_n = n;
    }
  }
  a.worst_sig_digits = worst;
  a.pass = worst >= a.threshold;
  a.detail = "worst at n=" + std::to_string(worst_n);
  return a;
}

}  // namespace

OdeAudit OdeAuditor::match_depth1(int s, long i, long n_max) const {
  Word w;
  for (int r = 1; r < s; ++r) w.a.push_back(0);
  w.a.push_back(uint8_t(i));
  Combo combo;
  combo.add(Kq(eng_.ring().one()), eng_.ring_ptr(), make_S({s}, {i}), &eng_);
  return run_match(eng_, w, combo, n_max, "closed-form match");
}

OdeAudit OdeAuditor::match_triple(long i, long j, long k, long n_max) const {
  Word w = Word::of({int(i), int(j), int(k)});
  auto R = eng_.ring_ptr();
  Kq one{R->one()};
  Combo combo;
  combo.add(one, R, make_S({1, 1, 1}, {k, j, i}, {}, 0, 0b110), &eng_);
  combo.add(-one, R, make_S({1, 1, 1}, {j, k, i}, {false, true, true}, 0, 0b100), &eng_);
  combo.add(-one, R, make_S({1, 1, 1}, {j, i, k}, {false, false, true}, 0, 0b010), &eng_);
  combo.add(one, R, make_S({1, 1, 1}, {i, j, k}, {false, true, true}), &eng_);
  combo.add(-eng_.g_single(k, j).value, R, make_S({1, 1}, {i, k}, {false, true}), &eng_);
  combo.add(eng_.g_single(j, k).value, R, make_S({1, 1}, {i, j}, {false, true}), &eng_);
  return run_match(eng_, w, combo, n_max, "closed-form match");
}

OdeAudit OdeAuditor::match_two_tails(long j, int t, long k, int s, long n_max) const {
  Word w = Word::canonical2(j, t, k, s);
  auto R = eng_.ring_ptr();
  Combo combo;
  for (int r = 0; r <= s - 1; ++r) {
    Kq c{R->from_int(binomial(r + t - 1, r), R->work_prec())};
    if (s % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({t + r, s - r}, {k, j}, {}, 0, 0b10), &eng_);
  }
  Kq c2{R->one()};
  if ((s + t) % 2 == 1) c2 = -c2;
  combo.add(std::move(c2), R, make_S({t, s}, {j, k}, {false, true}), &eng_);
  return run_match(eng_, w, combo, n_max, "closed-form match");
}

OdeAudit OdeAuditor::match_full(long i, long j, int s, long k, int t, long n_max) const {
  Word w;
  w.a.push_back(uint8_t(i));
  Word tail = Word::canonical2(j, s, k, t);
  w.a.insert(w.a.end(), tail.a.begin(), tail.a.end());
  auto R = eng_.ring_ptr();
  const int W = R->work_prec();
  Combo combo;
  // block 1
  for (int r = 0; r + 0 <= t - 1; ++r) {
    for (int q = 0; r + q <= t - 1; ++q) {
      Kq c{R->from_int(binomial(r + s - 1, r), W)};
      if ((t - 1) % 2 == 1) c = -c;
      combo.add(std::move(c), R, make_S({s + r, 1 + q, t - (q + r)}, {k, j, i}, {}, 0, 0b110),
                &eng_);
    }
  }
  // block 2: constants g_j[e_0^{s-1} e_k e_0^{t-1-r}]
  for (int r = 0; r <= t - 1; ++r) {
    Kq c = eng_.depth1(j, k, s + t - 1 - r).value;
    c *= Kq(R->from_int(binomial(s + t - 2 - r, s - 1), W));
    int sgn = (t - 1 - r) + r;  // (-1)^{t-1-r} from the regularization, (-1)^r from the sum
    if (sgn % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({1, 1 + r}, {i, j}, {false, true}), &eng_);
  }
  // block 3: g_k^{-1}[e_j e_0^{s-1}] = (-1)^s g_k[e_0^{s-1} e_j]
  {
    Kq c = eng_.depth1(k, j, s).value;
    if ((s + t - 1) % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({1, t}, {i, k}, {false, true}), &eng_);
  }
  // block 4
  {
    Kq c{R->one()};
    if ((s + t) % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({1, s, t}, {i, j, k}, {false, true, true}), &eng_);
  }
  // block 5
  for (int r = 0; r <= s - 1; ++r) {
    Kq c{R->one()};
    if ((s + t + 1) % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({1 + r, s - r, t}, {j, i, k}, {false, false, true}, 0, 0b010),
              &eng_);
  }
  // block 6
  for (int r = 1; r <= t; ++r) {
    Kq c{R->one()};
    if ((s + t + 1) % 2 == 1) c = -c;
    combo.add(std::move(c), R, make_S({s, t + 1 - r, r}, {j, k, i}, {false, true, true}, 0, 0b100),
              &eng_);
  }
  return run_match(eng_, w, combo, n_max, "closed-form match");
}

InfinityValue OdeAuditor::infinity_value(GfSolver& solver, const Word& w, int rungs) const {
  const long M = eng_.ring().M(), p = eng_.ring().p();
  std::vector<Kq> stream;
  long n = M;
  for (int N = 1; N <= rungs; ++N) {
    n *= p;
    stream.push_back(solver.sample(w, n));
  }
  InfinityValue out;
  for (size_t i = 0; i + 1 < stream.size(); ++i)
    out.diff_valuations.push_back(kq_val(stream[i + 1] - stream[i]));
  out.certificate = std::min(out.diff_valuations[out.diff_valuations.size() - 1],
                             out.diff_valuations[out.diff_valuations.size() - 2]);
  out.value = -stream.back();
  if (w.empty()) out.value += Kq(eng_.ring().one());
  out.value.reduce_abs_prec(out.certificate);
  return out;
}

std::vector<OdeAudit> OdeAuditor::residue_identity(int max_len, int rungs) const {
  const long M = eng_.ring().M(), p = eng_.ring().p();
  auto R = eng_.ring_ptr();
  // all words of length 1..max_len
  std::vector<Word> all;
  {
    std::function<void(Word&)> rec = [&](Word& w) {
      if (!w.empty()) all.push_back(w);
      if (int(w.size()) >= max_len) return;
      for (long l = 0; l <= M; ++l) {
        w.a.push_back(uint8_t(l));
        rec(w);
        w.a.pop_back();
      }
    };
    Word w;
    rec(w);
  }
  GfSolver solver(eng_, all);
  std::vector<long> nodes;
  {
    long n = M;
    for (int N = 1; N <= rungs; ++N) {
      n *= p;
      nodes.push_back(n);
    }
  }
  for (const Word& w : all) solver.request_samples(w, nodes);
  solver.solve_to(nodes.back());

  std::map<Word, InfinityValue> ginf;
  long worst_cert = kHugeVal;
  for (const Word& w : all) {
    ginf[w] = infinity_value(solver, w, rungs);
    worst_cert = std::min(worst_cert, ginf[w].certificate);
  }
  InfinityValue unit;
  unit.value = Kq(R->one());
  unit.certificate = kHugeVal;
  ginf[Word{}] = unit;

  // right kernel constant: e_0 + sum_m g_m^{-1} e_m g_m
  NCSeries CC = NCSeries::letter(R, max_len, 0);
  for (long m = 1; m <= M; ++m) {
    const NCSeries cm = eng_.conj_constant(m, max_len);
    for (const auto& [v, c] : cm.coeffs()) {
      Kq x = CC.get(v);
      x += c;
      CC.set(v, std::move(x));
    }
  }

  std::vector<OdeAudit> out;
  for (const Word& w : all) {
    OdeAudit a;
    a.kind = "residue";
    a.word = w.str();
    a.threshold = eng_.config().threshold;
    Kq lhs;
    for (size_t cut = 0; cut <= w.size(); ++cut) {
      Word u = w.prefix(cut), v = w.suffix_from(cut);
      if (v.empty()) continue;
      Kq c = CC.get(v);
      if (!c.attached()) continue;
      lhs += ginf.at(u).value * c;
    }
    Kq rhs = ginf.at(w.suffix_from(1)).value;
    a.worst_sig_digits = agreement_sig_digits(lhs, rhs);
    a.certificate = std::min(ginf.at(w).certificate, worst_cert);
    a.inconclusive = a.certificate < a.threshold;
    a.pass = !a.inconclusive && a.worst_sig_digits >= a.threshold;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<OdeAudit> OdeAuditor::funprop(const Word& w, int rungs) const {
  const long M = eng_.ring().M(), p = eng_.ring().p();
  const Int& q = eng_.ring().params().q;
  GfSolver solver(eng_, {w});
  std::vector<long> nodes;
  for (long l = 1; l <= p * M; ++l) {
    Int n = l;
    for (int N = 1; N <= rungs; ++N) {
      n *= q;
      nodes.push_back(n.get_si());
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  solver.request_samples(w, nodes);
  solver.solve_to(nodes.back());

  std::vector<OdeAudit> out;
  for (long l = 1; l <= p * M; ++l) {
    OdeAudit a;
    a.kind = "funprop";
    a.word = w.str();
    a.l = l;
    a.threshold = eng_.config().threshold;
    std::vector<Kq> est;
    Int n = l;
    for (int N = 1; N <= rungs; ++N) {
      n *= q;
      Kq v = solver.sample(w, n.get_si());
      v *= Kq(eng_.ring().from_int(n, eng_.ring().work_prec()));
      est.push_back(std::move(v));
    }
    std::vector<long> diffs;
    for (size_t i = 0; i + 1 < est.size(); ++i) diffs.push_back(kq_val(est[i + 1] - est[i]));
    a.certificate = std::min(diffs[diffs.size() - 1], diffs[diffs.size() - 2]);
    a.limit_valuation = kq_val(est.back());
    a.inconclusive = a.certificate < a.threshold;
    // the limit of n a_n[w] along l q^N must be indistinguishable from 0
    a.pass = !a.inconclusive && a.limit_valuation >= a.certificate;
    a.detail = std::string("variant=") + to_string(eng_.config().variant);
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace cmzv
