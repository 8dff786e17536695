#include "cyclomzv/ncseries.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

namespace cmzv {

// --------------------------------------------------------------- Word ----

Word Word::of(std::initializer_list<int> ls) {
  Word w;
  for (int x : ls) w.a.push_back(uint8_t(x));
  return w;
}

Word Word::canonical2(long j, int s, long k, int t) {
  Word w;
  w.a.push_back(uint8_t(j));
  for (int r = 1; r < s; ++r) w.a.push_back(0);
  w.a.push_back(uint8_t(k));
  for (int r = 1; r < t; ++r) w.a.push_back(0);
  return w;
}

Word Word::e0_run(int n) {
  Word w;
  w.a.assign(n, 0);
  return w;
}

int Word::depth() const {
  int d = 0;
  for (uint8_t x : a) d += (x != 0);
  return d;
}

Word Word::concat(const Word& o) const {
  Word w = *this;
  w.a.insert(w.a.end(), o.a.begin(), o.a.end());
  return w;
}

Word Word::reversed() const {
  Word w = *this;
  std::reverse(w.a.begin(), w.a.end());
  return w;
}

std::string Word::str() const {
  if (empty()) return "1";
  std::ostringstream os;
  size_t i = 0;
  bool first = true;
  while (i < a.size()) {
    size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    if (!first) os << " ";
    first = false;
    os << "e" << int(a[i]);
    if (j - i > 1) os << "^" << (j - i);
    i = j;
  }
  return os.str();
}

Word Word::parse(const std::string& s) {
  Word w;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) {
    if (tok == "1") continue;
    if (tok.empty() || (tok[0] != 'e' && tok[0] != 'E'))
      throw std::invalid_argument("Word::parse: bad token '" + tok + "'");
    size_t caret = tok.find('^');
    std::string letter = tok.substr(1, caret == std::string::npos ? std::string::npos : caret - 1);
    long li = std::stol(letter);
    long rep = 1;
    if (caret != std::string::npos) rep = std::stol(tok.substr(caret + 1));
    if (li < 0 || li > 255 || rep < 1 || rep > 64)
      throw std::invalid_argument("Word::parse: out of range in '" + tok + "'");
    for (long r = 0; r < rep; ++r) w.a.push_back(uint8_t(li));
  }
  return w;
}

std::map<Word, long> shuffle_product(const Word& u, const Word& v) {
  if (u.empty()) return {{v, 1}};
  if (v.empty()) return {{u, 1}};
  std::map<Word, long> out;
  auto prepend = [&out](uint8_t head, const std::map<Word, long>& tails) {
    for (const auto& [w, c] : tails) {
      Word x;
      x.a.reserve(w.size() + 1);
      x.a.push_back(head);
      x.a.insert(x.a.end(), w.a.begin(), w.a.end());
      out[x] += c;
    }
  };
  prepend(u.a.front(), shuffle_product(u.suffix_from(1), v));
  prepend(v.a.front(), shuffle_product(u, v.suffix_from(1)));
  return out;
}

// ----------------------------------------------------------- NCSeries ----

NCSeries::NCSeries(std::shared_ptr<const ZqRing> R, int cap) : R_(std::move(R)), cap_(cap) {}

NCSeries NCSeries::one(std::shared_ptr<const ZqRing> R, int cap) {
  NCSeries s(R, cap);
  s.set(Word{}, Kq(R->one()));
  return s;
}

NCSeries NCSeries::letter(std::shared_ptr<const ZqRing> R, int cap, long i) {
  NCSeries s(R, cap);
  s.set(Word::of({int(i)}), Kq(R->one()));
  return s;
}

Kq NCSeries::get(const Word& w) const {
  auto it = c_.find(w);
  return it == c_.end() ? Kq() : it->second;
}

void NCSeries::set(const Word& w, Kq v) {
  if (int(w.size()) > cap_) throw std::invalid_argument("NCSeries::set: word beyond cap");
  if (!v.attached()) {
    c_.erase(w);
    return;
  }
  c_[w] = std::move(v);
}

NCSeries nc_mul(const NCSeries& a, const NCSeries& b) {
  if (a.cap_ != b.cap_) throw std::invalid_argument("nc_mul: cap mismatch");
  NCSeries r(a.R_, a.cap_);
  for (const auto& [u, cu] : a.c_) {
    for (const auto& [v, cv] : b.c_) {
      if (int(u.size() + v.size()) > a.cap_) continue;
      Word w = u.concat(v);
      Kq x = cu * cv;
      auto it = r.c_.find(w);
      if (it == r.c_.end()) r.c_[w] = std::move(x);
      else it->second += x;
    }
  }
  return r;
}

NCSeries NCSeries::inverse() const {
  Kq c0 = get(Word{});
  if (!c0.attached() || !agree_sig(c0, Kq(R_->one()), 1))
    throw std::domain_error("NCSeries::inverse: constant term must be 1");
  NCSeries inv(R_, cap_);
  inv.set(Word{}, Kq(R_->one()));
  // DFS enumeration: prefixes are visited before their extensions, so
  // inv[w] = -sum_{w=uv, u proper prefix} inv[u] * this[v] is well-founded
  std::function<void(Word&, int)> rec = [&](Word& w, int len) {
    if (len > 0) {
      Kq s;
      for (size_t cut = 0; cut < w.size(); ++cut) {  // u = w[0,cut), proper
        Kq iu = inv.get(w.prefix(cut));
        if (!iu.attached()) continue;
        Kq tv = get(w.suffix_from(cut));
        if (!tv.attached()) continue;
        s += iu * tv;
      }
      if (s.attached()) inv.set(w, -s);
    }
    if (len == cap_) return;
    for (long l = 0; l <= R_->M(); ++l) {
      w.a.push_back(uint8_t(l));
      rec(w, len + 1);
      w.a.pop_back();
    }
  };
  Word w;
  rec(w, 0);
  return inv;
}

NCSeries nc_invert(const NCSeries& a) { return a.inverse(); }

NCSeries conjugate(const NCSeries& g, long i) {
  NCSeries ei = NCSeries::letter(g.ring_ptr(), g.cap(), i);
  return nc_mul(g.inverse(), nc_mul(ei, g));
}

GrouplikeReport is_grouplike(const NCSeries& g, int digits, int max_len) {
  const long M = g.ring().M();
  const int L = max_len < 0 ? g.cap() : max_len;
  GrouplikeReport rep;
  std::vector<Word> words;  // all nonempty words of length <= L-1
  {
    std::function<void(Word&)> rec = [&](Word& w) {
      if (!w.empty()) words.push_back(w);
      if (int(w.size()) >= L - 1) return;
      for (long l = 0; l <= M; ++l) {
        w.a.push_back(uint8_t(l));
        rec(w);
        w.a.pop_back();
      }
    };
    Word w;
    rec(w);
  }
  for (const auto& u : words) {
    for (const auto& v : words) {
      if (int(u.size() + v.size()) > L) continue;
      if (v < u) continue;  // symmetric
      Kq lhs = g.get(u) * g.get(v);
      Kq rhs;
      for (const auto& [w, c] : shuffle_product(u, v)) {
        Kq t = g.get(w);
        if (!t.attached()) continue;
        t *= Kq(g.ring().from_int(c, g.ring().work_prec()));
        rhs += t;
      }
      ++rep.pairs_checked;
      long sig = agreement_sig_digits(lhs, rhs);
      if (sig < rep.worst_sig_digits) {
        rep.worst_sig_digits = sig;
        rep.worst_u = u;
        rep.worst_v = v;
      }
    }
  }
  rep.pass = rep.worst_sig_digits >= digits;
  return rep;
}

// ------------------------------------------------- Lyndon / completion ----

namespace {
// letter order e_1 < e_2 < ... < e_M < e_0
inline int lkey(uint8_t x) { return x == 0 ? 256 : int(x); }
}  // namespace

bool lyndon_less(const Word& u, const Word& v) {
  size_t n = std::min(u.size(), v.size());
  for (size_t i = 0; i < n; ++i) {
    if (lkey(u.a[i]) != lkey(v.a[i])) return lkey(u.a[i]) < lkey(v.a[i]);
  }
  return u.size() < v.size();
}

bool is_lyndon(const Word& w) {
  if (w.empty()) return false;
  // strictly smaller than all proper rotations
  const size_t n = w.size();
  for (size_t r = 1; r < n; ++r) {
    // compare w with rotation starting at r
    bool less = false, greater = false;
    for (size_t i = 0; i < n; ++i) {
      int a = lkey(w.a[i]), b = lkey(w.a[(r + i) % n]);
      if (a != b) {
        less = a < b;
        greater = a > b;
        break;
      }
    }
    if (greater || (!less && !greater)) return false;  // rotation <= w
  }
  return true;
}

Word first_lyndon_factor(const Word& w) {
  // Duval: find the first factor of the Lyndon factorization
  assert(!w.empty());
  const size_t n = w.size();
  size_t i = 0;
  // standard Duval loop, but we only need the first block
  size_t k = i, l = i + 1;
  while (l < n && lkey(w.a[k]) <= lkey(w.a[l])) {
    if (lkey(w.a[k]) < lkey(w.a[l])) k = i;
    else ++k;
    ++l;
  }
  size_t flen = l - k;
  return w.prefix(flen);
}

ShuffleCompleter::ShuffleCompleter(std::shared_ptr<const ZqRing> R,
                                   std::function<Kq(const Word&)> lyndon_value)
    : R_(std::move(R)), lyndon_value_(std::move(lyndon_value)) {}

Kq ShuffleCompleter::value(const Word& w) {
  if (w.empty()) return Kq(R_->one());
  auto it = memo_.find(w);
  if (it != memo_.end()) return it->second;
  if (in_progress_[w])
    throw std::logic_error("ShuffleCompleter: cyclic dependency at " + w.str());
  in_progress_[w] = true;
  Kq result;
  if (is_lyndon(w)) {
    result = lyndon_value_(w);
  } else {
    // standard factorization w = L * rest with L the first Lyndon factor;
    // sh(L, rest) = c_w * w + lexicographically smaller words
    Word L = first_lyndon_factor(w);
    Word rest = w.suffix_from(L.size());
    Kq acc = value(L) * value(rest);
    long cw = 0;
    for (const auto& [x, c] : shuffle_product(L, rest)) {
      if (x == w) {
        cw = c;
        continue;
      }
      Kq t = value(x);
      if (!t.attached()) continue;
      t *= Kq(R_->from_int(c, R_->work_prec()));
      acc -= t;
    }
    assert(cw >= 1);
    acc.div_by_int(Int(cw));
    result = acc;
  }
  in_progress_[w] = false;
  memo_[w] = result;
  return result;
}

ShuffleFill shuffle_complete(std::shared_ptr<const ZqRing> R, int cap,
                             const std::function<std::optional<Kq>(const Word&)>& canonical,
                             int digits) {
  ShuffleFill out;
  out.series = NCSeries(R, cap);
  ShuffleCompleter comp(R, [&](const Word& lw) -> Kq {
    auto v = canonical(lw);
    if (v.has_value()) return *v;
    out.injected_zero.push_back(lw);
    return Kq();  // exact zero: the free coordinate is set to 0
  });
  std::function<void(Word&)> rec = [&](Word& w) {
    if (!w.empty()) {
      Kq v = comp.value(w);
      if (w.a.front() != 0) {  // canonical stratum: cross-check when provided
        auto given = canonical(w);
        if (given.has_value() && given->attached()) {
          long sig = agreement_sig_digits(v, *given);
          if (sig < out.worst_consistency_sig) {
            out.worst_consistency_sig = sig;
            out.worst_word = w;
          }
        }
      }
      if (v.attached() && !v.is_zero()) out.series.set(w, v);
    }
    if (int(w.size()) >= cap) return;
    for (long l = 0; l <= R->M(); ++l) {
      w.a.push_back(uint8_t(l));
      rec(w);
      w.a.pop_back();
    }
  };
  Word w;
  rec(w);
  out.series.set(Word{}, Kq(R->one()));
  out.consistent = out.worst_consistency_sig >= digits;
  return out;
}

}  // namespace cmzv
