#pragma once
// Truncated noncommutative formal power series over Z_q in the alphabet
// {e_0, ..., e_M}: concatenation products, inverses, conjugation, shuffle
// products, the group-like (shuffle-relation) audit, and completion of a
// partial coefficient assignment to a shuffle-algebra homomorphism.

#include "cyclomzv/padic.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cmzv {

struct Word {
  std::vector<uint8_t> a;  // letters, values 0..M

  Word() = default;
  explicit Word(std::vector<uint8_t> v) : a(std::move(v)) {}
  static Word of(std::initializer_list<int> ls);
  // e_j e_0^{s-1} e_k e_0^{t-1}
  static Word canonical2(long j, int s, long k, int t);
  static Word e0_run(int n);

  size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  int depth() const;  // number of non-e_0 letters
  Word prefix(size_t n) const { return Word({a.begin(), a.begin() + n}); }
  Word suffix_from(size_t n) const { return Word({a.begin() + n, a.end()}); }
  Word concat(const Word& o) const;
  Word reversed() const;
  bool starts_with_e0() const { return !empty() && a.front() == 0; }
  bool ends_with_e0() const { return !empty() && a.back() == 0; }

  std::string str() const;                 // "e1 e0^2 e3"
  static Word parse(const std::string&);   // inverse of str(); accepts "e0^k"

  auto operator<=>(const Word& o) const = default;
};

// all interleavings preserving internal orders, with multiplicities
std::map<Word, long> shuffle_product(const Word& u, const Word& v);

class NCSeries {
 public:
  NCSeries() = default;
  NCSeries(std::shared_ptr<const ZqRing> R, int cap);

  static NCSeries one(std::shared_ptr<const ZqRing> R, int cap);
  static NCSeries letter(std::shared_ptr<const ZqRing> R, int cap, long i);

  int cap() const { return cap_; }
  const ZqRing& ring() const { return *R_; }
  std::shared_ptr<const ZqRing> ring_ptr() const { return R_; }

  Kq get(const Word& w) const;  // absent = exact zero
  void set(const Word& w, Kq v);
  const std::map<Word, Kq>& coeffs() const { return c_; }

  friend NCSeries nc_mul(const NCSeries& a, const NCSeries& b);
  NCSeries inverse() const;  // constant term must be 1

 private:
  std::shared_ptr<const ZqRing> R_;
  int cap_ = 0;
  std::map<Word, Kq> c_;
};

NCSeries nc_mul(const NCSeries& a, const NCSeries& b);
NCSeries nc_invert(const NCSeries& a);
// g^{-1} e_i g, truncated to g's cap
NCSeries conjugate(const NCSeries& g, long i);

struct GrouplikeReport {
  bool pass = true;
  long worst_sig_digits = 1L << 40;  // significant agreement digits of the worst pair
  Word worst_u, worst_v;
  long pairs_checked = 0;
};

// checks g[u]*g[v] = sum_{w in sh(u,v)} g[w] for all nonempty pairs with
// |u|+|v| <= max_len, to `digits` significant digits
GrouplikeReport is_grouplike(const NCSeries& g, int digits, int max_len = -1);

// ---- Lyndon machinery (letter order: e_1 < e_2 < ... < e_M < e_0) ----

bool lyndon_less(const Word& u, const Word& v);
bool is_lyndon(const Word& w);
// first factor of the nonincreasing Lyndon factorization (Duval)
Word first_lyndon_factor(const Word& w);

// Completion of a coefficient assignment on Lyndon words to a shuffle-algebra
// homomorphism: values on all other words follow from the shuffle relations
// (triangularly, via the standard Lyndon factorization).  This is exactly the
// freedom a group-like series has.
class ShuffleCompleter {
 public:
  ShuffleCompleter(std::shared_ptr<const ZqRing> R,
                   std::function<Kq(const Word&)> lyndon_value);
  Kq value(const Word& w);

 private:
  std::shared_ptr<const ZqRing> R_;
  std::function<Kq(const Word&)> lyndon_value_;
  std::map<Word, Kq> memo_;
  std::map<Word, bool> in_progress_;
};

// Builds the full series of length <= cap from values on canonical words
// (no leading e_0): consult `canonical` for every Lyndon word (it may return
// nullopt = unknown, treated as exact zero and recorded), then fill the rest.
// Post-hoc, every canonical word for which `canonical` has a value is compared
// against the completion; `consistent` reports whether every such cross-check
// reached `digits` significant digits (an inconsistency signals a bug in the
// closed forms feeding the completion).
struct ShuffleFill {
  NCSeries series;
  std::vector<Word> injected_zero;  // Lyndon words the provider did not cover
  long worst_consistency_sig = 1L << 40;
  Word worst_word;
  bool consistent = true;
};
ShuffleFill shuffle_complete(std::shared_ptr<const ZqRing> R, int cap,
                             const std::function<std::optional<Kq>(const Word&)>& canonical,
                             int digits);

}  // namespace cmzv
