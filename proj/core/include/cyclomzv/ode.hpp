#pragma once
// The differential-equation oracle: solves the coefficient recursion of the
// frobenius series degree by degree, with the injected series constants kept
// symbolic so sampled coefficients carry honest precision, and audits the
// closed forms against it (coefficient match, value at infinity, the residue
// identity, and the l*q^N limit checks).

#include "cyclomzv/mzv.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cmzv {

// Constants of limited precision enter the solve as opaque symbols; sampled
// values are polynomials in them (the recursion is linear, degree grows only
// through the constants' own products) and are assembled at readout.
class SymbolTable {
 public:
  SymbolTable();
  uint32_t add_symbol(Kq value, std::string name);
  // monomial ids; 0 is the empty monomial (scalar part)
  uint32_t mono_mul_symbol(uint32_t mono, uint32_t sym);
  const Kq& mono_value(uint32_t mono) const;  // product of member symbol values
  size_t n_symbols() const { return sym_values_.size(); }
  const std::string& symbol_name(uint32_t s) const { return sym_names_[s]; }

 private:
  std::vector<Kq> sym_values_;
  std::vector<std::string> sym_names_;
  std::vector<std::vector<uint32_t>> monos_;
  std::map<std::vector<uint32_t>, uint32_t> mono_ids_;
  mutable std::vector<Kq> mono_value_cache_;
  mutable std::vector<bool> mono_value_ready_;
};

class SymKq {
 public:
  SymKq() = default;
  explicit SymKq(Kq scalar);

  bool empty() const { return terms_.empty(); }
  SymKq& operator+=(const SymKq& o);
  SymKq& operator-=(const SymKq& o);
  SymKq& scale(const Kq& c);
  SymKq& scale_symbol(SymbolTable& tab, uint32_t sym);
  SymKq& mul_pk(long k);
  SymKq& div_by_int(const Int& n);
  Kq assemble(const SymbolTable& tab) const;

 private:
  // sorted by monomial id
  std::vector<std::pair<uint32_t, Kq>> terms_;
};

// Degree-by-degree solver for the coefficient streams of the frobenius
// series, over the dependency cone (contiguous subwords) of the targets.
class GfSolver {
 public:
  GfSolver(const MzvEngine& eng, const std::vector<Word>& targets);

  void request_samples(const Word& w, const std::vector<long>& ns);
  void solve_to(long n_end);  // may be called repeatedly with larger bounds
  long solved_to() const { return degree_; }

  Kq sample(const Word& w, long n) const;  // assembled a_n[w]
  const std::vector<Word>& cone() const { return words_; }

 private:
  int id_of(const Word& w) const;
  void step();  // advance one degree

  const MzvEngine& eng_;
  std::shared_ptr<const ZqRing> R_;
  long degree_ = 0;
  std::vector<Word> words_;          // cone, sorted by (length, lex); [0] = empty
  std::map<Word, int> ids_;
  SymbolTable tab_;

  struct Split {  // one term a[u] * C_m[v] of the right-kernel convolution
    int u_id;     // -1 for the empty prefix
    long m;
    bool symbolic;
    uint32_t sym;
    Kq exact;
  };
  struct WordState {
    std::vector<SymKq> hist;    // a_{n'} for n' = n mod (p+1) ring positions
    std::vector<SymKq> dbuf;    // geometric accumulator, indexed by n mod p
    std::vector<Split> splits;
    int strip_first = -1;       // id of w minus first letter
    int strip_last_e0 = -1;     // id of w minus trailing e_0, when it ends so
    bool starts_e0 = false;
    long first_letter = 0;
    std::map<long, Kq> samples;
    std::vector<long> wanted;
  };
  std::vector<WordState> st_;
  // accumulators A[u][m] = sum_{j<=n-1} a_j[u] zeta^{-u(m)(n-j)}, for pairs in use
  std::map<std::pair<int, long>, SymKq> acc_;
  std::vector<long> zexp_;  // running exponents of zeta^{-u(m) n}, m = 1..M
};

struct OdeAudit {
  std::string kind;
  std::string word;
  long l = 0;                 // ladder class for limit checks, 0 otherwise
  bool pass = false;
  bool inconclusive = false;  // certificate below threshold
  bool diagnostic = false;    // touches coordinates the closed forms leave free
  long worst_sig_digits = 0;  // agreement, significant digits (match audits)
  long certificate = 0;
  long limit_valuation = 0;   // limit checks: valuation of the final estimate
  int threshold = 0;
  std::string detail;

  std::string to_json() const;
};

// value of the solved series at infinity: [w = empty] - lim a_{M p^N}[w]
struct InfinityValue {
  Kq value;
  long certificate = 0;
  std::vector<long> diff_valuations;
};

class OdeAuditor {
 public:
  explicit OdeAuditor(const MzvEngine& eng) : eng_(eng) {}

  // coefficient match of the solved streams against the closed-form series
  OdeAudit match_depth1(int s, long i, long n_max) const;
  OdeAudit match_triple(long i, long j, long k, long n_max) const;  // e_i e_j e_k
  OdeAudit match_two_tails(long j, int t, long k, int s, long n_max) const;
  OdeAudit match_full(long i, long j, int s, long k, int t, long n_max) const;

  // residue identity at infinity for every word of length <= max_len
  std::vector<OdeAudit> residue_identity(int max_len, int rungs) const;

  // limit check along l q^N for each 0 < l <= pM on the given word
  std::vector<OdeAudit> funprop(const Word& w, int rungs) const;

  InfinityValue infinity_value(GfSolver& solver, const Word& w, int rungs) const;

 private:
  const MzvEngine& eng_;
};

}  // namespace cmzv
