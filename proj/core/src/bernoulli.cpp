#include "cyclomzv/bernoulli.hpp"

#include <mutex>
#include <vector>

namespace cmzv {

Int binomial(unsigned long n, unsigned long k) {
  Int r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

Rat bernoulli(unsigned k) {
  static std::vector<Rat> cache{Rat(1)};
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  while (cache.size() <= k) {
    unsigned m = unsigned(cache.size());
    // sum_{j=0}^{m} C(m+1, j) B_j = 0  =>  B_m = -(1/C(m+1,m)) * sum_{j<m} ...
    Rat s(0);
    for (unsigned j = 0; j < m; ++j) s += Rat(binomial(m + 1, j)) * cache[j];
    Rat bm = -s / Rat(binomial(m + 1, m));
    bm.canonicalize();
    cache.push_back(bm);
  }
  return cache[k];
}

Rat faulhaber_sum(unsigned j, const Int& n) {
  Rat total(0);
  Int npow;  // n^(j+1-k)
  for (unsigned k = 0; k <= j; ++k) {
    mpz_pow_ui(npow.get_mpz_t(), n.get_mpz_t(), j + 1 - k);
    Rat term = Rat(binomial(j + 1, k)) * bernoulli(k) * Rat(npow);
    if (k % 2 == 1) term = -term;
    total += term;
  }
  total /= Rat(j + 1);
  total.canonicalize();
  return total;
}

long val_p(const Rat& r, long p) {
  if (r == 0) throw std::domain_error("val_p: zero rational");
  long v = 0;
  Int num = r.get_num(), den = r.get_den();
  while (mpz_divisible_ui_p(num.get_mpz_t(), p)) {
    num /= p;
    ++v;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), p)) {
    den /= p;
    --v;
  }
  return v;
}

}  // namespace cmzv
