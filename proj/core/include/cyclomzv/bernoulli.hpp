#pragma once
// Bernoulli numbers (B_1 = -1/2 convention, from x/(e^x - 1)) and the exact
// sum-of-powers formula, in arbitrary-precision rationals.

#include "cyclomzv/padic.hpp"

namespace cmzv {

// B_k; cached, computed by the recursion sum_{j<=k} C(k+1, j) B_j = 0
Rat bernoulli(unsigned k);

Int binomial(unsigned long n, unsigned long k);

// sum_{1 <= m <= n} m^j = (1/(j+1)) sum_{0<=k<=j} C(j+1,k) (-1)^k B_k n^(j+1-k)
Rat faulhaber_sum(unsigned j, const Int& n);

// val_p of a rational (numerator minus denominator multiplicity)
long val_p(const Rat& r, long p);

}  // namespace cmzv
