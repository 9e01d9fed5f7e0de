#pragma once

namespace koopman {

// Largest n for which binomial(n, k) is served from the Pascal table.
inline constexpr int kMaxBinomialDegree = 400;

// C(n, k) in double precision from a lazily built Pascal triangle.
// Returns 0 for k < 0 or k > n. Throws DegreeOverflow when n exceeds the cap.
double binomial(int n, int k);

}  // namespace koopman
