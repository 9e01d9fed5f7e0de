#include "koopman/binomial.hpp"

#include <string>
#include <vector>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

const std::vector<std::vector<double>>& pascal_table() {
  static const std::vector<std::vector<double>> table = [] {
    std::vector<std::vector<double>> rows(kMaxBinomialDegree + 1);
    for (int n = 0; n <= kMaxBinomialDegree; ++n) {
      rows[n].assign(n + 1, 1.0);
      for (int k = 1; k < n; ++k) rows[n][k] = rows[n - 1][k - 1] + rows[n - 1][k];
    }
    return rows;
  }();
  return table;
}

}  // namespace

double binomial(int n, int k) {
  if (n > kMaxBinomialDegree) {
    throw DegreeOverflow("binomial degree " + std::to_string(n) +
                             " exceeds the supported maximum " +
                             std::to_string(kMaxBinomialDegree),
                         -1);
  }
  if (n < 0 || k < 0 || k > n) return 0.0;
  return pascal_table()[n][k];
}

}  // namespace koopman
