#include "capmink/simplex.hpp"

#include <cmath>

namespace capmink {

SimplexResult simplex_maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  SimplexResult res;

  // Tableau [A I | b] with the slack basis; bottom row holds reduced costs.
  Eigen::MatrixXd T(m + 1, n + m + 1);
  T.setZero();
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = -c.transpose();

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double tol = 1e-11;
  const long max_pivots = 40L * (m + n) + 2000;
  for (long pivot = 0; pivot < max_pivots; ++pivot) {
    // Bland: smallest-index column with negative reduced cost.
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (T(m, j) < -tol) {
        enter = j;
        break;
      }
    if (enter < 0) {  // optimal
      res.x = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < m; ++i)
        if (basis[i] < n) res.x[basis[i]] = T(i, n + m);
      res.value = T(m, n + m);
      res.ok = true;
      return res;
    }
    // Ratio test, ties broken by smallest basis index (Bland).
    int leave = -1;
    double best = 0.0;
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > tol) {
        const double r = T(i, n + m) / T(i, enter);
        if (leave < 0 || r < best - tol ||
            (std::fabs(r - best) <= tol && basis[i] < basis[leave])) {
          best = r;
          leave = i;
        }
      }
    }
    if (leave < 0) return res;  // unbounded: caller treats as failure
    // Pivot.
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
  }
  return res;  // pivot budget exhausted
}

}  // namespace capmink
