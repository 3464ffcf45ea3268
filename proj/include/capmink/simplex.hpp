#ifndef CAPMINK_SIMPLEX_HPP
#define CAPMINK_SIMPLEX_HPP

#include <Eigen/Dense>
#include <vector>

namespace capmink {

// maximize c.x  subject to  A x <= b, x >= 0, with b >= 0.
// Dense primal simplex with Bland's rule; sized for the small transport
// programs behind the weak measure distance (a few hundred unknowns).
struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool ok = false;
};

SimplexResult simplex_maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c);

}  // namespace capmink

#endif
