#ifndef CAPMINK_KERNELS_HPP
#define CAPMINK_KERNELS_HPP

#include <cstddef>
#include <vector>

namespace capmink {

// Execution policy for the hot loops.  `parallel` uses OpenMP with a fixed
// block partition and a fixed reduction order, so results are identical bit
// for bit to the serial path for any thread count.
enum class Exec { serial, parallel };

// Honor the CAPMINK_THREADS environment variable (if set) as a cap on the
// OpenMP thread count.  Returns the cap, or 0 if none was applied.
int apply_thread_cap_env();

namespace detail {
constexpr std::size_t kReduceBlock = 1024;
}

// Deterministic blocked sum of f(0..n-1): blocks are summed independently
// (possibly in parallel) and then combined in index order.
template <class F>
double det_reduce(std::size_t n, F&& f, Exec ex) {
  const std::size_t B = detail::kReduceBlock;
  const std::size_t nb = (n + B - 1) / B;
  std::vector<double> partial(nb, 0.0);
  if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long b = 0; b < static_cast<long>(nb); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * B;
      const std::size_t hi = std::min(n, lo + B);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += f(i);
      partial[b] = s;
    }
  } else {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * B;
      const std::size_t hi = std::min(n, lo + B);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += f(i);
      partial[b] = s;
    }
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

// Parallel loop without reduction; each index writes its own slots.
template <class F>
void par_for(std::size_t n, F&& f, Exec ex) {
  if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(n); ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

}  // namespace capmink

#endif
