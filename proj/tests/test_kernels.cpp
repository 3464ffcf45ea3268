#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <random>
#include <vector>

#include "capmink/kernels.hpp"

using namespace capmink;

TEST_CASE("deterministic reduction: parallel equals serial bitwise") {
  std::mt19937_64 rng(991);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(1023),
                        std::size_t(1024), std::size_t(1025), std::size_t(100000)}) {
    std::vector<double> v(n);
    for (auto& x : v) x = U(rng);
    auto f = [&](std::size_t i) { return v[i] * v[i] - 0.25 * v[i]; };
    const double s_ser = det_reduce(n, f, Exec::serial);
    const double s_par = det_reduce(n, f, Exec::parallel);
    CHECK(s_ser == s_par);  // bit-identical by construction
    double naive = 0.0;
    for (std::size_t i = 0; i < n; ++i) naive += f(i);
    CHECK(s_ser == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("parallel for covers every index exactly once") {
  const std::size_t n = 4097;
  std::vector<int> hits(n, 0);
  par_for(n, [&](std::size_t i) { hits[i] += 1; }, Exec::parallel);
  par_for(n, [&](std::size_t i) { hits[i] += 1; }, Exec::serial);
  for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 2);
}

TEST_CASE("thread cap env variable") {
  setenv("CAPMINK_THREADS", "1", 1);
  CHECK(apply_thread_cap_env() == 1);
  setenv("CAPMINK_THREADS", "not-a-number", 1);
  CHECK(apply_thread_cap_env() == 0);
  unsetenv("CAPMINK_THREADS");
  CHECK(apply_thread_cap_env() == 0);
}
