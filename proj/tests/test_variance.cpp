#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "extremal/models.hpp"
#include "extremal/variance.hpp"
#include "oracles.hpp"

using namespace extremal;
using Catch::Approx;

namespace {

// Cholesky factorization succeeds iff the matrix is positive definite.
bool positive_definite(const SymMatrix& a) {
  const std::size_t n = a.dim();
  std::vector<double> l(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0)) return false;
    l[j * n + j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = v / l[j * n + j];
    }
  }
  return true;
}

SymMatrix shifted(const SymMatrix& a, double shift) {
  SymMatrix out = a;
  for (std::size_t i = 0; i < a.dim(); ++i) out(i, i) -= shift;
  return out;
}

Series series_with(std::size_t n, const std::vector<std::size_t>& hits, double value = 5.0) {
  std::vector<double> x(n, 0.0);
  for (auto i : hits) x[i] = value;
  return Series(x);
}

}  // namespace

TEST_CASE("c_v on a twelve-point toy") {
  // one exceedance, n = 12, r = 4, m = 3: r v = 1/3 and mean N^2 = 1/3
  const auto x = series_with(12, {5});
  const BlockScheme scheme(12, 1, 4);
  CHECK(scheme.m() == 3);
  CHECK(estimate_c_v(x, 1.0, scheme) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("c_d with one disjoint block per big block") {
  // blocks [0,3) [3,6) [6,9): indicators 1,0,1, variance 1/3, r v = 3/4
  const auto x = series_with(12, {0, 7, 11});
  const BlockScheme scheme(12, 3, 3);
  CHECK(estimate_c_d(block_max(), x, 1.0, scheme) == Approx(4.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("constant big-block sums give zero variance constants") {
  const auto even = series_with(12, {1, 5, 9});
  const BlockScheme scheme(12, 1, 4);
  CHECK(estimate_c_s(block_max(), even, 1.0, scheme) == 0.0);
  CHECK(estimate_c_d(block_max(), even, 1.0, scheme) == 0.0);
  CHECK(estimate_cross_cov(block_max(), even, 1.0, scheme, BlockMode::kSliding) == 0.0);
  CHECK(estimate_cross_cov(first_exceed(), even, 1.0, scheme, BlockMode::kDisjoint) == 0.0);

  const auto lumped = series_with(12, {0, 1, 2});
  CHECK(estimate_c_s(block_max(), lumped, 1.0, scheme) > 0.0);
}

TEST_CASE("variance constants require blocks and exceedances") {
  const auto x = series_with(12, {3});
  CHECK_THROWS_AS(estimate_c_s(block_max(), x, 1.0, BlockScheme(12, 1, 8)), Error);
  CHECK_THROWS_AS(estimate_c_d(block_max(), x, 1.0, BlockScheme(12, 2, 3)), Error);
  CHECK_THROWS_AS(estimate_c_s(block_max(), x, 10.0, BlockScheme(12, 1, 4)), NoExceedanceError);
  CHECK_THROWS_AS(estimate_c_v(x, 10.0, BlockScheme(12, 1, 4)), NoExceedanceError);
  CHECK_NOTHROW(estimate_c_v(x, 1.0, BlockScheme(12, 1, 8)));
}

TEST_CASE("variance constants match brute force on fuzzed series") {
  std::mt19937_64 gen(404);
  const auto g = block_max().with_scale(2.0);
  int checked = 0;
  while (checked < 200) {
    const std::size_t n = 20 + gen() % 200;
    const auto raw = oracle::fuzz_series(gen, n);
    const double u = 5.5;
    const std::size_t s = 1 + gen() % 5;
    const std::size_t r = s * (1 + gen() % 4);
    if ((n - s + 1) / r < 2 || oracle::exceed_count(raw, u, n) == 0) continue;
    const Series x(raw);
    const BlockScheme scheme(n, s, r);
    const auto y = oracle::normalize(raw, u);
    const double v = static_cast<double>(oracle::exceed_count(raw, u, n)) / static_cast<double>(n);
    const auto bs = oracle::big_sliding(oracle::g_block_max, y, s, r);
    const auto bd = oracle::big_disjoint(oracle::g_block_max, y, s, r);
    const auto nc = oracle::big_counts(raw, u, s, r);
    const double rv = static_cast<double>(r) * v;
    const double sd = static_cast<double>(s);

    CHECK(estimate_c_s(g, x, u, scheme) == Approx(oracle::cov(bs, bs) / (rv * sd * sd * 4.0)).margin(1e-13));
    CHECK(estimate_c_d(g, x, u, scheme) == Approx(oracle::cov(bd, bd) / (rv * 4.0)).margin(1e-13));
    double sq = 0.0;
    for (double c : nc) sq += c * c;
    CHECK(estimate_c_v(x, u, scheme) == Approx(sq / static_cast<double>(nc.size()) / rv).epsilon(1e-13));
    CHECK(estimate_cross_cov(g, x, u, scheme, BlockMode::kSliding) ==
          Approx(oracle::cov(bs, nc) / (rv * sd * 2.0)).margin(1e-13));
    CHECK(estimate_cross_cov(g, x, u, scheme, BlockMode::kDisjoint) ==
          Approx(oracle::cov(bd, nc) / (rv * 2.0)).margin(1e-13));

    // first-exceedance sliding sums are the big-block exceedance counts
    const auto ns = normalize(x, u);
    CHECK(big_block_sums(first_exceed(), ns, scheme, BlockMode::kSliding) == big_block_exceedances(ns, scheme));
    CHECK(estimate_cross_cov(first_exceed(), x, u, scheme, BlockMode::kSliding) * sd ==
          Approx(oracle::cov(nc, nc) / rv).margin(1e-12));

    const auto rep = variance_report(block_max(), x, u, scheme);
    CHECK(rep.c_s >= 0.0);
    CHECK(rep.c_d >= 0.0);
    CHECK(rep.c_v >= 0.0);
    CHECK(rep.c_tilde_s == Approx(rep.c_s + rep.xi_hat * rep.xi_hat * rep.c_v - 2.0 * rep.xi_hat * rep.c_sv));
    CHECK(rep.c_tilde_d == Approx(rep.c_d + rep.xi_hat * rep.xi_hat * rep.c_v - 2.0 * rep.xi_hat * rep.c_dv));
    CHECK(rep.m == scheme.m());
    ++checked;
  }
}

TEST_CASE("covariance matrices reproduce the scalar constants") {
  std::mt19937_64 gen(77);
  const auto raw = oracle::fuzz_series(gen, 400);
  const Series x(raw);
  const BlockScheme scheme(400, 4, 16);
  const std::vector<BlockFunctional> set = {block_max(), first_exceed(), runs()};
  const auto pair = estimate_cov_matrices(set, x, 6.5, scheme);
  REQUIRE(pair.c_s.dim() == 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(pair.c_s(i, i) == Approx(estimate_c_s(set[i], x, 6.5, scheme)).epsilon(1e-12));
    CHECK(pair.c_d(i, i) == Approx(estimate_c_d(set[i], x, 6.5, scheme)).epsilon(1e-12));
    CHECK(pair.c_s(i, i) >= 0.0);
  }
  CHECK(pair.c_s.is_symmetric());
  CHECK(pair.c_d.is_symmetric());
  const std::vector<BlockFunctional> too_many(17, block_max());
  CHECK_THROWS_AS(estimate_cov_matrices(too_many, x, 6.5, scheme), Error);
}

TEST_CASE("plug-in asymptotic variance") {
  const auto iid = plugin_asymptotic_variance(1.0, 1.0);
  CHECK(iid.value == 0.0);
  CHECK(iid.degenerate);
  const auto armax = plugin_asymptotic_variance(0.5, 3.0);
  CHECK(armax.value == 0.25);
  CHECK_FALSE(armax.degenerate);
  const auto mm = plugin_asymptotic_variance(0.5, 2.0);
  CHECK(mm.value == 0.0);
  CHECK(mm.degenerate);
  const auto low = plugin_asymptotic_variance(0.5, 1.5);
  CHECK(low.negative);
  CHECK(low.value == -0.125);
  CHECK_THROWS_AS(plugin_asymptotic_variance(0.0, 2.0), Error);
  CHECK_THROWS_AS(plugin_asymptotic_variance(1.2, 2.0), Error);
  CHECK_THROWS_AS(plugin_asymptotic_variance(0.5, -1.0), Error);
  CHECK(plugin_stderr(0.5, 3.0, 50000, 0.02).value() == Approx(std::sqrt(0.25 / 1000.0)));
  CHECK_FALSE(plugin_stderr(1.0, 1.0, 100, 0.1).has_value());
}

TEST_CASE("Loewner comparison on hand matrices") {
  const SymMatrix base{{1.0, 0.2}, {0.2, 2.0}};
  const auto equal = loewner_compare({base, base}, 0.0);
  CHECK(equal.dominated);
  CHECK(std::abs(equal.lambda_min) <= 1e-10);

  const SymMatrix plus_diag{{1.1, 0.2}, {0.2, 2.2}};
  const auto diag = loewner_compare({base, plus_diag}, 0.0);
  CHECK(diag.dominated);
  CHECK(std::abs(diag.lambda_min - 0.1) <= 1e-10);

  const SymMatrix plus_off{{1.0, 0.7}, {0.7, 2.0}};
  const auto off = loewner_compare({base, plus_off}, 1e-8);
  CHECK_FALSE(off.dominated);
  CHECK(std::abs(off.lambda_min + 0.5) <= 1e-10);

  CHECK_THROWS_AS(loewner_compare({SymMatrix(2), SymMatrix(3)}, 0.0), Error);
  CHECK_THROWS_AS(loewner_compare({SymMatrix(17), SymMatrix(17)}, 0.0), Error);
}

TEST_CASE("Jacobi eigenvalues bracket the definiteness boundary") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 16;
    SymMatrix a(n);
    double frob = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        a(i, j) = a(j, i) = normal(gen);
        frob += (i == j ? 1.0 : 2.0) * a(i, j) * a(i, j);
      }
    }
    const auto eig = symmetric_eigenvalues(a);
    REQUIRE(eig.size() == n);
    CHECK(std::is_sorted(eig.begin(), eig.end()));
    double sum = 0.0, sq = 0.0;
    for (double e : eig) {
      sum += e;
      sq += e * e;
    }
    CHECK(sum == Approx(a.trace()).margin(1e-9));
    CHECK(sq == Approx(frob).epsilon(1e-9));
    CHECK(positive_definite(shifted(a, eig.front() - 1e-7)));
    CHECK_FALSE(positive_definite(shifted(a, eig.front() + 1e-7)));
  }
}

TEST_CASE("ARMAX big-block constants sit near their limits") {
  // theta = 0.5, c = 3: c_s -> theta and c_sv -> 1 for the block maximum.
  // c_v is a raw second moment, E[N^2]/(r v) = Var(N)/(r v) + r v, so the
  // comparison with c removes the r v term (here r v = 2).
  const auto spec = ModelSpec::armax(0.5);
  const double u = frechet_quantile(0.99);
  std::vector<double> cs, csv, cv;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const Series x = simulate(spec, 200000, derive_seed(77, rep, StreamTag::kPath));
    const BlockScheme scheme(x.size(), 10, 200);
    cs.push_back(estimate_c_s(block_max(), x, u, scheme));
    csv.push_back(estimate_cross_cov(block_max(), x, u, scheme, BlockMode::kSliding));
    cv.push_back(estimate_c_v(x, u, scheme));
  }
  INFO("c_s " << stats::mean(cs) << " c_sv " << stats::mean(csv) << " c_v " << stats::mean(cv));
  CHECK(std::abs(stats::mean(cs) - 0.5) < 0.1);
  CHECK(std::abs(stats::mean(csv) - 1.0) < 0.15);
  CHECK(std::abs(stats::mean(cv) - 200 * 0.01 - 3.0) < 0.4);
}
