// Writes the bundled synthetic auction-aggregates corpus.
//   gen_ets_corpus [--n 50] [--seed 7] > data/ets_synthetic.csv
// Bids follow a two-interval model: most bids in a narrow band near one end of
// the range, the rest in a short tail; only the aggregates are written.

#include <algorithm>
#include <cstdio>
#include <random>
#include <vector>

#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"synthetic auction aggregates"};
  int n = 50;
  unsigned long long seed = 7;
  app.add_option("--n", n, "number of auctions");
  app.add_option("--seed", seed, "RNG seed");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 rng(seed);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  std::printf("auction_id,b_min,b_max,b_avg,b_med,n_sub,K\n");
  for (int a = 0; a < n; ++a) {
    const int n_sub = std::uniform_int_distribution<int>(200, 600)(rng);
    const int K = std::uniform_int_distribution<int>(100, 300)(rng);
    const double f = U(0.93, 0.99);
    const bool low_band = U(0.0, 1.0) < 0.7;
    double c_lo, c_hi, t_lo, t_hi;
    if (low_band) {
      c_lo = U(0.05, 0.5);
      c_hi = c_lo * (1.0 + U(0.05, 0.3));
      t_lo = c_hi;
      t_hi = std::min(1.0, c_hi * (1.0 + U(0.08, 0.3)));
    } else {
      c_hi = U(0.4, 0.95);
      c_lo = c_hi * (1.0 - U(0.05, 0.3));
      t_hi = c_lo;
      t_lo = c_lo * (1.0 - U(0.08, 0.3));
    }
    const int nc = static_cast<int>(f * n_sub + 0.5);
    std::vector<double> v;
    for (int i = 0; i < n_sub; ++i) v.push_back(i < nc ? U(c_lo, c_hi) : U(t_lo, t_hi));
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    std::printf("A%03d,%.6f,%.6f,%.6f,%.6f,%d,%d\n", a + 1, v.front(), v.back(), s / n_sub, v[(v.size() - 1) / 2],
                n_sub, K);
  }
  return 0;
}
