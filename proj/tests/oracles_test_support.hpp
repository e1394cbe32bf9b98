#pragma once
// Independent reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace testing_oracles {

/// Minimum-cost transport between two mass vectors on an M-point circle with
/// cost min(|i - j|, M - |i - j|) / M, solved as a min-cost flow by
/// successive shortest paths (Bellman-Ford on the residual graph).
inline double transport_lp(const std::vector<double>& a_mass, const std::vector<double>& b_mass) {
  const int m = static_cast<int>(a_mass.size());
  const int n = 2 * m + 2, src = 2 * m, dst = 2 * m + 1;
  struct Edge {
    int to;
    double cap, cost;
    int rev;
  };
  std::vector<std::vector<Edge>> g(static_cast<std::size_t>(n));
  auto add = [&](int u, int v, double cap, double cost) {
    g[u].push_back({v, cap, cost, static_cast<int>(g[v].size())});
    g[v].push_back({u, 0.0, -cost, static_cast<int>(g[u].size()) - 1});
  };
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) add(src, i, a_mass[i], 0.0);
  for (int j = 0; j < m; ++j) add(m + j, dst, b_mass[j], 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const int d = std::abs(i - j);
      add(i, m + j, inf, static_cast<double>(std::min(d, m - d)) / m);
    }
  double total = 0.0, sent = 0.0, supply = 0.0;
  for (double v : a_mass) supply += v;
  const double eps = 1e-15;
  while (sent < supply - 1e-13) {
    std::vector<double> dist(n, inf);
    std::vector<int> pv(n, -1), pe(n, -1);
    dist[src] = 0.0;
    for (int it = 0; it < n; ++it) {
      bool changed = false;
      for (int u = 0; u < n; ++u) {
        if (dist[u] == inf) continue;
        for (int k = 0; k < static_cast<int>(g[u].size()); ++k) {
          const Edge& e = g[u][k];
          if (e.cap > eps && dist[u] + e.cost < dist[e.to] - 1e-15) {
            dist[e.to] = dist[u] + e.cost;
            pv[e.to] = u;
            pe[e.to] = k;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[dst] == inf) break;
    double push = inf;
    for (int v = dst; v != src; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
    for (int v = dst; v != src; v = pv[v]) {
      Edge& e = g[pv[v]][pe[v]];
      e.cap -= push;
      g[v][e.rev].cap += push;
    }
    sent += push;
    total += push * dist[dst];
  }
  return total;
}

/// Trapezoid rule for a periodic integrand on [0, 1).
template <typename F>
double periodic_quadrature(F f, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += f(static_cast<double>(i) / n);
  return s / n;
}

}  // namespace testing_oracles
