// Recovers the 26-item ladder with kNN, HCP and SFR and prints them side by side.
#include <cstdio>

#include "sfr/hcp.hpp"
#include "sfr/knn.hpp"
#include "sfr/sfr_solver.hpp"
#include "sfr/toys.hpp"

int main() {
  const auto toy = sfr::ladder_toy_26();
  const auto& g = toy.graph;
  std::vector<sfr::Index> all(g.size());
  for (sfr::Index i = 0; i < g.size(); ++i) all[i] = i;

  sfr::SolverConfig cfg;
  cfg.bounds = toy.bounds;
  const auto knn = sfr::predict_knn(g, toy.observed, all);
  const auto hcp = sfr::predict_hcp(g, toy.observed, all, toy.bounds);
  const auto sfr_rec = sfr::predict_sfr(g, toy.observed, all, cfg);

  std::printf("%-5s %6s %6s %6s %6s\n", "node", "truth", "knn", "hcp", "sfr");
  for (sfr::Index i = 0; i < g.size(); ++i) {
    auto show = [&](const sfr::UserRecovery& r) {
      const auto e = r.estimate(i);
      return e ? *e : -1.0;
    };
    std::printf("%-5s %6.2f %6.2f %6.2f %6.2f%s\n", g.name(i).c_str(), *toy.ground_truth[i], show(knn), show(hcp),
                show(sfr_rec), toy.observed.count(i) ? "  (observed)" : "");
  }
  std::printf("sfr: %zu iterations, %zu sources\n", sfr_rec.diagnostics.iterations_used,
              sfr_rec.diagnostics.source_count);
}
