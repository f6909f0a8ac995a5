// Minimal end-to-end use of the library: generate a shifted pair with one
// deliberately hard class, run a few self-training rounds, and print how the
// worst class recovers.
#include <cstdio>

#include "hcrpl/experiment.hpp"

int main() {
  hcrpl::ShiftSpec spec = hcrpl::standard_benchmark_spec(/*seed=*/7);
  spec.n_source_per_class = 80;
  spec.n_target_per_class = 80;
  auto [source, target] = hcrpl::generate_shifted_pair(spec);

  hcrpl::RunConfig cfg = hcrpl::standard_run_config(/*seed=*/7);
  cfg.rounds = 5;

  hcrpl::Runner runner(source, target, cfg);
  runner.pretrain();
  std::printf("round  test_acc  pseudo  worst_f1\n");
  for (int r = 0; r < cfg.rounds; ++r) {
    hcrpl::RoundReport rep = runner.run_round();
    std::printf("%5d  %8.4f  %6lld  %8.4f\n", rep.round, rep.test_accuracy,
                static_cast<long long>(rep.pseudo_count),
                rep.prf.worst_class_f1);
  }
  return 0;
}
