// Times run_plan (OpenMP) against run_plan_serial on the fig3 plan and checks
// that both give identical traces.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "ionpair/experiment.hpp"
#include "ionpair/scenario.hpp"

using namespace ionpair;

namespace {

bool same(const std::vector<experiment::ParityTrace>& a, const std::vector<experiment::ParityTrace>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].parity_mean != b[i].parity_mean || a[i].parity_stderr != b[i].parity_stderr ||
        a[i].single_ion_means != b[i].single_ion_means) {
      return false;
    }
  }
  return true;
}

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int shots = argc > 1 ? std::atoi(argv[1]) : 400;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  const auto scn = scenario::parse_scenario(scenario::builtin_text("fig3_quadrupole_product"));
  auto plan = scenario::build_plan(scn, scenario::gradient_grid(scn).front(), 1);
  plan.shots_per_point = shots;

  std::vector<experiment::ParityTrace> serial, parallel;
  double t_serial = 1e300, t_parallel = 1e300;
  for (int r = 0; r < reps; ++r) {
    t_serial = std::min(t_serial, seconds([&] { serial = experiment::run_plan_serial(plan); }));
    t_parallel = std::min(t_parallel, seconds([&] { parallel = experiment::run_plan(plan); }));
  }
  const double total = static_cast<double>(serial.size()) * shots;
  std::printf("points=%zu shots/point=%d\n", serial.size(), shots);
  std::printf("serial   %.4f s  %.3g shots/s\n", t_serial, total / t_serial);
  std::printf("openmp   %.4f s  %.3g shots/s  speedup %.2fx\n", t_parallel, total / t_parallel,
              t_serial / t_parallel);
  const bool ok = same(serial, parallel);
  std::printf("identical: %s\n", ok ? "yes" : "NO");
  return ok ? 0 : 1;
}
