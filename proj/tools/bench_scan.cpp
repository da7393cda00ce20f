// Compares the serial reference kernels against the OpenMP ones on a large
// generated corpus and checks that both produce identical results.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "idorscan/annotation.hpp"
#include "idorscan/attack_rules.hpp"
#include "idorscan/corpus_gen.hpp"
#include "idorscan/model.hpp"
#include "idorscan/reporting.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 0.0;
  for (int i = 0; i < repeats; ++i) {
    auto start = Clock::now();
    f();
    double elapsed = ms_since(start);
    if (i == 0 || elapsed < best) best = elapsed;
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t per_technique = 40;
  std::size_t clean = 600;
  int repeats = 5;
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--per-technique") per_technique = std::strtoull(argv[i + 1], nullptr, 10);
    if (flag == "--clean") clean = std::strtoull(argv[i + 1], nullptr, 10);
    if (flag == "--repeat") repeats = std::atoi(argv[i + 1]);
  }

  idorscan::corpus::CorpusPlan plan;
  plan.seed = 7;
  plan.clean_count = clean;
  for (const auto& pattern : idorscan::rules::catalog()) {
    plan.plants.push_back({pattern.technique, per_technique});
  }
  auto corpus = idorscan::corpus::generate(plan);
  auto spec = std::make_shared<const idorscan::model::ApiSpec>(
      idorscan::model::load_spec(corpus.spec_text));
  std::printf("corpus: %zu endpoints, %zu operations\n", spec->paths.size(),
              spec->operation_count());
#ifdef _OPENMP
  std::printf("openmp: %d threads\n", omp_get_max_threads());
#else
  std::printf("openmp: not built in; parallel kernels run serially\n");
#endif

  idorscan::annotation::AnnotatedSpec serial_annotated, parallel_annotated;
  double annotate_serial_ms = best_of(repeats, [&] {
    serial_annotated = idorscan::annotation::annotate_serial(spec);
  });
  double annotate_parallel_ms = best_of(repeats, [&] {
    parallel_annotated = idorscan::annotation::annotate_parallel(spec);
  });

  idorscan::rules::AttackReport serial_report, parallel_report;
  double evaluate_serial_ms = best_of(repeats, [&] {
    serial_report = idorscan::rules::evaluate_serial(serial_annotated);
  });
  double evaluate_parallel_ms = best_of(repeats, [&] {
    parallel_report = idorscan::rules::evaluate_parallel(parallel_annotated);
  });

  const std::string serial_out =
      idorscan::reporting::emit_report(serial_report, idorscan::reporting::ReportFormat::Yaml);
  const std::string parallel_out =
      idorscan::reporting::emit_report(parallel_report, idorscan::reporting::ReportFormat::Yaml);
  if (serial_out != parallel_out) {
    std::fprintf(stderr, "FAIL: serial and parallel reports differ\n");
    return 1;
  }

  std::printf("%-18s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");
  std::printf("%-18s %12.2f %12.2f %8.2fx\n", "annotate", annotate_serial_ms,
              annotate_parallel_ms, annotate_serial_ms / annotate_parallel_ms);
  std::printf("%-18s %12.2f %12.2f %8.2fx\n", "evaluate", evaluate_serial_ms,
              evaluate_parallel_ms, evaluate_serial_ms / evaluate_parallel_ms);
  std::printf("results identical: yes (%zu findings)\n", serial_report.total_findings());
  return 0;
}
