#include <benchmark/benchmark.h>

#include <vector>

#include "gjs/gaussian.hpp"
#include "gjs/kernels.hpp"

namespace {

using gjs::Mat;
using gjs::Vec;
using gjs::kernels::Exec;

gjs::FullGaussian bench_gaussian(Eigen::Index d) {
  const Mat a = gjs::standard_normal(d, d, 3);
  return gjs::FullGaussian(Vec::Zero(d), a * a.transpose() + Mat::Identity(d, d));
}

void BM_LogPdfReference(benchmark::State& state) {
  const auto n = state.range(0);
  const auto g = bench_gaussian(5);
  const Mat pts = gjs::standard_normal(n, 5, 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    gjs::kernels::log_pdf_rows_reference(g, pts, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_LogPdf(benchmark::State& state) {
  const auto n = state.range(0);
  const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
  const auto g = bench_gaussian(5);
  const Mat pts = gjs::standard_normal(n, 5, 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    gjs::kernels::log_pdf_rows(g, pts, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_KdeReference(benchmark::State& state) {
  const auto n = state.range(0);
  const Mat centers = gjs::standard_normal(n, 2, 1);
  const Mat pts = gjs::standard_normal(n, 2, 2);
  const Vec h = Vec::Constant(2, 0.3);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    gjs::kernels::kde_log_density_reference(centers, h, pts, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_Kde(benchmark::State& state) {
  const auto n = state.range(0);
  const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
  const Mat centers = gjs::standard_normal(n, 2, 1);
  const Mat pts = gjs::standard_normal(n, 2, 2);
  const Vec h = Vec::Constant(2, 0.3);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto _ : state) {
    gjs::kernels::kde_log_density(centers, h, pts, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_KernelSumReference(benchmark::State& state) {
  const auto n = state.range(0);
  const Mat a = gjs::standard_normal(n, 10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gjs::kernels::gaussian_kernel_sum_reference(a, a, 1.0, true));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_KernelSum(benchmark::State& state) {
  const auto n = state.range(0);
  const Exec exec = state.range(1) ? Exec::Parallel : Exec::Serial;
  const Mat a = gjs::standard_normal(n, 10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(gjs::kernels::gaussian_kernel_sum(a, a, 1.0, true, exec));
  state.SetItemsProcessed(state.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_LogPdfReference)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_LogPdf)->ArgsProduct({{1 << 16, 1 << 20}, {0, 1}});
BENCHMARK(BM_KdeReference)->Arg(1024)->Arg(4096);
BENCHMARK(BM_Kde)->ArgsProduct({{1024, 4096}, {0, 1}});
BENCHMARK(BM_KernelSumReference)->Arg(256)->Arg(1024);
BENCHMARK(BM_KernelSum)->ArgsProduct({{256, 1024}, {0, 1}});

BENCHMARK_MAIN();
