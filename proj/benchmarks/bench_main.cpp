#include "puf_forge/challenge.hpp"
#include "puf_forge/gabor.hpp"
#include "puf_forge/linear_attack.hpp"
#include "puf_forge/neural_attack.hpp"
#include "puf_forge/puf_sim.hpp"

#include <benchmark/benchmark.h>

using namespace puf_forge;

namespace {

PufConfig bench_puf(std::size_t l) {
    PufConfig c;
    c.grid_side = l;
    c.seed = 1;
    return c;
}

std::vector<Crp> bench_crps(std::size_t l, std::size_t count) {
    const TransmissionMatrix puf = build_puf(bench_puf(l));
    std::vector<Crp> crps;
    for (const Challenge& ch : generate(l, SchemeType::A, count, 3)) {
        Crp c;
        c.challenge = ch;
        c.cropped = respond_cropped(puf, ch, puf.config().crop_side);
        crps.push_back(std::move(c));
    }
    return crps;
}

}  // namespace

static void BM_BuildPuf(benchmark::State& state) {
    const PufConfig c = bench_puf(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_puf(c));
}
BENCHMARK(BM_BuildPuf)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_RespondFull(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    const TransmissionMatrix puf = build_puf(bench_puf(l));
    const Challenge ch = generate_one(l, SchemeType::A, 5, 0);
    for (auto _ : state) benchmark::DoNotOptimize(respond(puf, ch));
}
BENCHMARK(BM_RespondFull)->Arg(5)->Arg(9)->Unit(benchmark::kMillisecond);

static void BM_RespondCropped(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    const TransmissionMatrix puf = build_puf(bench_puf(l));
    const Challenge ch = generate_one(l, SchemeType::A, 5, 0);
    for (auto _ : state) benchmark::DoNotOptimize(respond_cropped(puf, ch, 128));
}
BENCHMARK(BM_RespondCropped)->Arg(5)->Arg(9)->Unit(benchmark::kMicrosecond);

static void BM_GaborBinarize(benchmark::State& state) {
    const TransmissionMatrix puf = build_puf(bench_puf(5));
    const ResponseImage img = respond_cropped(puf, Challenge::ones(5), 128);
    const GaborKernel k = make_kernel(state.range(0) == 1 ? GaborPreset::G1 : GaborPreset::G2);
    for (auto _ : state) benchmark::DoNotOptimize(gabor_binarize(img, k));
}
BENCHMARK(BM_GaborBinarize)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_FitOls(benchmark::State& state) {
    const auto crps = bench_crps(5, 300);
    const FeatureKind f = state.range(0) == 0 ? FeatureKind::raw : FeatureKind::quadratic;
    for (auto _ : state) benchmark::DoNotOptimize(fit_ols(crps, f));
}
BENCHMARK(BM_FitOls)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_GeneratorStep(benchmark::State& state) {
    const std::vector<std::size_t> hidden{256, 128};
    GeneratorModel m = build_generator(25, hidden, 64, 1);
    const Batch all = make_training_set(bench_crps(5, 16), 64);
    AdamState adam = AdamState::for_model(m, AdamParams{});
    for (auto _ : state) {
        const Gradients g = gradients(m, all);
        adam.apply(m, g);
    }
}
BENCHMARK(BM_GeneratorStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
