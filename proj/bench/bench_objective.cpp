// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS set to compare.

#include "langdiff/objective.hpp"
#include "langdiff/subset.hpp"
#include "langdiff/synth.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <random>

using namespace langdiff;

namespace {

struct Problem {
    SynthTable synth;
    Objective objective;
    std::vector<double> x, grad;
};

Problem& problem(ModelKind kind, std::size_t intents) {
    static std::map<std::pair<int, std::size_t>, std::unique_ptr<Problem>> cache;
    auto& slot = cache[{static_cast<int>(kind), intents}];
    if (!slot) {
        SynthConfig c;
        c.intents = intents;
        c.corpora = 20;
        c.missing = {Missingness::Type::Mcar, 0.1, 0.0};
        c.seed = 1;
        auto s = generate_table(c);
        ModelSpec spec;
        spec.kind = kind;
        Objective obj(s.table, spec);
        auto x = pack(s.truth);
        std::vector<double> g(x.size());
        slot = std::make_unique<Problem>(Problem{std::move(s), std::move(obj), std::move(x), std::move(g)});
    }
    return *slot;
}

template <bool Parallel>
void BM_objective(benchmark::State& state) {
    auto& p = problem(static_cast<ModelKind>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        const double v = Parallel ? p.objective.evaluate(p.x, p.grad) : p.objective.evaluate_serial(p.x, p.grad);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.objective.num_cells()));
}

PresenceMatrix presence(std::size_t rows, std::size_t cols) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::string> r, c;
    for (std::size_t i = 0; i < rows; ++i) r.push_back("d" + std::to_string(i));
    for (std::size_t j = 0; j < cols; ++j) c.push_back("t" + std::to_string(j));
    PresenceMatrix m(r, c);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            if (u(rng) < 0.9) m.set(i, j);
    return m;
}

template <bool Parallel>
void BM_subset(benchmark::State& state) {
    const auto m = presence(5000, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto s = Parallel ? select_exact(m, 0) : select_exact_serial(m, 0);
        benchmark::DoNotOptimize(s.objective);
    }
}

void objective_args(benchmark::internal::Benchmark* b) {
    for (int kind : {0, 1, 2, 3})
        for (int intents : {2000, 20000}) b->Args({kind, intents});
}

} // namespace

BENCHMARK(BM_objective<false>)->Apply(objective_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_objective<true>)->Apply(objective_args)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_subset<false>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_subset<true>)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
