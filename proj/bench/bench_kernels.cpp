// Serial reference against the OpenMP kernels over a sweep of lattice sizes
// and thread counts. Each parallel result is compared bitwise with the
// serial one before its timing is reported.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "CLI11.hpp"
#include "suphedge/model.hpp"
#include "suphedge/parallel.hpp"
#include "suphedge/superhedge.hpp"
#include "suphedge/value_recursion.hpp"

using namespace suphedge;

namespace {

template <typename Fn>
double best_of(int reps, Fn&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

bool same(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> threads{1, 2, 4};
    std::vector<int> horizons{6, 8, 10};
    int grid_n = 33;
    int reps = 3;
    CLI::App app{"serial vs parallel kernel timings"};
    app.add_option("--threads", threads, "thread counts to sweep");
    app.add_option("--horizons", horizons, "price sweep horizons (interval grid, 3 points)");
    app.add_option("--grid-n", grid_n, "wealth grid points for the value recursion sweep");
    app.add_option("--reps", reps, "repetitions, best time kept");
    CLI11_PARSE(app, argc, argv);

    bool all_same = true;
    std::printf("kernel,size,threads,serial_s,parallel_s,speedup,identical\n");
    for (int T : horizons) {
        const auto L = make_interval_grid_lattice(T, 1.1, 0.9, 100.0, 3);
        const auto xi = terminal_values(PayoffSpec::straddle(100.0), L);
        PriceSurface ref;
        const double ts = best_of(reps, [&] { ref = price_serial(L, xi); });
        for (int th : threads) {
            set_num_threads(th);
            PriceSurface par;
            const double tp = best_of(reps, [&] { par = price(L, xi); });
            const bool ok = same(ref.pi, par.pi) && same(ref.dual, par.dual);
            all_same = all_same && ok;
            std::printf("price,%zu,%d,%.6f,%.6f,%.2f,%d\n", L.size(), th, ts, tp, ts / tp, ok);
        }
    }

    for (int T : {2, 3}) {
        const auto L = make_interval_grid_lattice(T, 1.1, 0.9, 10.0, 3);
        const auto xi = terminal_values(PayoffSpec::call(10.0), L);
        const auto priors = PriorFamily::uniform(L);
        const auto u = UtilityProfile::uniform(T, Utility::exponential(0.7));
        RecursionOptions o;
        o.grid_n = grid_n;
        o.wealth_span = 3.0;
        o.initial_wealth = price(L, xi).root_price() + 1.0;
        o.serial = true;
        RecursionResult ref;
        const double ts = best_of(1, [&] { ref = value_recursion(L, xi, priors, u, o); });
        o.serial = false;
        for (int th : threads) {
            set_num_threads(th);
            RecursionResult par;
            const double tp = best_of(1, [&] { par = value_recursion(L, xi, priors, u, o); });
            bool ok = same(ref.policy.consumption, par.policy.consumption);
            for (std::size_t i = 0; i < L.size(); ++i) ok = ok && same(ref.surface.values[i], par.surface.values[i]);
            all_same = all_same && ok;
            std::printf("value_recursion,%zu,%d,%.6f,%.6f,%.2f,%d\n", L.size() * grid_n, th, ts, tp, ts / tp, ok);
        }
    }
    set_num_threads(0);
    return all_same ? 0 : 1;
}
