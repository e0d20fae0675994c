// acceptance.cpp
// Release gate: every shipped guarantee checked end to end, one line per
// criterion. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "cemb/cemb.hpp"

using namespace cemb;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

template <class T>
std::vector<Mat<T>> densify_grads(const EmbeddingLayer<T>& layer, const ParamGrads<T>& g) {
    auto params = layer.params();
    std::vector<Mat<T>> out;
    for (std::size_t s = 0; s < params.size(); ++s) {
        Mat<T> dense(params[s]->rows, params[s]->cols);
        if (const auto* full = std::get_if<Mat<T>>(&g.slots[s])) {
            dense = *full;
        } else {
            const auto& sp = std::get<SparseRows<T>>(g.slots[s]);
            for (std::size_t k = 0; k < sp.rows.size(); ++k)
                for (std::size_t c = 0; c < dense.cols; ++c)
                    dense(sp.rows[k], c) = sp.values(k, c);
        }
        out.push_back(std::move(dense));
    }
    return out;
}

// ---- 1: gradients ---------------------------------------------------------

Outcome check_gradients() {
    const double t0 = now_seconds();
    const EmbeddingSpec spec{12, 6, 0.3};
    const std::vector<std::uint32_t> idx{0, 5, 11, 5, 3};
    const TTConfig tt{{3, 2, 2}, {3, 2, 1}, {1, 2, 2, 1}};

    struct Case {
        LayerKind kind;
        LayerConfig config;
    };
    const std::vector<Case> cases{
        {LayerKind::native, std::monostate{}},
        {LayerKind::lowrank, LowRankConfig{2}},
        {LayerKind::quotient_remainder, std::monostate{}},
        {LayerKind::memcom, MemComConfig{0}},
        {LayerKind::tensor_train, tt},
        {LayerKind::frobenius, FrobeniusConfig{2, 2}},
    };

    double worst = 0.0;
    std::string worst_kind;
    Rng data_rng(99);
    const Mat<double> upstream = rng_normal<double>(data_rng, idx.size(), spec.d, 0.0, 1.0);

    for (const auto& c : cases) {
        Rng rng(7);
        auto layer = build_layer<double>(c.kind, spec, c.config, rng);
        auto loss = [&]() {
            const Mat<double> out = layer->lookup(idx);
            double acc = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) acc += upstream.data[i] * out.data[i];
            return acc;
        };
        const auto analytic = densify_grads(*layer, layer->grad(idx, upstream));
        auto params = layer->params();
        const double h = 1e-5;
        for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t i = 0; i < params[p]->size(); ++i) {
                const double orig = params[p]->data[i];
                params[p]->data[i] = orig + h;
                const double up = loss();
                params[p]->data[i] = orig - h;
                const double down = loss();
                params[p]->data[i] = orig;
                const double fd = (up - down) / (2.0 * h);
                const double got = analytic[p].data[i];
                const double rel = std::abs(fd - got) /
                                   std::max({std::abs(fd), std::abs(got), 1e-8});
                if (rel > worst) {
                    worst = rel;
                    worst_kind = kind_name(c.kind);
                }
            }
        }
    }
    const double secs = now_seconds() - t0;
    return {worst <= 1e-6 && secs < 60.0,
            fmt("six kinds, max rel err %.2e (%s), %.1fs", worst, worst_kind.c_str(), secs)};
}

// ---- 2: oracle equivalence ------------------------------------------------

Outcome check_oracles() {
    Rng rng(17);
    double worst = 0.0;

    const TTConfig tt{{2, 3, 4}, {2, 2, 2}, {1, 2, 2, 1}};
    auto tt_layer = std::make_unique<TensorTrainLayer<float>>(EmbeddingSpec{24, 8, 0.3}, tt, rng);
    const auto d17 = tt_layer->digits(17);
    const auto d23 = tt_layer->digits(23);
    const bool radix_ok = d17 == std::vector<std::size_t>{1, 1, 1} &&
                          d23 == std::vector<std::size_t>{1, 2, 3};

    auto fr_layer = build_layer<float>(LayerKind::frobenius, {40, 16, 0.3},
                                       FrobeniusConfig{3, 2}, rng);
    const std::vector<const EmbeddingLayer<float>*> layers{tt_layer.get(), fr_layer.get()};
    for (const auto* layer : layers) {
        const std::size_t n = layer->spec().n;
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        const Mat<float> looked = layer->lookup(all);
        for (std::size_t i = 0; i < n; ++i) {
            const auto oracle = layer->reconstruct_row(i);
            for (std::size_t c = 0; c < layer->spec().d; ++c)
                worst = std::max(worst,
                                 std::abs(static_cast<double>(looked(i, c)) - oracle[c]));
        }
    }
    return {radix_ok && worst <= 1e-5,
            fmt("lookup vs naive reconstruction max |diff| %.2e, radix %s", worst,
                radix_ok ? "ok" : "WRONG")};
}

// ---- 3: size accounting ----------------------------------------------------

Outcome check_sizes() {
    Rng rng(1);
    const std::size_t n = 1000000, d = 128;
    auto count = [&](std::size_t r, std::size_t p) {
        return build_layer<float>(LayerKind::frobenius, {n, d, 0.01}, FrobeniusConfig{r, p},
                                  rng)
            ->param_count();
    };
    const std::size_t base = count(8, 4);
    const bool linear_r = count(16, 4) == 2 * base && count(24, 4) == 3 * base;
    const bool linear_p = count(8, 8) == 2 * base && 4 * count(8, 1) == base;
    const double ratio = static_cast<double>(n * d) / static_cast<double>(base);
    return {linear_r && linear_p && ratio >= 100.0,
            fmt("r/p linearity %s, ratio %.0fx at n=1e6 d=128 r=8 p=4",
                linear_r && linear_p ? "exact" : "BROKEN", ratio)};
}

// ---- 4: initialization -----------------------------------------------------

Outcome check_init() {
    const double t0 = now_seconds();
    Rng rng(20260817);
    auto layer = build_layer<float>(LayerKind::frobenius, {1000000, 128, 0.01},
                                    FrobeniusConfig{8, 4}, rng);
    const std::size_t rows = 7813; // x128 cols: just over 1e6 entries
    Rng pick(5);
    std::vector<std::uint32_t> idx(rows);
    for (auto& i : idx) i = static_cast<std::uint32_t>(pick.below(1000000));
    const Mat<float> sample = layer->lookup(idx);

    double sum = 0.0, sq = 0.0;
    for (const auto v : sample.data) {
        sum += v;
        sq += static_cast<double>(v) * v;
    }
    const auto N = static_cast<double>(sample.size());
    const double mean = sum / N;
    const double var = sq / N - mean * mean;

    const double target = 1e-4;
    const double mean_bound = 3.0 * std::sqrt(target / N);
    const double secs = now_seconds() - t0;
    const bool pass = std::abs(var - target) <= 0.05 * target &&
                      std::abs(mean) <= mean_bound && secs < 60.0;
    return {pass, fmt("var %.3e (target 1e-4 +-5%%), |mean| %.1e (bound %.1e), %.1fs", var,
                      std::abs(mean), mean_bound, secs)};
}

// ---- 5: accuracy parity ----------------------------------------------------

Outcome check_parity() {
    const double t0 = now_seconds();
    DataConfig dcfg;
    dcfg.n_samples = 1200000;
    dcfg.n_dense = 4;
    dcfg.fields = {{100000, 1.1}, {20000, 1.1}, {2000, 1.05}, {500, 1.0}};
    dcfg.val_fraction = 0.1;
    dcfg.rule_scale = 10.0;
    dcfg.seed = 2026;
    const auto ds = generate_dataset(dcfg);

    TrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.batch_size = 1024;
    tcfg.opt.kind = Optimizer::adagrad;
    tcfg.opt.learning_rate = 0.05;
    tcfg.evals_per_epoch = 2;
    tcfg.eval_cap = 16384;

    const std::vector<VariantSpec> variants{
        {"native", LayerKind::native, 0, 0, 0},
        {"frobenius", LayerKind::frobenius, 8, 4, 0},
    };
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    const auto rows = parity_experiment<float>(ds, variants, tcfg, MlpConfig{32, 16}, 16,
                                               0.01, seeds);

    double max_gap = 0.0;
    double fr_lo = 1.0, fr_hi = 0.0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const double native_auc = rows[s].auc;
        const double fr_auc = rows[seeds.size() + s].auc;
        max_gap = std::max(max_gap, std::abs(native_auc - fr_auc));
        fr_lo = std::min(fr_lo, fr_auc);
        fr_hi = std::max(fr_hi, fr_auc);
    }
    const double byte_ratio = rows[seeds.size()].size_mb / rows[0].size_mb;
    const double secs = now_seconds() - t0;
    const bool pass = max_gap <= 0.005 && (fr_hi - fr_lo) <= 0.01 && byte_ratio <= 0.02 &&
                      secs < 1200.0;
    return {pass,
            fmt("max |auc gap| %.4f (<=0.005), spread %.4f (<=0.01), bytes %.2f%% of native, "
                "%.0fs",
                max_gap, fr_hi - fr_lo, byte_ratio * 100.0, secs)};
}

// ---- 6: heuristic ----------------------------------------------------------

Outcome check_heuristic() {
    const auto rec = recommend_pairs(1000000, 128);
    const std::vector<CandidatePair> want{{32, 1}, {24, 1}, {16, 2}, {8, 4}};
    bool exact = rec.candidates.size() == want.size() && !rec.warning;
    for (std::size_t i = 0; exact && i < want.size(); ++i)
        exact = rec.candidates[i] == want[i];
    const auto def = select_default(rec.candidates);
    const bool def_ok = def == CandidatePair{8, 4};
    return {exact && def_ok, fmt("ladder %s, default (r=%zu, p=%zu)",
                                 exact ? "{(32,1),(24,1),(16,2),(8,4)}" : "WRONG", def.r,
                                 def.p)};
}

// ---- 7: quantization ordering ----------------------------------------------

Outcome check_quantization() {
    std::size_t wins = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(1000 + s);
        const auto table = rng_normal<float>(rng, 32, 64, 0.0, 0.1);
        const double km =
            normalized_l2_loss(table, dequantize(quantize_int4(table, QuantStrategy::kmeans)));
        const double mm =
            normalized_l2_loss(table, dequantize(quantize_int4(table, QuantStrategy::minmax)));
        if (km <= mm) ++wins;
    }
    Rng rng(3);
    const auto x = rng_normal<float>(rng, 10, 10, 0.0, 1.0);
    const Mat<float> zeros(10, 10);
    const bool trivial = normalized_l2_loss(x, x) == 0.0 && normalized_l2_loss(x, zeros) == 1.0;
    return {wins >= 18 && trivial,
            fmt("kmeans <= minmax on %zu/20 seeds, trivial cases %s", wins,
                trivial ? "exact" : "WRONG")};
}

// ---- 8: clustering ----------------------------------------------------------

Outcome check_clustering() {
    std::size_t wins = 0;
    bool monotone = true;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(300 + s);
        const auto table = rng_normal<float>(rng, 100, 12, 0.0, 1.0);
        std::vector<double> freqs(100);
        for (std::size_t i = 0; i < 100; ++i)
            freqs[i] = std::pow(static_cast<double>(i + 1), -1.3);
        const auto freq_ct = cluster_rows(table, freqs, 10, ClusterInit::frequent);
        const auto rand_ct = cluster_rows(table, freqs, 10, ClusterInit::random, 999 + s);
        if (freq_ct.objective <= rand_ct.objective) ++wins;
        for (const auto* ct : {&freq_ct, &rand_ct})
            for (std::size_t i = 1; i < ct->objective_trace.size(); ++i)
                if (ct->objective_trace[i] > ct->objective_trace[i - 1] + 1e-9)
                    monotone = false;
    }
    return {wins >= 18 && monotone,
            fmt("frequent <= random on %zu/20 seeds, traces %s", wins,
                monotone ? "monotone" : "NOT MONOTONE")};
}

// ---- 9: jl distances ---------------------------------------------------------

Outcome check_jl() {
    const std::size_t n = 100, d = 1024;
    const double eps = 0.3;
    const std::size_t target = jl_target_dim(n, eps);
    Rng rng(4242);
    const auto table = rng_normal<float>(rng, n, d, 0.0, 1.0);
    const auto pt = jl_project(table, 1, target, 77);

    auto sq_dist = [](const Mat<float>& m, std::size_t a, std::size_t b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double diff = static_cast<double>(m(a, j)) - m(b, j);
            acc += diff * diff;
        }
        return acc;
    };
    std::size_t ok = 0, total = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double orig = sq_dist(table, a, b);
            const double proj = sq_dist(pt.stored, a, b);
            ++total;
            if (proj >= (1.0 - eps) * orig && proj <= (1.0 + eps) * orig) ++ok;
        }
    }
    const double frac = static_cast<double>(ok) / static_cast<double>(total);
    return {frac >= 0.95, fmt("target dim %zu, %.1f%% of %zu pairs within (1+-0.3)", target,
                              frac * 100.0, total)};
}

// ---- 10: bench + checkpoint integrity ----------------------------------------

std::unique_ptr<MiniCtrModel<float>> small_mixed_model(Rng& rng) {
    std::vector<std::unique_ptr<EmbeddingLayer<float>>> tables;
    tables.push_back(build_layer<float>(LayerKind::native, {60, 8, 0.05}, {}, rng));
    tables.push_back(
        build_layer<float>(LayerKind::frobenius, {80, 8, 0.05}, FrobeniusConfig{2, 2}, rng));
    return std::make_unique<MiniCtrModel<float>>(2, MlpConfig{12, 6}, std::move(tables), rng);
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) return {};
    std::vector<unsigned char> buf;
    unsigned char chunk[4096];
    std::size_t got = 0;
    while ((got = std::fread(chunk, 1, sizeof(chunk), f)) > 0)
        buf.insert(buf.end(), chunk, chunk + got);
    std::fclose(f);
    return buf;
}

Outcome check_bench_integrity() {
    Rng rng(8);
    auto model = small_mixed_model(rng);

    BenchConfig bcfg;
    bcfg.batch_sizes = {32, 128};
    bcfg.iters = 12;
    bcfg.warmup = 3;
    const auto report = bench_model(*model, bcfg, "mixed");
    bool identity = !report.records.empty();
    for (const auto& rec : report.records) {
        if (!rec.error.empty()) continue;
        const double expect = static_cast<double>(rec.batch_size) / rec.mean_latency_seconds;
        if (std::abs(rec.throughput_samples_per_second - expect) >
            1e-12 * std::max(1.0, expect))
            identity = false;
    }

    CheckpointMeta meta;
    meta.variant_tag = "mixed";
    meta.dataset_json = "{}";
    const std::string a = "/tmp/cemb_accept_a.ckpt";
    const std::string b = "/tmp/cemb_accept_b.ckpt";
    save_checkpoint(*model, meta, nullptr, a);
    auto loaded = load_checkpoint(a);
    save_checkpoint(*loaded.model, loaded.meta, nullptr, b);
    const bool bit_exact = !read_file(a).empty() && read_file(a) == read_file(b);
    std::remove(a.c_str());
    std::remove(b.c_str());

    DataConfig dcfg;
    dcfg.n_samples = 20000;
    dcfg.n_dense = 2;
    dcfg.fields = {{200, 1.1}, {50, 1.0}};
    dcfg.seed = 6;
    const auto ds = generate_dataset(dcfg);
    TrainConfig tcfg;
    tcfg.epochs = 1;
    tcfg.batch_size = 512;
    tcfg.opt.learning_rate = 0.05;
    const std::vector<VariantSpec> variants{
        {"native", LayerKind::native, 0, 0, 0},
        {"frobenius", LayerKind::frobenius, 2, 2, 0},
    };
    const std::vector<std::uint64_t> seeds{1};
    const auto csv1 = parity_csv(
        parity_experiment<float>(ds, variants, tcfg, MlpConfig{16, 8}, 8, 0.05, seeds));
    const auto csv2 = parity_csv(
        parity_experiment<float>(ds, variants, tcfg, MlpConfig{16, 8}, 8, 0.05, seeds));
    const bool rerun_identical = csv1 == csv2 && !csv1.empty();

    return {identity && bit_exact && rerun_identical,
            fmt("throughput identity %s, checkpoint bytes %s, rerun csv %s",
                identity ? "ok" : "BROKEN", bit_exact ? "identical" : "DIFFER",
                rerun_identical ? "identical" : "DIFFER")};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradients match central differences", check_gradients},
        {"lookup equals naive reconstruction", check_oracles},
        {"factorized size accounting", check_sizes},
        {"init hits the target moments", check_init},
        {"accuracy parity at 2% of the bytes", check_parity},
        {"capacity heuristic ladder", check_heuristic},
        {"int4 kmeans beats minmax", check_quantization},
        {"frequency-aware clustering wins", check_clustering},
        {"jl distance preservation", check_jl},
        {"bench identity and checkpoint integrity", check_bench_integrity},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (!out.pass) ++failures;
        std::printf("[%2zu] %s  %s (%s)\n", i + 1, out.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
