// train.hpp
// Mini-batch training over a Dataset, periodic validation, and the parity
// experiment: the same data and schedule run across layer variants and
// seeds so accuracy differences isolate the embedding parameterization.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "cemb/csv.hpp"
#include "cemb/datagen.hpp"
#include "cemb/error.hpp"
#include "cemb/layers.hpp"
#include "cemb/metrics.hpp"
#include "cemb/model.hpp"
#include "cemb/optim.hpp"
#include "cemb/rng.hpp"

namespace cemb {

struct TrainConfig {
    std::size_t epochs = 2;
    std::size_t batch_size = 1024;
    OptimizerConfig opt;
    std::uint64_t seed = 1;
    std::size_t evals_per_epoch = 10;
    std::size_t eval_cap = 16384;      // mid-epoch evals use at most this many val rows
    double divergence_loss = 50.0;     // batch loss above this aborts the run

    void validate() const {
        if (epochs < 1) throw param_error("epochs must be >= 1");
        if (batch_size < 1) throw param_error("batch_size must be >= 1");
        if (evals_per_epoch < 1) throw param_error("evals_per_epoch must be >= 1");
        if (eval_cap < 1) throw param_error("eval_cap must be >= 1");
        opt.validate();
    }
};

struct EvalPoint {
    double epoch = 0.0; // fractional position in the schedule
    double loss = 0.0;
    double auc = 0.0;
};

struct TrainReport {
    std::vector<EvalPoint> trajectory;
    double final_loss = 0.0;   // full validation split
    double final_auc = 0.0;
    double mean_train_loss = 0.0; // last epoch
    std::size_t embedding_bytes = 0;
    double seconds = 0.0;
};

struct EvalResult {
    double loss = 0.0;
    double auc = 0.0;
};

template <class T>
EvalResult evaluate(const MiniCtrModel<T>& model, const Dataset& ds,
                    std::span<const std::size_t> rows, std::size_t batch_size = 4096) {
    if (rows.empty()) throw param_error("evaluate: empty row set");
    std::vector<double> scores;
    scores.reserve(rows.size());
    std::vector<float> labels;
    labels.reserve(rows.size());
    double loss = 0.0;
    std::vector<double> logits;
    for (std::size_t start = 0; start < rows.size(); start += batch_size) {
        const std::size_t stop = std::min(rows.size(), start + batch_size);
        auto batch = make_batch<T>(ds, rows.subspan(start, stop - start));
        model.logits(batch, logits);
        for (std::size_t b = 0; b < logits.size(); ++b) {
            loss += bce_loss(logits[b], batch.labels[b]);
            scores.push_back(logits[b]);
            labels.push_back(batch.labels[b]);
        }
    }
    return {loss / static_cast<double>(rows.size()), auc(scores, labels)};
}

template <class T>
TrainReport train(MiniCtrModel<T>& model, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (ds.val_rows() < 2) throw param_error("train: validation split too small");
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(ds.train_rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> val_rows(ds.val_rows());
    std::iota(val_rows.begin(), val_rows.end(), ds.train_rows);
    const std::size_t eval_len = std::min(cfg.eval_cap, val_rows.size());
    const std::span<const std::size_t> eval_rows{val_rows.data(), eval_len};

    Rng rng(cfg.seed);
    ModelOptState<T> state;
    TrainReport report;
    report.embedding_bytes = model.embedding_param_bytes();

    const std::size_t batches =
        (ds.train_rows + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t eval_every = std::max<std::size_t>(1, batches / cfg.evals_per_epoch);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates reshuffle per epoch
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double epoch_loss = 0.0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            const std::size_t start = bi * cfg.batch_size;
            const std::size_t stop = std::min(ds.train_rows, start + cfg.batch_size);
            auto batch = make_batch<T>(
                ds, std::span<const std::size_t>{order.data() + start, stop - start});
            const double loss = model.train_batch(batch, cfg.opt, state);
            if (!std::isfinite(loss) || loss > cfg.divergence_loss)
                throw divergence_error("training diverged at epoch " + std::to_string(epoch) +
                                       " batch " + std::to_string(bi) + ": loss " +
                                       fmt_double(loss, 3));
            epoch_loss += loss * static_cast<double>(stop - start);

            if ((bi + 1) % eval_every == 0 || bi + 1 == batches) {
                const auto ev = evaluate(model, ds, eval_rows);
                report.trajectory.push_back(
                    {static_cast<double>(epoch) +
                         static_cast<double>(bi + 1) / static_cast<double>(batches),
                     ev.loss, ev.auc});
            }
        }
        report.mean_train_loss = epoch_loss / static_cast<double>(ds.train_rows);
    }

    const auto final_ev = evaluate(model, ds, val_rows);
    report.final_loss = final_ev.loss;
    report.final_auc = final_ev.auc;
    report.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

// A named layer parameterization applied to every categorical field.
struct VariantSpec {
    std::string tag;
    LayerKind kind = LayerKind::native;
    std::size_t r = 0;     // lowrank / frobenius
    std::size_t p = 0;     // frobenius
    std::size_t tt_rank = 0; // tensor_train (auto factorization)
};

inline LayerConfig variant_layer_config(const VariantSpec& v, std::size_t n, std::size_t d) {
    switch (v.kind) {
        case LayerKind::native:
        case LayerKind::quotient_remainder:
            return std::monostate{};
        case LayerKind::lowrank:
            return LowRankConfig{v.r};
        case LayerKind::frobenius:
            return FrobeniusConfig{v.r, v.p};
        case LayerKind::memcom:
            return MemComConfig{0};
        case LayerKind::tensor_train:
            return tt_auto_config(n, d, v.tt_rank == 0 ? 4 : v.tt_rank);
    }
    throw config_error("variant_layer_config: bad kind");
}

template <class T>
std::unique_ptr<MiniCtrModel<T>> build_model(const Dataset& ds, const VariantSpec& variant,
                                             std::size_t d, double init_std,
                                             const MlpConfig& mlp, Rng& rng) {
    std::vector<std::unique_ptr<EmbeddingLayer<T>>> tables;
    for (auto n : ds.cardinalities) {
        EmbeddingSpec spec{n, d, init_std};
        tables.push_back(
            build_layer<T>(variant.kind, spec, variant_layer_config(variant, n, d), rng));
    }
    return std::make_unique<MiniCtrModel<T>>(ds.n_dense, mlp, std::move(tables), rng);
}

struct ParityRow {
    std::string tag;
    LayerKind kind = LayerKind::native;
    std::size_t r = 0;
    std::size_t p = 0;
    double size_mb = 0.0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    double auc = 0.0;
};

inline double bytes_to_mb(std::size_t bytes) {
    return static_cast<double>(bytes) / (1024.0 * 1024.0);
}

// Trains every variant with every seed on one shared dataset. The seed
// drives model init and batch shuffling, so equal seeds see equal batch
// order across variants.
template <class T = float>
std::vector<ParityRow> parity_experiment(const Dataset& ds,
                                         const std::vector<VariantSpec>& variants,
                                         const TrainConfig& base_cfg, const MlpConfig& mlp,
                                         std::size_t d, double init_std,
                                         std::span<const std::uint64_t> seeds) {
    if (variants.empty()) throw param_error("parity_experiment: no variants");
    if (seeds.empty()) throw param_error("parity_experiment: no seeds");
    std::vector<ParityRow> rows;
    for (const auto& variant : variants) {
        for (const auto seed : seeds) {
            Rng rng(seed);
            auto model = build_model<T>(ds, variant, d, init_std, mlp, rng);
            TrainConfig cfg = base_cfg;
            cfg.seed = seed;
            const auto report = train(*model, ds, cfg);
            ParityRow row;
            row.tag = variant.tag.empty() ? kind_name(variant.kind) : variant.tag;
            row.kind = variant.kind;
            row.r = variant.r;
            row.p = variant.p;
            row.size_mb = bytes_to_mb(model->embedding_param_bytes());
            row.epochs = cfg.epochs;
            row.seed = seed;
            row.auc = report.final_auc;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline std::string parity_csv(const std::vector<ParityRow>& rows) {
    std::string out = "layer,r,p,size_mb,epochs,seed,auc\n";
    for (const auto& row : rows) {
        out += row.tag;
        out += ',';
        const bool has_r = row.kind == LayerKind::lowrank || row.kind == LayerKind::frobenius;
        const bool has_p = row.kind == LayerKind::frobenius;
        if (has_r) out += std::to_string(row.r);
        out += ',';
        if (has_p) out += std::to_string(row.p);
        out += ',';
        out += fmt_double(row.size_mb, 4);
        out += ',';
        out += std::to_string(row.epochs);
        out += ',';
        out += std::to_string(row.seed);
        out += ',';
        out += fmt_double(row.auc, 6);
        out += '\n';
    }
    return out;
}

} // namespace cemb
