// bench.hpp
// Batch-size sweep over lookup+forward. Zipf-distributed ids are generated
// before the timed region; 10 warm-up iterations are discarded; mean and p99
// come from per-iteration wall times, and throughput is batch/mean by
// definition. With several workers each thread runs its own iterations
// against the frozen model and the per-iteration latencies are pooled.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "cemb/csv.hpp"
#include "cemb/datagen.hpp"
#include "cemb/error.hpp"
#include "cemb/model.hpp"
#include "cemb/rng.hpp"

namespace cemb {

struct BenchConfig {
    std::vector<std::size_t> batch_sizes;
    std::size_t iters = 50;
    std::size_t warmup = 10;
    std::size_t workers = 1;
    double zipf_s = 1.05;
    std::uint64_t seed = 1;
    std::size_t memory_budget_bytes = std::size_t{2} << 30;

    void validate() const {
        if (batch_sizes.empty()) throw param_error("bench: empty batch list");
        for (auto b : batch_sizes)
            if (b < 1) throw param_error("bench: batch sizes must be >= 1");
        if (iters < 1) throw param_error("bench: iters must be >= 1");
        if (workers < 1) throw param_error("bench: workers must be >= 1");
    }
};

struct BenchRecord {
    std::size_t batch_size = 0;
    double mean_latency_seconds = 0.0;
    double p99_latency_seconds = 0.0;
    double throughput_samples_per_second = 0.0;
    std::string layer_kind;
    std::string variant_tag;
    std::string error; // nonempty: row skipped, run continued
};

struct BenchReport {
    std::vector<BenchRecord> records;
    std::string cpu_model;
    std::size_t workers = 1;
};

inline std::string detect_cpu_model() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find("model name");
        if (pos != std::string::npos) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                auto name = line.substr(colon + 1);
                const auto start = name.find_first_not_of(" \t");
                return start == std::string::npos ? name : name.substr(start);
            }
        }
    }
    return "unknown";
}

namespace detail {

// rough per-worker forward footprint, used only for the budget guard
inline std::size_t bench_batch_bytes(const MiniCtrModel<float>& model, std::size_t batch) {
    const std::size_t width = model.input_dim() + model.mlp_config().hidden1 * 2 +
                              model.mlp_config().hidden2 * 2 + 2;
    const std::size_t ids = model.table_count() * sizeof(std::uint32_t);
    return batch * (width * sizeof(float) + ids);
}

} // namespace detail

template <class T>
BenchReport bench_model(const MiniCtrModel<T>& model, const BenchConfig& cfg,
                        const std::string& variant_tag) {
    cfg.validate();
    BenchReport report;
    report.cpu_model = detect_cpu_model();
    report.workers = cfg.workers;

    std::string kinds;
    for (std::size_t t = 0; t < model.table_count(); ++t) {
        if (t > 0 && model.table(t).kind() != model.table(0).kind()) {
            kinds = "mixed";
            break;
        }
    }
    if (kinds.empty()) kinds = kind_name(model.table(0).kind());

    for (const auto batch : cfg.batch_sizes) {
        BenchRecord rec;
        rec.batch_size = batch;
        rec.layer_kind = kinds;
        rec.variant_tag = variant_tag;

        if (detail::bench_batch_bytes(model, batch) * cfg.workers > cfg.memory_budget_bytes) {
            rec.error = "memory budget exceeded";
            report.records.push_back(std::move(rec));
            continue;
        }

        // id streams are drawn up front; the timed region is lookup+forward
        std::vector<ZipfSampler> samplers;
        for (std::size_t t = 0; t < model.table_count(); ++t)
            samplers.emplace_back(model.table(t).spec().n, cfg.zipf_s);

        const std::size_t total_iters = cfg.warmup + cfg.iters;
        std::vector<std::vector<double>> worker_lat(cfg.workers);

        auto run_worker = [&](std::size_t wi) {
            Rng rng(cfg.seed + wi * 7919);
            Batch<T> b;
            b.dense = Mat<T>(batch, model.n_dense());
            for (auto& v : b.dense.data) v = static_cast<T>(rng.normal());
            b.labels.assign(batch, 0.0f);
            b.idx.resize(model.table_count());
            std::vector<std::vector<std::uint32_t>> streams(model.table_count());
            for (std::size_t t = 0; t < model.table_count(); ++t) {
                streams[t].resize(total_iters * batch);
                for (auto& id : streams[t]) id = samplers[t].draw(rng);
            }
            std::vector<double> lat;
            lat.reserve(cfg.iters);
            std::vector<double> logits;
            for (std::size_t it = 0; it < total_iters; ++it) {
                for (std::size_t t = 0; t < model.table_count(); ++t)
                    b.idx[t].assign(streams[t].begin() + static_cast<std::ptrdiff_t>(it * batch),
                                    streams[t].begin() +
                                        static_cast<std::ptrdiff_t>((it + 1) * batch));
                const auto t0 = std::chrono::steady_clock::now();
                model.logits(b, logits);
                const auto t1 = std::chrono::steady_clock::now();
                if (it >= cfg.warmup)
                    lat.push_back(std::chrono::duration<double>(t1 - t0).count());
            }
            worker_lat[wi] = std::move(lat);
        };

        if (cfg.workers == 1) {
            run_worker(0);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t wi = 0; wi < cfg.workers; ++wi)
                threads.emplace_back(run_worker, wi);
            for (auto& th : threads) th.join();
        }

        std::vector<double> all;
        for (auto& wl : worker_lat) all.insert(all.end(), wl.begin(), wl.end());
        std::sort(all.begin(), all.end());
        double sum = 0.0;
        for (auto v : all) sum += v;
        rec.mean_latency_seconds = sum / static_cast<double>(all.size());
        const auto p99_pos = static_cast<std::size_t>(
            std::ceil(0.99 * static_cast<double>(all.size())));
        rec.p99_latency_seconds = all[std::max<std::size_t>(p99_pos, 1) - 1];
        rec.throughput_samples_per_second =
            static_cast<double>(batch) / rec.mean_latency_seconds;
        report.records.push_back(std::move(rec));
    }
    return report;
}

inline std::string bench_csv(const BenchReport& report) {
    std::string out =
        "batch_size,mean_latency_seconds,p99_latency_seconds,"
        "throughput_samples_per_second,layer_kind,variant_tag,error\n";
    for (const auto& r : report.records) {
        out += std::to_string(r.batch_size);
        out += ',';
        if (r.error.empty()) {
            out += fmt_sci(r.mean_latency_seconds, 6);
            out += ',';
            out += fmt_sci(r.p99_latency_seconds, 6);
            out += ',';
            out += fmt_double(r.throughput_samples_per_second, 3);
        } else {
            out += ",,";
        }
        out += ',';
        out += r.layer_kind;
        out += ',';
        out += r.variant_tag;
        out += ',';
        out += r.error;
        out += '\n';
    }
    return out;
}

} // namespace cemb
