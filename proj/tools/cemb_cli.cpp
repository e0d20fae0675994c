// cemb_cli.cpp
// Command-line front end: train, compare, bench, compress, recommend.
// Errors from the library surface as `error: <CODE>: <message>` on stderr
// with a nonzero exit. CEMB_DETERMINISTIC=1 forces single-worker benchmarks
// with a fixed seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cemb/cemb.hpp"

using json = nlohmann::json;

namespace {

bool deterministic_mode() {
    const char* env = std::getenv("CEMB_DETERMINISTIC");
    return env != nullptr && env[0] != '\0' && std::string(env) != "0";
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cemb::io_error("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw cemb::config_error("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

cemb::DataConfig parse_data_config(const json& j) {
    cemb::DataConfig cfg;
    try {
        cfg.n_samples = j.at("n_samples").get<std::size_t>();
        cfg.n_dense = j.value("n_dense", std::size_t{4});
        for (const auto& f : j.at("fields")) {
            cemb::FieldSpec fs;
            fs.cardinality = f.at("cardinality").get<std::size_t>();
            fs.zipf_s = f.value("zipf_s", 1.1);
            cfg.fields.push_back(fs);
        }
        cfg.val_fraction = j.value("val_fraction", 0.1);
        cfg.rule_scale = j.value("rule_scale", 10.0);
        cfg.seed = j.value("seed", std::uint64_t{1});
    } catch (const json::exception& e) {
        throw cemb::config_error(std::string("dataset config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

cemb::VariantSpec parse_variant(const json& j) {
    cemb::VariantSpec v;
    try {
        v.kind = cemb::parse_kind(j.at("kind").get<std::string>());
        v.r = j.value("r", std::size_t{0});
        v.p = j.value("p", std::size_t{0});
        v.tt_rank = j.value("tt_rank", std::size_t{0});
        v.tag = j.value("tag", std::string{});
    } catch (const json::exception& e) {
        throw cemb::config_error(std::string("variant config: ") + e.what());
    }
    if (v.tag.empty()) {
        v.tag = cemb::kind_name(v.kind);
        if (v.kind == cemb::LayerKind::lowrank) v.tag += " r" + std::to_string(v.r);
        if (v.kind == cemb::LayerKind::frobenius)
            v.tag += " r" + std::to_string(v.r) + " p" + std::to_string(v.p);
    }
    if (v.kind == cemb::LayerKind::lowrank && v.r == 0)
        throw cemb::config_error("lowrank variant needs r >= 1");
    if (v.kind == cemb::LayerKind::frobenius && (v.r == 0 || v.p == 0))
        throw cemb::config_error("frobenius variant needs r >= 1 and p >= 1");
    return v;
}

cemb::TrainConfig parse_train_config(const json& j) {
    cemb::TrainConfig cfg;
    try {
        cfg.epochs = j.value("epochs", std::size_t{2});
        cfg.batch_size = j.value("batch_size", std::size_t{1024});
        cfg.opt.kind = cemb::parse_optimizer(j.value("optimizer", std::string{"adagrad"}));
        cfg.opt.learning_rate = j.value("learning_rate", 0.05);
        cfg.opt.epsilon = j.value("epsilon", 1e-8);
        cfg.seed = j.value("seed", std::uint64_t{1});
        cfg.evals_per_epoch = j.value("evals_per_epoch", std::size_t{10});
        cfg.eval_cap = j.value("eval_cap", std::size_t{16384});
        cfg.divergence_loss = j.value("divergence_loss", 50.0);
    } catch (const json::exception& e) {
        throw cemb::config_error(std::string("train config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

struct ModelSection {
    std::size_t d = 16;
    double init_std = 0.01;
    cemb::MlpConfig mlp;
};

ModelSection parse_model_section(const json& j) {
    ModelSection m;
    try {
        m.d = j.value("d", std::size_t{16});
        m.init_std = j.value("init_std", 0.01);
        m.mlp.hidden1 = j.value("hidden1", std::size_t{64});
        m.mlp.hidden2 = j.value("hidden2", std::size_t{32});
    } catch (const json::exception& e) {
        throw cemb::config_error(std::string("model config: ") + e.what());
    }
    return m;
}

cemb::CsvSchema parse_csv_schema(const json& j) {
    cemb::CsvSchema s;
    try {
        s.label = j.at("label").get<std::string>();
        for (const auto& n : j.at("dense")) s.dense.push_back(n.get<std::string>());
        for (const auto& n : j.at("categorical")) s.categorical.push_back(n.get<std::string>());
    } catch (const json::exception& e) {
        throw cemb::config_error(std::string("csv schema: ") + e.what());
    }
    return s;
}

// the dataset section either describes the generator or points at a CSV file
// plus a column schema (inline object or path to a schema JSON file)
cemb::Dataset dataset_from_section(const json& dsec) {
    if (dsec.contains("csv")) {
        if (!dsec.contains("schema"))
            throw cemb::config_error("csv dataset needs a schema (object or file path)");
        const json& sj = dsec.at("schema");
        auto schema = parse_csv_schema(sj.is_string() ? load_json(sj.get<std::string>()) : sj);
        schema.val_fraction = dsec.value("val_fraction", 0.1);
        return cemb::load_csv(dsec.at("csv").get<std::string>(), schema);
    }
    return cemb::generate_dataset(parse_data_config(dsec));
}

// dataset acquisition shared by train/compare: generate or load (optionally
// cached), then apply the frequency threshold
cemb::Dataset acquire_dataset(const json& cfg_root, std::size_t threshold) {
    cemb::Dataset ds;
    const std::string cache = cfg_root.value("dataset_cache", std::string{});
    if (!cache.empty() && std::filesystem::exists(cache)) {
        ds = cemb::load_dataset(cache);
    } else {
        ds = dataset_from_section(cfg_root.at("dataset"));
        if (!cache.empty()) cemb::save_dataset(ds, cache);
    }
    if (threshold > 0) ds = cemb::apply_frequency_threshold(ds, threshold).first;
    return ds;
}

std::string trajectory_csv(const cemb::TrainReport& report) {
    std::string out = "epoch,val_loss,val_auc\n";
    for (const auto& pt : report.trajectory) {
        out += cemb::fmt_double(pt.epoch, 4);
        out += ',';
        out += cemb::fmt_double(pt.loss, 6);
        out += ',';
        out += cemb::fmt_double(pt.auc, 6);
        out += '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw cemb::io_error("cannot open for write: " + path);
    out << content;
    if (!out) throw cemb::io_error("write failed: " + path);
}

int cmd_train(const std::string& config_path, const std::string& out_path,
              std::int64_t seed_override) {
    const json cfg_root = load_json(config_path);
    if (!cfg_root.contains("dataset")) throw cemb::config_error("config needs a dataset section");
    const auto threshold = cfg_root.value("frequency_threshold", std::size_t{0});
    const auto model_sec = parse_model_section(cfg_root.value("model", json::object()));
    auto train_cfg = parse_train_config(cfg_root.value("train", json::object()));
    if (seed_override >= 0) train_cfg.seed = static_cast<std::uint64_t>(seed_override);
    const auto variant = parse_variant(
        cfg_root.value("model", json::object()).value("variant", json{{"kind", "native"}}));

    const auto ds = acquire_dataset(cfg_root, threshold);

    cemb::Rng rng(train_cfg.seed);
    auto model = cemb::build_model<float>(ds, variant, model_sec.d, model_sec.init_std,
                                          model_sec.mlp, rng);
    const auto report = cemb::train(*model, ds, train_cfg);

    const std::string csv_path = cfg_root.value("csv_path", std::string{});
    if (!csv_path.empty()) write_text_file(csv_path, trajectory_csv(report));

    if (!out_path.empty()) {
        cemb::CheckpointMeta meta;
        meta.variant_tag = variant.tag;
        json djson = cfg_root.at("dataset");
        djson["frequency_threshold"] = threshold;
        djson["model_d"] = model_sec.d;
        djson["model_init_std"] = model_sec.init_std;
        meta.dataset_json = djson.dump();
        meta.dataset_fingerprint =
            cemb::fnv1a64(meta.dataset_json.data(), meta.dataset_json.size());
        meta.train_seed = train_cfg.seed;
        cemb::save_checkpoint(*model, meta, nullptr, out_path);
    }

    std::printf("variant=%s\n", variant.tag.c_str());
    std::printf("final_auc=%s\n", cemb::fmt_double(report.final_auc, 6).c_str());
    std::printf("final_val_loss=%s\n", cemb::fmt_double(report.final_loss, 6).c_str());
    std::printf("embedding_mb=%s\n",
                cemb::fmt_double(cemb::bytes_to_mb(report.embedding_bytes), 4).c_str());
    std::printf("train_seconds=%s\n", cemb::fmt_double(report.seconds, 2).c_str());
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& out_path) {
    const json cfg_root = load_json(config_path);
    if (!cfg_root.contains("dataset")) throw cemb::config_error("config needs a dataset section");
    const auto threshold = cfg_root.value("frequency_threshold", std::size_t{0});
    const auto model_sec = parse_model_section(cfg_root.value("model", json::object()));
    const auto train_cfg = parse_train_config(cfg_root.value("train", json::object()));

    std::vector<cemb::VariantSpec> variants;
    if (!cfg_root.contains("variants") || cfg_root.at("variants").empty())
        throw cemb::config_error("config needs a non-empty variants list");
    for (const auto& v : cfg_root.at("variants")) variants.push_back(parse_variant(v));

    std::vector<std::uint64_t> seeds;
    if (cfg_root.contains("seeds"))
        for (const auto& s : cfg_root.at("seeds")) seeds.push_back(s.get<std::uint64_t>());
    if (seeds.empty()) seeds.push_back(train_cfg.seed);

    const auto ds = acquire_dataset(cfg_root, threshold);
    const auto rows = cemb::parity_experiment<float>(ds, variants, train_cfg, model_sec.mlp,
                                                     model_sec.d, model_sec.init_std, seeds);
    const std::string csv = cemb::parity_csv(rows);
    if (!out_path.empty()) write_text_file(out_path, csv);

    // aligned table on stdout
    std::printf("%-24s %4s %4s %12s %7s %6s %9s\n", "layer", "r", "p", "size_mb", "epochs",
                "seed", "auc");
    for (const auto& row : rows) {
        const bool has_r =
            row.kind == cemb::LayerKind::lowrank || row.kind == cemb::LayerKind::frobenius;
        const bool has_p = row.kind == cemb::LayerKind::frobenius;
        std::printf("%-24s %4s %4s %12s %7zu %6llu %9s\n", row.tag.c_str(),
                    has_r ? std::to_string(row.r).c_str() : "-",
                    has_p ? std::to_string(row.p).c_str() : "-",
                    cemb::fmt_double(row.size_mb, 4).c_str(), row.epochs,
                    static_cast<unsigned long long>(row.seed),
                    cemb::fmt_double(row.auc, 6).c_str());
    }
    return 0;
}

int cmd_recommend(std::size_t n, std::size_t d, std::size_t capacity,
                  const std::vector<std::size_t>& ranks) {
    auto rec = cemb::recommend_pairs(n, d, capacity,
                                     ranks.empty() ? std::vector<std::size_t>{8, 16, 24, 32}
                                                   : ranks);
    json out;
    out["candidates"] = json::array();
    for (const auto& c : rec.candidates)
        out["candidates"].push_back(
            {{"r", c.r}, {"p", c.p}, {"predicted_bytes", c.predicted_bytes}});
    if (!rec.candidates.empty()) {
        const auto def = cemb::select_default(rec.candidates);
        out["default"] = {{"r", def.r}, {"p", def.p}, {"predicted_bytes", def.predicted_bytes}};
    } else {
        out["default"] = nullptr;
    }
    out["warning"] = rec.warning;
    if (rec.warning) out["note"] = rec.note;
    std::printf("%s\n", out.dump(2).c_str());
    return rec.warning ? 3 : 0;
}

int cmd_bench(const std::string& ckpt_path, const std::string& batches_arg, std::size_t iters,
              std::size_t workers, double zipf_s, std::uint64_t seed,
              const std::string& out_path, const std::string& json_path) {
    auto loaded = cemb::load_checkpoint(ckpt_path);

    cemb::BenchConfig cfg;
    std::stringstream ss(batches_arg);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.batch_sizes.push_back(std::stoull(tok));
    cfg.iters = iters;
    cfg.workers = workers;
    cfg.zipf_s = zipf_s;
    cfg.seed = seed;
    if (deterministic_mode()) {
        cfg.workers = 1;
        cfg.seed = 1;
    }

    const auto report = cemb::bench_model(*loaded.model, cfg, loaded.meta.variant_tag);
    const std::string csv = cemb::bench_csv(report);
    if (!out_path.empty())
        write_text_file(out_path, csv);
    else
        std::fputs(csv.c_str(), stdout);

    if (!json_path.empty()) {
        json j;
        j["cpu_model"] = report.cpu_model;
        j["workers"] = report.workers;
        j["records"] = json::array();
        for (const auto& r : report.records) {
            json rec = {{"batch_size", r.batch_size},
                        {"layer_kind", r.layer_kind},
                        {"variant_tag", r.variant_tag}};
            if (r.error.empty()) {
                rec["mean_latency_seconds"] = r.mean_latency_seconds;
                rec["p99_latency_seconds"] = r.p99_latency_seconds;
                rec["throughput_samples_per_second"] = r.throughput_samples_per_second;
            } else {
                rec["error"] = r.error;
            }
            j["records"].push_back(rec);
        }
        write_text_file(json_path, j.dump(2) + "\n");
    }
    return 0;
}

int cmd_compress(const std::string& ckpt_path, const std::string& method_arg,
                 const std::string& out_path, const std::string& report_path,
                 double cluster_k_frac, std::size_t jl_segments, std::size_t jl_target,
                 std::uint64_t seed) {
    const auto method = cemb::parse_compress_method(method_arg);
    auto loaded = cemb::load_checkpoint(ckpt_path);
    auto& model = *loaded.model;

    // the stored dataset recipe drives eval and cluster frequencies
    if (loaded.meta.dataset_json.empty())
        throw cemb::config_error("checkpoint carries no dataset recipe; cannot evaluate");
    const json djson = json::parse(loaded.meta.dataset_json);
    const auto threshold = djson.value("frequency_threshold", std::size_t{0});
    cemb::Dataset ds = dataset_from_section(djson);
    if (threshold > 0) ds = cemb::apply_frequency_threshold(ds, threshold).first;

    std::vector<std::size_t> val_rows(ds.val_rows());
    std::iota(val_rows.begin(), val_rows.end(), ds.train_rows);
    const auto before = cemb::evaluate(model, ds, val_rows);
    const std::size_t bytes_before = model.embedding_param_bytes();

    json tables = json::array();
    for (std::size_t t = 0; t < model.table_count(); ++t) {
        const auto& layer = model.table(t);
        const auto spec = layer.spec();

        // materialize, compress, re-wrap
        cemb::Mat<float> full(spec.n, spec.d);
        std::vector<std::uint32_t> ids(spec.n);
        std::iota(ids.begin(), ids.end(), 0u);
        layer.lookup_into(ids, full.data.data(), spec.d);

        cemb::CompressedLayer::Payload payload;
        if (method == cemb::CompressMethod::int4_minmax)
            payload = cemb::quantize_int4(full, cemb::QuantStrategy::minmax);
        else if (method == cemb::CompressMethod::int4_kmeans)
            payload = cemb::quantize_int4(full, cemb::QuantStrategy::kmeans);
        else if (method == cemb::CompressMethod::cluster) {
            const auto counts = cemb::id_frequencies(ds, t);
            std::vector<double> freqs(counts.begin(), counts.end());
            auto k = static_cast<std::size_t>(
                std::ceil(cluster_k_frac * static_cast<double>(spec.n)));
            k = std::clamp<std::size_t>(k, 1, spec.n);
            payload = cemb::cluster_rows(full, freqs, k, cemb::ClusterInit::frequent, seed);
        } else {
            std::size_t segs = jl_segments == 0 ? 1 : jl_segments;
            if (spec.d % segs != 0)
                throw cemb::config_error("jl segments must divide d=" + std::to_string(spec.d));
            std::size_t target = jl_target == 0 ? std::max<std::size_t>(1, spec.d / segs / 2)
                                                : jl_target;
            payload = cemb::jl_project(full, segs, target, seed + t);
        }

        auto wrapped = std::make_unique<cemb::CompressedLayer>(spec, layer.kind(), method,
                                                               std::move(payload));
        cemb::Mat<float> approx(spec.n, spec.d);
        wrapped->lookup_into(ids, approx.data.data(), spec.d);
        const double loss = cemb::normalized_l2_loss(full, approx);

        tables.push_back({{"table", t},
                          {"rows", spec.n},
                          {"dim", spec.d},
                          {"bytes_before", layer.stored_bytes()},
                          {"bytes_after", wrapped->stored_bytes()},
                          {"normalized_l2_loss", loss}});
        model.replace_table(t, std::move(wrapped));
    }

    const auto after = cemb::evaluate(model, ds, val_rows);
    const std::size_t bytes_after = model.embedding_param_bytes();

    if (!out_path.empty()) {
        cemb::CheckpointMeta meta = loaded.meta;
        meta.variant_tag += " + " + std::string(cemb::compress_method_name(method));
        cemb::save_checkpoint(model, meta, nullptr, out_path);
    }

    json report;
    report["method"] = cemb::compress_method_name(method);
    report["bytes_before"] = bytes_before;
    report["bytes_after"] = bytes_after;
    report["val_auc_before"] = before.auc;
    report["val_auc_after"] = after.auc;
    report["tables"] = tables;
    const std::string text = report.dump(2) + "\n";
    if (!report_path.empty())
        write_text_file(report_path, text);
    else
        std::fputs(text.c_str(), stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"decomposed embedding layers: train, compare, bench, compress"};
    app.require_subcommand(1);

    std::string config_path, out_path, ckpt_path, report_path, json_path;
    std::string batches_arg = "1024,4096,16384";
    std::string method_arg;
    std::int64_t seed_override = -1;
    std::size_t iters = 50, workers = 1, n = 0, d = 0, capacity = 32;
    std::size_t jl_segments = 0, jl_target = 0;
    double zipf_s = 1.05, cluster_k_frac = 0.1;
    std::uint64_t seed = 1;
    std::vector<std::size_t> ranks;

    auto* train_cmd = app.add_subcommand("train", "train one variant, write a checkpoint");
    train_cmd->add_option("--config", config_path, "JSON config")->required();
    train_cmd->add_option("--out", out_path, "checkpoint path");
    train_cmd->add_option("--seed", seed_override, "override train seed");

    auto* compare_cmd = app.add_subcommand("compare", "parity table across variants");
    compare_cmd->add_option("--config", config_path, "JSON config")->required();
    compare_cmd->add_option("--out", out_path, "CSV output path");

    auto* bench_cmd = app.add_subcommand("bench", "latency/throughput sweep");
    bench_cmd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    bench_cmd->add_option("--batches", batches_arg, "comma-separated batch sizes");
    bench_cmd->add_option("--iters", iters, "timed iterations per batch size");
    bench_cmd->add_option("--workers", workers, "concurrent reader workers");
    bench_cmd->add_option("--zipf-s", zipf_s, "index distribution skew");
    bench_cmd->add_option("--seed", seed, "index stream seed");
    bench_cmd->add_option("--out", out_path, "CSV output path (default stdout)");
    bench_cmd->add_option("--json", json_path, "JSON report path");

    auto* compress_cmd = app.add_subcommand("compress", "post-training table compression");
    compress_cmd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    compress_cmd->add_option("--method", method_arg, "int4-minmax|int4-kmeans|cluster|jl")
        ->required();
    compress_cmd->add_option("--out", out_path, "compressed checkpoint path");
    compress_cmd->add_option("--report", report_path, "JSON report path (default stdout)");
    compress_cmd->add_option("--cluster-k-frac", cluster_k_frac, "centroids as fraction of rows");
    compress_cmd->add_option("--jl-segments", jl_segments, "segments (must divide d)");
    compress_cmd->add_option("--jl-target", jl_target, "target dim per segment");
    compress_cmd->add_option("--seed", seed, "compressor seed");

    auto* rec_cmd = app.add_subcommand("recommend", "candidate (r, p) pairs for a table");
    rec_cmd->add_option("--n", n, "table cardinality")->required();
    rec_cmd->add_option("--d", d, "embedding dimension")->required();
    rec_cmd->add_option("--capacity", capacity, "budget C");
    rec_cmd->add_option("--ranks", ranks, "allowed ranks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return cmd_train(config_path, out_path, seed_override);
        if (compare_cmd->parsed()) return cmd_compare(config_path, out_path);
        if (bench_cmd->parsed())
            return cmd_bench(ckpt_path, batches_arg, iters, workers, zipf_s, seed, out_path,
                             json_path);
        if (compress_cmd->parsed())
            return cmd_compress(ckpt_path, method_arg, out_path, report_path, cluster_k_frac,
                                jl_segments, jl_target, seed);
        if (rec_cmd->parsed()) return cmd_recommend(n, d, capacity, ranks);
    } catch (const cemb::error& e) {
        std::fprintf(stderr, "error: %s: %s\n", e.code().c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: E_INTERNAL: %s\n", e.what());
        return 1;
    }
    return 0;
}
