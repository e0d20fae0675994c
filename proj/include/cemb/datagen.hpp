// datagen.hpp
// Synthetic recommender-style dataset: a few dense features plus several
// high-cardinality categorical fields with Zipf-distributed ids, and a
// planted labeling rule so a well-fit model has measurable headroom.
//
// Labels: each field f gets a hidden score table h_f with i.i.d. N(0,1)
// entries, dense features get a hidden weight vector w. For a sample,
//   z = (sum_f h_f[id_f] + <w, dense>) / sqrt(F + n_dense)
//   label ~ Bernoulli(sigmoid(rule_scale * z))
// An oracle that knows z scores AUC around 0.98 at the default scale, so the
// floor of 0.95 holds with margin across seeds.
//
// Rows [0, train_rows) are the training split, the rest validation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cemb/error.hpp"
#include "cemb/matrix.hpp"
#include "cemb/model.hpp"
#include "cemb/rng.hpp"
#include "cemb/serialize.hpp"

namespace cemb {

struct FieldSpec {
    std::size_t cardinality = 0;
    double zipf_s = 1.1;
};

struct DataConfig {
    std::size_t n_samples = 0;
    std::size_t n_dense = 4;
    std::vector<FieldSpec> fields;
    double val_fraction = 0.1;
    double rule_scale = 10.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_samples < 2) throw param_error("n_samples must be >= 2");
        if (fields.empty()) throw param_error("need at least one categorical field");
        for (const auto& f : fields) {
            if (f.cardinality < 1) throw param_error("field cardinality must be >= 1");
            if (f.zipf_s < 0.0) throw param_error("zipf_s must be >= 0");
        }
        if (val_fraction <= 0.0 || val_fraction >= 1.0)
            throw param_error("val_fraction must be in (0, 1)");
        if (rule_scale < 0.0) throw param_error("rule_scale must be >= 0");
    }
};

struct Dataset {
    std::size_t n_dense = 0;
    std::vector<std::size_t> cardinalities;
    Mat<float> dense;                           // n_samples x n_dense
    std::vector<std::vector<std::uint32_t>> ids; // per field, length n_samples
    std::vector<float> labels;
    std::vector<double> oracle; // planted z per row; empty for loaded data
    std::size_t train_rows = 0;

    std::size_t rows() const { return labels.size(); }
    std::size_t val_rows() const { return rows() - train_rows; }
    std::size_t field_count() const { return cardinalities.size(); }
};

// Inverse-CDF sampler over ranks 0..n-1 with weight (j+1)^(-s); rank 0 is
// the most frequent id.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double s) {
        if (n < 1) throw param_error("zipf: n must be >= 1");
        cdf_.resize(n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            total += std::pow(static_cast<double>(j + 1), -s);
            cdf_[j] = total;
        }
        for (auto& c : cdf_) c /= total;
        cdf_.back() = 1.0;
    }

    std::uint32_t draw(Rng& rng) const {
        const double u = rng.uniform();
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint32_t>(it - cdf_.begin());
    }

    const std::vector<double>& cdf() const { return cdf_; }

private:
    std::vector<double> cdf_;
};

inline Dataset generate_dataset(const DataConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t n = cfg.n_samples;
    const std::size_t F = cfg.fields.size();

    Dataset ds;
    ds.n_dense = cfg.n_dense;
    ds.dense = Mat<float>(n, cfg.n_dense);
    ds.labels.resize(n);
    ds.oracle.resize(n);
    ds.ids.resize(F);
    for (auto& col : ds.ids) col.resize(n);
    for (const auto& f : cfg.fields) ds.cardinalities.push_back(f.cardinality);

    std::vector<ZipfSampler> samplers;
    samplers.reserve(F);
    for (const auto& f : cfg.fields) samplers.emplace_back(f.cardinality, f.zipf_s);

    // hidden rule parameters
    std::vector<std::vector<double>> h(F);
    for (std::size_t f = 0; f < F; ++f) {
        h[f].resize(cfg.fields[f].cardinality);
        for (auto& v : h[f]) v = rng.normal();
    }
    std::vector<double> w(cfg.n_dense);
    for (auto& v : w) v = rng.normal();

    const double norm = 1.0 / std::sqrt(static_cast<double>(F + cfg.n_dense));
    for (std::size_t i = 0; i < n; ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < cfg.n_dense; ++j) {
            const double x = rng.normal();
            ds.dense(i, j) = static_cast<float>(x);
            z += w[j] * x;
        }
        for (std::size_t f = 0; f < F; ++f) {
            const std::uint32_t id = samplers[f].draw(rng);
            ds.ids[f][i] = id;
            z += h[f][id];
        }
        z *= norm;
        ds.oracle[i] = z;
        const double p = sigmoid(cfg.rule_scale * z);
        ds.labels[i] = (rng.uniform() < p) ? 1.0f : 0.0f;
    }

    ds.train_rows = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (1.0 - cfg.val_fraction)));
    ds.train_rows = std::clamp<std::size_t>(ds.train_rows, 1, n - 1);
    return ds;
}

// id occurrence counts over the training split only
inline std::vector<std::size_t> id_frequencies(const Dataset& ds, std::size_t field) {
    if (field >= ds.field_count()) throw index_error("id_frequencies: no such field");
    std::vector<std::size_t> counts(ds.cardinalities[field], 0);
    for (std::size_t i = 0; i < ds.train_rows; ++i) ++counts[ds.ids[field][i]];
    return counts;
}

struct FieldRemap {
    std::vector<std::uint32_t> map; // old id -> new id
    std::size_t new_cardinality = 0;
    std::size_t kept = 0;           // survivors; rare ids share id `kept`
    bool identity = false;
};

// Collapses ids seen fewer than `threshold` times in the training split into
// one shared rare id per field. Survivors are renumbered to a dense range
// [0, kept) preserving id order; the rare id is `kept` and the new
// cardinality kept+1. threshold == 0 leaves every field untouched.
inline std::pair<Dataset, std::vector<FieldRemap>> apply_frequency_threshold(
    const Dataset& ds, std::size_t threshold) {
    Dataset out = ds;
    std::vector<FieldRemap> remaps(ds.field_count());
    for (std::size_t f = 0; f < ds.field_count(); ++f) {
        FieldRemap& rm = remaps[f];
        if (threshold == 0) {
            rm.identity = true;
            rm.new_cardinality = ds.cardinalities[f];
            rm.kept = ds.cardinalities[f];
            continue;
        }
        const auto counts = id_frequencies(ds, f);
        rm.map.resize(counts.size());
        std::size_t next = 0;
        for (std::size_t id = 0; id < counts.size(); ++id)
            if (counts[id] >= threshold) rm.map[id] = static_cast<std::uint32_t>(next++);
        rm.kept = next;
        rm.new_cardinality = next + 1; // rare bucket always present
        const auto rare = static_cast<std::uint32_t>(next);
        for (std::size_t id = 0; id < counts.size(); ++id)
            if (counts[id] < threshold) rm.map[id] = rare;
        out.cardinalities[f] = rm.new_cardinality;
        for (auto& id : out.ids[f]) id = rm.map[id];
    }
    return {std::move(out), std::move(remaps)};
}

// CSV ingestion: the schema names the label, dense, and categorical columns;
// the file's header row binds names to positions, so column order is free.
// Categorical strings get ids in order of first appearance (deterministic).
struct CsvSchema {
    std::string label;
    std::vector<std::string> dense;
    std::vector<std::string> categorical;
    double val_fraction = 0.1;

    void validate() const {
        if (label.empty()) throw param_error("csv schema: label column name is empty");
        if (categorical.empty())
            throw param_error("csv schema: need at least one categorical column");
        if (val_fraction <= 0.0 || val_fraction >= 1.0)
            throw param_error("val_fraction must be in (0, 1)");
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) parts.push_back(tok);
    if (!line.empty() && line.back() == ',') parts.emplace_back();
    return parts;
}

} // namespace detail

inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);

    std::string line;
    if (!std::getline(in, line)) throw io_error("no header row in " + path);
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> columns;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (!columns.emplace(header[i], i).second)
            throw config_error("csv schema: duplicate column '" + header[i] + "' in " + path);
    auto resolve = [&](const std::string& name) {
        const auto it = columns.find(name);
        if (it == columns.end())
            throw config_error("csv schema: column '" + name + "' not in " + path);
        return it->second;
    };
    const std::size_t label_col = resolve(schema.label);
    std::vector<std::size_t> dense_cols, cat_cols;
    for (const auto& name : schema.dense) dense_cols.push_back(resolve(name));
    for (const auto& name : schema.categorical) cat_cols.push_back(resolve(name));

    const std::size_t n_dense = dense_cols.size();
    const std::size_t n_cat = cat_cols.size();
    Dataset ds;
    ds.n_dense = n_dense;
    ds.ids.resize(n_cat);
    std::vector<std::map<std::string, std::uint32_t>> dict(n_cat);
    std::vector<float> dense_flat;

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto parts = detail::split_csv_line(line);
        if (parts.size() != header.size())
            throw io_error(path + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(parts.size()));
        auto num = [&](const std::string& s) {
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0')
                throw io_error(path + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
            return v;
        };
        ds.labels.push_back(num(parts[label_col]) > 0.5 ? 1.0f : 0.0f);
        for (const auto col : dense_cols)
            dense_flat.push_back(static_cast<float>(num(parts[col])));
        for (std::size_t c = 0; c < n_cat; ++c) {
            const std::string& key = parts[cat_cols[c]];
            auto [it, inserted] =
                dict[c].emplace(key, static_cast<std::uint32_t>(dict[c].size()));
            ds.ids[c].push_back(it->second);
        }
    }
    if (ds.labels.empty()) throw io_error("no data rows in " + path);

    const std::size_t n = ds.labels.size();
    ds.dense = Mat<float>(n, n_dense);
    std::copy(dense_flat.begin(), dense_flat.end(), ds.dense.data.begin());
    for (std::size_t c = 0; c < n_cat; ++c) ds.cardinalities.push_back(dict[c].size());
    ds.train_rows = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (1.0 - schema.val_fraction)));
    ds.train_rows = std::clamp<std::size_t>(ds.train_rows, 1, n > 1 ? n - 1 : 1);
    return ds;
}

inline constexpr char dataset_magic[4] = {'D', 'S', 'E', 'T'};
inline constexpr std::uint32_t dataset_version = 1;

inline void save_dataset(const Dataset& ds, const std::string& path) {
    BinaryWriter w(path);
    w.bytes(dataset_magic, 4);
    w.pod(dataset_version);
    w.pod(static_cast<std::uint64_t>(ds.rows()));
    w.pod(static_cast<std::uint64_t>(ds.n_dense));
    w.pod(static_cast<std::uint64_t>(ds.train_rows));
    w.pod(static_cast<std::uint64_t>(ds.field_count()));
    for (auto c : ds.cardinalities) w.pod(static_cast<std::uint64_t>(c));
    w.vec(ds.dense.data);
    for (const auto& col : ds.ids) w.vec(col);
    w.vec(ds.labels);
    w.vec(ds.oracle);
    w.finish();
}

inline Dataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, dataset_magic, 4) != 0)
        throw io_error("not a dataset cache file: " + path);
    const auto version = r.pod<std::uint32_t>();
    if (version != dataset_version)
        throw version_error("dataset cache version mismatch: expected " +
                            std::to_string(dataset_version) + ", found " +
                            std::to_string(version));
    Dataset ds;
    const auto n = static_cast<std::size_t>(r.pod<std::uint64_t>());
    ds.n_dense = static_cast<std::size_t>(r.pod<std::uint64_t>());
    ds.train_rows = static_cast<std::size_t>(r.pod<std::uint64_t>());
    const auto F = static_cast<std::size_t>(r.pod<std::uint64_t>());
    for (std::size_t f = 0; f < F; ++f)
        ds.cardinalities.push_back(static_cast<std::size_t>(r.pod<std::uint64_t>()));
    ds.dense = Mat<float>(n, ds.n_dense);
    ds.dense.data = r.vec<float>();
    if (ds.dense.data.size() != n * ds.n_dense)
        throw integrity_error("dense block size mismatch: " + path);
    for (std::size_t f = 0; f < F; ++f) {
        ds.ids.push_back(r.vec<std::uint32_t>());
        if (ds.ids.back().size() != n) throw integrity_error("id column size mismatch: " + path);
    }
    ds.labels = r.vec<float>();
    ds.oracle = r.vec<double>();
    if (ds.labels.size() != n) throw integrity_error("label column size mismatch: " + path);
    if (ds.train_rows < 1 || ds.train_rows >= n)
        throw integrity_error("bad train split: " + path);
    for (std::size_t f = 0; f < F; ++f)
        for (auto id : ds.ids[f])
            if (id >= ds.cardinalities[f])
                throw integrity_error("id out of range for field " + std::to_string(f));
    return ds;
}

// assembles a batch from dataset rows; T is the model scalar type
template <class T>
Batch<T> make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
    Batch<T> batch;
    const std::size_t B = rows.size();
    batch.dense = Mat<T>(B, ds.n_dense);
    batch.labels.resize(B);
    batch.idx.resize(ds.field_count());
    for (auto& col : batch.idx) col.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
        const std::size_t i = rows[b];
        if (i >= ds.rows()) throw index_error("make_batch: row out of range");
        for (std::size_t j = 0; j < ds.n_dense; ++j)
            batch.dense(b, j) = static_cast<T>(ds.dense(i, j));
        for (std::size_t f = 0; f < ds.field_count(); ++f) batch.idx[f][b] = ds.ids[f][i];
        batch.labels[b] = ds.labels[i];
    }
    return batch;
}

} // namespace cemb
