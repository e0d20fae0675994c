// checkpoint.hpp
// Versioned binary container for models: magic "CEMB", little-endian,
// version 1, FNV-1a checksum trailer. Stores the dataset recipe (JSON) and
// its fingerprint, the variant tag, the train seed, model topology, every
// parameter matrix as raw 32-bit floats, optional optimizer state, and
// compressed tables in their native encodings (kind tags 16..19).

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cemb/compressed.hpp"
#include "cemb/error.hpp"
#include "cemb/layers.hpp"
#include "cemb/model.hpp"
#include "cemb/optim.hpp"
#include "cemb/serialize.hpp"

namespace cemb {

inline constexpr char checkpoint_magic[4] = {'C', 'E', 'M', 'B'};
inline constexpr std::uint32_t checkpoint_version = 1;

// stable wire tags; trainable kinds 0..5, compressed payloads 16..19
inline std::uint32_t kind_tag(LayerKind k) { return static_cast<std::uint32_t>(k); }

inline std::uint32_t method_tag(CompressMethod m) {
    switch (m) {
        case CompressMethod::int4_minmax: return 16;
        case CompressMethod::int4_kmeans: return 17;
        case CompressMethod::cluster: return 18;
        case CompressMethod::jl: return 19;
    }
    throw config_error("bad compress method");
}

struct CheckpointMeta {
    std::string variant_tag;
    std::string dataset_json;
    std::uint64_t dataset_fingerprint = 0;
    std::uint64_t train_seed = 0;
};

namespace detail {

inline void write_mat(BinaryWriter& w, const Mat<float>& m) {
    w.pod(static_cast<std::uint64_t>(m.rows));
    w.pod(static_cast<std::uint64_t>(m.cols));
    w.vec(m.data);
}

inline Mat<float> read_mat(BinaryReader& r) {
    const auto rows = static_cast<std::size_t>(r.pod<std::uint64_t>());
    const auto cols = static_cast<std::size_t>(r.pod<std::uint64_t>());
    Mat<float> m(rows, cols);
    m.data = r.vec<float>();
    if (m.data.size() != rows * cols) throw integrity_error("matrix payload size mismatch");
    return m;
}

inline void write_layer(BinaryWriter& w, const EmbeddingLayer<float>& layer) {
    const auto& spec = layer.spec();
    if (const auto* comp = dynamic_cast<const CompressedLayer*>(&layer)) {
        w.pod(method_tag(comp->method()));
        w.pod(static_cast<std::uint64_t>(spec.n));
        w.pod(static_cast<std::uint64_t>(spec.d));
        w.pod(spec.init_std);
        w.pod(kind_tag(comp->kind()));
        if (const auto* qt = std::get_if<QuantizedTable>(&comp->payload())) {
            w.vec(qt->codes);
            w.vec(qt->scale);
            w.vec(qt->offset);
            write_mat(w, qt->codebook);
        } else if (const auto* ct = std::get_if<ClusteredTable>(&comp->payload())) {
            write_mat(w, ct->centroids);
            w.vec(ct->assignment);
        } else {
            const auto& pt = std::get<ProjectedTable>(comp->payload());
            w.pod(static_cast<std::uint64_t>(pt.segments));
            w.pod(static_cast<std::uint64_t>(pt.target_dim));
            w.pod(pt.seed);
            w.pod(static_cast<std::uint8_t>(pt.oracle_identity ? 1 : 0));
            write_mat(w, pt.stored);
        }
        return;
    }

    w.pod(kind_tag(layer.kind()));
    w.pod(static_cast<std::uint64_t>(spec.n));
    w.pod(static_cast<std::uint64_t>(spec.d));
    w.pod(spec.init_std);
    switch (layer.kind()) {
        case LayerKind::native:
        case LayerKind::quotient_remainder:
            break;
        case LayerKind::lowrank:
            w.pod(static_cast<std::uint64_t>(
                dynamic_cast<const LowRankLayer<float>&>(layer).config().r));
            break;
        case LayerKind::frobenius: {
            const auto& cfg = dynamic_cast<const FrobeniusLayer<float>&>(layer).config();
            w.pod(static_cast<std::uint64_t>(cfg.r));
            w.pod(static_cast<std::uint64_t>(cfg.p));
            break;
        }
        case LayerKind::memcom:
            w.pod(static_cast<std::uint64_t>(
                dynamic_cast<const MemComLayer<float>&>(layer).config().buckets));
            break;
        case LayerKind::tensor_train: {
            const auto& cfg = dynamic_cast<const TensorTrainLayer<float>&>(layer).config();
            std::vector<std::uint64_t> rf(cfg.row_factors.begin(), cfg.row_factors.end());
            std::vector<std::uint64_t> cf(cfg.col_factors.begin(), cfg.col_factors.end());
            std::vector<std::uint64_t> rk(cfg.ranks.begin(), cfg.ranks.end());
            w.vec(rf);
            w.vec(cf);
            w.vec(rk);
            break;
        }
    }
    const auto params = layer.params();
    w.pod(static_cast<std::uint64_t>(params.size()));
    for (const auto* p : params) write_mat(w, *p);
}

inline std::unique_ptr<EmbeddingLayer<float>> read_layer(BinaryReader& r) {
    const auto tag = r.pod<std::uint32_t>();
    EmbeddingSpec spec;
    spec.n = static_cast<std::size_t>(r.pod<std::uint64_t>());
    spec.d = static_cast<std::size_t>(r.pod<std::uint64_t>());
    spec.init_std = r.pod<double>();

    if (tag >= 16 && tag <= 19) {
        const auto source_tag = r.pod<std::uint32_t>();
        if (source_tag > 5) throw integrity_error("unknown source layer tag");
        const auto source = static_cast<LayerKind>(source_tag);
        if (tag == 16 || tag == 17) {
            QuantizedTable qt;
            qt.n = spec.n;
            qt.d = spec.d;
            qt.strategy = (tag == 16) ? QuantStrategy::minmax : QuantStrategy::kmeans;
            qt.codes = r.vec<std::uint8_t>();
            qt.scale = r.vec<float>();
            qt.offset = r.vec<float>();
            qt.codebook = read_mat(r);
            if (qt.codes.size() != (spec.n * spec.d + 1) / 2)
                throw integrity_error("quantized code block size mismatch");
            const auto method =
                (tag == 16) ? CompressMethod::int4_minmax : CompressMethod::int4_kmeans;
            return std::make_unique<CompressedLayer>(spec, source, method, std::move(qt));
        }
        if (tag == 18) {
            ClusteredTable ct;
            ct.centroids = read_mat(r);
            ct.assignment = r.vec<std::uint32_t>();
            return std::make_unique<CompressedLayer>(spec, source, CompressMethod::cluster,
                                                     std::move(ct));
        }
        ProjectedTable pt;
        pt.n = spec.n;
        pt.d = spec.d;
        pt.segments = static_cast<std::size_t>(r.pod<std::uint64_t>());
        pt.target_dim = static_cast<std::size_t>(r.pod<std::uint64_t>());
        pt.seed = r.pod<std::uint64_t>();
        pt.oracle_identity = r.pod<std::uint8_t>() != 0;
        pt.stored = read_mat(r);
        return std::make_unique<CompressedLayer>(spec, source, CompressMethod::jl,
                                                 std::move(pt));
    }

    if (tag > 5) throw integrity_error("unknown layer tag " + std::to_string(tag));
    const auto kind = static_cast<LayerKind>(tag);
    LayerConfig config = std::monostate{};
    switch (kind) {
        case LayerKind::native:
        case LayerKind::quotient_remainder:
            break;
        case LayerKind::lowrank:
            config = LowRankConfig{static_cast<std::size_t>(r.pod<std::uint64_t>())};
            break;
        case LayerKind::frobenius: {
            FrobeniusConfig cfg;
            cfg.r = static_cast<std::size_t>(r.pod<std::uint64_t>());
            cfg.p = static_cast<std::size_t>(r.pod<std::uint64_t>());
            config = cfg;
            break;
        }
        case LayerKind::memcom:
            config = MemComConfig{static_cast<std::size_t>(r.pod<std::uint64_t>())};
            break;
        case LayerKind::tensor_train: {
            TTConfig cfg;
            for (auto v : r.vec<std::uint64_t>()) cfg.row_factors.push_back(v);
            for (auto v : r.vec<std::uint64_t>()) cfg.col_factors.push_back(v);
            for (auto v : r.vec<std::uint64_t>()) cfg.ranks.push_back(v);
            config = cfg;
            break;
        }
    }
    Rng scratch(0); // params are overwritten below
    auto layer = build_layer<float>(kind, spec, config, scratch);
    const auto slot_count = static_cast<std::size_t>(r.pod<std::uint64_t>());
    auto params = layer->params();
    if (slot_count != params.size()) throw integrity_error("parameter slot count mismatch");
    for (auto* p : params) {
        Mat<float> stored = read_mat(r);
        if (!p->same_shape(stored)) throw integrity_error("parameter shape mismatch");
        *p = std::move(stored);
    }
    return layer;
}

} // namespace detail

inline void save_checkpoint(MiniCtrModel<float>& model, const CheckpointMeta& meta,
                            const ModelOptState<float>* state, const std::string& path) {
    BinaryWriter w(path);
    w.bytes(checkpoint_magic, 4);
    w.pod(checkpoint_version);
    w.str(meta.variant_tag);
    w.str(meta.dataset_json);
    w.pod(meta.dataset_fingerprint);
    w.pod(meta.train_seed);
    w.pod(static_cast<std::uint64_t>(model.n_dense()));
    w.pod(static_cast<std::uint64_t>(model.mlp_config().hidden1));
    w.pod(static_cast<std::uint64_t>(model.mlp_config().hidden2));
    w.pod(static_cast<std::uint64_t>(model.table_count()));
    for (std::size_t t = 0; t < model.table_count(); ++t)
        detail::write_layer(w, model.table(t));
    for (const auto* p : model.mlp_params()) detail::write_mat(w, *p);
    if (state != nullptr) {
        w.pod(static_cast<std::uint8_t>(1));
        w.pod(static_cast<std::uint64_t>(state->mlp.accum.size()));
        for (const auto& m : state->mlp.accum) detail::write_mat(w, m);
        w.pod(static_cast<std::uint64_t>(state->tables.size()));
        for (const auto& ts : state->tables) {
            w.pod(static_cast<std::uint64_t>(ts.accum.size()));
            for (const auto& m : ts.accum) detail::write_mat(w, m);
        }
    } else {
        w.pod(static_cast<std::uint8_t>(0));
    }
    w.finish();
}

struct LoadedCheckpoint {
    std::unique_ptr<MiniCtrModel<float>> model;
    CheckpointMeta meta;
    bool has_state = false;
    ModelOptState<float> state;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    BinaryReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, checkpoint_magic, 4) != 0)
        throw io_error("not a checkpoint file: " + path);
    const auto version = r.pod<std::uint32_t>();
    if (version != checkpoint_version)
        throw version_error("checkpoint version mismatch: expected " +
                            std::to_string(checkpoint_version) + ", found " +
                            std::to_string(version));

    LoadedCheckpoint out;
    out.meta.variant_tag = r.str();
    out.meta.dataset_json = r.str();
    out.meta.dataset_fingerprint = r.pod<std::uint64_t>();
    out.meta.train_seed = r.pod<std::uint64_t>();
    const auto n_dense = static_cast<std::size_t>(r.pod<std::uint64_t>());
    MlpConfig mlp;
    mlp.hidden1 = static_cast<std::size_t>(r.pod<std::uint64_t>());
    mlp.hidden2 = static_cast<std::size_t>(r.pod<std::uint64_t>());
    const auto table_count = static_cast<std::size_t>(r.pod<std::uint64_t>());

    std::vector<std::unique_ptr<EmbeddingLayer<float>>> tables;
    for (std::size_t t = 0; t < table_count; ++t) tables.push_back(detail::read_layer(r));

    Rng scratch(0);
    out.model = std::make_unique<MiniCtrModel<float>>(n_dense, mlp, std::move(tables), scratch);
    for (auto* p : out.model->mlp_params()) {
        Mat<float> stored = detail::read_mat(r);
        if (!p->same_shape(stored)) throw integrity_error("mlp parameter shape mismatch");
        *p = std::move(stored);
    }

    out.has_state = r.pod<std::uint8_t>() != 0;
    if (out.has_state) {
        const auto mlp_slots = static_cast<std::size_t>(r.pod<std::uint64_t>());
        for (std::size_t i = 0; i < mlp_slots; ++i)
            out.state.mlp.accum.push_back(detail::read_mat(r));
        const auto table_slots = static_cast<std::size_t>(r.pod<std::uint64_t>());
        out.state.tables.resize(table_slots);
        for (std::size_t t = 0; t < table_slots; ++t) {
            const auto slots = static_cast<std::size_t>(r.pod<std::uint64_t>());
            for (std::size_t i = 0; i < slots; ++i)
                out.state.tables[t].accum.push_back(detail::read_mat(r));
        }
    }
    return out;
}

} // namespace cemb
