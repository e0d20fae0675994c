// compressed.hpp
// Read-only embedding layer backed by a post-training compressed table, so a
// compressed model can run the normal forward/eval path. Training through a
// compressed table is a hard error. kind() reports the family of the layer
// the table was materialized from; method() says how it was compressed.

#pragma once

#include <memory>
#include <variant>
#include <vector>

#include "cemb/cluster.hpp"
#include "cemb/error.hpp"
#include "cemb/jl.hpp"
#include "cemb/layers.hpp"
#include "cemb/quantize.hpp"

namespace cemb {

enum class CompressMethod { int4_minmax, int4_kmeans, cluster, jl };

inline const char* compress_method_name(CompressMethod m) {
    switch (m) {
        case CompressMethod::int4_minmax: return "int4-minmax";
        case CompressMethod::int4_kmeans: return "int4-kmeans";
        case CompressMethod::cluster: return "cluster";
        case CompressMethod::jl: return "jl";
    }
    return "?";
}

inline CompressMethod parse_compress_method(const std::string& s) {
    if (s == "int4-minmax") return CompressMethod::int4_minmax;
    if (s == "int4-kmeans") return CompressMethod::int4_kmeans;
    if (s == "cluster") return CompressMethod::cluster;
    if (s == "jl") return CompressMethod::jl;
    throw config_error("unknown compress method: " + s);
}

class CompressedLayer final : public EmbeddingLayer<float> {
public:
    using Payload = std::variant<QuantizedTable, ClusteredTable, ProjectedTable>;

    CompressedLayer(const EmbeddingSpec& spec, LayerKind source_kind, CompressMethod method,
                    Payload payload)
        : source_kind_(source_kind), method_(method), payload_(std::move(payload)) {
        spec.validate();
        spec_ = spec;
        if (const auto* qt = std::get_if<QuantizedTable>(&payload_)) {
            if (qt->n != spec.n || qt->d != spec.d)
                throw shape_error("compressed payload does not match spec");
        } else if (const auto* ct = std::get_if<ClusteredTable>(&payload_)) {
            if (ct->assignment.size() != spec.n || ct->centroids.cols != spec.d)
                throw shape_error("compressed payload does not match spec");
        } else {
            const auto& pt = std::get<ProjectedTable>(payload_);
            if (pt.n != spec.n || pt.d != spec.d)
                throw shape_error("compressed payload does not match spec");
            // cache the per-segment transforms; reconstruction stays cheap
            for (std::size_t seg = 0; seg < pt.segments; ++seg)
                jl_mats_.push_back(detail::jl_matrix(pt, seg));
        }
    }

    LayerKind kind() const override { return source_kind_; }
    CompressMethod method() const { return method_; }
    const Payload& payload() const { return payload_; }

    std::size_t param_count() const override {
        if (const auto* qt = std::get_if<QuantizedTable>(&payload_))
            return qt->scale.size() + qt->offset.size() + qt->codebook.size();
        if (const auto* ct = std::get_if<ClusteredTable>(&payload_))
            return ct->centroids.size();
        return std::get<ProjectedTable>(payload_).stored.size();
    }

    std::size_t stored_bytes() const override {
        if (const auto* qt = std::get_if<QuantizedTable>(&payload_)) return qt->bytes();
        if (const auto* ct = std::get_if<ClusteredTable>(&payload_)) return ct->bytes();
        return std::get<ProjectedTable>(payload_).bytes();
    }

    std::vector<Mat<float>*> params() override {
        throw config_error("compressed layer is frozen; no trainable parameters");
    }

    void lookup_into(std::span<const std::uint32_t> idx, float* out,
                     std::size_t out_stride) const override {
        const std::size_t d = spec_.d;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            check_index(idx[b]);
            float* dst = out + b * out_stride;
            if (const auto* qt = std::get_if<QuantizedTable>(&payload_)) {
                for (std::size_t j = 0; j < d; ++j) dst[j] = qt->entry(idx[b], j);
            } else if (const auto* ct = std::get_if<ClusteredTable>(&payload_)) {
                const float* src = ct->centroids.row_ptr(ct->assignment[idx[b]]);
                std::copy(src, src + d, dst);
            } else {
                const auto& pt = std::get<ProjectedTable>(payload_);
                const std::size_t chunk = pt.chunk_dim();
                std::fill(dst, dst + d, 0.0f);
                for (std::size_t seg = 0; seg < pt.segments; ++seg) {
                    const Mat<float>& s = jl_mats_[seg];
                    const float* src = pt.stored.row_ptr(idx[b]) + seg * pt.target_dim;
                    float* seg_dst = dst + seg * chunk;
                    for (std::size_t t = 0; t < pt.target_dim; ++t) {
                        const float v = src[t];
                        const float* srow = s.row_ptr(t);
                        for (std::size_t j = 0; j < chunk; ++j) seg_dst[j] += v * srow[j];
                    }
                }
            }
        }
    }

    std::vector<double> reconstruct_row(std::size_t i) const override {
        check_index(i);
        std::vector<float> buf(spec_.d);
        const std::uint32_t id = static_cast<std::uint32_t>(i);
        lookup_into({&id, 1}, buf.data(), spec_.d);
        return {buf.begin(), buf.end()};
    }

    ParamGrads<float> grad(std::span<const std::uint32_t>, const Mat<float>&) const override {
        throw config_error("compressed layer is frozen; cannot take gradients");
    }

private:
    LayerKind source_kind_;
    CompressMethod method_;
    Payload payload_;
    std::vector<Mat<float>> jl_mats_;
};

} // namespace cemb
