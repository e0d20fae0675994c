// serialize.hpp
// Little-endian binary IO with a running FNV-1a checksum. Writers hash every
// payload byte and append the 64-bit digest; readers re-hash while reading
// and verify the trailer, so truncation and bit corruption surface as
// integrity errors instead of garbage loads.

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cemb/error.hpp"

namespace cemb {

inline constexpr std::uint64_t fnv_offset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t fnv_prime = 0x00000100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = fnv_offset) {
    auto h = seed;
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= fnv_prime;
    }
    return h;
}

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw io_error("cannot open for write: " + path);
    }

    void bytes(const void* data, std::size_t len) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
        if (!out_) throw io_error("write failed: " + path_);
        hash_ = fnv1a64(data, len, hash_);
    }

    template <class T>
    void pod(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        bytes(&v, sizeof(T));
    }

    void str(const std::string& s) {
        pod(static_cast<std::uint64_t>(s.size()));
        bytes(s.data(), s.size());
    }

    template <class T>
    void vec(const std::vector<T>& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        pod(static_cast<std::uint64_t>(v.size()));
        bytes(v.data(), v.size() * sizeof(T));
    }

    // writes the checksum trailer; no payload may follow
    void finish() {
        const std::uint64_t digest = hash_;
        out_.write(reinterpret_cast<const char*>(&digest), sizeof(digest));
        out_.flush();
        if (!out_) throw io_error("write failed: " + path_);
    }

private:
    std::ofstream out_;
    std::string path_;
    std::uint64_t hash_ = fnv_offset;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw io_error("cannot open: " + path);
        in.seekg(0, std::ios::end);
        const auto len = static_cast<std::size_t>(in.tellg());
        in.seekg(0, std::ios::beg);
        if (len < sizeof(std::uint64_t))
            throw integrity_error("file too short for checksum trailer: " + path);
        buf_.resize(len);
        in.read(reinterpret_cast<char*>(buf_.data()), static_cast<std::streamsize>(len));
        if (!in) throw io_error("read failed: " + path);
        payload_len_ = len - sizeof(std::uint64_t);
        std::uint64_t stored = 0;
        std::memcpy(&stored, buf_.data() + payload_len_, sizeof(stored));
        if (fnv1a64(buf_.data(), payload_len_) != stored)
            throw integrity_error("checksum mismatch (truncated or corrupt): " + path);
    }

    void bytes(void* data, std::size_t len) {
        if (pos_ + len > payload_len_)
            throw integrity_error("unexpected end of payload: " + path_);
        std::memcpy(data, buf_.data() + pos_, len);
        pos_ += len;
    }

    template <class T>
    T pod() {
        static_assert(std::is_trivially_copyable_v<T>);
        T v;
        bytes(&v, sizeof(T));
        return v;
    }

    std::string str() {
        const auto len = pod<std::uint64_t>();
        check_count(len, 1);
        std::string s(static_cast<std::size_t>(len), '\0');
        bytes(s.data(), s.size());
        return s;
    }

    template <class T>
    std::vector<T> vec() {
        const auto len = pod<std::uint64_t>();
        check_count(len, sizeof(T));
        std::vector<T> v(static_cast<std::size_t>(len));
        bytes(v.data(), v.size() * sizeof(T));
        return v;
    }

    bool done() const { return pos_ == payload_len_; }

private:
    void check_count(std::uint64_t count, std::size_t elem) const {
        if (count > (payload_len_ - pos_) / elem)
            throw integrity_error("length field exceeds payload: " + path_);
    }

    std::string path_;
    std::vector<unsigned char> buf_;
    std::size_t payload_len_ = 0;
    std::size_t pos_ = 0;
};

} // namespace cemb
