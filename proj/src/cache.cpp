#include "roadsound/pipeline/cache.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "roadsound/errors.hpp"

namespace roadsound::pipeline {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'S', 'F', 'C'};
constexpr std::uint8_t kVersion = 1;

std::uint32_t crc32_update(std::uint32_t crc, const void* bytes, std::size_t n) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    return crc;
}

}  // namespace

int CachedFeatures::find(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] == id) return static_cast<int>(i);
    }
    return -1;
}

void save_feature_cache(const std::string& path, const CachedFeatures& cache) {
    if (cache.ids.size() != cache.volumes.size()) {
        throw std::invalid_argument("feature cache: ids/volumes size mismatch");
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("feature cache: cannot open '" + path + "' for writing");

    std::uint32_t crc = 0xFFFFFFFFu;
    auto put = [&](const void* bytes, std::size_t n) {
        f.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(n));
        crc = crc32_update(crc, bytes, n);
    };
    put(kMagic.data(), kMagic.size());
    put(&kVersion, 1);
    put(&cache.config_hash, sizeof(cache.config_hash));
    const auto n_entries = static_cast<std::uint32_t>(cache.ids.size());
    put(&n_entries, sizeof(n_entries));
    for (std::size_t i = 0; i < cache.ids.size(); ++i) {
        const std::string& id = cache.ids[i];
        const dsp::FeatureVolume& v = cache.volumes[i];
        const auto id_len = static_cast<std::uint32_t>(id.size());
        const auto rows = static_cast<std::uint32_t>(v.rows);
        const auto cols = static_cast<std::uint32_t>(v.cols);
        put(&id_len, sizeof(id_len));
        put(id.data(), id.size());
        put(&rows, sizeof(rows));
        put(&cols, sizeof(cols));
        for (const auto& plane : v.channels) {
            if (plane.size() != v.rows * v.cols) {
                throw std::invalid_argument("feature cache: malformed volume for '" + id + "'");
            }
            put(plane.data(), plane.size() * sizeof(float));
        }
    }
    crc ^= 0xFFFFFFFFu;
    f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!f) throw IoError("feature cache: write to '" + path + "' failed");
}

CachedFeatures load_feature_cache(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("feature cache: cannot open '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    const std::size_t header = kMagic.size() + 1 + sizeof(std::uint64_t) + sizeof(std::uint32_t);
    if (bytes.size() < header + sizeof(std::uint32_t)) {
        throw DecodeError("feature cache: file too short");
    }
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw DecodeError("feature cache: bad magic");
    }
    if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
        throw DecodeError("feature cache: unsupported version");
    }
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - sizeof(stored_crc),
                sizeof(stored_crc));
    std::uint32_t crc = 0xFFFFFFFFu;
    crc = crc32_update(crc, bytes.data(), bytes.size() - sizeof(stored_crc));
    crc ^= 0xFFFFFFFFu;
    if (crc != stored_crc) throw DecodeError("feature cache: CRC mismatch, file is corrupt");

    CachedFeatures cache;
    std::size_t pos = kMagic.size() + 1;
    const std::size_t end = bytes.size() - sizeof(stored_crc);
    auto take = [&](void* dst, std::size_t n) {
        if (pos + n > end) throw DecodeError("feature cache: truncated entry");
        std::memcpy(dst, bytes.data() + pos, n);
        pos += n;
    };
    take(&cache.config_hash, sizeof(cache.config_hash));
    std::uint32_t n_entries = 0;
    take(&n_entries, sizeof(n_entries));
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        std::uint32_t id_len = 0, rows = 0, cols = 0;
        take(&id_len, sizeof(id_len));
        if (pos + id_len > end) throw DecodeError("feature cache: truncated entry");
        std::string id(bytes.data() + pos, id_len);
        pos += id_len;
        take(&rows, sizeof(rows));
        take(&cols, sizeof(cols));
        dsp::FeatureVolume v;
        v.rows = rows;
        v.cols = cols;
        for (auto& plane : v.channels) {
            plane.resize(static_cast<std::size_t>(rows) * cols);
            take(plane.data(), plane.size() * sizeof(float));
        }
        cache.ids.push_back(std::move(id));
        cache.volumes.push_back(std::move(v));
    }
    if (pos != end) throw DecodeError("feature cache: trailing bytes");
    return cache;
}

}  // namespace roadsound::pipeline
