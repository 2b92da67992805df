#include "roadsound/nn/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <map>

#include <json.hpp>

#include "roadsound/errors.hpp"

namespace roadsound::nn {

namespace {

using nlohmann::json;

constexpr std::array<char, 4> kMagic = {'R', 'S', 'N', 'C'};
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

const char* kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::kConv: return "conv";
        case LayerKind::kMaxPool: return "maxpool";
        case LayerKind::kBatchNorm: return "batchnorm";
        case LayerKind::kFlatten: return "flatten";
        case LayerKind::kDense: return "dense";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    if (name == "conv") return LayerKind::kConv;
    if (name == "maxpool") return LayerKind::kMaxPool;
    if (name == "batchnorm") return LayerKind::kBatchNorm;
    if (name == "flatten") return LayerKind::kFlatten;
    if (name == "dense") return LayerKind::kDense;
    throw DecodeError("checkpoint: unknown layer kind '" + name + "'");
}

struct NamedBlob {
    std::string name;
    std::vector<std::size_t> shape;
    const std::vector<float>* data;
};

// Trainable tensors plus batch-norm running statistics, in a fixed order.
// `scratch` owns copies of the running statistics; its capacity is reserved
// up front so the blob pointers into it stay valid.
std::vector<NamedBlob> blob_table(const Network<float>& net,
                                  std::vector<std::vector<float>>* scratch) {
    std::vector<NamedBlob> blobs;
    const auto& layers = net.layers();
    std::size_t n_bn = 0;
    for (const auto& layer : layers) {
        if (layer.spec.kind == LayerKind::kBatchNorm) ++n_bn;
    }
    scratch->reserve(2 * n_bn);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const std::string prefix = "layer" + std::to_string(i);
        switch (layer.spec.kind) {
            case LayerKind::kConv:
                blobs.push_back({prefix + ".conv.weight", layer.weight.shape, &layer.weight.data});
                blobs.push_back({prefix + ".conv.bias", layer.bias.shape, &layer.bias.data});
                break;
            case LayerKind::kDense:
                blobs.push_back(
                    {prefix + ".dense.weight", layer.weight.shape, &layer.weight.data});
                blobs.push_back({prefix + ".dense.bias", layer.bias.shape, &layer.bias.data});
                break;
            case LayerKind::kBatchNorm: {
                blobs.push_back({prefix + ".bn.gamma", layer.gamma.shape, &layer.gamma.data});
                blobs.push_back({prefix + ".bn.beta", layer.beta.shape, &layer.beta.data});
                scratch->push_back(layer.running_mean);
                blobs.push_back(
                    {prefix + ".bn.running_mean", {layer.running_mean.size()}, &scratch->back()});
                scratch->push_back(layer.running_var);
                blobs.push_back(
                    {prefix + ".bn.running_var", {layer.running_var.size()}, &scratch->back()});
                break;
            }
            default:
                break;
        }
    }
    return blobs;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network<float>& net,
                     const CheckpointMeta& meta) {
    const ModelSpec& spec = net.spec();
    json model;
    model["input_rows"] = spec.input_rows;
    model["input_cols"] = spec.input_cols;
    model["input_channels"] = spec.input_channels;
    model["n_classes"] = spec.n_classes;
    model["layers"] = json::array();
    for (const auto& ls : spec.layers) {
        model["layers"].push_back({{"kind", kind_name(ls.kind)},
                                   {"units", ls.units},
                                   {"kernel", ls.kernel},
                                   {"pool", ls.pool},
                                   {"stride", ls.stride},
                                   {"relu", ls.relu}});
    }

    std::vector<std::vector<float>> scratch;
    const std::vector<NamedBlob> blobs = blob_table(net, &scratch);
    json tensors = json::array();
    for (const auto& blob : blobs) {
        tensors.push_back({{"name", blob.name}, {"shape", blob.shape}});
    }

    json descriptor;
    descriptor["model"] = model;
    descriptor["tensors"] = tensors;
    descriptor["labels"] = meta.labels;
    descriptor["feature_config_hash"] = meta.feature_config_hash;
    descriptor["channel_mean"] = meta.channel_mean;
    descriptor["channel_std"] = meta.channel_std;
    descriptor["seed"] = meta.seed;
    const std::string text = descriptor.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");

    std::uint32_t crc = 0xFFFFFFFFu;
    auto put = [&](const void* bytes, std::size_t n) {
        f.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(n));
        crc = crc32_update(crc, bytes, n);
    };
    put(kMagic.data(), kMagic.size());
    put(&kVersion, 1);
    const auto text_len = static_cast<std::uint32_t>(text.size());
    put(&text_len, sizeof(text_len));
    put(text.data(), text.size());
    for (const auto& blob : blobs) {
        put(blob.data->data(), blob.data->size() * sizeof(float));
    }
    crc ^= 0xFFFFFFFFu;
    f.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
    if (!f) throw IoError("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() < kMagic.size() + 1 + sizeof(std::uint32_t) * 2) {
        throw DecodeError("checkpoint: file too short");
    }
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw DecodeError("checkpoint: bad magic");
    }
    if (static_cast<std::uint8_t>(bytes[4]) != kVersion) {
        throw DecodeError("checkpoint: unsupported version");
    }
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - sizeof(stored_crc),
                sizeof(stored_crc));
    std::uint32_t crc = 0xFFFFFFFFu;
    crc = crc32_update(crc, bytes.data(), bytes.size() - sizeof(stored_crc));
    crc ^= 0xFFFFFFFFu;
    if (crc != stored_crc) throw DecodeError("checkpoint: CRC mismatch, file is corrupt");

    std::size_t pos = kMagic.size() + 1;
    std::uint32_t text_len = 0;
    std::memcpy(&text_len, bytes.data() + pos, sizeof(text_len));
    pos += sizeof(text_len);
    if (pos + text_len > bytes.size() - sizeof(stored_crc)) {
        throw DecodeError("checkpoint: descriptor overruns file");
    }
    json descriptor;
    try {
        descriptor = json::parse(bytes.data() + pos, bytes.data() + pos + text_len);
    } catch (const json::exception& e) {
        throw DecodeError(std::string("checkpoint: bad descriptor: ") + e.what());
    }
    pos += text_len;

    ModelSpec spec;
    const json& model = descriptor.at("model");
    spec.input_rows = model.at("input_rows").get<std::size_t>();
    spec.input_cols = model.at("input_cols").get<std::size_t>();
    spec.input_channels = model.at("input_channels").get<std::size_t>();
    spec.n_classes = model.at("n_classes").get<std::size_t>();
    for (const auto& jl : model.at("layers")) {
        LayerSpec ls;
        ls.kind = kind_from_name(jl.at("kind").get<std::string>());
        ls.units = jl.at("units").get<std::size_t>();
        ls.kernel = jl.at("kernel").get<std::size_t>();
        ls.pool = jl.at("pool").get<std::size_t>();
        ls.stride = jl.at("stride").get<std::size_t>();
        ls.relu = jl.at("relu").get<bool>();
        spec.layers.push_back(ls);
    }

    LoadedCheckpoint out{Network<float>(spec), {}};
    out.meta.labels = descriptor.at("labels").get<std::vector<std::string>>();
    out.meta.feature_config_hash = descriptor.at("feature_config_hash").get<std::uint64_t>();
    out.meta.channel_mean = descriptor.at("channel_mean").get<std::vector<double>>();
    out.meta.channel_std = descriptor.at("channel_std").get<std::vector<double>>();
    out.meta.seed = descriptor.at("seed").get<std::uint64_t>();

    // Index the network's storage by blob name, then fill from the file.
    std::map<std::string, std::pair<float*, std::size_t>> slots;
    auto& layers = out.net.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& layer = layers[i];
        const std::string prefix = "layer" + std::to_string(i);
        switch (layer.spec.kind) {
            case LayerKind::kConv:
                slots[prefix + ".conv.weight"] = {layer.weight.data.data(), layer.weight.size()};
                slots[prefix + ".conv.bias"] = {layer.bias.data.data(), layer.bias.size()};
                break;
            case LayerKind::kDense:
                slots[prefix + ".dense.weight"] = {layer.weight.data.data(), layer.weight.size()};
                slots[prefix + ".dense.bias"] = {layer.bias.data.data(), layer.bias.size()};
                break;
            case LayerKind::kBatchNorm:
                slots[prefix + ".bn.gamma"] = {layer.gamma.data.data(), layer.gamma.size()};
                slots[prefix + ".bn.beta"] = {layer.beta.data.data(), layer.beta.size()};
                slots[prefix + ".bn.running_mean"] = {layer.running_mean.data(),
                                                      layer.running_mean.size()};
                slots[prefix + ".bn.running_var"] = {layer.running_var.data(),
                                                     layer.running_var.size()};
                break;
            default:
                break;
        }
    }

    const std::size_t blob_end = bytes.size() - sizeof(stored_crc);
    for (const auto& jt : descriptor.at("tensors")) {
        const auto name = jt.at("name").get<std::string>();
        std::size_t count = 1;
        for (const auto& d : jt.at("shape")) count *= d.get<std::size_t>();
        const auto it = slots.find(name);
        if (it == slots.end()) throw DecodeError("checkpoint: unexpected tensor '" + name + "'");
        if (it->second.second != count) {
            throw DecodeError("checkpoint: size mismatch for tensor '" + name + "'");
        }
        if (pos + count * sizeof(float) > blob_end) {
            throw DecodeError("checkpoint: tensor data overruns file");
        }
        std::memcpy(it->second.first, bytes.data() + pos, count * sizeof(float));
        pos += count * sizeof(float);
        slots.erase(it);
    }
    if (!slots.empty()) {
        throw DecodeError("checkpoint: missing tensor '" + slots.begin()->first + "'");
    }
    if (pos != blob_end) throw DecodeError("checkpoint: trailing bytes after tensors");
    return out;
}

}  // namespace roadsound::nn
