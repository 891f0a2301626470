#ifndef LENET_CHECKPOINT_HPP
#define LENET_CHECKPOINT_HPP

/**
 * @file checkpoint.hpp
 * @brief Binary model checkpoints (".lnck").
 *
 * All integers little-endian:
 *
 *   "LNCK"                       4 bytes
 *   format version               u32 (= 1)
 *   num_classes                  u32
 *   parameter count              u32
 *   per parameter:
 *     name length                u32
 *     name                       UTF-8 bytes
 *     rank                       u32
 *     dims                       rank x u32
 *     values                     f64 IEEE-754, row-major
 *   metadata length              u32
 *   metadata                     UTF-8 JSON: class_names, train_config, final_record
 *   CRC-64/XZ                    u64 over every preceding byte
 */

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/crc.hpp>
#include <json.hpp>

#include "lenet/model.hpp"
#include "lenet/pgm.hpp"
#include "lenet/train.hpp"

namespace lenet {

inline constexpr std::array<std::uint8_t, 4> kCheckpointMagic{'L', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    LeNetModel model{2};
    std::vector<std::string> class_names;
    /// Effective training configuration, as echoed by the CLI. Free-form.
    nlohmann::json train_config = nlohmann::json::object();
    std::optional<EpochRecord> final_record;
};

/// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout all ones).
inline std::uint64_t crc64(std::span<const std::uint8_t> bytes)
{
    boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline nlohmann::json to_json(const EpochRecord& r)
{
    return {{"epoch", r.epoch},
            {"train_loss", r.train_loss},
            {"train_acc", r.train_acc},
            {"val_loss", r.val_loss},
            {"val_acc", r.val_acc}};
}

inline EpochRecord epoch_record_from_json(const nlohmann::json& j)
{
    return {j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(), j.at("train_acc").get<double>(),
            j.at("val_loss").get<double>(), j.at("val_acc").get<double>()};
}

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v)
    {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t> bytes;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t n)
    {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt)
{
    detail::ByteWriter w;
    w.bytes.assign(kCheckpointMagic.begin(), kCheckpointMagic.end());
    w.u32(ckpt.version);
    w.u32(static_cast<std::uint32_t>(ckpt.model.num_classes()));
    w.u32(static_cast<std::uint32_t>(kParamCount));
    for (const auto& p : ckpt.model.params()) {
        w.u32(static_cast<std::uint32_t>(p.name.size()));
        w.raw(p.name);
        w.u32(static_cast<std::uint32_t>(p.value.rank()));
        for (auto d : p.value.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (double v : p.value.values()) w.f64(v);
    }
    nlohmann::json meta{{"class_names", ckpt.class_names}, {"train_config", ckpt.train_config}};
    meta["final_record"] = ckpt.final_record ? to_json(*ckpt.final_record) : nlohmann::json(nullptr);
    const std::string meta_text = meta.dump();
    w.u32(static_cast<std::uint32_t>(meta_text.size()));
    w.raw(meta_text);
    w.u64(crc64(w.bytes));
    return std::move(w.bytes);
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin()))
        throw Error(ErrorKind::CorruptCheckpoint, "bad checkpoint magic");
    detail::ByteReader r(bytes.subspan(4));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw Error(ErrorKind::UnsupportedVersion, "checkpoint version " + std::to_string(version) + " (expected " +
                                                       std::to_string(kCheckpointVersion) + ")");
    if (bytes.size() < 4 + 4 + 8) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint truncated");
    const auto body = bytes.first(bytes.size() - 8);
    detail::ByteReader tail(bytes.last(8));
    if (crc64(body) != tail.u64()) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint CRC mismatch");

    // The CRC matched, so everything below is what the writer produced; the
    // structural checks guard against files from foreign writers.
    detail::ByteReader br(body.subspan(8));
    const std::uint32_t num_classes = br.u32();
    if (num_classes < 2) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint num_classes < 2");
    Checkpoint ckpt;
    ckpt.version = version;
    ckpt.model = LeNetModel(num_classes);
    const std::uint32_t count = br.u32();
    if (count != kParamCount)
        throw Error(ErrorKind::CorruptCheckpoint, "checkpoint holds " + std::to_string(count) + " parameters");
    const auto shapes = param_shapes(num_classes);
    for (std::size_t i = 0; i < kParamCount; ++i) {
        const std::uint32_t name_len = br.u32();
        if (name_len > br.remaining()) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint truncated");
        const std::string name = br.str(name_len);
        if (name != kParamNames[i])
            throw Error(ErrorKind::CorruptCheckpoint, "unexpected parameter '" + name + "' at position " + std::to_string(i));
        const std::uint32_t rank = br.u32();
        if (rank == 0 || rank > 8) throw Error(ErrorKind::CorruptCheckpoint, "bad rank for " + name);
        Shape shape(rank);
        for (auto& d : shape) d = br.u32();
        if (shape != shapes[i])
            throw Error(ErrorKind::CorruptCheckpoint,
                        name + " has shape " + shape_str(shape) + ", expected " + shape_str(shapes[i]));
        Param& p = ckpt.model.param(static_cast<ParamIndex>(i));
        for (auto& v : p.value.values()) v = br.f64();
    }
    const std::uint32_t meta_len = br.u32();
    if (meta_len != br.remaining()) throw Error(ErrorKind::CorruptCheckpoint, "checkpoint metadata length mismatch");
    try {
        const auto meta = nlohmann::json::parse(br.str(meta_len));
        ckpt.class_names = meta.at("class_names").get<std::vector<std::string>>();
        ckpt.train_config = meta.at("train_config");
        if (!meta.at("final_record").is_null()) ckpt.final_record = epoch_record_from_json(meta.at("final_record"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::CorruptCheckpoint, std::string("checkpoint metadata: ") + e.what());
    }
    if (ckpt.class_names.size() != num_classes)
        throw Error(ErrorKind::CorruptCheckpoint, "checkpoint class_names do not match num_classes");
    return ckpt;
}

/// Writes through a sibling temporary file so a failed save never leaves a partial checkpoint.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt)
{
    const auto bytes = encode_checkpoint(ckpt);
    auto tmp = path;
    tmp += ".tmp";
    write_file_bytes(tmp, bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot move checkpoint into place: " + ec.message());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file_bytes(path);
    } catch (const Error& e) {
        throw Error(ErrorKind::CorruptCheckpoint, std::string("cannot read checkpoint: ") + e.what());
    }
    return decode_checkpoint(bytes);
}

} // namespace lenet

#endif
