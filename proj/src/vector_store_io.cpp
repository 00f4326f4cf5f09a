#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "clap/embed.hpp"
#include "clap/error.hpp"

namespace clap::embed {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'P', 'V'};
constexpr double kUnitNormTolerance = 1e-5;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T le(const char* what) {
        need(sizeof(T), what);
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    [[nodiscard]] std::size_t offset() const { return pos_; }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(pos_, std::string("truncated ") + what);
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_store(const VectorStore& store) {
    std::vector<std::uint8_t> out;
    out.reserve(kStoreHeaderBytes + store.size() * (4 + 16 + store.dim() * 4));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_le<std::uint32_t>(out, kStoreVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
    put_le<std::uint8_t>(out, store.normalized() ? 1 : 0);
    put_le<std::uint64_t>(out, store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& id = store.id(i);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out.insert(out.end(), id.begin(), id.end());
        for (float x : store.vector(i)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
    }
    return out;
}

VectorStore decode_store(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto magic = r.take(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError(0, "bad magic, expected CLPV");
    const auto version_at = r.offset();
    if (auto version = r.le<std::uint32_t>("version"); version != kStoreVersion)
        throw FormatError(version_at, "unsupported version " + std::to_string(version));
    const auto dim_at = r.offset();
    const auto dim = r.le<std::uint32_t>("dim");
    if (dim == 0) throw FormatError(dim_at, "dim is zero");
    const auto flag_at = r.offset();
    const auto flag = r.le<std::uint8_t>("normalized flag");
    if (flag > 1) throw FormatError(flag_at, "normalized flag must be 0 or 1");
    const auto count = r.le<std::uint64_t>("record count");

    VectorStore store(dim, flag == 1);
    std::vector<float> v(dim);
    for (std::uint64_t rec = 0; rec < count; ++rec) {
        const auto id_len = r.le<std::uint32_t>("id length");
        auto id_bytes = r.take(id_len, "id");
        std::string id(id_bytes.begin(), id_bytes.end());
        const auto vec_at = r.offset();
        for (auto& x : v) x = std::bit_cast<float>(r.le<std::uint32_t>("vector"));
        if (store.contains(id)) throw FormatError(vec_at - id_len, "duplicate id '" + id + "'");
        if (store.normalized() && std::abs(norm(v) - 1.0) > kUnitNormTolerance)
            throw FormatError(vec_at, "vector '" + id + "' is not unit norm in a normalized store");
        store.insert_raw(std::move(id), v);
    }
    if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after last record");
    return store;
}

void save_store(const VectorStore& store, const std::filesystem::path& path) {
    auto bytes = encode_store(store);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

VectorStore load_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_store(bytes);
}

}  // namespace clap::embed
