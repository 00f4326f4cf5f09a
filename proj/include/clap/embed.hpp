#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clap::embed {

// Sequential double-precision accumulation of float products. Every
// similarity in the pipeline goes through this kernel, so scores computed by
// different routes over the same vectors are bitwise identical.
double dot(std::span<const float> a, std::span<const float> b);
double norm(std::span<const float> v);
double cosine(std::span<const float> a, std::span<const float> b);
// In-place L2 normalization. Throws InvalidArgument on a zero vector.
void normalize(std::span<float> v);

struct EmbeddingRecord {
    std::string id;
    std::vector<float> vector;

    bool operator==(const EmbeddingRecord&) const = default;
};

// Id-keyed vectors of one dimension in a single contiguous float buffer.
// Immutable once built; concurrent readers need no synchronisation.
class VectorStore {
public:
    VectorStore(std::size_t dim, bool normalized);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool normalized() const noexcept { return normalized_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }

    // Normalizes when the store is normalized. Duplicate ids throw IntegrityError.
    void add(std::string id, std::vector<float> vector);
    void add(EmbeddingRecord record) { add(std::move(record.id), std::move(record.vector)); }

    [[nodiscard]] bool contains(const std::string& id) const { return index_.count(id) != 0; }
    // Throws MissingEmbeddingError.
    [[nodiscard]] std::span<const float> at(const std::string& id) const;
    [[nodiscard]] std::size_t index_of(const std::string& id) const;
    [[nodiscard]] std::span<const float> vector(std::size_t index) const;
    [[nodiscard]] const std::string& id(std::size_t index) const { return ids_[index]; }

    // Dot product on normalized stores, full cosine otherwise.
    [[nodiscard]] double similarity(std::span<const float> a, std::span<const float> b) const;

    bool operator==(const VectorStore& other) const;

private:
    friend VectorStore decode_store(std::span<const std::uint8_t> bytes);
    void insert_raw(std::string id, std::span<const float> vector);

    std::size_t dim_;
    bool normalized_;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

// CLPV binary layout, little-endian throughout:
//   "CLPV" | u32 version | u32 dim | u8 normalized | u64 count |
//   count x (u32 id_len | id bytes | dim x f32)
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 4 + 4 + 4 + 1 + 8;

std::vector<std::uint8_t> encode_store(const VectorStore& store);
// Throws FormatError with the offending byte offset.
VectorStore decode_store(std::span<const std::uint8_t> bytes);
void save_store(const VectorStore& store, const std::filesystem::path& path);
VectorStore load_store(const std::filesystem::path& path);

enum class EncodeRole { query, passage };
std::string_view to_string(EncodeRole role);

class Encoder {
public:
    virtual ~Encoder() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    virtual std::vector<std::vector<float>> encode(std::span<const std::string> texts, EncodeRole role) = 0;
};

// Signed feature hashing over tokenize() output, L2-normalized. Each token
// adds +1 or -1 at a slot chosen by a seeded 64-bit hash, so word order is
// irrelevant. Throws InvalidArgument for dim < 8 or text without tokens.
std::vector<float> hashing_encoder(std::string_view text, std::size_t dim, std::uint64_t seed);

class HashingEncoder final : public Encoder {
public:
    HashingEncoder(std::size_t dim, std::uint64_t seed);
    [[nodiscard]] std::size_t dim() const override { return dim_; }
    std::vector<std::vector<float>> encode(std::span<const std::string> texts, EncodeRole role) override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

// Client for the encoder service: POST {"texts":[...],"role":"query"|"passage"}
// and expect {"dim":d,"vectors":[[...],...]}. With dim = 0 the dimension is
// fixed by the first response.
class HttpEncoder final : public Encoder {
public:
    explicit HttpEncoder(std::string url, std::size_t dim = 0);
    [[nodiscard]] std::size_t dim() const override { return dim_; }
    std::vector<std::vector<float>> encode(std::span<const std::string> texts, EncodeRole role) override;

private:
    std::string url_;
    std::size_t dim_;
};

struct TextItem {
    std::string id;
    std::string text;
};

// One record per item, order preserved. Texts are sent in batches of
// batch_size; a failing batch is rethrown with its index in the message.
std::vector<EmbeddingRecord> encode_batch(std::span<const TextItem> items, Encoder& encoder, bool normalize_vectors,
                                          EncodeRole role = EncodeRole::passage, std::size_t batch_size = 64);

VectorStore build_store(std::span<const TextItem> items, Encoder& encoder, bool normalized,
                        EncodeRole role = EncodeRole::passage, std::size_t batch_size = 64);

}  // namespace clap::embed
