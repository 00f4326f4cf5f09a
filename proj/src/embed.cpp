#include "clap/embed.hpp"

#include <cmath>

#include "clap/error.hpp"
#include "clap/http.hpp"
#include "clap/text.hpp"

namespace clap::embed {

namespace {

void check_dims(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw InvalidArgument("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) {
    check_dims(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

double norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

double cosine(std::span<const float> a, std::span<const float> b) {
    check_dims(a, b);
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine of a zero-norm vector");
    return dot(a, b) / (na * nb);
}

void normalize(std::span<float> v) {
    const double n = norm(v);
    if (n == 0.0 || !std::isfinite(n)) throw InvalidArgument("cannot normalize a zero or non-finite vector");
    for (auto& x : v) x = static_cast<float>(static_cast<double>(x) / n);
}

VectorStore::VectorStore(std::size_t dim, bool normalized) : dim_(dim), normalized_(normalized) {
    if (dim == 0) throw InvalidArgument("vector store dimension must be >= 1");
}

void VectorStore::insert_raw(std::string id, std::span<const float> vector) {
    if (vector.size() != dim_)
        throw InvalidArgument("vector for '" + id + "' has dim " + std::to_string(vector.size()) + ", store dim is " +
                              std::to_string(dim_));
    if (index_.count(id) != 0) throw IntegrityError("duplicate embedding id '" + id + "'");
    index_.emplace(id, ids_.size());
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

void VectorStore::add(std::string id, std::vector<float> vector) {
    if (normalized_ && vector.size() == dim_) normalize(vector);
    insert_raw(std::move(id), vector);
}

std::size_t VectorStore::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw MissingEmbeddingError(id);
    return it->second;
}

std::span<const float> VectorStore::at(const std::string& id) const { return vector(index_of(id)); }

std::span<const float> VectorStore::vector(std::size_t index) const {
    return std::span<const float>(data_).subspan(index * dim_, dim_);
}

double VectorStore::similarity(std::span<const float> a, std::span<const float> b) const {
    return normalized_ ? dot(a, b) : cosine(a, b);
}

bool VectorStore::operator==(const VectorStore& other) const {
    return dim_ == other.dim_ && normalized_ == other.normalized_ && ids_ == other.ids_ && data_ == other.data_;
}

std::string_view to_string(EncodeRole role) { return role == EncodeRole::query ? "query" : "passage"; }

std::vector<float> hashing_encoder(std::string_view text, std::size_t dim, std::uint64_t seed) {
    if (dim < 8) throw InvalidArgument("hashing encoder needs dim >= 8");
    auto tokens = text::tokenize(text);
    if (tokens.empty()) throw InvalidArgument("hashing encoder: text has no tokens");
    std::vector<double> acc(dim, 0.0);
    const std::uint64_t salt = splitmix64(seed);
    for (const auto& t : tokens) {
        const std::uint64_t h = splitmix64(fnv1a(t) ^ salt);
        acc[h % dim] += ((h >> 63) != 0U) ? -1.0 : 1.0;
    }
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i]);
    normalize(out);
    return out;
}

HashingEncoder::HashingEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 8) throw InvalidArgument("hashing encoder needs dim >= 8");
}

std::vector<std::vector<float>> HashingEncoder::encode(std::span<const std::string> texts, EncodeRole /*role*/) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hashing_encoder(t, dim_, seed_));
    return out;
}

HttpEncoder::HttpEncoder(std::string url, std::size_t dim) : url_(std::move(url)), dim_(dim) {
    http::parse_url(url_);
}

std::vector<std::vector<float>> HttpEncoder::encode(std::span<const std::string> texts, EncodeRole role) {
    nlohmann::json request = {{"texts", texts}, {"role", std::string(to_string(role))}};
    auto reply = http::post_json(url_, request);
    std::vector<std::vector<float>> vectors;
    std::size_t reply_dim = 0;
    try {
        reply_dim = reply.at("dim").get<std::size_t>();
        vectors = reply.at("vectors").get<std::vector<std::vector<float>>>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("encoder reply malformed: ") + e.what());
    }
    if (dim_ == 0) dim_ = reply_dim;
    if (reply_dim != dim_) throw TransportError("encoder declared dim " + std::to_string(reply_dim) + ", expected " + std::to_string(dim_));
    if (vectors.size() != texts.size())
        throw TransportError("encoder returned " + std::to_string(vectors.size()) + " vectors for " +
                             std::to_string(texts.size()) + " texts");
    for (const auto& v : vectors)
        if (v.size() != dim_) throw TransportError("encoder returned a vector of the wrong length");
    return vectors;
}

std::vector<EmbeddingRecord> encode_batch(std::span<const TextItem> items, Encoder& encoder, bool normalize_vectors,
                                          EncodeRole role, std::size_t batch_size) {
    if (batch_size == 0) throw InvalidArgument("batch size must be >= 1");
    std::vector<EmbeddingRecord> out;
    out.reserve(items.size());
    for (std::size_t start = 0, batch = 0; start < items.size(); start += batch_size, ++batch) {
        const std::size_t end = std::min(items.size(), start + batch_size);
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i) texts.push_back(items[i].text);
        std::vector<std::vector<float>> vectors;
        try {
            vectors = encoder.encode(texts, role);
        } catch (const TransportError& e) {
            throw TransportError("batch " + std::to_string(batch) + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("batch " + std::to_string(batch) + ": " + e.what());
        }
        if (vectors.size() != texts.size())
            throw TransportError("batch " + std::to_string(batch) + ": vector count mismatch");
        for (std::size_t i = start; i < end; ++i) {
            auto& v = vectors[i - start];
            if (v.size() != encoder.dim()) throw TransportError("batch " + std::to_string(batch) + ": wrong vector length");
            if (normalize_vectors) normalize(v);
            out.push_back(EmbeddingRecord{items[i].id, std::move(v)});
        }
    }
    return out;
}

VectorStore build_store(std::span<const TextItem> items, Encoder& encoder, bool normalized, EncodeRole role,
                        std::size_t batch_size) {
    auto records = encode_batch(items, encoder, normalized, role, batch_size);
    VectorStore store(encoder.dim(), normalized);
    for (auto& r : records) store.add(std::move(r));
    return store;
}

}  // namespace clap::embed
