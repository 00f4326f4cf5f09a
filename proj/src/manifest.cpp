#include "clap/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "clap/error.hpp"

namespace clap::manifest {

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0 && EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount())) != 1)
            throw Error("sha256 update failed");
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw Error("sha256 final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

RunManifest make_manifest(std::string subcommand, nlohmann::ordered_json parameters,
                          const std::vector<std::filesystem::path>& inputs, std::vector<std::string> outputs) {
    RunManifest m;
    m.subcommand = std::move(subcommand);
    m.parameters = std::move(parameters);
    for (const auto& p : inputs) m.inputs.emplace_back(p.string(), sha256_file(p));
    m.outputs = std::move(outputs);
    m.timestamp = utc_now();
    return m;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
    auto inputs = nlohmann::ordered_json::array();
    for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"sha256", digest}});
    return {{"subcommand", m.subcommand}, {"parameters", m.parameters}, {"inputs", inputs},
            {"outputs", m.outputs},       {"tool_version", m.tool_version}, {"timestamp", m.timestamp}};
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
}

}  // namespace clap::manifest
