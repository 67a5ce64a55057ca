#include "langdiff/manifest.hpp"

#include "langdiff/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

namespace langdiff {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error(Errc::Io, "sha256 initialisation failed");
    EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < len; ++k) {
        out += hex[digest[k] >> 4];
        out += hex[digest[k] & 15];
    }
    return out;
}

namespace {

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_bytes(path)); }

std::string input_digest(const std::filesystem::path& path) {
    const std::string bytes = read_bytes(path);
    if (path.extension() != ".json") return sha256_hex(bytes);
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return sha256_hex(bytes);
    if (j.contains("manifest") && j["manifest"].is_object())
        j["manifest"].erase("timing");
    else if (j.contains("command"))
        j.erase("timing");
    return sha256_hex(j.dump());
}

void RunManifest::add_input(const std::filesystem::path& path) {
    inputs.emplace_back(path.string(), input_digest(path));
}

json RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["config"] = config;
    j["seed"] = seed;
    j["inputs"] = json::array();
    for (const auto& [p, digest] : inputs) j["inputs"].push_back({{"path", p}, {"sha256", digest}});

    const std::time_t t = std::chrono::system_clock::to_time_t(started);
    std::tm utc{};
    gmtime_r(&t, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    const std::chrono::duration<double> wall = std::chrono::system_clock::now() - started;
    j["timing"] = {{"started_at", stamp}, {"wall_seconds", wall.count()}};
    return j;
}

} // namespace langdiff
