#include "idsbench/fetch.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "idsbench/error.hpp"

namespace idsbench {

namespace {

constexpr const char* kSumsFile = "SHA256SUMS";

std::string hex(const unsigned char* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        out += digits[data[i] >> 4];
        out += digits[data[i] & 0xF];
    }
    return out;
}

std::map<std::string, std::string> read_sums(const std::filesystem::path& dir) {
    std::map<std::string, std::string> sums;
    std::ifstream in(dir / kSumsFile);
    std::string digest;
    std::string name;
    while (in >> digest >> name) sums[name] = digest;
    return sums;
}

void append_sum(const std::filesystem::path& dir, const std::string& name, const std::string& digest) {
    std::ofstream out(dir / kSumsFile, std::ios::app);
    if (!out) throw DataError("cannot write '" + (dir / kSumsFile).string() + "'");
    out << digest << "  " << name << '\n';
}

void download(const std::string& url, const std::filesystem::path& dst, std::ostream* log) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (scheme_end == std::string::npos || path_start == std::string::npos) throw DataError("bad url '" + url + "'");
    httplib::Client client(url.substr(0, path_start));
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(300);

    std::ofstream out(dst, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + dst.string() + "'");
    std::size_t received = 0;
    const auto res = client.Get(url.substr(path_start), [&](const char* data, std::size_t len) {
        out.write(data, static_cast<std::streamsize>(len));
        received += len;
        return static_cast<bool>(out);
    });
    if (!res) throw DataError("download of '" + url + "' failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw DataError("download of '" + url + "' returned HTTP " + std::to_string(res->status));
    out.close();
    if (!out) throw DataError("write failed for '" + dst.string() + "'");
    if (log != nullptr) *log << "downloaded " << received << " bytes from " << url << '\n';
}

std::string header_line() {
    std::string line;
    for (const auto& name : kdd99_header()) {
        if (!line.empty()) line += ',';
        line += name;
    }
    return line;
}

}  // namespace

std::vector<RemoteFile> remote_files(DatasetPreset preset) {
    switch (preset) {
        case DatasetPreset::kdd99:
            return {{"https://ndownloader.figshare.com/files/5976042",
                     "8045aca0d84e70e622d1148d7df782496f6333bf6eb979a1b0837c42a9fd9561", "kddcup.data_10_percent.csv",
                     true, true}};
        case DatasetPreset::cicids2018: {
            const char* days[] = {"Wednesday-14-02", "Thursday-15-02", "Friday-16-02", "Tuesday-20-02",
                                  "Wednesday-21-02", "Thursday-22-02", "Friday-23-02", "Wednesday-28-02",
                                  "Thursday-01-03", "Friday-02-03"};
            std::vector<RemoteFile> files;
            for (const char* d : days) {
                const std::string name = std::string(d) + "-2018_TrafficForML_CICFlowMeter.csv";
                files.push_back({"https://cse-cic-ids2018.s3.ca-central-1.amazonaws.com/"
                                 "Processed%20Traffic%20Data%20for%20ML%20Algorithms/" +
                                     name,
                                 "", name, false, false});
            }
            return files;
        }
        case DatasetPreset::custom:
            break;
    }
    throw ConfigError("fetch-data: the custom preset has no download source");
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw DataError("sha256: init failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    if (in.bad()) throw DataError("read error on '" + path.string() + "'");
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    return hex(md.data(), len);
}

void gunzip_file(const std::filesystem::path& src, const std::filesystem::path& dst, const std::string& first_line) {
    gzFile gz = gzopen(src.string().c_str(), "rb");
    if (gz == nullptr) throw DataError("cannot open '" + src.string() + "'");
    std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(gz, gzclose);
    std::ofstream out(dst, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + dst.string() + "'");
    if (!first_line.empty()) out << first_line << '\n';
    std::array<char, 1 << 16> buf{};
    for (;;) {
        const int n = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()));
        if (n < 0) {
            int err = 0;
            throw DataError("gunzip '" + src.string() + "': " + gzerror(gz, &err));
        }
        if (n == 0) break;
        out.write(buf.data(), n);
    }
    out.close();
    if (!out) throw DataError("write failed for '" + dst.string() + "'");
}

void fetch_dataset(DatasetPreset preset, const FetchOptions& options) {
    const auto files = remote_files(preset);
    if (options.from && files.size() != 1) throw ConfigError("fetch-data: --from needs a single-file dataset");
    std::error_code ec;
    std::filesystem::create_directories(options.data_dir, ec);
    if (ec) throw DataError("cannot create '" + options.data_dir.string() + "': " + ec.message());

    auto sums = read_sums(options.data_dir);
    for (const auto& file : files) {
        const auto target = options.data_dir / file.output_name;
        std::filesystem::path payload = target;
        if (options.from) {
            payload = *options.from;
        } else if (file.gzip) {
            payload = options.data_dir / (file.output_name + ".gz");
            download(file.url, payload, options.log);
        } else if (!std::filesystem::exists(target)) {
            download(file.url, target, options.log);
        }

        if (options.verify) {
            const std::string digest = sha256_file(payload);
            const std::string& pinned = !file.sha256.empty() ? file.sha256 : sums[file.output_name];
            if (pinned.empty()) {
                append_sum(options.data_dir, file.output_name, digest);
                sums[file.output_name] = digest;
                if (options.log != nullptr) *options.log << file.output_name << ": no pinned checksum, recorded " << digest << '\n';
            } else if (digest != pinned) {
                throw DataError("checksum mismatch for '" + payload.string() + "': expected " + pinned + ", got " + digest);
            } else if (options.log != nullptr) {
                *options.log << file.output_name << ": sha256 ok\n";
            }
        }

        if (file.gzip) {
            gunzip_file(payload, target, file.add_kdd_header ? header_line() : std::string());
        } else if (payload != target) {
            std::filesystem::copy_file(payload, target, std::filesystem::copy_options::overwrite_existing, ec);
            if (ec) throw DataError("cannot copy to '" + target.string() + "': " + ec.message());
        }
        if (options.log != nullptr) *options.log << "wrote " << target.string() << '\n';
    }
}

}  // namespace idsbench
