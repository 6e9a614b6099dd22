#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "idsbench/ingest.hpp"

namespace idsbench {

struct RemoteFile {
    std::string url;
    std::string sha256;  // empty when no checksum is pinned
    std::string output_name;
    bool gzip = false;
    bool add_kdd_header = false;  // the raw KDD file has no header row
};

std::vector<RemoteFile> remote_files(DatasetPreset preset);

// Lower-case hex digest. Throws DataError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

// Decompresses src into dst, optionally writing `first_line` before the payload.
void gunzip_file(const std::filesystem::path& src, const std::filesystem::path& dst, const std::string& first_line = {});

struct FetchOptions {
    std::filesystem::path data_dir;
    bool verify = true;
    // Local copy of the archive to install instead of downloading (single-file presets only).
    std::optional<std::filesystem::path> from;
    std::ostream* log = nullptr;
};

// Downloads (or installs from `from`), checks the pinned checksum, and writes the CSV the
// preset expects into data_dir. Files without a pinned checksum get their digest appended
// to data_dir/SHA256SUMS and are verified against it on later runs.
// Throws DataError on network, checksum or I/O failure.
void fetch_dataset(DatasetPreset preset, const FetchOptions& options);

}  // namespace idsbench
