// Minimal tar.gz handling for the dataset archive: enough of the ustar
// format to read and write the published distribution layout, plus an
// HTTP(S)/file fetch helper.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace semcomm {

struct TarEntry {
  std::string name;
  std::vector<std::uint8_t> bytes;
};

// Inflates a .tar.gz and returns its regular-file entries in archive order.
std::vector<TarEntry> read_tar_gz(const std::filesystem::path& path);

// Writes entries as a ustar tar compressed with gzip. Headers carry fixed
// metadata (mtime 0, mode 0644) so identical entries produce an
// identical archive byte for byte.
void write_tar_gz(const std::filesystem::path& path,
                  const std::vector<TarEntry>& entries);

// Downloads url to dest (http, https or file url). Throws on any
// transport failure; partially written output is removed.
void fetch_url(const std::string& url, const std::filesystem::path& dest);

}  // namespace semcomm
