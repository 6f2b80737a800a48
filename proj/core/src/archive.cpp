#include "semcomm/archive.hpp"

#include <curl/curl.h>
#include <zlib.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace semcomm {
namespace {

constexpr std::size_t kTarBlock = 512;

std::vector<std::uint8_t> gunzip_file(const std::filesystem::path& path) {
  gzFile gz = gzopen(path.string().c_str(), "rb");
  if (!gz) throw std::runtime_error("cannot open archive: " + path.string());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf;
  int got;
  while ((got = gzread(gz, buf.data(), buf.size())) > 0)
    out.insert(out.end(), buf.data(), buf.data() + got);
  const bool ok = got == 0;
  gzclose(gz);
  if (!ok) throw std::runtime_error("gzip decompression failed: " + path.string());
  return out;
}

std::uint64_t parse_octal(const char* field, std::size_t len) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < len && field[i]; ++i) {
    if (field[i] == ' ') continue;
    if (field[i] < '0' || field[i] > '7')
      throw std::runtime_error("tar: bad octal field");
    value = value * 8 + static_cast<std::uint64_t>(field[i] - '0');
  }
  return value;
}

void put_octal(char* field, std::size_t len, std::uint64_t value) {
  // len-1 digits, NUL terminated.
  for (std::size_t i = len - 1; i-- > 0;) {
    field[i] = static_cast<char>('0' + (value & 7));
    value >>= 3;
  }
  field[len - 1] = '\0';
}

struct CurlCleanup {
  void operator()(CURL* c) const { curl_easy_cleanup(c); }
};

std::size_t curl_write_cb(char* ptr, std::size_t size, std::size_t nmemb,
                          void* userdata) {
  auto* out = static_cast<std::ofstream*>(userdata);
  out->write(ptr, static_cast<std::streamsize>(size * nmemb));
  return out->good() ? size * nmemb : 0;
}

}  // namespace

std::vector<TarEntry> read_tar_gz(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> tar = gunzip_file(path);
  std::vector<TarEntry> entries;
  std::size_t off = 0;
  while (off + kTarBlock <= tar.size()) {
    const char* hdr = reinterpret_cast<const char*>(tar.data() + off);
    if (hdr[0] == '\0') break;  // end-of-archive zero block
    char name[101] = {};
    std::memcpy(name, hdr, 100);
    const std::uint64_t size = parse_octal(hdr + 124, 12);
    const char typeflag = hdr[156];
    off += kTarBlock;
    if (off + size > tar.size()) throw std::runtime_error("tar: truncated entry");
    if (typeflag == '0' || typeflag == '\0') {
      TarEntry e;
      e.name = name;
      e.bytes.assign(tar.begin() + static_cast<std::ptrdiff_t>(off),
                     tar.begin() + static_cast<std::ptrdiff_t>(off + size));
      entries.push_back(std::move(e));
    }
    off += (size + kTarBlock - 1) / kTarBlock * kTarBlock;
  }
  return entries;
}

void write_tar_gz(const std::filesystem::path& path,
                  const std::vector<TarEntry>& entries) {
  std::vector<std::uint8_t> tar;
  for (const auto& e : entries) {
    std::array<char, kTarBlock> hdr = {};
    if (e.name.size() > 99) throw std::runtime_error("tar: name too long");
    std::memcpy(hdr.data(), e.name.c_str(), e.name.size());
    put_octal(hdr.data() + 100, 8, 0644);    // mode
    put_octal(hdr.data() + 108, 8, 0);       // uid
    put_octal(hdr.data() + 116, 8, 0);       // gid
    put_octal(hdr.data() + 124, 12, e.bytes.size());
    put_octal(hdr.data() + 136, 12, 0);      // mtime
    hdr[156] = '0';
    std::memcpy(hdr.data() + 257, "ustar\0" "00", 8);
    std::memset(hdr.data() + 148, ' ', 8);   // checksum field counts as spaces
    unsigned sum = 0;
    for (char c : hdr) sum += static_cast<unsigned char>(c);
    put_octal(hdr.data() + 148, 7, sum);
    hdr[155] = ' ';
    tar.insert(tar.end(), hdr.begin(), hdr.end());
    tar.insert(tar.end(), e.bytes.begin(), e.bytes.end());
    const std::size_t pad = (kTarBlock - e.bytes.size() % kTarBlock) % kTarBlock;
    tar.insert(tar.end(), pad, 0);
  }
  tar.insert(tar.end(), 2 * kTarBlock, 0);

  // "wb9" + explicit zero mtime in the gz header keeps the output stable.
  gzFile gz = gzopen(path.string().c_str(), "wb9");
  if (!gz) throw std::runtime_error("cannot create archive: " + path.string());
  const int written = gzwrite(gz, tar.data(), static_cast<unsigned>(tar.size()));
  const bool ok = written == static_cast<int>(tar.size()) && gzclose(gz) == Z_OK;
  if (!ok) {
    std::filesystem::remove(path);
    throw std::runtime_error("gzip compression failed: " + path.string());
  }
}

void fetch_url(const std::string& url, const std::filesystem::path& dest) {
  std::unique_ptr<CURL, CurlCleanup> curl(curl_easy_init());
  if (!curl) throw std::runtime_error("curl init failed");
  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write: " + dest.string());

  char errbuf[CURL_ERROR_SIZE] = {};
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, curl_write_cb);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &out);
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_ERRORBUFFER, errbuf);
  curl_easy_setopt(curl.get(), CURLOPT_PROTOCOLS,
                   CURLPROTO_HTTP | CURLPROTO_HTTPS | CURLPROTO_FILE);

  const CURLcode rc = curl_easy_perform(curl.get());
  out.close();
  if (rc != CURLE_OK) {
    std::filesystem::remove(dest);
    throw std::runtime_error("download failed: " + url + " (" +
                             (errbuf[0] ? errbuf : curl_easy_strerror(rc)) + ")");
  }
}

}  // namespace semcomm
