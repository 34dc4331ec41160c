#pragma once

// Channel CSV ingestion and the binary record container.
//
// Record container layout (little-endian):
//   char[4]  magic "BZRC"
//   u16      version (1)
//   u32      whale_id byte length, followed by the bytes
//   u8       has_t0, f64 t0
//   f64      sample_rate
//   u64      N
//   f64[N]   ax, then ay, az, depth
//   u8[N]    phase, then buzz
//   u32      FNV-1a checksum of all preceding bytes

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FormatError("write to '" + path + "' failed");
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto c = line.find(',', pos);
    out.push_back(trim(line.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos)));
    if (c == std::string_view::npos) break;
    pos = c + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw FormatError(where + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, const std::string& where) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw FormatError(where + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

/// A parsed CSV table: header plus rows of string cells, with line numbers.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_no;

  std::string where(std::size_t row) const { return path + ":" + std::to_string(line_no[row]); }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open '" + path + "' for reading");
  CsvTable t;
  t.path = path;
  std::string line;
  std::size_t ln = 0;
  while (std::getline(f, line)) {
    ++ln;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw FormatError(path + ":" + std::to_string(ln) + ": expected " + std::to_string(t.header.size()) +
                        " columns, found " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
    t.line_no.push_back(ln);
  }
  if (t.header.empty()) throw FormatError(path + ": empty file, missing header");
  return t;
}

inline void expect_header(const CsvTable& t, const std::vector<std::string>& want) {
  if (t.header != want) {
    std::string w;
    for (const auto& h : want) w += (w.empty() ? "" : ",") + h;
    throw FormatError(t.path + ":1: expected header '" + w + "'");
  }
}

// Checks that the idx column counts 0, 1, 2, ...
inline void check_index(const CsvTable& t, std::size_t row) {
  if (parse_int(t.rows[row][0], t.where(row)) != static_cast<long long>(row))
    throw FormatError(t.where(row) + ": idx must be monotone from 0");
}

struct AccelColumns {
  std::vector<double> x, y, z;
};

inline AccelColumns read_accel_csv(const std::string& path) {
  const auto t = read_csv(path);
  expect_header(t, {"idx", "ax_mG", "ay_mG", "az_mG"});
  AccelColumns a;
  a.x.reserve(t.rows.size());
  a.y.reserve(t.rows.size());
  a.z.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_index(t, r);
    a.x.push_back(parse_double(t.rows[r][1], t.where(r)));
    a.y.push_back(parse_double(t.rows[r][2], t.where(r)));
    a.z.push_back(parse_double(t.rows[r][3], t.where(r)));
  }
  return a;
}

inline std::vector<double> read_depth_csv(const std::string& path) {
  const auto t = read_csv(path);
  expect_header(t, {"idx", "depth_m"});
  std::vector<double> d;
  d.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_index(t, r);
    d.push_back(parse_double(t.rows[r][1], t.where(r)));
  }
  return d;
}

/// Buzz labels: `idx,buzz` (10 Hz binary) or `start_s,end_s` (intervals), chosen by header.
inline std::variant<BuzzLabels10Hz, BuzzIntervals> read_buzz_csv(const std::string& path) {
  const auto t = read_csv(path);
  if (t.header == std::vector<std::string>{"idx", "buzz"}) {
    BuzzLabels10Hz b;
    b.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      check_index(t, r);
      const auto v = parse_int(t.rows[r][1], t.where(r));
      if (v != 0 && v != 1) throw ValidationError(t.where(r) + ": buzz must be 0 or 1");
      b.push_back(static_cast<std::uint8_t>(v));
    }
    return b;
  }
  if (t.header == std::vector<std::string>{"start_s", "end_s"}) {
    BuzzIntervals iv;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
      iv.push_back({parse_double(t.rows[r][0], t.where(r)), parse_double(t.rows[r][1], t.where(r))});
    return iv;
  }
  throw FormatError(path + ":1: buzz header must be 'idx,buzz' or 'start_s,end_s'");
}

inline RawChannels read_raw_channels(const std::string& whale_id, const std::string& accel_path,
                                     const std::string& depth_path, const std::string& buzz_path) {
  RawChannels raw;
  raw.whale_id = whale_id;
  auto a = read_accel_csv(accel_path);
  raw.accel_x = std::move(a.x);
  raw.accel_y = std::move(a.y);
  raw.accel_z = std::move(a.z);
  raw.depth = read_depth_csv(depth_path);
  raw.buzz = read_buzz_csv(buzz_path);
  return raw;
}

// Minimal little-endian byte writer/reader shared by the binary formats.
class ByteWriter {
public:
  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.append(s); }
  void put_string(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s);
  }
  template <class T>
  void put_array(const std::vector<T>& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
  }
  // Appends the FNV-1a checksum of everything written so far.
  std::string finish() {
    put<std::uint32_t>(fnv1a(buf_));
    return std::move(buf_);
  }
  static std::uint32_t fnv1a(std::string_view s) {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
      h ^= c;
      h *= 16777619u;
    }
    return h;
  }

private:
  std::string buf_;
};

class ByteReader {
public:
  // Verifies the trailing checksum before any field is read.
  ByteReader(std::string_view bytes, std::string what) : what_(std::move(what)) {
    if (bytes.size() < 4) throw FormatError(what_ + ": truncated file");
    const auto body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), 4);
    if (stored != ByteWriter::fnv1a(body)) throw FormatError(what_ + ": checksum mismatch (truncated or corrupt)");
    data_ = body;
  }
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string get_string() { return get_bytes(get<std::uint32_t>()); }
  template <class T>
  std::vector<T> get_array(std::size_t n) {
    if (n > (data_.size() - pos_) / sizeof(T)) throw FormatError(what_ + ": truncated payload");
    std::vector<T> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }
  const std::string& what() const { return what_; }

private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw FormatError(what_ + ": truncated payload");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

inline constexpr char kRecordMagic[4] = {'B', 'Z', 'R', 'C'};
inline constexpr std::uint16_t kRecordVersion = 1;

inline std::string encode_record(const WhaleRecord& r) {
  r.validate();
  ByteWriter w;
  w.put_bytes(std::string_view(kRecordMagic, 4));
  w.put<std::uint16_t>(kRecordVersion);
  w.put_string(r.whale_id);
  w.put<std::uint8_t>(r.t0.has_value() ? 1 : 0);
  w.put<double>(r.t0.value_or(0.0));
  w.put<double>(r.sample_rate);
  w.put<std::uint64_t>(r.size());
  w.put_array(r.ax);
  w.put_array(r.ay);
  w.put_array(r.az);
  w.put_array(r.depth);
  w.put_array(r.phase);
  w.put_array(r.buzz);
  return w.finish();
}

inline WhaleRecord decode_record(std::string_view bytes, const std::string& what = "record") {
  ByteReader rd(bytes, what);
  if (rd.get_bytes(4) != std::string_view(kRecordMagic, 4)) throw FormatError(what + ": not a record file (bad magic)");
  const auto version = rd.get<std::uint16_t>();
  if (version != kRecordVersion)
    throw FormatError(what + ": unsupported record version " + std::to_string(version));
  WhaleRecord r;
  r.whale_id = rd.get_string();
  const auto has_t0 = rd.get<std::uint8_t>();
  const auto t0 = rd.get<double>();
  if (has_t0) r.t0 = t0;
  r.sample_rate = rd.get<double>();
  const auto n = static_cast<std::size_t>(rd.get<std::uint64_t>());
  r.ax = rd.get_array<double>(n);
  r.ay = rd.get_array<double>(n);
  r.az = rd.get_array<double>(n);
  r.depth = rd.get_array<double>(n);
  r.phase = rd.get_array<DivePhase>(n);
  r.buzz = rd.get_array<std::uint8_t>(n);
  if (!rd.at_end()) throw FormatError(what + ": trailing bytes after payload");
  r.validate();
  return r;
}

inline void save_record(const WhaleRecord& r, const std::string& path) { write_file(path, encode_record(r)); }

inline WhaleRecord load_record(const std::string& path) { return decode_record(read_file(path), path); }

/// Shortest round-trippable decimal text for a double.
inline std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace buzzdet::io
