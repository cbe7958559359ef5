#include "estcorpus/tfrecord.hpp"

#include <array>
#include <bit>
#include <cstring>

#include <boost/crc.hpp>
#include <fmt/format.h>

#include "estcorpus/error.hpp"

namespace estcorpus {

namespace {

using Crc32c = boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true>;

constexpr std::array<std::string_view, 7> kFeatureNames = {
    "input_ids",     "input_mask",        "segment_ids",         "masked_lm_positions",
    "masked_lm_ids", "masked_lm_weights", "next_sentence_labels"};

void put_le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_le64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const char* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t{static_cast<unsigned char>(p[i])} << (8 * i);
  return v;
}

void put_varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

void put_tag(std::string& out, std::uint32_t field, std::uint32_t wire) { put_varint(out, (field << 3) | wire); }

void put_bytes(std::string& out, std::uint32_t field, std::string_view bytes) {
  put_tag(out, field, 2);
  put_varint(out, bytes.size());
  out.append(bytes);
}

std::string int64_feature(std::span<const std::int64_t> values) {
  std::string packed;
  for (const auto v : values) put_varint(packed, static_cast<std::uint64_t>(v));
  std::string list;
  put_bytes(list, 1, packed);
  std::string feature;
  put_bytes(feature, 3, list);
  return feature;
}

std::string float_feature(std::span<const float> values) {
  std::string packed;
  for (const auto v : values) put_le32(packed, std::bit_cast<std::uint32_t>(v));
  std::string list;
  put_bytes(list, 1, packed);
  std::string feature;
  put_bytes(feature, 2, list);
  return feature;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedRecord, "malformed Example payload: " + what);
}

// Minimal protobuf cursor.
class Wire {
 public:
  explicit Wire(std::string_view data) : data_(data) {}
  bool done() const noexcept { return pos_ >= data_.size(); }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 70; shift += 7) {
      if (pos_ >= data_.size()) malformed("truncated varint");
      const auto byte = static_cast<unsigned char>(data_[pos_++]);
      if (shift == 63 && byte > 1) malformed("varint overflow");
      v |= std::uint64_t{byte & 0x7Fu} << shift;
      if (!(byte & 0x80)) return v;
    }
    malformed("varint too long");
  }

  std::string_view bytes() {
    const auto n = varint();
    if (n > data_.size() - pos_) malformed("length-delimited field overruns message");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::string_view fixed(std::size_t n) {
    if (n > data_.size() - pos_) malformed("truncated fixed-width field");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void skip(std::uint32_t wire) {
    switch (wire) {
      case 0: varint(); break;
      case 1: fixed(8); break;
      case 2: bytes(); break;
      case 5: fixed(4); break;
      default: malformed(fmt::format("unsupported wire type {}", wire));
    }
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

struct DecodedFeature {
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  bool is_float = false;
};

DecodedFeature decode_feature(std::string_view bytes) {
  DecodedFeature f;
  Wire w(bytes);
  while (!w.done()) {
    const auto key = w.varint();
    const auto field = key >> 3;
    const auto wire = static_cast<std::uint32_t>(key & 7);
    if ((field == 2 || field == 3) && wire == 2) {
      f.is_float = field == 2;
      Wire list(w.bytes());
      while (!list.done()) {
        const auto lkey = list.varint();
        const auto lwire = static_cast<std::uint32_t>(lkey & 7);
        if ((lkey >> 3) != 1) {
          list.skip(lwire);
          continue;
        }
        if (f.is_float) {
          auto take = [&](std::string_view raw) {
            f.floats.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(get_le(raw.data(), 4))));
          };
          if (lwire == 2) {
            Wire packed(list.bytes());
            while (!packed.done()) take(packed.fixed(4));
          } else if (lwire == 5) {
            take(list.fixed(4));
          } else {
            malformed("bad FloatList encoding");
          }
        } else {
          if (lwire == 2) {
            Wire packed(list.bytes());
            while (!packed.done()) f.ints.push_back(static_cast<std::int64_t>(packed.varint()));
          } else if (lwire == 0) {
            f.ints.push_back(static_cast<std::int64_t>(list.varint()));
          } else {
            malformed("bad Int64List encoding");
          }
        }
      }
    } else if (field == 1 && wire == 2) {
      malformed("bytes_list features are not expected");
    } else {
      w.skip(wire);
    }
  }
  return f;
}

}  // namespace

std::uint32_t crc32c(std::span<const std::uint8_t> bytes) noexcept {
  Crc32c crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::uint32_t crc32c(std::string_view bytes) noexcept {
  Crc32c crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::uint32_t mask_crc(std::uint32_t crc) noexcept { return ((crc >> 15) | (crc << 17)) + 0xa282ead8u; }

std::uint32_t unmask_crc(std::uint32_t masked) noexcept {
  const std::uint32_t rot = masked - 0xa282ead8u;
  return (rot >> 17) | (rot << 15);
}

std::string encode_example(const SerializedExample& ex) {
  const std::int64_t label[] = {ex.next_sentence_label};
  const std::string features[] = {
      int64_feature(ex.input_ids),     int64_feature(ex.input_mask),        int64_feature(ex.segment_ids),
      int64_feature(ex.masked_lm_positions), int64_feature(ex.masked_lm_ids), float_feature(ex.masked_lm_weights),
      int64_feature(label)};
  std::string map;
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    std::string entry;
    put_bytes(entry, 1, kFeatureNames[i]);
    put_bytes(entry, 2, features[i]);
    put_bytes(map, 1, entry);
  }
  std::string example;
  put_bytes(example, 1, map);
  return example;
}

SerializedExample decode_example(std::string_view payload) {
  SerializedExample ex;
  std::array<bool, kFeatureNames.size()> seen{};
  Wire w(payload);
  while (!w.done()) {
    const auto key = w.varint();
    if ((key >> 3) != 1 || (key & 7) != 2) {
      w.skip(static_cast<std::uint32_t>(key & 7));
      continue;
    }
    Wire features(w.bytes());
    while (!features.done()) {
      const auto fkey = features.varint();
      if ((fkey >> 3) != 1 || (fkey & 7) != 2) {
        features.skip(static_cast<std::uint32_t>(fkey & 7));
        continue;
      }
      Wire entry(features.bytes());
      std::string_view name;
      std::string_view value;
      while (!entry.done()) {
        const auto ekey = entry.varint();
        if ((ekey & 7) != 2) {
          entry.skip(static_cast<std::uint32_t>(ekey & 7));
        } else if ((ekey >> 3) == 1) {
          name = entry.bytes();
        } else if ((ekey >> 3) == 2) {
          value = entry.bytes();
        } else {
          entry.skip(2);
        }
      }
      std::size_t idx = 0;
      while (idx < kFeatureNames.size() && kFeatureNames[idx] != name) ++idx;
      if (idx == kFeatureNames.size())
        throw Error(ErrorCode::UnknownFeature, fmt::format("unknown feature '{}'", name));
      auto f = decode_feature(value);
      const bool want_float = idx == 5;
      if (f.is_float != want_float && !(f.ints.empty() && f.floats.empty()))
        malformed(fmt::format("feature '{}' has the wrong list type", name));
      seen[idx] = true;
      switch (idx) {
        case 0: ex.input_ids = std::move(f.ints); break;
        case 1: ex.input_mask = std::move(f.ints); break;
        case 2: ex.segment_ids = std::move(f.ints); break;
        case 3: ex.masked_lm_positions = std::move(f.ints); break;
        case 4: ex.masked_lm_ids = std::move(f.ints); break;
        case 5: ex.masked_lm_weights = std::move(f.floats); break;
        case 6:
          if (f.ints.size() != 1) malformed("next_sentence_labels must hold one value");
          ex.next_sentence_label = f.ints[0];
          break;
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) malformed(fmt::format("feature '{}' missing", kFeatureNames[i]));
  return ex;
}

TFRecordWriter::TFRecordWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
}

void TFRecordWriter::write(std::string_view payload) {
  std::string header;
  put_le64(header, payload.size());
  const auto len_crc = mask_crc(crc32c(header));
  put_le32(header, len_crc);
  std::string footer;
  put_le32(footer, mask_crc(crc32c(payload)));
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
  out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out_.write(footer.data(), static_cast<std::streamsize>(footer.size()));
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("write to '{}' failed", path_.string()));
  ++records_;
}

void TFRecordWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (out_.fail()) throw Error(ErrorCode::IoError, fmt::format("closing '{}' failed", path_.string()));
}

TFRecordReader::TFRecordReader(const std::filesystem::path& path)
    : path_(path.string()), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot open '{}'", path_));
}

std::optional<std::string> TFRecordReader::next() {
  char header[12];
  in_.read(header, sizeof header);
  const auto got = in_.gcount();
  if (got == 0) return std::nullopt;
  if (got != static_cast<std::streamsize>(sizeof header)) throw CorruptRecordError(path_, offset_, "truncated");
  const std::uint64_t length = get_le(header, 8);
  if (mask_crc(crc32c(std::string_view(header, 8))) != get_le(header + 8, 4))
    throw CorruptRecordError(path_, offset_, "length");
  std::string payload;
  char footer[4];
  try {
    payload.resize(length);
  } catch (const std::exception&) {
    throw CorruptRecordError(path_, offset_, "truncated");
  }
  in_.read(payload.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in_.gcount()) != length) throw CorruptRecordError(path_, offset_, "truncated");
  in_.read(footer, sizeof footer);
  if (in_.gcount() != static_cast<std::streamsize>(sizeof footer)) throw CorruptRecordError(path_, offset_, "truncated");
  if (mask_crc(crc32c(payload)) != get_le(footer, 4)) throw CorruptRecordError(path_, offset_, "data");
  offset_ += sizeof header + length + sizeof footer;
  return payload;
}

std::string shard_name(std::uint32_t index, std::uint32_t shards) {
  return fmt::format("pretrain-{}-of-{}.tfrecord", index, shards);
}

ShardedExampleWriter::ShardedExampleWriter(const std::filesystem::path& out_dir, std::uint32_t shards) {
  if (shards < 1) throw Error(ErrorCode::InvalidArgument, "shards must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  for (std::uint32_t i = 0; i < shards; ++i) {
    paths_.push_back(out_dir / shard_name(i, shards));
    writers_.push_back(std::make_unique<TFRecordWriter>(paths_.back()));
  }
}

void ShardedExampleWriter::write(const SerializedExample& ex) {
  writers_[written_ % writers_.size()]->write(encode_example(ex));
  ++written_;
}

std::vector<std::filesystem::path> ShardedExampleWriter::finish() {
  for (auto& w : writers_) w->close();
  return paths_;
}

std::vector<std::uint64_t> ShardedExampleWriter::counts() const {
  std::vector<std::uint64_t> out;
  for (const auto& w : writers_) out.push_back(w->records());
  return out;
}

std::vector<std::filesystem::path> write_tfrecords(std::span<const SerializedExample> examples,
                                                   const std::filesystem::path& out_dir, std::uint32_t shards) {
  ShardedExampleWriter writer(out_dir, shards);
  for (const auto& ex : examples) writer.write(ex);
  return writer.finish();
}

void for_each_example(std::span<const std::filesystem::path> paths,
                      const std::function<void(SerializedExample&&)>& sink) {
  std::vector<std::unique_ptr<TFRecordReader>> readers;
  for (const auto& p : paths) readers.push_back(std::make_unique<TFRecordReader>(p));
  std::vector<bool> live(readers.size(), true);
  std::size_t remaining = readers.size();
  while (remaining > 0) {
    for (std::size_t i = 0; i < readers.size(); ++i) {
      if (!live[i]) continue;
      auto rec = readers[i]->next();
      if (!rec) {
        live[i] = false;
        --remaining;
        continue;
      }
      sink(decode_example(*rec));
    }
  }
}

std::vector<SerializedExample> read_tfrecords(std::span<const std::filesystem::path> paths) {
  std::vector<SerializedExample> out;
  for_each_example(paths, [&](SerializedExample&& ex) { out.push_back(std::move(ex)); });
  return out;
}

}  // namespace estcorpus
