#pragma once

// TFRecord container and the tf.train.Example wire format, written by hand.
// Record: u64 LE length, u32 LE masked crc32c(length), payload, u32 LE masked crc32c(payload).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "estcorpus/pretrain.hpp"

namespace estcorpus {

std::uint32_t crc32c(std::span<const std::uint8_t> bytes) noexcept;
std::uint32_t crc32c(std::string_view bytes) noexcept;
std::uint32_t mask_crc(std::uint32_t crc) noexcept;
std::uint32_t unmask_crc(std::uint32_t masked) noexcept;

// Features are emitted in a fixed order with packed repeated fields.
std::string encode_example(const SerializedExample& ex);
// Accepts packed and unpacked encodings in any feature order.
SerializedExample decode_example(std::string_view payload);

class TFRecordWriter {
 public:
  explicit TFRecordWriter(const std::filesystem::path& path);
  void write(std::string_view payload);
  void close();
  std::uint64_t records() const noexcept { return records_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t records_ = 0;
};

class TFRecordReader {
 public:
  explicit TFRecordReader(const std::filesystem::path& path);
  // Byte offset of the next record header.
  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::string> next();

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

std::string shard_name(std::uint32_t index, std::uint32_t shards);

// Example k goes to shard k mod n; all n files exist even when empty.
class ShardedExampleWriter {
 public:
  ShardedExampleWriter(const std::filesystem::path& out_dir, std::uint32_t shards);
  void write(const SerializedExample& ex);
  // Returns the shard paths in index order.
  std::vector<std::filesystem::path> finish();
  std::vector<std::uint64_t> counts() const;

 private:
  std::vector<std::filesystem::path> paths_;
  std::vector<std::unique_ptr<TFRecordWriter>> writers_;
  std::uint64_t written_ = 0;
};

std::vector<std::filesystem::path> write_tfrecords(std::span<const SerializedExample> examples,
                                                   const std::filesystem::path& out_dir, std::uint32_t shards);

// Reads shards round-robin, which restores the global write order when
// `paths` are the shards in index order.
void for_each_example(std::span<const std::filesystem::path> paths,
                      const std::function<void(SerializedExample&&)>& sink);
std::vector<SerializedExample> read_tfrecords(std::span<const std::filesystem::path> paths);

}  // namespace estcorpus
