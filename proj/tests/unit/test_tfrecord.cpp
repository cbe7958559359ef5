#include <doctest.h>

#include <cstring>
#include <random>

#include "estcorpus/error.hpp"
#include "estcorpus/tfrecord.hpp"
#include "test_support.hpp"

using namespace estcorpus;
namespace fs = std::filesystem;

namespace {

SerializedExample random_example(std::mt19937_64& rng) {
  SerializedExample ex;
  const std::size_t L = 8 + rng() % 40;
  const std::size_t P = 1 + rng() % 8;
  for (std::size_t i = 0; i < L; ++i) {
    ex.input_ids.push_back(static_cast<std::int64_t>(rng() % 50000));
    ex.input_mask.push_back(static_cast<std::int64_t>(rng() % 2));
    ex.segment_ids.push_back(static_cast<std::int64_t>(rng() % 2));
  }
  for (std::size_t i = 0; i < P; ++i) {
    ex.masked_lm_positions.push_back(static_cast<std::int64_t>(rng() % L));
    ex.masked_lm_ids.push_back(static_cast<std::int64_t>(rng() % 50000));
    ex.masked_lm_weights.push_back(static_cast<float>(rng() % 2));
  }
  ex.next_sentence_label = static_cast<std::int64_t>(rng() % 2);
  return ex;
}

// Minimal protobuf writer for the oracle encoding of tf.train.Example.
void varint(std::string& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

void field(std::string& out, int number, const std::string& body) {
  varint(out, static_cast<std::uint64_t>(number) << 3 | 2);
  varint(out, body.size());
  out += body;
}

std::string int64_feature(const std::vector<std::int64_t>& vals, bool packed) {
  std::string list;
  if (packed) {
    std::string p;
    for (auto v : vals) varint(p, static_cast<std::uint64_t>(v));
    field(list, 1, p);
  } else {
    for (auto v : vals) {
      varint(list, 1 << 3 | 0);
      varint(list, static_cast<std::uint64_t>(v));
    }
  }
  std::string feature;
  field(feature, 3, list);
  return feature;
}

std::string float_feature(const std::vector<float>& vals) {
  std::string p;
  for (float f : vals) {
    char b[4];
    std::memcpy(b, &f, 4);
    p.append(b, 4);
  }
  std::string list, feature;
  field(list, 1, p);
  field(feature, 2, list);
  return feature;
}

using Entries = std::vector<std::pair<std::string, std::string>>;

std::string oracle_encode(const SerializedExample& ex, bool packed, bool reversed = false, const Entries& extra = {}) {
  std::vector<std::pair<std::string, std::string>> feats = {
      {"input_ids", int64_feature(ex.input_ids, packed)},
      {"input_mask", int64_feature(ex.input_mask, packed)},
      {"segment_ids", int64_feature(ex.segment_ids, packed)},
      {"masked_lm_positions", int64_feature(ex.masked_lm_positions, packed)},
      {"masked_lm_ids", int64_feature(ex.masked_lm_ids, packed)},
      {"masked_lm_weights", float_feature(ex.masked_lm_weights)},
      {"next_sentence_labels", int64_feature({ex.next_sentence_label}, packed)},
  };
  if (reversed) std::reverse(feats.begin(), feats.end());
  feats.insert(feats.end(), extra.begin(), extra.end());
  std::string features;
  for (const auto& [name, value] : feats) {
    std::string entry;
    field(entry, 1, name);
    field(entry, 2, value);
    field(features, 1, entry);
  }
  std::string example;
  field(example, 1, features);
  return example;
}

std::vector<SerializedExample> make_examples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SerializedExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_example(rng));
  return out;
}

}  // namespace

TEST_CASE("crc32c known answers and bitwise oracle") {
  CHECK(crc32c(std::string_view("123456789")) == 0xE3069283u);
  CHECK(crc32c(std::string_view("")) == 0u);
  CHECK(mask_crc(0) == 0xa282ead8u);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    std::string s(rng() % 300, '\0');
    for (auto& c : s) c = static_cast<char>(rng());
    REQUIRE(crc32c(s) == estc_test::crc32c_bitwise(s));
    const auto crc = crc32c(s);
    REQUIRE(unmask_crc(mask_crc(crc)) == crc);
  }
}

TEST_CASE("example encoding matches the oracle byte for byte") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto ex = random_example(rng);
    REQUIRE(encode_example(ex) == oracle_encode(ex, true));
    CHECK(decode_example(oracle_encode(ex, false)) == ex);
    CHECK(decode_example(oracle_encode(ex, true, true)) == ex);
  }
}

TEST_CASE("decoding rejects unknown and missing features") {
  SerializedExample ex;
  ex.input_ids = {1};
  ex.input_mask = {1};
  ex.segment_ids = {0};
  ex.masked_lm_positions = {0};
  ex.masked_lm_ids = {1};
  ex.masked_lm_weights = {1.0f};
  const auto wrapped = oracle_encode(ex, true, false, {{"bogus", int64_feature({1}, true)}});
  try {
    decode_example(wrapped);
    FAIL("expected UnknownFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFeature);
  }
  std::string empty;
  field(empty, 1, "");
  CHECK_THROWS_AS(decode_example(empty), Error);
  CHECK_THROWS_AS(decode_example("\x0a\xff"), Error);
}

TEST_CASE("write/read round-trip on 1000 random examples") {
  estc_test::TempDir dir("tfr");
  const auto examples = make_examples(1000, 3);
  const auto paths = write_tfrecords(examples, dir.path(), 4);
  REQUIRE(paths.size() == 4);
  CHECK(read_tfrecords(paths) == examples);
}

TEST_CASE("record framing matches the container layout") {
  estc_test::TempDir dir("tfr");
  const std::string payload = "hello";
  {
    TFRecordWriter w(dir / "one.tfrecord");
    w.write(payload);
    w.close();
  }
  const auto bytes = estc_test::read_file(dir / "one.tfrecord");
  REQUIRE(bytes.size() == 8 + 4 + payload.size() + 4);
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data(), 8);
  CHECK(len == payload.size());
  std::uint32_t len_crc = 0, data_crc = 0;
  std::memcpy(&len_crc, bytes.data() + 8, 4);
  std::memcpy(&data_crc, bytes.data() + 12 + payload.size(), 4);
  CHECK(len_crc == mask_crc(estc_test::crc32c_bitwise(bytes.substr(0, 8))));
  CHECK(data_crc == mask_crc(estc_test::crc32c_bitwise(payload)));
}

TEST_CASE("every single-byte corruption is detected") {
  estc_test::TempDir dir("tfr");
  const auto examples = make_examples(3, 4);
  const auto paths = write_tfrecords(examples, dir.path(), 1);
  const auto original = estc_test::read_file(paths[0]);
  for (std::size_t i = 0; i < original.size(); ++i) {
    for (unsigned char flip : {0x01, 0x80, 0xFF}) {
      auto bad = original;
      bad[i] = static_cast<char>(bad[i] ^ flip);
      estc_test::write_file(dir / "bad.tfrecord", bad);
      const std::vector<fs::path> p = {dir / "bad.tfrecord"};
      bool detected = false;
      try {
        read_tfrecords(p);
      } catch (const Error& e) {
        detected = e.code() == ErrorCode::CorruptRecord || e.code() == ErrorCode::MalformedRecord;
      }
      if (!detected) FAIL("corruption at byte " << i << " not detected");
    }
  }
}

TEST_CASE("corruption errors say where and which checksum") {
  estc_test::TempDir dir("tfr");
  const auto examples = make_examples(2, 5);
  const auto paths = write_tfrecords(examples, dir.path(), 1);
  const auto original = estc_test::read_file(paths[0]);
  const std::vector<fs::path> p = {dir / "bad.tfrecord"};

  auto expect = [&](std::string bytes, std::uint64_t offset, const std::string& which) {
    estc_test::write_file(dir / "bad.tfrecord", bytes);
    try {
      read_tfrecords(p);
      FAIL("expected CorruptRecordError");
    } catch (const CorruptRecordError& e) {
      CHECK(e.offset() == offset);
      CHECK(e.which() == which);
    }
  };
  std::uint64_t first_len = 0;
  std::memcpy(&first_len, original.data(), 8);
  const std::uint64_t second = 16 + first_len;
  auto b = original;
  b[second + 1] ^= 1;
  expect(b, second, "length");
  b = original;
  b[second + 12] ^= 1;
  expect(b, second, "data");
  expect(original.substr(0, original.size() - 1), second, "truncated");
  expect(original.substr(0, second + 5), second, "truncated");
}

TEST_CASE("shard arithmetic") {
  estc_test::TempDir dir("tfr");
  const auto examples = make_examples(10, 6);
  ShardedExampleWriter w(dir.path(), 4);
  for (const auto& ex : examples) w.write(ex);
  CHECK(w.counts() == std::vector<std::uint64_t>{3, 3, 2, 2});
  const auto paths = w.finish();
  REQUIRE(paths.size() == 4);
  CHECK(paths[0].filename() == "pretrain-0-of-4.tfrecord");
  CHECK(shard_name(3, 4) == "pretrain-3-of-4.tfrecord");
  for (std::size_t s = 0; s < 4; ++s) {
    const std::vector<fs::path> one = {paths[s]};
    const auto got = read_tfrecords(one);
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(got[k] == examples[s + 4 * k]);
  }
  CHECK(read_tfrecords(paths) == examples);

  estc_test::TempDir sparse("tfr");
  const auto two = write_tfrecords(std::span(examples).first(2), sparse.path(), 4);
  for (const auto& p : two) CHECK(fs::exists(p));
  CHECK(fs::file_size(two[3]) == 0);
  CHECK(read_tfrecords(two).size() == 2);
}
