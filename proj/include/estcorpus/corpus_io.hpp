#pragma once

// Streaming readers and writers for the three corpus container formats:
//
//   vert-xml        <doc id=".." lang="..">...</doc> elements; inner markup is
//                   kept verbatim, &amp; &lt; &gt; &quot; &apos; are decoded.
//                   Reconstructed layout: the source corpus format is not
//                   documented beyond <doc> boundaries and attributes.
//   blankline-text  blocks of non-blank lines separated by blank lines; ids are
//                   synthesized as "doc-<ordinal>".
//   json-lines      {"text": .., "id": .., "lang": .., "lemmas": [..]} per line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "estcorpus/document.hpp"

namespace estcorpus {

enum class CorpusFormat { VertXml, BlanklineText, JsonLines };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat f) noexcept;

class DocumentReader {
 public:
  DocumentReader(const std::filesystem::path& path, CorpusFormat format);
  ~DocumentReader();
  DocumentReader(const DocumentReader&) = delete;
  DocumentReader& operator=(const DocumentReader&) = delete;
  DocumentReader(DocumentReader&&) noexcept;
  DocumentReader& operator=(DocumentReader&&) noexcept;

  // Next document in file order, or nullopt at end of input.
  std::optional<Document> next();

  std::uint64_t line_no() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class DocumentWriter {
 public:
  DocumentWriter(const std::filesystem::path& path, CorpusFormat format);
  ~DocumentWriter();
  DocumentWriter(const DocumentWriter&) = delete;
  DocumentWriter& operator=(const DocumentWriter&) = delete;

  void write(const Document& doc);
  // Flushes and closes; returns the number of documents written.
  std::uint64_t finish();
  std::uint64_t written() const noexcept { return written_; }

 private:
  void write_vert(const Document& doc);
  void write_blankline(const Document& doc);
  void write_jsonl(const Document& doc);

  std::filesystem::path path_;
  CorpusFormat format_;
  std::ofstream out_;
  std::uint64_t written_ = 0;
  bool finished_ = false;
};

// Convenience wrappers over the streaming classes.
void for_each_document(const std::filesystem::path& path, CorpusFormat format,
                       const std::function<void(Document&&)>& fn);
std::vector<Document> read_documents(const std::filesystem::path& path, CorpusFormat format);
std::uint64_t write_documents(const std::vector<Document>& docs, const std::filesystem::path& path,
                              CorpusFormat format);
CorpusStats compute_file_stats(const std::filesystem::path& path, CorpusFormat format);

// XML escaping used by the vert-xml writer (text: & < >; attributes add ").
std::string xml_escape(std::string_view s, bool attribute);
std::string xml_unescape(std::string_view s);

}  // namespace estcorpus
