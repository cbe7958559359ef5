#include "estcorpus/corpus_io.hpp"

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace fs = std::filesystem;
using nlohmann::json;

CorpusStats document_stats(const Document& doc) {
  return {1, text::count_sentences(doc.text), text::count_words(doc.text)};
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "vert-xml") return CorpusFormat::VertXml;
  if (name == "blankline-text") return CorpusFormat::BlanklineText;
  if (name == "json-lines") return CorpusFormat::JsonLines;
  throw Error(ErrorCode::InvalidArgument,
              fmt::format("unknown corpus format '{}' (expected vert-xml, blankline-text or json-lines)", name));
}

std::string_view corpus_format_name(CorpusFormat f) noexcept {
  switch (f) {
    case CorpusFormat::VertXml: return "vert-xml";
    case CorpusFormat::BlanklineText: return "blankline-text";
    case CorpusFormat::JsonLines: return "json-lines";
  }
  return "?";
}

std::string xml_escape(std::string_view s, bool attribute) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out.push_back(c);
    }
  }
  return out;
}

std::string xml_unescape(std::string_view s) {
  static constexpr std::pair<std::string_view, char> kEntities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      bool matched = false;
      for (const auto& [name, ch] : kEntities) {
        if (s.substr(i, name.size()) == name) {
          out.push_back(ch);
          i += name.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out.push_back(s[i++]);
  }
  return out;
}

namespace {

std::string_view rtrim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool is_blank(std::string_view line) { return text::whitespace_run(line, 0) == line.size(); }

std::string_view trim_ascii(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool starts_doc_element(std::string_view line) {
  line = trim_ascii(line);
  if (line.substr(0, 4) != "<doc") return false;
  return line.size() > 4 && (line[4] == ' ' || line[4] == '>' || line[4] == '\t');
}

bool is_attr_name_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
         c == ':' || c == '.';
}

// Parses `<doc a="1" b='2'>` at the start of `line`; returns the offset just past '>'.
std::size_t parse_doc_header(std::string_view line, std::uint64_t line_no, Document& doc) {
  std::size_t i = line.find("<doc") + 4;
  for (;;) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) throw MalformedRecordError(line_no, "unterminated <doc> start tag");
    if (line[i] == '>') return i + 1;
    const std::size_t name_start = i;
    while (i < line.size() && is_attr_name_char(line[i])) ++i;
    if (i == name_start) throw MalformedRecordError(line_no, "bad attribute in <doc> start tag");
    const std::string name(line.substr(name_start, i - name_start));
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] != '=') throw MalformedRecordError(line_no, "attribute '" + name + "' has no value");
    ++i;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || (line[i] != '"' && line[i] != '\''))
      throw MalformedRecordError(line_no, "attribute '" + name + "' value is not quoted");
    const char quote = line[i++];
    const std::size_t close = line.find(quote, i);
    if (close == std::string_view::npos) throw MalformedRecordError(line_no, "unterminated attribute value");
    std::string value = xml_unescape(line.substr(i, close - i));
    i = close + 1;
    if (name == "id") {
      doc.id = std::move(value);
    } else if (name == "lang") {
      doc.lang_tag = std::move(value);
    } else if (name == "lemmas") {
      std::vector<std::string> lemmas;
      for (auto w : text::split_words(value)) lemmas.emplace_back(w);
      doc.lemmas = std::move(lemmas);
    } else {
      doc.metadata.emplace_back(name, std::move(value));
    }
  }
}

void check_lemmas(const Document& doc, std::uint64_t line_no) {
  if (!doc.lemmas) return;
  const auto words = text::count_words(doc.text);
  if (doc.lemmas->size() != words)
    throw MalformedRecordError(
        line_no, fmt::format("document '{}' has {} lemmas for {} tokens", doc.id, doc.lemmas->size(), words));
}

}  // namespace

struct DocumentReader::Impl {
  fs::path path;
  CorpusFormat format;
  std::ifstream in;
  std::uint64_t line_no = 0;
  std::uint64_t ordinal = 0;
  std::string line;

  bool getline() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  }

  std::string synth_id() { return fmt::format("doc-{}", ordinal); }

  std::optional<Document> next_blankline() {
    Document doc;
    bool any = false;
    while (getline()) {
      const auto l = rtrim_cr(line);
      if (is_blank(l)) {
        if (any) break;
        continue;
      }
      if (any) doc.text.push_back('\n');
      doc.text.append(l);
      any = true;
    }
    if (!any) return std::nullopt;
    doc.id = synth_id();
    return doc;
  }

  std::optional<Document> next_vert() {
    while (getline()) {
      std::string_view l = rtrim_cr(line);
      if (!starts_doc_element(l)) continue;
      const std::uint64_t open_line = line_no;
      Document doc;
      const std::size_t body = parse_doc_header(l, line_no, doc);
      std::string rest(l.substr(body));
      std::vector<std::string> lines;
      bool closed = false;
      auto take = [&](std::string_view content) -> bool {
        const auto close = content.rfind("</doc>");
        if (close != std::string_view::npos && trim_ascii(content.substr(close + 6)).empty()) {
          if (close > 0) lines.emplace_back(content.substr(0, close));
          return true;
        }
        lines.emplace_back(content);
        return false;
      };
      if (!rest.empty()) closed = take(rest);
      while (!closed && getline()) {
        const auto content = rtrim_cr(line);
        if (starts_doc_element(content))
          throw MalformedRecordError(open_line, "<doc> element not closed before the next <doc>");
        closed = take(content);
      }
      if (!closed) throw MalformedRecordError(open_line, "<doc> element not closed before end of file");
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) doc.text.push_back('\n');
        doc.text += xml_unescape(lines[i]);
      }
      if (doc.id.empty()) doc.id = synth_id();
      check_lemmas(doc, open_line);
      return doc;
    }
    return std::nullopt;
  }

  std::optional<Document> next_jsonl() {
    while (getline()) {
      const auto l = rtrim_cr(line);
      if (is_blank(l)) continue;
      json obj;
      try {
        obj = json::parse(l);
      } catch (const json::exception& e) {
        throw MalformedRecordError(line_no, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object()) throw MalformedRecordError(line_no, "JSON record is not an object");
      Document doc;
      const auto text_it = obj.find("text");
      if (text_it == obj.end() || !text_it->is_string())
        throw MalformedRecordError(line_no, "missing string field \"text\"");
      doc.text = text_it->get<std::string>();
      if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
        if (it->is_string())
          doc.id = it->get<std::string>();
        else if (it->is_number_integer())
          doc.id = it->dump();
        else
          throw MalformedRecordError(line_no, "field \"id\" must be a string");
      }
      if (auto it = obj.find("lang"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw MalformedRecordError(line_no, "field \"lang\" must be a string");
        doc.lang_tag = it->get<std::string>();
      }
      if (auto it = obj.find("lemmas"); it != obj.end() && !it->is_null()) {
        if (!it->is_array()) throw MalformedRecordError(line_no, "field \"lemmas\" must be an array of strings");
        std::vector<std::string> lemmas;
        lemmas.reserve(it->size());
        for (const auto& v : *it) {
          if (!v.is_string()) throw MalformedRecordError(line_no, "field \"lemmas\" must be an array of strings");
          lemmas.push_back(v.get<std::string>());
        }
        doc.lemmas = std::move(lemmas);
      }
      if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
        if (!it->is_object()) throw MalformedRecordError(line_no, "field \"meta\" must be an object of strings");
        for (const auto& [k, v] : it->items()) {
          if (!v.is_string()) throw MalformedRecordError(line_no, "field \"meta\" must be an object of strings");
          doc.metadata.emplace_back(k, v.get<std::string>());
        }
      }
      if (doc.id.empty()) doc.id = synth_id();
      check_lemmas(doc, line_no);
      return doc;
    }
    return std::nullopt;
  }
};

DocumentReader::DocumentReader(const fs::path& path, CorpusFormat format) : impl_(std::make_unique<Impl>()) {
  impl_->path = path;
  impl_->format = format;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec))
    throw Error(ErrorCode::UnreadableFile, fmt::format("cannot read '{}': not a regular file", path.string()));
  impl_->in.open(path, std::ios::binary);
  if (!impl_->in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
}

DocumentReader::~DocumentReader() = default;
DocumentReader::DocumentReader(DocumentReader&&) noexcept = default;
DocumentReader& DocumentReader::operator=(DocumentReader&&) noexcept = default;

std::optional<Document> DocumentReader::next() {
  std::optional<Document> doc;
  switch (impl_->format) {
    case CorpusFormat::VertXml: doc = impl_->next_vert(); break;
    case CorpusFormat::BlanklineText: doc = impl_->next_blankline(); break;
    case CorpusFormat::JsonLines: doc = impl_->next_jsonl(); break;
  }
  if (impl_->in.bad()) throw Error(ErrorCode::UnreadableFile, fmt::format("read error on '{}'", impl_->path.string()));
  if (doc) ++impl_->ordinal;
  return doc;
}

std::uint64_t DocumentReader::line_no() const noexcept { return impl_->line_no; }

DocumentWriter::DocumentWriter(const fs::path& path, CorpusFormat format) : path_(path), format_(format) {
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
}

DocumentWriter::~DocumentWriter() {
  if (!finished_) {
    try {
      out_.flush();
    } catch (...) {
    }
  }
}

void DocumentWriter::write(const Document& doc) {
  switch (format_) {
    case CorpusFormat::VertXml: write_vert(doc); break;
    case CorpusFormat::BlanklineText: write_blankline(doc); break;
    case CorpusFormat::JsonLines: write_jsonl(doc); break;
  }
  if (!out_) throw Error(ErrorCode::IoError, fmt::format("write failed on '{}'", path_.string()));
}

void DocumentWriter::write_vert(const Document& doc) {
  out_ << "<doc id=\"" << xml_escape(doc.id, true) << '"';
  if (doc.lang_tag) out_ << " lang=\"" << xml_escape(*doc.lang_tag, true) << '"';
  if (doc.lemmas) {
    std::string joined;
    for (const auto& l : *doc.lemmas) {
      if (l.empty() || text::count_words(l) != 1)
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("document '{}': vert-xml cannot store empty or multi-word lemma '{}'", doc.id, l));
      if (!joined.empty()) joined.push_back(' ');
      joined += l;
    }
    out_ << " lemmas=\"" << xml_escape(joined, true) << '"';
  }
  for (const auto& [k, v] : doc.metadata) out_ << ' ' << k << "=\"" << xml_escape(v, true) << '"';
  out_ << ">\n" << xml_escape(doc.text, false) << "\n</doc>\n";
  ++written_;
}

// Blank lines inside a text would split the document, so they are dropped;
// documents with no non-blank line cannot be represented and are skipped.
void DocumentWriter::write_blankline(const Document& doc) {
  std::string block;
  std::size_t start = 0;
  const std::string_view t = doc.text;
  while (start <= t.size()) {
    std::size_t end = t.find('\n', start);
    if (end == std::string_view::npos) end = t.size();
    const auto line = t.substr(start, end - start);
    if (!is_blank(line)) {
      block.append(line);
      block.push_back('\n');
    }
    start = end + 1;
  }
  if (block.empty()) return;
  if (written_) out_ << '\n';
  out_ << block;
  ++written_;
}

void DocumentWriter::write_jsonl(const Document& doc) {
  nlohmann::ordered_json obj;
  obj["id"] = doc.id;
  obj["text"] = doc.text;
  if (doc.lang_tag) obj["lang"] = *doc.lang_tag;
  if (doc.lemmas) obj["lemmas"] = *doc.lemmas;
  if (!doc.metadata.empty()) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : doc.metadata) meta[k] = v;
    obj["meta"] = std::move(meta);
  }
  out_ << obj.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  ++written_;
}

std::uint64_t DocumentWriter::finish() {
  if (!finished_) {
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoError, fmt::format("flush failed on '{}'", path_.string()));
    out_.close();
    finished_ = true;
  }
  return written_;
}

void for_each_document(const fs::path& path, CorpusFormat format, const std::function<void(Document&&)>& fn) {
  DocumentReader reader(path, format);
  while (auto doc = reader.next()) fn(std::move(*doc));
}

std::vector<Document> read_documents(const fs::path& path, CorpusFormat format) {
  std::vector<Document> docs;
  for_each_document(path, format, [&](Document&& d) { docs.push_back(std::move(d)); });
  return docs;
}

std::uint64_t write_documents(const std::vector<Document>& docs, const fs::path& path, CorpusFormat format) {
  DocumentWriter writer(path, format);
  for (const auto& d : docs) writer.write(d);
  return writer.finish();
}

CorpusStats compute_file_stats(const fs::path& path, CorpusFormat format) {
  CorpusStats stats;
  for_each_document(path, format, [&](Document&& d) { stats += document_stats(d); });
  return stats;
}

}  // namespace estcorpus
