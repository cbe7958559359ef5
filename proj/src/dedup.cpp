#include "estcorpus/clean.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

std::string dedup_normal_form(std::string_view text) { return text::collapse_whitespace(text::to_lower(text)); }

Digest128 dedup_key(std::string_view text) { return murmur3_128(dedup_normal_form(text)); }

DedupResult dedup(std::vector<Document> docs) {
  DedupResult result;
  Deduplicator seen;
  result.kept.reserve(docs.size());
  for (auto& doc : docs) {
    if (seen.insert(doc.text)) {
      result.kept.push_back(std::move(doc));
    } else {
      ++result.dropped;
      result.dropped_ids.push_back(doc.id);
    }
  }
  return result;
}

}  // namespace estcorpus
