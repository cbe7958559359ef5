#include "estcorpus/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace fs = std::filesystem;

namespace {

using Setter = std::function<std::optional<std::string>(PipelineConfig&, std::string_view, const fs::path&)>;

struct KeySpec {
  std::string name;  // section.key
  Setter set;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::string> parse_bool(std::string_view v, bool& out) {
  const std::string lower = text::to_lower(v);
  if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") {
    out = true;
  } else if (lower == "false" || lower == "no" || lower == "off" || lower == "0") {
    out = false;
  } else {
    return fmt::format("expected a boolean (true/false), got '{}'", v);
  }
  return std::nullopt;
}

std::optional<std::string> parse_int(std::string_view v, std::int64_t& out) {
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) return fmt::format("expected an integer, got '{}'", v);
  return std::nullopt;
}

std::optional<std::string> parse_double(std::string_view v, double& out) {
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) return fmt::format("expected a number, got '{}'", v);
  return std::nullopt;
}

template <typename T>
Setter unsigned_key(std::string key, T PipelineConfig::*group, std::uint32_t T::*field, std::int64_t min) {
  return [=](PipelineConfig& c, std::string_view v, const fs::path&) -> std::optional<std::string> {
    std::int64_t n = 0;
    if (auto err = parse_int(v, n)) return err;
    if (n < min || n > UINT32_MAX) return fmt::format("{} must be >= {}, got {}", key, min, n);
    (c.*group).*field = static_cast<std::uint32_t>(n);
    return std::nullopt;
  };
}

Setter probability_key(std::string key, std::function<double&(PipelineConfig&)> field) {
  return [=](PipelineConfig& c, std::string_view v, const fs::path&) -> std::optional<std::string> {
    double x = 0;
    if (auto err = parse_double(v, x)) return err;
    if (!(x >= 0.0 && x <= 1.0)) return fmt::format("{} must lie in [0, 1], got {}", key, v);
    field(c) = x;
    return std::nullopt;
  };
}

Setter toggle_key(bool StageToggles::*field) {
  return [=](PipelineConfig& c, std::string_view v, const fs::path&) { return parse_bool(v, c.stages.*field); };
}

Setter path_key(fs::path PipelineConfig::*field) {
  return [=](PipelineConfig& c, std::string_view v, const fs::path& base) -> std::optional<std::string> {
    if (v.empty()) {
      (c.*field).clear();
      return std::nullopt;
    }
    fs::path p(v);
    c.*field = p.is_absolute() || base.empty() ? p : base / p;
    return std::nullopt;
  };
}

Setter format_key(std::function<void(PipelineConfig&, CorpusFormat)> assign) {
  return [=](PipelineConfig& c, std::string_view v, const fs::path&) -> std::optional<std::string> {
    try {
      assign(c, parse_corpus_format(v));
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::nullopt;
  };
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    s.push_back({"input.paths", [](PipelineConfig& c, std::string_view v, const fs::path& base)
                                    -> std::optional<std::string> {
                   c.inputs.clear();
                   std::size_t start = 0;
                   while (start <= v.size()) {
                     std::size_t comma = v.find(',', start);
                     if (comma == std::string_view::npos) comma = v.size();
                     const auto item = trim(v.substr(start, comma - start));
                     if (item.empty()) return std::string("empty entry in input path list");
                     fs::path p(item);
                     c.inputs.push_back(p.is_absolute() || base.empty() ? p : base / p);
                     start = comma + 1;
                   }
                   return std::nullopt;
                 }});
    s.push_back({"input.format", format_key([](PipelineConfig& c, CorpusFormat f) { c.input_format = f; })});
    s.push_back({"stages.strip", toggle_key(&StageToggles::strip)});
    s.push_back({"stages.langfilter", toggle_key(&StageToggles::langfilter)});
    s.push_back({"stages.dedup", toggle_key(&StageToggles::dedup)});
    s.push_back({"stages.heuristics", toggle_key(&StageToggles::heuristics)});
    s.push_back({"stages.truecase", toggle_key(&StageToggles::truecase)});
    s.push_back({"stages.bpe", toggle_key(&StageToggles::bpe)});
    s.push_back({"stages.examples", toggle_key(&StageToggles::examples)});
    s.push_back({"filter.min_words", [](PipelineConfig& c, std::string_view v, const fs::path&)
                                         -> std::optional<std::string> {
                   std::int64_t n = 0;
                   if (auto err = parse_int(v, n)) return err;
                   if (n < 1) return fmt::format("min_words must be >= 1, got {}", n);
                   c.thresholds.min_words = static_cast<std::uint64_t>(n);
                   return std::nullopt;
                 }});
    s.push_back({"filter.max_stopword_ratio",
                 probability_key("max_stopword_ratio", [](PipelineConfig& c) -> double& {
                   return c.thresholds.max_stopword_ratio;
                 })});
    s.push_back({"filter.max_punct_ratio", probability_key("max_punct_ratio", [](PipelineConfig& c) -> double& {
                   return c.thresholds.max_punct_ratio;
                 })});
    s.push_back({"filter.lang_confidence_min",
                 probability_key("lang_confidence_min", [](PipelineConfig& c) -> double& {
                   return c.thresholds.lang_confidence_min;
                 })});
    s.push_back({"filter.stopwords", path_key(&PipelineConfig::stopwords_file)});
    s.push_back({"filter.target_lang", [](PipelineConfig& c, std::string_view v, const fs::path&)
                                           -> std::optional<std::string> {
                   if (v.empty()) return std::string("target_lang must not be empty");
                   c.target_lang = std::string(v);
                   return std::nullopt;
                 }});
    s.push_back({"filter.profiles", path_key(&PipelineConfig::profiles_dir)});
    s.push_back({"truecase.lexicon", path_key(&PipelineConfig::lexicon_file)});
    s.push_back({"bpe.vocab_size", [](PipelineConfig& c, std::string_view v, const fs::path&)
                                       -> std::optional<std::string> {
                   std::int64_t n = 0;
                   if (auto err = parse_int(v, n)) return err;
                   if (n <= kNumSpecials || n > UINT32_MAX)
                     return fmt::format("vocab_size must exceed the {} special pieces, got {}", kNumSpecials, n);
                   c.vocab_size = static_cast<std::uint32_t>(n);
                   return std::nullopt;
                 }});
    s.push_back({"bpe.vocab_file", path_key(&PipelineConfig::vocab_file)});
    s.push_back({"bpe.merges_file", path_key(&PipelineConfig::merges_file)});
    s.push_back({"pretrain.max_seq_length",
                 unsigned_key("max_seq_length", &PipelineConfig::generation, &GenerationConfig::max_seq_length, 5)});
    s.push_back({"pretrain.masked_lm_prob", probability_key("masked_lm_prob", [](PipelineConfig& c) -> double& {
                   return c.generation.masked_lm_prob;
                 })});
    s.push_back({"pretrain.random_next_prob", probability_key("random_next_prob", [](PipelineConfig& c) -> double& {
                   return c.generation.random_next_prob;
                 })});
    s.push_back({"pretrain.short_seq_prob", probability_key("short_seq_prob", [](PipelineConfig& c) -> double& {
                   return c.generation.short_seq_prob;
                 })});
    s.push_back({"pretrain.dupe_factor",
                 unsigned_key("dupe_factor", &PipelineConfig::generation, &GenerationConfig::dupe_factor, 1)});
    s.push_back({"pretrain.shards", unsigned_key("shards", &PipelineConfig::generation, &GenerationConfig::shards, 1)});
    s.push_back({"pretrain.seed", [](PipelineConfig& c, std::string_view v, const fs::path&)
                                      -> std::optional<std::string> {
                   std::uint64_t n = 0;
                   const auto* end = v.data() + v.size();
                   auto [p, ec] = std::from_chars(v.data(), end, n);
                   if (ec != std::errc() || p != end) return fmt::format("seed must be an unsigned 64-bit integer, got '{}'", v);
                   c.generation.seed = n;
                   return std::nullopt;
                 }});
    s.push_back({"output.dir", [](PipelineConfig& c, std::string_view v, const fs::path& base)
                                   -> std::optional<std::string> {
                   if (v.empty()) return std::string("output dir must not be empty");
                   fs::path p(v);
                   c.output_dir = p.is_absolute() || base.empty() ? p : base / p;
                   return std::nullopt;
                 }});
    s.push_back({"output.report", path_key(&PipelineConfig::report_file)});
    s.push_back({"output.corpus", path_key(&PipelineConfig::corpus_file)});
    s.push_back({"output.format", format_key([](PipelineConfig& c, CorpusFormat f) { c.output_format = f; })});
    return s;
  }();
  return specs;
}

const KeySpec* find_spec(std::string_view name) {
  for (const auto& s : key_specs())
    if (s.name == name) return &s;
  return nullptr;
}

bool is_subsequence(std::string_view needle, std::string_view hay) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < hay.size() && j < needle.size(); ++i)
    if (hay[i] == needle[j]) ++j;
  return j == needle.size();
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string_view bare(std::string_view name) { return name.substr(name.find('.') + 1); }

std::string suggest_among(std::string_view unknown, const std::vector<std::string>& candidates) {
  const std::string lower = text::to_lower(unknown);
  std::string best;
  for (const auto& c : candidates) {
    const auto key = bare(c);
    if (lower.size() >= 3 && is_subsequence(lower, key) && (best.empty() || key.size() < bare(best).size()))
      best = c;
  }
  if (!best.empty()) return best;
  std::size_t best_d = std::max<std::size_t>(2, lower.size() / 3) + 1;
  for (const auto& c : candidates) {
    const auto d = levenshtein(lower, bare(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::string unknown_key_message(std::string_view section, std::string_view key) {
  std::vector<std::string> same_section;
  for (const auto& s : key_specs())
    if (s.name.starts_with(std::string(section) + ".")) same_section.push_back(s.name);
  std::string hint = suggest_among(key, same_section);
  if (hint.empty()) hint = suggest_key(key);
  std::string msg = fmt::format("unknown key '{}' in [{}]", key, section);
  if (!hint.empty()) {
    const auto hint_section = hint.substr(0, hint.find('.'));
    msg += hint_section == section ? fmt::format("; did you mean '{}'?", bare(hint))
                                   : fmt::format("; did you mean '{}' in [{}]?", bare(hint), hint_section);
  }
  return msg;
}

}  // namespace

std::string Diagnostic::to_string(std::string_view source) const {
  if (line == 0) return fmt::format("{}: {}", source, message);
  return fmt::format("{}:{}: {}", source, line, message);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : key_specs()) k.push_back(s.name);
    return k;
  }();
  return keys;
}

std::string suggest_key(std::string_view unknown) {
  const auto dot = unknown.find('.');
  return suggest_among(dot == std::string_view::npos ? unknown : unknown.substr(dot + 1), config_keys());
}

ConfigResult parse_config(std::string_view text, const fs::path& base_dir) {
  ConfigResult result;
  PipelineConfig config;
  std::string section;
  std::map<std::string, std::uint64_t> seen;
  std::uint64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        result.diagnostics.push_back({line_no, "section header is missing ']'"});
        continue;
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                     [&](const std::string& k) { return k.starts_with(section + "."); });
      if (!known) result.diagnostics.push_back({line_no, fmt::format("unknown section [{}]", section)});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      result.diagnostics.push_back({line_no, fmt::format("expected 'key = value', got '{}'", line)});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) {
      result.diagnostics.push_back({line_no, fmt::format("key '{}' appears before any [section]", key)});
      continue;
    }
    const std::string full = section + "." + key;
    const KeySpec* spec = find_spec(full);
    if (!spec) {
      // Keys of an unknown section were already reported with the header.
      if (std::any_of(config_keys().begin(), config_keys().end(),
                      [&](const std::string& k) { return k.starts_with(section + "."); }))
        result.diagnostics.push_back({line_no, unknown_key_message(section, key)});
      continue;
    }
    if (auto [it, inserted] = seen.emplace(full, line_no); !inserted) {
      result.diagnostics.push_back(
          {line_no, fmt::format("duplicate key '{}' (first set on line {})", key, it->second)});
      continue;
    }
    if (auto err = spec->set(config, value, base_dir)) result.diagnostics.push_back({line_no, *err});
  }
  if (result.diagnostics.empty()) {
    for (auto& d : check_config(config)) result.diagnostics.push_back(std::move(d));
  }
  if (result.diagnostics.empty()) result.config = std::move(config);
  return result;
}

ConfigResult validate_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {std::nullopt, {{0, fmt::format("cannot read config file '{}'", path.string())}}};
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

std::optional<Diagnostic> apply_override(PipelineConfig& config, std::string_view key, std::string_view value) {
  const KeySpec* spec = nullptr;
  if (key.find('.') != std::string_view::npos) {
    spec = find_spec(key);
  } else {
    for (const auto& s : key_specs()) {
      if (bare(s.name) != key) continue;
      if (spec) return Diagnostic{0, fmt::format("key '{}' is ambiguous; qualify it as section.key", key)};
      spec = &s;
    }
  }
  if (!spec) {
    const auto hint = suggest_key(key);
    return Diagnostic{0, hint.empty() ? fmt::format("unknown key '{}'", key)
                                      : fmt::format("unknown key '{}'; did you mean '{}'?", key, hint)};
  }
  if (auto err = spec->set(config, trim(value), {})) return Diagnostic{0, fmt::format("{}: {}", spec->name, *err)};
  return std::nullopt;
}

std::vector<Diagnostic> check_config(const PipelineConfig& config) {
  std::vector<Diagnostic> out;
  if (config.inputs.empty()) out.push_back({0, "no input paths given ([input] paths)"});
  try {
    config.thresholds.validate();
  } catch (const Error& e) {
    out.push_back({0, e.what()});
  }
  try {
    config.generation.validate();
  } catch (const Error& e) {
    out.push_back({0, e.what()});
  }
  if (config.stages.examples && !config.stages.bpe && (config.vocab_file.empty() || config.merges_file.empty()))
    out.push_back({0, "the examples stage needs the bpe stage or [bpe] vocab_file and merges_file"});
  return out;
}

}  // namespace estcorpus
