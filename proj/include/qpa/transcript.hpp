#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qpa/errors.hpp"
#include "qpa/text.hpp"

// SRT / WebVTT parsing into a normalized, ordered cue list.
//
// Timestamps are integer milliseconds throughout so downstream gap arithmetic
// is exact. Parsing is strict about structure (timestamps, separators) and
// lenient about content: oversized cue overlaps and empty cues are reported
// as warnings instead of failing the episode.

namespace qpa {

struct Cue {
  int index = 0;          // ordinal position in the list, 0-based
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::string text;       // normalized display text, no markup
  std::optional<std::string> speaker;
};

struct CueList {
  std::string episode_id;
  std::vector<Cue> cues;
};

struct ParseWarning {
  std::string file;       // filled by the caller; the parser sees only bytes
  int line = 0;
  std::string category;   // "overlap" | "empty_text"
  std::string message;
};

enum class SubtitleFormat { srt, vtt, auto_detect };

namespace detail {

// Removes <...> tags (HTML-ish formatting, VTT voice/class spans, inline
// timestamps) and {\...} override blocks. A lone '<' or '{' that does not
// open a plausible tag is kept as literal text, which also keeps the pass
// idempotent.
inline std::string strip_markup(std::string_view s) {
  std::u32string cps = decode_utf8_lossy(s);
  std::u32string out;
  out.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size();) {
    const char32_t c = cps[i];
    if (c == U'<' && i + 1 < cps.size()) {
      const char32_t n = cps[i + 1];
      const bool tag_start =
          (n < 128 && std::isalnum(static_cast<int>(n)) != 0) || n == U'/' || n == U'.';
      if (tag_start) {
        std::size_t close = i + 1;
        while (close < cps.size() && cps[close] != U'>' && cps[close] != U'<') ++close;
        if (close < cps.size() && cps[close] == U'>') {
          i = close + 1;
          continue;
        }
      }
    }
    if (c == U'{' && i + 1 < cps.size() && cps[i + 1] == U'\\') {
      std::size_t close = i + 1;
      while (close < cps.size() && cps[close] != U'}') ++close;
      if (close < cps.size()) {
        i = close + 1;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return encode_utf8(out);
}

// The handful of character references that appear in caption files.
inline std::string decode_entities(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"},  {"&lt;", "<"},   {"&gt;", ">"},        {"&quot;", "\""},
      {"&#39;", "'"},  {"&apos;", "'"}, {"&nbsp;", " "},
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    bool matched = false;
    if (s[i] == '&') {
      for (const auto& [entity, repl] : kEntities) {
        if (s.substr(i, entity.size()) == entity) {
          out += repl;
          i += entity.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) {
      out.push_back(s[i]);
      ++i;
    }
  }
  return out;
}

inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

inline std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool all_ascii_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_ascii_digit);
}

// "HH:MM:SS,mmm" (SRT) or "[HH:]MM:SS.mmm" (VTT) -> milliseconds.
inline std::optional<int64_t> parse_timestamp(std::string_view ts, SubtitleFormat fmt) {
  const char frac_sep = (fmt == SubtitleFormat::srt) ? ',' : '.';
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= ts.size(); ++i) {
    if (i == ts.size() || ts[i] == ':') {
      fields.push_back(ts.substr(start, i - start));
      start = i + 1;
    }
  }
  if (fmt == SubtitleFormat::srt && fields.size() != 3) return std::nullopt;
  if (fmt == SubtitleFormat::vtt && fields.size() != 2 && fields.size() != 3) return std::nullopt;

  const bool has_hours = fields.size() == 3;
  const std::string_view hh = has_hours ? fields[0] : std::string_view{};
  const std::string_view mm = fields[has_hours ? 1 : 0];
  const std::string_view rest = fields[has_hours ? 2 : 1];

  const std::size_t sep = rest.find(frac_sep);
  if (sep == std::string_view::npos) return std::nullopt;
  const std::string_view ss = rest.substr(0, sep);
  const std::string_view ms = rest.substr(sep + 1);

  if (has_hours && !all_ascii_digits(hh)) return std::nullopt;
  if (!all_ascii_digits(mm) || mm.size() != 2) return std::nullopt;
  if (!all_ascii_digits(ss) || ss.size() != 2) return std::nullopt;
  if (!all_ascii_digits(ms) || ms.size() != 3) return std::nullopt;

  const auto to_int = [](std::string_view f) {
    int64_t v = 0;
    for (char c : f) v = v * 10 + (c - '0');
    return v;
  };
  const int64_t m = to_int(mm), s = to_int(ss);
  if (m > 59 || s > 59) return std::nullopt;
  const int64_t h = has_hours ? to_int(hh) : 0;
  return ((h * 60 + m) * 60 + s) * 1000 + to_int(ms);
}

// "NAME: text" at line start, NAME being one ALLCAPS or TitleCase token.
// Anything looser stays in the text; transcripts are too inconsistent for a
// smarter rule.
inline std::optional<std::pair<std::string, std::string>> split_speaker(std::string_view line) {
  const std::u32string cps = decode_utf8_lossy(line);
  std::size_t i = 0;
  while (i < cps.size() && is_unicode_space(cps[i])) ++i;
  const std::size_t tok_start = i;
  while (i < cps.size() && cps[i] != U':') {
    const char32_t c = cps[i];
    const bool token_char = u_isalpha(static_cast<UChar32>(c)) ||
                            u_isdigit(static_cast<UChar32>(c)) || c == U'\'' ||
                            c == U'’' || c == U'.' || c == U'-';
    if (!token_char) return std::nullopt;
    ++i;
  }
  if (i >= cps.size() || i == tok_start) return std::nullopt;

  const std::u32string token = cps.substr(tok_start, i - tok_start);
  if (!u_isalpha(static_cast<UChar32>(token[0])) ||
      !u_isupper(static_cast<UChar32>(token[0]))) {
    return std::nullopt;
  }
  bool all_caps = true, title_case = true;
  for (std::size_t k = 1; k < token.size(); ++k) {
    if (!u_isalpha(static_cast<UChar32>(token[k]))) continue;
    if (!u_isupper(static_cast<UChar32>(token[k]))) all_caps = false;
    if (!u_islower(static_cast<UChar32>(token[k]))) title_case = false;
  }
  if (!all_caps && !title_case) return std::nullopt;

  std::size_t rest = i + 1;
  while (rest < cps.size() && is_unicode_space(cps[rest])) ++rest;
  return std::make_pair(encode_utf8(token), encode_utf8(cps.substr(rest)));
}

struct RawCue {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::vector<std::string> lines;
  int source_line = 0;  // 1-based line of the timestamp row
};

struct TimestampRow {
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};

inline TimestampRow parse_timestamp_row(std::string_view line, SubtitleFormat fmt,
                                        int line_no) {
  const std::size_t arrow = line.find("-->");
  if (arrow == std::string_view::npos) {
    throw FormatError(line_no, "missing '-->' separator");
  }
  const std::string_view left = trim_view(line.substr(0, arrow));
  std::string_view right = trim_view(line.substr(arrow + 3));
  // Cue settings (VTT) or legacy coordinates (SRT) may trail the end time.
  const std::size_t end_tok = right.find_first_of(" \t");
  if (end_tok != std::string_view::npos) right = right.substr(0, end_tok);

  const auto start = parse_timestamp(left, fmt);
  if (!start) {
    throw FormatError(line_no, "unparseable timestamp '" + std::string(left) + "'");
  }
  const auto end = parse_timestamp(right, fmt);
  if (!end) {
    throw FormatError(line_no, "unparseable timestamp '" + std::string(right) + "'");
  }
  if (*start >= *end) {
    throw FormatError(line_no, "cue start must precede cue end");
  }
  return {*start, *end};
}

inline std::vector<RawCue> scan_srt(const std::vector<std::string_view>& lines) {
  std::vector<RawCue> cues;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (trim_view(lines[i]).empty()) {
      ++i;
      continue;
    }
    const std::string_view index_line = trim_view(lines[i]);
    if (!all_ascii_digits(index_line)) {
      throw FormatError(static_cast<int>(i + 1),
                        "expected numeric cue index, got '" + std::string(index_line) + "'");
    }
    ++i;
    if (i >= lines.size()) {
      throw FormatError(static_cast<int>(i), "unexpected end of file after cue index");
    }
    RawCue cue;
    const TimestampRow row =
        parse_timestamp_row(lines[i], SubtitleFormat::srt, static_cast<int>(i + 1));
    cue.start_ms = row.start_ms;
    cue.end_ms = row.end_ms;
    cue.source_line = static_cast<int>(i + 1);
    ++i;
    while (i < lines.size() && !trim_view(lines[i]).empty()) {
      cue.lines.emplace_back(lines[i]);
      ++i;
    }
    cues.push_back(std::move(cue));
  }
  return cues;
}

inline std::vector<RawCue> scan_vtt(const std::vector<std::string_view>& lines) {
  if (lines.empty()) throw FormatError(1, "missing WEBVTT header");
  const std::string_view first = trim_view(lines[0]);
  const bool has_header = first.substr(0, 6) == "WEBVTT" &&
                          (first.size() == 6 || first[6] == ' ' || first[6] == '\t');
  if (!has_header) throw FormatError(1, "missing WEBVTT header");

  std::size_t i = 1;
  while (i < lines.size() && !trim_view(lines[i]).empty()) ++i;  // header metadata

  std::vector<RawCue> cues;
  while (i < lines.size()) {
    if (trim_view(lines[i]).empty()) {
      ++i;
      continue;
    }
    const std::string_view head = trim_view(lines[i]);
    if (head.substr(0, 4) == "NOTE" || head.substr(0, 5) == "STYLE" ||
        head.substr(0, 6) == "REGION") {
      while (i < lines.size() && !trim_view(lines[i]).empty()) ++i;
      continue;
    }
    // Optional cue identifier line before the timing row.
    std::size_t timing = i;
    if (lines[i].find("-->") == std::string_view::npos) {
      timing = i + 1;
      if (timing >= lines.size() || trim_view(lines[timing]).empty()) {
        throw FormatError(static_cast<int>(i + 1), "missing '-->' separator");
      }
    }
    RawCue cue;
    const TimestampRow row =
        parse_timestamp_row(lines[timing], SubtitleFormat::vtt, static_cast<int>(timing + 1));
    cue.start_ms = row.start_ms;
    cue.end_ms = row.end_ms;
    cue.source_line = static_cast<int>(timing + 1);
    i = timing + 1;
    while (i < lines.size() && !trim_view(lines[i]).empty()) {
      cue.lines.emplace_back(lines[i]);
      ++i;
    }
    cues.push_back(std::move(cue));
  }
  return cues;
}

}  // namespace detail

// Full text normalization: markup stripped, whitespace runs collapsed to
// single spaces, NFC, trimmed. Total and idempotent: stripping or collapsing
// can juxtapose characters into a fresh tag shape, so the pass repeats until
// the text is stable (a handful of rounds at most; each round only removes).
inline std::string normalize_cue_text(std::string_view raw) {
  std::string current(raw);
  for (int round = 0; round < 8; ++round) {
    std::string next = nfc_utf8(collapse_whitespace(detail::strip_markup(current)));
    if (next == current) break;
    current = std::move(next);
  }
  return current;
}

inline std::string format_timestamp_srt(int64_t ms) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld,%03lld",
                static_cast<long long>(ms / 3600000),
                static_cast<long long>(ms / 60000 % 60),
                static_cast<long long>(ms / 1000 % 60),
                static_cast<long long>(ms % 1000));
  return buf;
}

inline std::string format_timestamp_vtt(int64_t ms) {
  std::string s = format_timestamp_srt(ms);
  s[s.size() - 4] = '.';
  return s;
}

// Parses an SRT or WebVTT document. With auto detection, a leading "WEBVTT"
// header selects VTT and a leading integer cue index selects SRT. Input must
// be UTF-8 (an optional BOM is accepted). Structural problems raise
// FormatError with the 1-based line number; recoverable oddities (overlapping
// cues, cues whose text normalizes to nothing) are appended to `warnings`.
inline CueList parse_transcript(std::string_view raw_bytes,
                                SubtitleFormat format_hint = SubtitleFormat::auto_detect,
                                std::string_view episode_id = "episode",
                                std::vector<ParseWarning>* warnings = nullptr) {
  if (episode_id.empty()) throw ConfigError("episode_id must be non-empty");

  if (raw_bytes.substr(0, 3) == "\xEF\xBB\xBF") raw_bytes.remove_prefix(3);
  decode_utf8(raw_bytes);  // validate once; throws DecodeError with byte offset

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= raw_bytes.size(); ++i) {
    if (i == raw_bytes.size() || raw_bytes[i] == '\n') {
      std::string_view line = raw_bytes.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = i + 1;
    }
  }

  SubtitleFormat fmt = format_hint;
  if (fmt == SubtitleFormat::auto_detect) {
    std::size_t first = 0;
    while (first < lines.size() && detail::trim_view(lines[first]).empty()) ++first;
    if (first == lines.size()) throw EmptyTranscript();
    const std::string_view head = detail::trim_view(lines[first]);
    if (head.substr(0, 6) == "WEBVTT") {
      fmt = SubtitleFormat::vtt;
    } else if (detail::all_ascii_digits(head)) {
      fmt = SubtitleFormat::srt;
    } else {
      throw FormatError(static_cast<int>(first + 1),
                        "cannot detect subtitle format (expected WEBVTT header or "
                        "numeric cue index)");
    }
  }

  std::vector<detail::RawCue> raw =
      (fmt == SubtitleFormat::srt) ? detail::scan_srt(lines) : detail::scan_vtt(lines);

  struct Pending {
    Cue cue;
    int source_line;
  };
  std::vector<Pending> pending;
  pending.reserve(raw.size());
  for (detail::RawCue& rc : raw) {
    Cue cue;
    cue.start_ms = rc.start_ms;
    cue.end_ms = rc.end_ms;
    std::string joined;
    for (std::size_t li = 0; li < rc.lines.size(); ++li) {
      std::string line = detail::strip_markup(rc.lines[li]);
      if (li == 0) {
        if (auto sp = detail::split_speaker(line)) {
          cue.speaker = sp->first;
          line = sp->second;
        }
      }
      if (!joined.empty()) joined.push_back(' ');
      joined += line;
    }
    // Entities decode after normalization so escaped angle brackets survive
    // as literal text; the final collapse absorbs any decoded no-break space.
    cue.text = collapse_whitespace(detail::decode_entities(normalize_cue_text(joined)));
    if (cue.text.empty()) {
      if (warnings) {
        warnings->push_back({"", rc.source_line, "empty_text",
                             "cue text is empty after normalization; cue dropped"});
      }
      continue;
    }
    pending.push_back({std::move(cue), rc.source_line});
  }

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.cue.start_ms != b.cue.start_ms) return a.cue.start_ms < b.cue.start_ms;
    return a.cue.end_ms < b.cue.end_ms;
  });

  if (warnings) {
    for (std::size_t i = 0; i < pending.size(); ++i) {
      for (std::size_t j = i + 1;
           j < pending.size() && pending[j].cue.start_ms < pending[i].cue.end_ms; ++j) {
        const Cue& a = pending[i].cue;
        const Cue& b = pending[j].cue;
        const int64_t overlap = std::min(a.end_ms, b.end_ms) - b.start_ms;
        const int64_t shorter = std::min(a.end_ms - a.start_ms, b.end_ms - b.start_ms);
        if (2 * overlap > shorter) {
          warnings->push_back(
              {"", pending[j].source_line, "overlap",
               "cue overlaps previous cue by more than half of the shorter cue"});
        }
      }
    }
  }

  CueList result;
  result.episode_id = std::string(episode_id);
  result.cues.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    pending[i].cue.index = static_cast<int>(i);
    result.cues.push_back(std::move(pending[i].cue));
  }
  if (result.cues.empty()) throw EmptyTranscript();
  return result;
}

}  // namespace qpa
