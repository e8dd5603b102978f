#include "ragfce/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <memory>
#include <unordered_set>

#include "ragfce/error.hpp"

namespace ragfce {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCode: return "unknown-code";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::DuplicateId: return "duplicate-id";
    case ErrorCode::EmptyFile: return "empty-file";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::NoInconsistentSamples: return "no-inconsistent-samples";
    case ErrorCode::EmptyCorpus: return "empty-corpus";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Template: return "template-error";
    case ErrorCode::LayoutMismatch: return "layout-mismatch";
    case ErrorCode::DatasetMismatch: return "dataset-mismatch";
    case ErrorCode::ExhaustedRetries: return "exhausted-retries";
    case ErrorCode::Authentication: return "authentication";
    case ErrorCode::RequestTooLarge: return "request-too-large";
    case ErrorCode::BackendRequest: return "backend-request";
    case ErrorCode::MockMiss: return "mock-miss";
    case ErrorCode::CacheMiss: return "cache-miss";
    case ErrorCode::UnparseableOutput: return "unparseable-output";
    case ErrorCode::UnparseableVerdict: return "unparseable-verdict";
    case ErrorCode::DegenerateOutput: return "degenerate-output";
    case ErrorCode::PartialResult: return "partial-result";
  }
  return "error";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ExhaustedRetries:
    case ErrorCode::Authentication:
    case ErrorCode::RequestTooLarge:
    case ErrorCode::BackendRequest:
    case ErrorCode::MockMiss:
    case ErrorCode::CacheMiss:
    case ErrorCode::UnparseableOutput:
    case ErrorCode::UnparseableVerdict:
    case ErrorCode::DegenerateOutput:
      return 3;
    case ErrorCode::PartialResult:
      return 4;
    default:
      return 2;
  }
}

}  // namespace ragfce

namespace ragfce::text {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  auto fail = [&](std::size_t at) {
    throw Error(ErrorCode::Parse, "malformed UTF-8 at byte " + std::to_string(at));
  };
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      fail(i);
    }
    if (i + len > s.size()) fail(i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) fail(i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms, surrogates, out of range
    static constexpr std::array<char32_t, 5> kMin{0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) fail(i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

std::size_t scalar_count(std::string_view s) { return decode_utf8(s).size(); }

bool is_space(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

namespace {

// Byte length of the whitespace scalar starting at `i`, or 0.
std::size_t space_at(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return is_space(b0) ? 1 : 0;
  std::size_t len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
  if (len == 0 || i + len > s.size()) return 0;
  try {
    const auto cp = decode_utf8(s.substr(i, len));
    return cp.size() == 1 && is_space(cp[0]) ? len : 0;
  } catch (const Error&) {
    return 0;
  }
}

// Byte offset where the whitespace run ending at `end` begins.
std::size_t trailing_space_start(std::string_view s, std::size_t end) {
  while (end > 0) {
    std::size_t start = end - 1;
    while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
    if (space_at(s, start) != end - start) break;
    end = start;
  }
  return end;
}

}  // namespace

std::string_view trim_view(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    const auto n = space_at(s, begin);
    if (n == 0) break;
    begin += n;
  }
  const std::size_t end = trailing_space_start(s, s.size());
  if (end <= begin) return {};
  return s.substr(begin, end - begin);
}

std::string trim(std::string_view s) { return std::string(trim_view(s)); }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string ascii_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.starts_with(prefix); }

bool contains(std::string_view s, std::string_view needle) {
  return s.find(needle) != std::string_view::npos;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  const auto n = scalar_count(s);
  if (n < width) out.append(width - n, ' ');
  return out;
}

std::string pad_left(std::string_view s, std::size_t width) {
  const auto n = scalar_count(s);
  std::string out;
  if (n < width) out.append(width - n, ' ');
  out.append(s);
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int md_len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &md_len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(md_len * 2);
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

double trigram_overlap(std::string_view source, std::string_view candidate) {
  const auto src = decode_utf8(source);
  if (src.size() < 3) return 1.0;
  const auto cand = decode_utf8(candidate);
  std::unordered_set<std::u32string> cand_grams;
  for (std::size_t i = 0; i + 3 <= cand.size(); ++i) cand_grams.insert(cand.substr(i, 3));
  std::unordered_set<std::u32string> src_grams;
  for (std::size_t i = 0; i + 3 <= src.size(); ++i) src_grams.insert(src.substr(i, 3));
  std::size_t hit = 0;
  for (const auto& g : src_grams) hit += cand_grams.count(g);
  return static_cast<double>(hit) / static_cast<double>(src_grams.size());
}

}  // namespace ragfce::text
