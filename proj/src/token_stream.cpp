#include "nnose/token_stream.hpp"

#include <cmath>
#include <limits>

#include "byte_io.hpp"
#include "nnose/error.hpp"

namespace nnose {
namespace {

constexpr std::string_view kMagic = "ETS1";

std::string record_where(std::uint64_t sentence, std::uint32_t token) {
  return "sentence " + std::to_string(sentence) + ", token " + std::to_string(token);
}

}  // namespace

TokenStream decode_token_stream(std::string_view bytes,
                                std::optional<std::uint32_t> expected_dim) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::MagicMismatch, "not an ETS1 stream");
  }
  detail::ByteReader in(bytes.substr(kMagic.size()), ErrorCode::CorruptRecord);

  TokenStream stream;
  const auto version = in.u32();
  if (version != kTokenStreamVersion) {
    throw Error(ErrorCode::VersionMismatch, "ETS1 version " + std::to_string(version));
  }
  stream.dim = in.u32();
  if (expected_dim && *expected_dim != stream.dim) {
    throw Error(ErrorCode::DimensionMismatch, "stream dim " + std::to_string(stream.dim) +
                                                  " != expected " + std::to_string(*expected_dim));
  }
  if (const auto labels = in.u32(); labels != kNumLabels) {
    throw Error(ErrorCode::CorruptRecord, "label count " + std::to_string(labels));
  }
  stream.dataset_id = std::string(in.bytes(in.u16()));
  const auto n_sentences = in.u64();
  if (n_sentences > 0 && stream.dim == 0) {
    throw Error(ErrorCode::CorruptRecord, "zero embedding dimension");
  }

  // Each sentence needs at least its 4-byte count; reject absurd counts
  // before reserving.
  if (n_sentences > in.remaining() / 4) {
    throw Error(ErrorCode::CorruptRecord, "sentence count exceeds file size");
  }
  stream.sentences.reserve(n_sentences);
  for (std::uint64_t s = 0; s < n_sentences; ++s) {
    Sentence sentence;
    sentence.dataset_id = stream.dataset_id;
    const auto n_tokens = in.u32();
    if (n_tokens == 0) throw Error(ErrorCode::CorruptRecord, "empty sentence " + std::to_string(s));
    for (std::uint32_t t = 0; t < n_tokens; ++t) {
      TokenRecord tok;
      tok.text = std::string(in.bytes(in.u16()));
      if (tok.text.empty()) throw Error(ErrorCode::CorruptRecord, "empty text at " + record_where(s, t));
      const auto tag = label_from_ordinal(in.u8());
      if (!tag) throw Error(ErrorCode::CorruptRecord, "bad tag at " + record_where(s, t));
      tok.gold = *tag;
      tok.embedding.resize(stream.dim);
      for (auto& v : tok.embedding) {
        const float f = in.f32();
        if (!std::isfinite(f)) throw Error(ErrorCode::NonFinite, "embedding at " + record_where(s, t));
        v = f;
      }
      double sum = 0.0;
      for (auto& v : tok.base.p) {
        const float f = in.f32();
        if (!std::isfinite(f) || f < 0.0f) {
          throw Error(ErrorCode::BadDistribution, "entry out of range at " + record_where(s, t));
        }
        v = f;
        sum += v;
      }
      if (std::abs(sum - 1.0) > kDistributionSumTolerance) {
        throw Error(ErrorCode::BadDistribution,
                    "sum " + std::to_string(sum) + " at " + record_where(s, t));
      }
      if (sum != 1.0) {
        for (auto& v : tok.base.p) v /= sum;
      }
      sentence.tokens.push_back(std::move(tok));
    }
    stream.sentences.push_back(std::move(sentence));
  }
  if (in.remaining() != 0) {
    throw Error(ErrorCode::CorruptRecord, std::to_string(in.remaining()) + " trailing bytes");
  }
  return stream;
}

TokenStream read_token_stream_file(const std::filesystem::path& path,
                                   std::optional<std::uint32_t> expected_dim) {
  return decode_token_stream(detail::read_file(path), expected_dim);
}

std::vector<Sentence> read_token_stream(const std::filesystem::path& path,
                                        std::optional<std::uint32_t> expected_dim) {
  return read_token_stream_file(path, expected_dim).sentences;
}

std::string encode_token_stream(const std::vector<Sentence>& sentences) {
  std::uint32_t dim = 0;
  std::string dataset_id;
  bool first = true;
  for (const auto& s : sentences) {
    if (s.tokens.empty()) throw Error(ErrorCode::InvalidArgument, "sentence without tokens");
    if (first) {
      dataset_id = s.dataset_id;
      dim = static_cast<std::uint32_t>(s.tokens.front().embedding.size());
      first = false;
    } else if (s.dataset_id != dataset_id) {
      throw Error(ErrorCode::MixedDatasetIds, "'" + s.dataset_id + "' vs '" + dataset_id + "'");
    }
    for (const auto& t : s.tokens) {
      if (t.embedding.size() != dim) {
        throw Error(ErrorCode::MixedDimensions, std::to_string(t.embedding.size()) + " vs " +
                                                    std::to_string(dim));
      }
      if (t.text.empty() || t.text.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "token text length out of range");
      }
    }
  }
  if (!sentences.empty() && dim == 0) throw Error(ErrorCode::InvalidArgument, "zero-length embeddings");
  if (dataset_id.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "dataset id too long");
  }

  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u32(kTokenStreamVersion);
  out.u32(dim);
  out.u32(kNumLabels);
  out.u16(static_cast<std::uint16_t>(dataset_id.size()));
  out.bytes(dataset_id);
  out.u64(sentences.size());
  for (const auto& s : sentences) {
    out.u32(static_cast<std::uint32_t>(s.tokens.size()));
    for (const auto& t : s.tokens) {
      out.u16(static_cast<std::uint16_t>(t.text.size()));
      out.bytes(t.text);
      out.u8(static_cast<std::uint8_t>(ordinal(t.gold)));
      for (double v : t.embedding) out.f32(static_cast<float>(v));
      for (double v : t.base.p) out.f32(static_cast<float>(v));
    }
  }
  return out.data();
}

void write_token_stream(const std::vector<Sentence>& sentences,
                        const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_token_stream(sentences));
}

}  // namespace nnose
