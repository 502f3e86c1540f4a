#pragma once

// ETS1 ("Embedded Token Stream") reader and writer.
//
// Layout, little-endian throughout:
//   header   : "ETS1" | version u32 (=1) | dim u32 | label count u32 (=3)
//              | dataset-id length u16 + UTF-8 bytes | sentence count u64
//   sentence : token count u32
//   token    : text length u16 + UTF-8 bytes | gold tag u8 | dim x f32 embedding
//              | 3 x f32 base distribution in label-ordinal order (O, B, I)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nnose/types.hpp"

namespace nnose {

inline constexpr std::uint32_t kTokenStreamVersion = 1;

/// Base distributions whose stored sum lies within this of 1 are
/// re-normalized on read; anything further off is rejected.
inline constexpr double kDistributionSumTolerance = 1e-4;

struct TokenStream {
  std::string dataset_id;
  std::uint32_t dim = 0;
  std::vector<Sentence> sentences;
};

/// Reads a whole ETS1 file. When `expected_dim` is given the header must
/// declare exactly that dimension.
TokenStream read_token_stream_file(const std::filesystem::path& path,
                                   std::optional<std::uint32_t> expected_dim = std::nullopt);

std::vector<Sentence> read_token_stream(const std::filesystem::path& path,
                                        std::optional<std::uint32_t> expected_dim = std::nullopt);

/// Decodes an in-memory ETS1 image.
TokenStream decode_token_stream(std::string_view bytes,
                                std::optional<std::uint32_t> expected_dim = std::nullopt);

/// The header's dataset id is taken from the sentences, which must agree.
/// Embeddings are narrowed to f32.
void write_token_stream(const std::vector<Sentence>& sentences,
                        const std::filesystem::path& path);

std::string encode_token_stream(const std::vector<Sentence>& sentences);

}  // namespace nnose
